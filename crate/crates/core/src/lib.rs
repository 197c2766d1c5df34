//! Multi-target detection for continuous-wave distributed radar in which
//! several transmitters share one band using Zadoff-Chu waveforms.
//!
//! The receiver chain is: range-Doppler correlation against each
//! transmitter's sequence, threshold detection, and successive cancellation
//! of detected echoes so that weaker echoes hidden under the correlation
//! sidelobes of stronger ones become detectable. Cancellation happens in the
//! discrete chirp-Fourier transform (DCFT) domain, where a delayed ZC
//! sequence whose seed matches the chirp rate collapses to a single bin.
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the common double-precision instantiations.

pub mod canceller;
pub mod dcft;
pub mod error;
mod fourier;
pub mod harness;
pub mod plot;
pub mod rdmap;
pub mod scalar;
pub mod scene;
pub mod selftest;
pub mod zcseq;

pub use canceller::{
    cancel_one, raw_detect, sc_dcft, sc_time, subtract_replica, CancellationRecord, Canceller,
    DetectionReport, DetectorConfig, Method, PassDetection, WaveformSet,
};
pub use dcft::{dcft, idcft, matched_peak_bin, ChirpSpectrum, DcftPlan};
pub use error::{Error, Result};
pub use harness::{
    emit_results, run_trial, sweep, DetectionRateTable, Experiment, SweepConfig, TrialResult,
};
pub use rdmap::{
    detect, estimate_params, range_doppler_map, Detection, NoiseFloor, ParamEstimate,
    RangeDopplerMap, RangeDopplerProcessor, Reference,
};
pub use scalar::Real;
pub use scene::{
    band_limit, bistatic_delay_samples, normalized_doppler, reflection_amplitude,
    synthesize_received, Echo, Noise, ReceivedSignal, Scenario, Scene, Synthesizer,
};
pub use zcseq::{
    default_seeds, delayed_zc, generate_zc, pccf_peak_bound, periodic_correlation,
    CorrelationSequence, ZcSequence,
};

pub use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type C32 = Complex<f32>;

pub type ZcSequence64 = ZcSequence<f64>;
pub type ZcSequence32 = ZcSequence<f32>;
pub type ChirpSpectrum64 = ChirpSpectrum<f64>;
pub type ChirpSpectrum32 = ChirpSpectrum<f32>;
pub type RangeDopplerMap64 = RangeDopplerMap<f64>;
pub type RangeDopplerMap32 = RangeDopplerMap<f32>;
pub type Detection64 = Detection<f64>;
pub type DetectionReport64 = DetectionReport<f64>;
pub type Canceller64 = Canceller<f64>;
pub type Canceller32 = Canceller<f32>;
pub type ReceivedSignal64 = ReceivedSignal<f64>;
