//! Successive-cancellation detectors.
//!
//! Three receivers share one control loop. [`Method::Raw`] runs a single
//! detection pass per transmitter. [`Method::ScDcft`] removes every new
//! detection by nulling its matched bin in the DCFT domain after Doppler
//! de-rotation. [`Method::ScTime`] subtracts a reconstructed replica in the
//! time domain instead.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use num_traits::Zero;

use crate::dcft::{matched_peak_bin, DcftPlan};
use crate::error::{Error, Result};
use crate::rdmap::{
    check_pfa, cyclic_distance, detect_above_floor, estimate_params, signed_doppler_bin, Detection,
    NoiseFloor, ParamEstimate, RangeDopplerMap, RangeDopplerProcessor, Reference,
};
use crate::scalar::{energy, turn, Real};
use crate::scene::{Scenario, Scene};
use crate::zcseq::{validate_length, validate_seed, ZcSequence};

pub const DEFAULT_MAX_PASSES: usize = 8;

/// Anything that fixes the waveform set a receiver correlates against.
pub trait WaveformSet {
    fn sequence_len(&self) -> usize;
    fn pulses(&self) -> usize;
    fn seeds(&self) -> Vec<u32>;
}

impl WaveformSet for Scene {
    fn sequence_len(&self) -> usize {
        self.n
    }
    fn pulses(&self) -> usize {
        self.eta
    }
    fn seeds(&self) -> Vec<u32> {
        self.seeds.clone()
    }
}

impl WaveformSet for Scenario {
    fn sequence_len(&self) -> usize {
        self.n
    }
    fn pulses(&self) -> usize {
        self.eta
    }
    fn seeds(&self) -> Vec<u32> {
        Scenario::seeds(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Raw,
    ScTime,
    ScDcft,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Raw, Method::ScTime, Method::ScDcft];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Raw => "raw",
            Method::ScTime => "sc-time",
            Method::ScDcft => "sc-dcft",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "raw" => Ok(Method::Raw),
            "sc-time" => Ok(Method::ScTime),
            "sc-dcft" => Ok(Method::ScDcft),
            other => Err(Error::InvalidArgument(format!(
                "unknown method `{other}` (expected raw, sc-time or sc-dcft)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub pfa: f64,
    pub max_passes: usize,
    /// Number of DCFT bins nulled per segment, centred on the matched bin.
    /// Must be odd.
    pub null_width: usize,
    pub noise_floor: NoiseFloor,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            pfa: 1e-4,
            max_passes: DEFAULT_MAX_PASSES,
            null_width: 1,
            noise_floor: NoiseFloor::default(),
        }
    }
}

impl DetectorConfig {
    pub fn with_pfa(pfa: f64) -> Self {
        Self {
            pfa,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_pfa(self.pfa)?;
        if self.max_passes == 0 {
            return Err(Error::InvalidArgument("max_passes must be at least 1".into()));
        }
        if self.null_width % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "null_width must be odd, got {}",
                self.null_width
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CancellationRecord {
    pub tx_index: usize,
    pub delay_bin: usize,
    /// Folded Doppler index of the detection cell.
    pub doppler_bin: usize,
    /// Estimated normalized Doppler used for de-rotation, cycles per sample.
    pub doppler_xi: f64,
    /// Matched DCFT bin `(u·l) mod N`. Meaningful for DCFT cancellation only.
    pub nulled_bin: usize,
    pub pass_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassDetection<T> {
    /// 1-based outer pass in which the detection was made.
    pub pass: usize,
    pub detection: Detection<T>,
    pub estimate: ParamEstimate<T>,
}

#[derive(Debug, Clone)]
pub struct DetectionReport<T> {
    pub method: Method,
    pub detections: Vec<PassDetection<T>>,
    pub residual: Vec<Complex<T>>,
    pub records: Vec<CancellationRecord>,
    pub passes_run: usize,
}

impl<T: Real> DetectionReport<T> {
    pub fn for_tx(&self, tx: usize) -> impl Iterator<Item = &PassDetection<T>> {
        self.detections
            .iter()
            .filter(move |d| d.detection.tx_index == tx)
    }

    pub fn residual_energy(&self) -> T {
        energy(&self.residual)
    }
}

/// Subtracts `alpha·s[(n-l) mod N]·exp(i2π·xi·n)` from `buf` in place.
pub fn subtract_replica<T: Real>(
    buf: &mut [Complex<T>],
    waveform: &[Complex<T>],
    l: usize,
    xi: f64,
    alpha: Complex<T>,
) {
    let n = waveform.len();
    let l = l % n;
    for (k, v) in buf.iter_mut().enumerate() {
        *v = *v - alpha * waveform[(k + n - l) % n] * turn::<T>(xi * k as f64);
    }
}

/// Nulls bins `(u·l) mod N ± width/2` of every N-sample segment after
/// de-rotating by `xi`. Returns the centre bin.
fn null_matched_bin<T: Real>(
    plan: &DcftPlan<T>,
    buf: &mut [Complex<T>],
    l: usize,
    xi: f64,
    width: usize,
) -> usize {
    let n = plan.len();
    let bin = matched_peak_bin(plan.chirp_rate() as i64, l as i64, n);
    let half = (width / 2).min(n / 2) as i64;
    let rotate = xi != 0.0;
    if rotate {
        for (k, v) in buf.iter_mut().enumerate() {
            *v = *v * turn::<T>(-xi * k as f64);
        }
    }
    #[cfg(debug_assertions)]
    let before = energy(buf);
    for seg in buf.chunks_exact_mut(n) {
        plan.forward_in_place(seg);
        for off in -half..=half {
            seg[(bin as i64 + off).rem_euclid(n as i64) as usize] = Complex::zero();
        }
        plan.inverse_in_place(seg);
    }
    #[cfg(debug_assertions)]
    {
        let after = energy(buf);
        let slack = T::lit(1e-9) * before + T::min_positive_value();
        debug_assert!(after <= before + slack, "nulling raised energy: {before} -> {after}");
    }
    if rotate {
        for (k, v) in buf.iter_mut().enumerate() {
            *v = *v * turn::<T>(xi * k as f64);
        }
    }
    bin
}

/// Removes one seed-`u` echo at delay `l_hat` and Doppler `xi_hat` from a
/// residual made of whole `n`-sample segments.
pub fn cancel_one_with_len<T: Real>(
    residual: &[Complex<T>],
    n: usize,
    u: u32,
    l_hat: usize,
    xi_hat: f64,
) -> Result<Vec<Complex<T>>> {
    validate_length(n)?;
    validate_seed(u as i64, n)?;
    if residual.is_empty() || residual.len() % n != 0 {
        return Err(Error::LengthMismatch {
            expected: n,
            got: residual.len(),
        });
    }
    if l_hat >= n {
        return Err(Error::IndexOutOfRange {
            what: "delay bin",
            index: l_hat,
            count: n,
        });
    }
    let plan = DcftPlan::new(n, u)?;
    let mut out = residual.to_vec();
    null_matched_bin(&plan, &mut out, l_hat, xi_hat, 1);
    Ok(out)
}

/// [`cancel_one_with_len`] for a residual of `η·N` samples with the pulse
/// count `eta` given.
pub fn cancel_one<T: Real>(
    residual: &[Complex<T>],
    eta: usize,
    u: u32,
    l_hat: usize,
    xi_hat: f64,
) -> Result<Vec<Complex<T>>> {
    if eta == 0 || residual.len() % eta != 0 {
        return Err(Error::InvalidArgument(format!(
            "residual length {} is not a multiple of eta = {eta}",
            residual.len()
        )));
    }
    cancel_one_with_len(residual, residual.len() / eta, u, l_hat, xi_hat)
}

/// Detector state for one waveform set. Cheap to share between threads.
#[derive(Debug, Clone)]
pub struct Canceller<T: Real> {
    n: usize,
    eta: usize,
    references: Vec<Reference<T>>,
    plans: Vec<DcftPlan<T>>,
    processor: RangeDopplerProcessor<T>,
    config: DetectorConfig,
}

impl<T: Real> Canceller<T> {
    pub fn new(n: usize, eta: usize, seeds: &[u32], config: DetectorConfig) -> Result<Self> {
        config.validate()?;
        if seeds.is_empty() {
            return Err(Error::InvalidArgument("at least one seed is required".into()));
        }
        let processor = RangeDopplerProcessor::new(n, eta)?.with_noise_floor(config.noise_floor);
        let mut references = Vec::with_capacity(seeds.len());
        let mut plans = Vec::with_capacity(seeds.len());
        for &u in seeds {
            references.push(Reference::new(ZcSequence::new(u, n)?));
            plans.push(DcftPlan::new(n, u)?);
        }
        Ok(Self {
            n,
            eta,
            references,
            plans,
            processor,
            config,
        })
    }

    pub fn for_waveforms<S: WaveformSet + ?Sized>(set: &S, config: DetectorConfig) -> Result<Self> {
        Self::new(set.sequence_len(), set.pulses(), &set.seeds(), config)
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn tx_count(&self) -> usize {
        self.references.len()
    }

    pub fn seed(&self, tx: usize) -> u32 {
        self.references[tx].sequence().seed()
    }

    pub fn range_doppler_map(&self, r: &[Complex<T>], tx: usize) -> Result<RangeDopplerMap<T>> {
        let reference = self.references.get(tx).ok_or(Error::IndexOutOfRange {
            what: "transmitter",
            index: tx,
            count: self.references.len(),
        })?;
        self.processor.compute(r, reference, tx)
    }

    pub fn run(&self, received: &[Complex<T>], method: Method) -> Result<DetectionReport<T>> {
        let total = self.n * self.eta;
        if received.len() != total {
            return Err(Error::LengthMismatch {
                expected: total,
                got: received.len(),
            });
        }
        // Below this floor a residual is numerical dust, not signal.
        let dust = energy(received).sqrt() * T::epsilon() * T::lit(1e4);
        let max_passes = match method {
            Method::Raw => 1,
            _ => self.config.max_passes,
        };

        let mut residual = received.to_vec();
        let mut detections = Vec::new();
        let mut records: Vec<CancellationRecord> = Vec::new();
        let mut passes_run = 0;
        for pass in 1..=max_passes {
            passes_run = pass;
            let mut found_new = false;
            for tx in 0..self.tx_count() {
                let map = self.range_doppler_map(&residual, tx)?;
                for det in detect_above_floor(&map, self.config.pfa, dust)? {
                    if method != Method::Raw && self.is_known(&records, &det) {
                        continue;
                    }
                    found_new = true;
                    let est = estimate_params(&map, &det);
                    let nulled_bin = match method {
                        Method::Raw => matched_peak_bin(self.seed(tx) as i64, det.delay_bin as i64, self.n),
                        Method::ScDcft => null_matched_bin(
                            &self.plans[tx],
                            &mut residual,
                            est.delay,
                            est.xi_hat,
                            self.config.null_width,
                        ),
                        Method::ScTime => {
                            subtract_replica(
                                &mut residual,
                                self.references[tx].sequence().samples(),
                                est.delay,
                                est.xi_hat,
                                est.alpha_hat,
                            );
                            matched_peak_bin(self.seed(tx) as i64, est.delay as i64, self.n)
                        }
                    };
                    if method != Method::Raw {
                        records.push(CancellationRecord {
                            tx_index: tx,
                            delay_bin: det.delay_bin,
                            doppler_bin: det.doppler_bin,
                            doppler_xi: est.xi_hat,
                            nulled_bin,
                            pass_index: pass,
                        });
                    }
                    detections.push(PassDetection {
                        pass,
                        detection: det,
                        estimate: est,
                    });
                }
            }
            if !found_new {
                break;
            }
        }
        Ok(DetectionReport {
            method,
            detections,
            residual,
            records,
            passes_run,
        })
    }

    fn is_known(&self, records: &[CancellationRecord], det: &Detection<T>) -> bool {
        let d = signed_doppler_bin(det.doppler_bin, self.eta);
        records.iter().any(|r| {
            r.tx_index == det.tx_index
                && cyclic_distance(r.delay_bin, det.delay_bin, self.n) <= 1
                && (signed_doppler_bin(r.doppler_bin, self.eta) - d).abs() <= 1
        })
    }
}

fn run_with<T: Real, S: WaveformSet + ?Sized>(
    received: &[Complex<T>],
    set: &S,
    pfa: f64,
    max_passes: usize,
    method: Method,
) -> Result<DetectionReport<T>> {
    let config = DetectorConfig {
        pfa,
        max_passes,
        ..DetectorConfig::default()
    };
    Canceller::for_waveforms(set, config)?.run(received, method)
}

pub fn sc_dcft<T: Real, S: WaveformSet + ?Sized>(
    received: &[Complex<T>],
    set: &S,
    pfa: f64,
    max_passes: usize,
) -> Result<DetectionReport<T>> {
    run_with(received, set, pfa, max_passes, Method::ScDcft)
}

pub fn sc_time<T: Real, S: WaveformSet + ?Sized>(
    received: &[Complex<T>],
    set: &S,
    pfa: f64,
    max_passes: usize,
) -> Result<DetectionReport<T>> {
    run_with(received, set, pfa, max_passes, Method::ScTime)
}

pub fn raw_detect<T: Real, S: WaveformSet + ?Sized>(
    received: &[Complex<T>],
    set: &S,
    pfa: f64,
) -> Result<DetectionReport<T>> {
    run_with(received, set, pfa, 1, Method::Raw)
}
