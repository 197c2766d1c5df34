//! Multistatic geometry and received-signal synthesis.
//!
//! A [`Scenario`] holds positions, velocities and RF parameters. For one
//! receiver it reduces to a [`Scene`]: the list of echoes (transmitter,
//! target, integer delay, normalized Doppler, complex amplitude) that make up
//!
//! ```text
//! v[n] = Σ_i Σ_q α·s_i[(n - l) mod N]·exp(i2π·ξ·n) + noise,   n = 0..ηN
//! ```
//!
//! Noise is circular complex Gaussian. Its power is either given directly or
//! derived from a composite SNR, the ratio of the mean clean power to the
//! noise power.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::Fourier;
use crate::scalar::{energy, turn, Real};
use crate::zcseq::{validate_length, validate_seed, ZcSequence};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub type Vec3 = [f64; 3];

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn finite(v: Vec3) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Lengths of the transmitter→target and target→receiver legs.
fn legs(tx: Vec3, tgt: Vec3, rx: Vec3) -> Result<(f64, f64)> {
    if !(finite(tx) && finite(tgt) && finite(rx)) {
        return Err(Error::DegenerateGeometry("non-finite position"));
    }
    let rt = norm(sub(tgt, tx));
    let rr = norm(sub(rx, tgt));
    if rt == 0.0 {
        return Err(Error::DegenerateGeometry("target coincides with transmitter"));
    }
    if rr == 0.0 {
        return Err(Error::DegenerateGeometry("target coincides with receiver"));
    }
    Ok((rt, rr))
}

/// Bistatic delay in whole samples, `round((R_t + R_r)/c·fs)`, before any
/// folding into the pulse.
pub fn bistatic_delay_samples(tx: Vec3, tgt: Vec3, rx: Vec3, fs: f64) -> Result<u64> {
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(Error::InvalidArgument(format!("sample rate {fs} must be positive")));
    }
    let (rt, rr) = legs(tx, tgt, rx)?;
    Ok(((rt + rr) / SPEED_OF_LIGHT * fs).round() as u64)
}

/// Doppler shift in cycles per sample. Positive when the bistatic range is
/// shrinking.
pub fn normalized_doppler(
    tx: Vec3,
    tgt: Vec3,
    tgt_vel: Vec3,
    rx: Vec3,
    carrier_hz: f64,
    fs: f64,
) -> Result<f64> {
    let (rt, rr) = legs(tx, tgt, rx)?;
    if !finite(tgt_vel) {
        return Err(Error::DegenerateGeometry("non-finite velocity"));
    }
    let rate_t = dot(tgt_vel, sub(tgt, tx)) / rt;
    let rate_r = dot(tgt_vel, sub(tgt, rx)) / rr;
    let wavelength = SPEED_OF_LIGHT / carrier_hz;
    Ok(-(rate_t + rate_r) / wavelength / fs)
}

/// Bistatic radar equation with unit antenna gains. The phase is fixed by
/// the total path length.
pub fn reflection_amplitude(
    tx: Vec3,
    tgt: Vec3,
    rx: Vec3,
    carrier_hz: f64,
    power_w: f64,
    rcs_m2: f64,
) -> Result<Complex<f64>> {
    let (rt, rr) = legs(tx, tgt, rx)?;
    let wavelength = SPEED_OF_LIGHT / carrier_hz;
    let magnitude = (power_w * wavelength * wavelength * rcs_m2
        / ((4.0 * PI).powi(3) * rt * rt * rr * rr))
        .sqrt();
    let phase = (-2.0 * PI * (rt + rr) / wavelength).rem_euclid(2.0 * PI);
    Ok(Complex::from_polar(magnitude, phase))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transmitter {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub position: Vec3,
    pub power_w: f64,
    pub seed: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Receiver {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub position: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub position: Vec3,
    pub velocity: Vec3,
    pub rcs_m2: f64,
}

/// Geometry and RF parameters of a distributed radar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub carrier_hz: f64,
    /// Complex baseband sample rate.
    pub bandwidth_hz: f64,
    pub n: usize,
    pub eta: usize,
    pub transmitters: Vec<Transmitter>,
    pub receivers: Vec<Receiver>,
    pub targets: Vec<Target>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band_limit_fraction: Option<f64>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        validate_length(self.n)?;
        if self.eta == 0 {
            return bad("eta must be at least 1".into());
        }
        if !(self.carrier_hz > 0.0 && self.bandwidth_hz > 0.0) {
            return bad("carrier_hz and bandwidth_hz must be positive".into());
        }
        if self.transmitters.is_empty() {
            return bad("at least one transmitter is required".into());
        }
        if self.receivers.is_empty() {
            return bad("at least one receiver is required".into());
        }
        for (i, tx) in self.transmitters.iter().enumerate() {
            validate_seed(tx.seed as i64, self.n)?;
            if !(tx.power_w > 0.0) {
                return bad(format!("transmitter {i}: power_w must be positive"));
            }
            if self.transmitters[..i].iter().any(|o| o.seed == tx.seed) {
                return bad(format!("transmitter {i}: seed {} is not unique", tx.seed));
            }
        }
        for (q, t) in self.targets.iter().enumerate() {
            if !(t.rcs_m2 > 0.0) {
                return bad(format!("target {q}: rcs_m2 must be positive"));
            }
        }
        if let Some(f) = self.band_limit_fraction {
            check_fraction(f)?;
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u32> {
        self.transmitters.iter().map(|t| t.seed).collect()
    }

    /// Echoes seen by receiver `rx`, ordered transmitter-major.
    pub fn echoes(&self, rx: usize) -> Result<Vec<Echo>> {
        let receiver = self.receivers.get(rx).ok_or(Error::IndexOutOfRange {
            what: "receiver",
            index: rx,
            count: self.receivers.len(),
        })?;
        let mut out = Vec::with_capacity(self.transmitters.len() * self.targets.len());
        for (i, tx) in self.transmitters.iter().enumerate() {
            for (q, tgt) in self.targets.iter().enumerate() {
                let delay = bistatic_delay_samples(
                    tx.position,
                    tgt.position,
                    receiver.position,
                    self.bandwidth_hz,
                )?;
                let xi = normalized_doppler(
                    tx.position,
                    tgt.position,
                    tgt.velocity,
                    receiver.position,
                    self.carrier_hz,
                    self.bandwidth_hz,
                )?;
                let amplitude = reflection_amplitude(
                    tx.position,
                    tgt.position,
                    receiver.position,
                    self.carrier_hz,
                    tx.power_w,
                    tgt.rcs_m2,
                )?;
                out.push(Echo {
                    tx_index: i,
                    target_index: q,
                    delay_samples: (delay % self.n as u64) as usize,
                    normalized_doppler: xi,
                    amplitude,
                });
            }
        }
        Ok(out)
    }

    pub fn scene(&self, rx: usize) -> Result<Scene> {
        self.validate()?;
        let scene = Scene {
            n: self.n,
            eta: self.eta,
            seeds: self.seeds(),
            target_count: self.targets.len(),
            echoes: self.echoes(rx)?,
            band_limit_fraction: self.band_limit_fraction,
        };
        scene.validate()?;
        Ok(scene)
    }
}

/// One transmitter's waveform reflected by one target, as seen by one
/// receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Echo {
    pub tx_index: usize,
    pub target_index: usize,
    /// Delay folded into `0..N`.
    pub delay_samples: usize,
    /// Cycles per sample.
    pub normalized_doppler: f64,
    pub amplitude: Complex<f64>,
}

/// Everything one receiver needs to synthesize and score: waveform
/// parameters plus the ground-truth echo list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub n: usize,
    pub eta: usize,
    pub seeds: Vec<u32>,
    pub target_count: usize,
    pub echoes: Vec<Echo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band_limit_fraction: Option<f64>,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        validate_length(self.n)?;
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if self.eta == 0 {
            return bad("eta must be at least 1".into());
        }
        if self.seeds.is_empty() {
            return bad("at least one transmitter seed is required".into());
        }
        for (i, &u) in self.seeds.iter().enumerate() {
            validate_seed(u as i64, self.n)?;
            if self.seeds[..i].contains(&u) {
                return bad(format!("seed {u} is not unique"));
            }
        }
        for e in &self.echoes {
            if e.tx_index >= self.seeds.len() || e.target_index >= self.target_count {
                return bad(format!(
                    "echo (tx {}, target {}) refers to a missing entity",
                    e.tx_index, e.target_index
                ));
            }
            if e.delay_samples >= self.n {
                return bad(format!("echo delay {} not below N", e.delay_samples));
            }
            if !(e.normalized_doppler.abs() < 0.5) {
                return bad(format!("echo Doppler {} not in (-0.5, 0.5)", e.normalized_doppler));
            }
        }
        if let Some(f) = self.band_limit_fraction {
            check_fraction(f)?;
        }
        Ok(())
    }

    pub fn tx_count(&self) -> usize {
        self.seeds.len()
    }

    pub fn total_len(&self) -> usize {
        self.n * self.eta
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scene = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Loads either a geometric [`Scenario`] (reduced for `rx`) or an
/// echo-level [`Scene`] document.
pub fn load_scene(path: impl AsRef<Path>, rx: usize) -> Result<Scene> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if value.get("echoes").is_some() {
        if rx != 0 {
            return Err(Error::IndexOutOfRange {
                what: "receiver",
                index: rx,
                count: 1,
            });
        }
        Scene::from_json(&text)
    } else {
        Scenario::from_json(&text)?.scene(rx)
    }
}

/// How much noise to add.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    /// Composite SNR in dB: mean clean power over noise power.
    CompositeSnrDb(f64),
    /// Absolute noise power per complex sample.
    Power(f64),
    None,
}

#[derive(Debug, Clone)]
pub struct ReceivedSignal<T> {
    pub samples: Vec<Complex<T>>,
    pub clean: Vec<Complex<T>>,
    pub noise_power: f64,
}

impl<T: Real> ReceivedSignal<T> {
    /// `10·log10(mean|clean|² / mean|noise|²)` of this realization.
    pub fn realized_snr_db(&self) -> f64 {
        let ps = energy(&self.clean).to_f64_lossy();
        let pn: f64 = self
            .samples
            .iter()
            .zip(&self.clean)
            .map(|(s, c)| (s - c).norm_sqr().to_f64_lossy())
            .sum();
        10.0 * (ps / pn).log10()
    }
}

/// Adds `α·s[(n - delay) mod N]·exp(i2π·ξ·n)` over the whole buffer.
pub fn superpose_echo<T: Real>(
    buf: &mut [Complex<T>],
    waveform: &[Complex<T>],
    delay: usize,
    xi: f64,
    amplitude: Complex<T>,
) {
    let n = waveform.len();
    let delay = delay % n;
    for (k, v) in buf.iter_mut().enumerate() {
        let s = waveform[(k + n - delay) % n];
        *v = *v + amplitude * s * turn::<T>(xi * k as f64);
    }
}

/// Precomputed clean signal of a scene; noise realizations are cheap.
#[derive(Debug, Clone)]
pub struct Synthesizer<T> {
    scene: Scene,
    waveforms: Vec<Vec<Complex<T>>>,
    clean: Vec<Complex<T>>,
    clean_power: f64,
}

impl<T: Real> Synthesizer<T> {
    pub fn new(scene: &Scene) -> Result<Self> {
        scene.validate()?;
        let waveforms = scene
            .seeds
            .iter()
            .map(|&u| {
                let z = ZcSequence::<T>::new(u, scene.n)?;
                match scene.band_limit_fraction {
                    Some(f) => band_limit(z.samples(), f),
                    None => Ok(z.samples().to_vec()),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let mut clean = vec![Complex::zero(); scene.total_len()];
        for e in &scene.echoes {
            let amp = Complex::new(T::lit(e.amplitude.re), T::lit(e.amplitude.im));
            superpose_echo(
                &mut clean,
                &waveforms[e.tx_index],
                e.delay_samples,
                e.normalized_doppler,
                amp,
            );
        }
        let clean_power = energy(&clean).to_f64_lossy() / clean.len() as f64;
        Ok(Self {
            scene: scene.clone(),
            waveforms,
            clean,
            clean_power,
        })
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    /// Transmitted waveforms (band-limited when the scene asks for it).
    pub fn waveforms(&self) -> &[Vec<Complex<T>>] {
        &self.waveforms
    }

    pub fn clean(&self) -> &[Complex<T>] {
        &self.clean
    }

    pub fn clean_power(&self) -> f64 {
        self.clean_power
    }

    pub fn noise_power_for(&self, noise: Noise) -> Result<f64> {
        match noise {
            Noise::CompositeSnrDb(snr_db) => {
                if self.clean_power == 0.0 {
                    return Err(Error::ZeroSignal);
                }
                Ok(self.clean_power / 10f64.powf(snr_db / 10.0))
            }
            Noise::Power(p) if p >= 0.0 && p.is_finite() => Ok(p),
            Noise::Power(p) => Err(Error::InvalidArgument(format!("noise power {p}"))),
            Noise::None => Ok(0.0),
        }
    }

    pub fn realize(&self, noise: Noise, rng_seed: u64) -> Result<ReceivedSignal<T>> {
        let noise_power = self.noise_power_for(noise)?;
        let mut samples = self.clean.clone();
        if noise_power > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            let sigma = T::lit((noise_power / 2.0).sqrt());
            for v in samples.iter_mut() {
                let re = T::standard_normal(&mut rng);
                let im = T::standard_normal(&mut rng);
                *v = *v + Complex::new(re, im) * sigma;
            }
        }
        Ok(ReceivedSignal {
            samples,
            clean: self.clean.clone(),
            noise_power,
        })
    }
}

/// Synthesizes the signal at one receiver of a scenario at a composite SNR.
pub fn synthesize_received<T: Real>(
    scenario: &Scenario,
    receiver_index: usize,
    snr_db: f64,
    rng_seed: u64,
) -> Result<ReceivedSignal<T>> {
    Synthesizer::new(&scenario.scene(receiver_index)?)?
        .realize(Noise::CompositeSnrDb(snr_db), rng_seed)
}

fn check_fraction(fraction: f64) -> Result<()> {
    if fraction > 0.0 && fraction <= 1.0 {
        Ok(())
    } else {
        Err(Error::BandLimitFraction(fraction))
    }
}

/// Brick-wall low-pass: keeps the DFT bins whose signed index satisfies
/// `|k| ≤ ⌊fraction·len/2⌋` and zeroes the rest.
pub fn band_limit<T: Real>(x: &[Complex<T>], fraction: f64) -> Result<Vec<Complex<T>>> {
    check_fraction(fraction)?;
    let len = x.len();
    if len == 0 {
        return Ok(Vec::new());
    }
    let cutoff = (fraction * len as f64 / 2.0).floor() as usize;
    let fourier = Fourier::new(len);
    let mut buf = x.to_vec();
    fourier.forward(&mut buf);
    for (k, v) in buf.iter_mut().enumerate() {
        let signed = if k <= len / 2 { k } else { len - k };
        if signed > cutoff {
            *v = Complex::zero();
        }
    }
    fourier.inverse(&mut buf);
    let scale = T::one() / T::from_usize(len).unwrap();
    buf.iter_mut().for_each(|v| *v = *v * scale);
    Ok(buf)
}
