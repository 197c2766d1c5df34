//! Range-Doppler maps and threshold detection.
//!
//! For a received block `r` of `η·N` samples and a reference sequence `s`,
//!
//! ```text
//! cells[l][d] = Σ_{n<ηN} r[n]·conj(s[(n-l) mod N])·exp(-i2π·d·n/(ηN))
//! ```
//!
//! with signed Doppler bins `d ∈ {-η/2, …, η/2-1}` stored folded into
//! `0..η`. The map is evaluated as a slow-time DFT across pulses, an
//! intra-pulse phase ramp, and one FFT correlation per Doppler bin.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::fourier::Fourier;
use crate::scalar::{turn, Real};
use crate::zcseq::ZcSequence;

/// Signed Doppler bin of folded index `j`.
pub fn signed_doppler_bin(j: usize, eta: usize) -> i64 {
    if j < eta.div_ceil(2) {
        j as i64
    } else {
        j as i64 - eta as i64
    }
}

/// Inclusive range of signed Doppler bins, `-⌊η/2⌋..=⌊(η-1)/2⌋`.
pub fn doppler_bin_range(eta: usize) -> (i64, i64) {
    (-((eta / 2) as i64), ((eta - 1) / 2) as i64)
}

/// Folded index of signed Doppler bin `d` (taken modulo `η`).
pub fn folded_doppler_bin(d: i64, eta: usize) -> usize {
    d.rem_euclid(eta as i64) as usize
}

/// How the noise floor of a map is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseFloor {
    /// RMS cell magnitude over the whole map. Strong echoes and their
    /// correlation sidelobes raise it.
    #[default]
    MeanPower,
    /// Median magnitude over `√ln 2`, i.e. the RMS of a Rayleigh population.
    Median,
}

#[derive(Debug, Clone)]
pub struct RangeDopplerMap<T> {
    /// Delay-major: `cells[l * eta + j]`.
    cells: Vec<Complex<T>>,
    n: usize,
    eta: usize,
    tx_index: usize,
    noise_floor: T,
}

impl<T: Real> RangeDopplerMap<T> {
    /// Wraps precomputed cells (delay-major) and estimates the noise floor.
    pub fn from_cells(
        cells: Vec<Complex<T>>,
        n: usize,
        eta: usize,
        tx_index: usize,
        floor: NoiseFloor,
    ) -> Result<Self> {
        if cells.len() != n * eta || n == 0 || eta == 0 {
            return Err(Error::LengthMismatch {
                expected: n * eta,
                got: cells.len(),
            });
        }
        let mut map = Self {
            cells,
            n,
            eta,
            tx_index,
            noise_floor: T::one(),
        };
        map.noise_floor = map.estimate_noise_floor(floor);
        Ok(map)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eta(&self) -> usize {
        self.eta
    }

    pub fn tx_index(&self) -> usize {
        self.tx_index
    }

    pub fn cells(&self) -> &[Complex<T>] {
        &self.cells
    }

    /// Cell at delay `l` and folded Doppler index `j`.
    pub fn cell(&self, l: usize, j: usize) -> Complex<T> {
        self.cells[l * self.eta + j]
    }

    pub fn magnitude(&self, l: usize, j: usize) -> T {
        self.cell(l, j).norm()
    }

    /// Doppler resolution, `1/(ηN)` cycles per sample.
    pub fn doppler_bin_width(&self) -> f64 {
        1.0 / (self.n * self.eta) as f64
    }

    pub fn coherent_gain(&self) -> T {
        T::from_usize(self.n * self.eta).unwrap()
    }

    pub fn noise_floor(&self) -> T {
        self.noise_floor
    }

    pub fn max_magnitude(&self) -> T {
        self.cells
            .iter()
            .map(|c| c.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Floor estimate, clamped to the smallest positive value.
    pub fn estimate_noise_floor(&self, method: NoiseFloor) -> T {
        let raw = match method {
            NoiseFloor::MeanPower => {
                let total = self.cells.iter().fold(T::zero(), |a, c| a + c.norm_sqr());
                (total / T::from_usize(self.cells.len()).unwrap()).sqrt()
            }
            NoiseFloor::Median => {
                let mut mags: Vec<T> = self.cells.iter().map(|c| c.norm()).collect();
                let mid = mags.len() / 2;
                let (_, median, _) = mags.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
                *median / T::LN_2().sqrt()
            }
        };
        raw.max(T::min_positive_value())
    }
}

/// Reference sequence with its conjugated spectrum cached.
#[derive(Debug, Clone)]
pub struct Reference<T> {
    sequence: ZcSequence<T>,
    conj_spectrum: Vec<Complex<T>>,
}

impl<T: Real> Reference<T> {
    pub fn new(sequence: ZcSequence<T>) -> Self {
        let fourier = Fourier::new(sequence.len());
        let mut spec = sequence.samples().to_vec();
        fourier.forward(&mut spec);
        spec.iter_mut().for_each(|v| *v = v.conj());
        Self {
            sequence,
            conj_spectrum: spec,
        }
    }

    pub fn sequence(&self) -> &ZcSequence<T> {
        &self.sequence
    }
}

/// Reusable plans for maps of one `(N, η)` shape.
#[derive(Debug, Clone)]
pub struct RangeDopplerProcessor<T: Real> {
    n: usize,
    eta: usize,
    fourier: Fourier<T>,
    /// `exp(-i2π·d·p/η)`, indexed `[j * eta + p]`.
    slow_twiddles: Vec<Complex<T>>,
    /// `exp(-i2π·d·m/(ηN))`, indexed `[j * n + m]`.
    intra_ramps: Vec<Complex<T>>,
    floor: NoiseFloor,
}

impl<T: Real> RangeDopplerProcessor<T> {
    pub fn new(n: usize, eta: usize) -> Result<Self> {
        crate::zcseq::validate_length(n)?;
        if eta == 0 {
            return Err(Error::InvalidArgument("eta must be at least 1".into()));
        }
        let mut slow_twiddles = Vec::with_capacity(eta * eta);
        let mut intra_ramps = Vec::with_capacity(eta * n);
        for j in 0..eta {
            let d = signed_doppler_bin(j, eta);
            for p in 0..eta as i64 {
                let k = (d * p).rem_euclid(eta as i64);
                slow_twiddles.push(turn(-(k as f64) / eta as f64));
            }
            for m in 0..n {
                intra_ramps.push(turn(-(d as f64) * m as f64 / (eta * n) as f64));
            }
        }
        Ok(Self {
            n,
            eta,
            fourier: Fourier::new(n),
            slow_twiddles,
            intra_ramps,
            floor: NoiseFloor::default(),
        })
    }

    pub fn with_noise_floor(mut self, floor: NoiseFloor) -> Self {
        self.floor = floor;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eta(&self) -> usize {
        self.eta
    }

    pub fn compute(
        &self,
        r: &[Complex<T>],
        reference: &Reference<T>,
        tx_index: usize,
    ) -> Result<RangeDopplerMap<T>> {
        let (n, eta) = (self.n, self.eta);
        if r.len() != n * eta {
            return Err(Error::LengthMismatch {
                expected: n * eta,
                got: r.len(),
            });
        }
        if reference.sequence.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: reference.sequence.len(),
            });
        }
        let inv_n = T::one() / T::from_usize(n).unwrap();
        let mut cells = vec![Complex::zero(); n * eta];
        let mut y = vec![Complex::zero(); n];
        for j in 0..eta {
            let tw = &self.slow_twiddles[j * eta..(j + 1) * eta];
            y.iter_mut().for_each(|v| *v = Complex::zero());
            for (p, w) in tw.iter().enumerate() {
                for (acc, x) in y.iter_mut().zip(&r[p * n..(p + 1) * n]) {
                    *acc = *acc + x * w;
                }
            }
            for (v, ramp) in y.iter_mut().zip(&self.intra_ramps[j * n..(j + 1) * n]) {
                *v = *v * ramp;
            }
            self.fourier.forward(&mut y);
            for (v, s) in y.iter_mut().zip(&reference.conj_spectrum) {
                *v = *v * s;
            }
            self.fourier.inverse(&mut y);
            for (l, v) in y.iter().enumerate() {
                cells[l * eta + j] = v * inv_n;
            }
        }
        RangeDopplerMap::from_cells(cells, n, eta, tx_index, self.floor)
    }
}

pub fn range_doppler_map<T: Real>(
    r: &[Complex<T>],
    s: &ZcSequence<T>,
    eta: usize,
) -> Result<RangeDopplerMap<T>> {
    RangeDopplerProcessor::new(s.len(), eta)?.compute(r, &Reference::new(s.clone()), 0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection<T> {
    pub tx_index: usize,
    pub delay_bin: usize,
    /// Folded Doppler index in `0..η`.
    pub doppler_bin: usize,
    /// `cell / (ηN)`.
    pub amplitude_estimate: Complex<T>,
    pub peak_magnitude: T,
}

pub fn check_pfa(pfa: f64) -> Result<()> {
    if pfa > 0.0 && pfa < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidPfa(pfa))
    }
}

/// `floor·√(-ln pfa)`: the level a Rayleigh cell of that RMS exceeds with
/// probability `pfa`.
pub fn threshold<T: Real>(floor: T, pfa: f64) -> T {
    floor * T::lit((-pfa.ln()).sqrt())
}

pub fn detect<T: Real>(map: &RangeDopplerMap<T>, pfa: f64) -> Result<Vec<Detection<T>>> {
    detect_above_floor(map, pfa, T::zero())
}

/// Like [`detect`], with the noise floor held at or above `min_floor`. Keeps
/// the detector from chasing round-off once a residual is numerically empty.
pub fn detect_above_floor<T: Real>(
    map: &RangeDopplerMap<T>,
    pfa: f64,
    min_floor: T,
) -> Result<Vec<Detection<T>>> {
    check_pfa(pfa)?;
    let (n, eta) = (map.n, map.eta);
    let level = threshold(map.noise_floor.max(min_floor), pfa);
    let mag = |l: usize, j: usize| map.cells[l * eta + j].norm();
    let (d_lo, d_hi) = doppler_bin_range(eta);

    let mut candidates: Vec<(T, usize, usize)> = Vec::new();
    for l in 0..n {
        for j in 0..eta {
            let m = mag(l, j);
            if m <= level {
                continue;
            }
            let d = signed_doppler_bin(j, eta);
            let mut is_peak = true;
            'nb: for dl in [n - 1, 0, 1] {
                for dd in -1i64..=1 {
                    if dl == 0 && dd == 0 {
                        continue;
                    }
                    let nd = d + dd;
                    if nd < d_lo || nd > d_hi {
                        continue;
                    }
                    if mag((l + dl) % n, folded_doppler_bin(nd, eta)) > m {
                        is_peak = false;
                        break 'nb;
                    }
                }
            }
            if is_peak {
                candidates.push((m, l, j));
            }
        }
    }
    candidates.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let gain = map.coherent_gain();
    let mut accepted: Vec<Detection<T>> = Vec::new();
    for (m, l, j) in candidates {
        let guarded = accepted.iter().any(|a| {
            cyclic_distance(a.delay_bin, l, n) <= 2
                && (signed_doppler_bin(a.doppler_bin, eta) - signed_doppler_bin(j, eta)).abs() <= 1
        });
        if !guarded {
            accepted.push(Detection {
                tx_index: map.tx_index,
                delay_bin: l,
                doppler_bin: j,
                amplitude_estimate: map.cell(l, j) / gain,
                peak_magnitude: m,
            });
        }
    }
    Ok(accepted)
}

pub(crate) fn cyclic_distance(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b) % n;
    d.min(n - d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamEstimate<T> {
    pub delay: usize,
    /// Cycles per sample.
    pub xi_hat: f64,
    pub alpha_hat: Complex<T>,
}

/// Delay from the detected bin, Doppler refined by a three-point parabola
/// through the magnitudes of the neighbouring Doppler bins, amplitude from
/// the coherent gain.
pub fn estimate_params<T: Real>(map: &RangeDopplerMap<T>, det: &Detection<T>) -> ParamEstimate<T> {
    let eta = map.eta;
    let l = det.delay_bin;
    let d = signed_doppler_bin(det.doppler_bin, eta);
    let (lo, hi) = doppler_bin_range(eta);
    let at = |dd: i64| map.magnitude(l, folded_doppler_bin(dd, eta)).to_f64_lossy();
    let mut offset = 0.0;
    if d > lo && d < hi {
        let (m_lo, m_0, m_hi) = (at(d - 1), at(d), at(d + 1));
        let denom = m_lo - 2.0 * m_0 + m_hi;
        if denom < 0.0 {
            offset = (0.5 * (m_lo - m_hi) / denom).clamp(-0.5, 0.5);
        }
    }
    ParamEstimate {
        delay: l,
        xi_hat: (d as f64 + offset) * map.doppler_bin_width(),
        alpha_hat: map.cell(l, det.doppler_bin) / map.coherent_gain(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::superpose_echo;
    use crate::zcseq::generate_zc;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn echo(u: u32, n: usize, eta: usize, l: usize, xi: f64, a: Complex<f64>) -> Vec<Complex<f64>> {
        let z = generate_zc::<f64>(u, n).unwrap();
        let mut buf = vec![Complex::zero(); n * eta];
        superpose_echo(&mut buf, z.samples(), l, xi, a);
        buf
    }

    fn noise(len: usize, power: f64, seed: u64) -> Vec<Complex<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = (power / 2.0).sqrt();
        (0..len)
            .map(|_| Complex::new(f64::standard_normal(&mut rng), f64::standard_normal(&mut rng)) * s)
            .collect()
    }

    #[test]
    fn bin_folding() {
        let signed: Vec<i64> = (0..8).map(|j| signed_doppler_bin(j, 8)).collect();
        assert_eq!(signed, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        for d in -4..4 {
            assert_eq!(signed_doppler_bin(folded_doppler_bin(d, 8), 8), d);
        }
        assert_eq!(signed_doppler_bin(0, 1), 0);
        assert_eq!(doppler_bin_range(8), (-4, 3));
        assert_eq!(doppler_bin_range(5), (-2, 2));
        assert_eq!(doppler_bin_range(1), (0, 0));
        let five: Vec<i64> = (0..5).map(|j| signed_doppler_bin(j, 5)).collect();
        assert_eq!(five, vec![0, 1, 2, -2, -1]);
    }

    #[test]
    fn on_grid_echo_has_full_coherent_gain() {
        let (n, eta) = (256, 8);
        let a = Complex::new(0.6, -0.2);
        for d0 in [-4i64, -1, 0, 2, 3] {
            let xi = d0 as f64 / (n * eta) as f64;
            let r = echo(7, n, eta, 99, xi, a);
            let map = range_doppler_map(&r, &generate_zc(7, n).unwrap(), eta).unwrap();
            let j0 = folded_doppler_bin(d0, eta);
            let peak = map.cell(99, j0);
            assert!((peak.norm() / a.norm() - (n * eta) as f64).abs() < 1e-6 * (n * eta) as f64);
            for l in 0..n {
                for j in 0..eta {
                    if (l, j) != (99, j0) {
                        assert!(map.magnitude(l, j) < 1e-6, "({l},{j})");
                    }
                }
            }
        }
    }

    #[test]
    fn zero_input_gives_zero_map() {
        let r = vec![Complex::<f64>::zero(); 64 * 4];
        let map = range_doppler_map(&r, &generate_zc(3, 64).unwrap(), 4).unwrap();
        assert!(map.cells().iter().all(|c| c.norm() == 0.0));
        assert!(map.noise_floor() > 0.0);
        assert!(detect(&map, 1e-3).unwrap().is_empty());
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let r = vec![Complex::<f64>::zero(); 100];
        assert!(matches!(
            range_doppler_map(&r, &generate_zc(3, 64).unwrap(), 4),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn noise_cells_are_rayleigh() {
        let (n, eta) = (256, 4);
        let power = 0.5;
        let z = generate_zc::<f64>(5, n).unwrap();
        let proc = RangeDopplerProcessor::new(n, eta).unwrap();
        let reference = Reference::new(z);
        let mut medians = Vec::new();
        for t in 0..500 {
            let r = noise(n * eta, power, t);
            let map = proc.compute(&r, &reference, 0).unwrap();
            let mut m: Vec<f64> = map.cells().iter().map(|c| c.norm()).collect();
            m.sort_by(f64::total_cmp);
            medians.push(m[m.len() / 2]);
        }
        let mean_median = medians.iter().sum::<f64>() / medians.len() as f64;
        // Rayleigh median: σ√(2 ln 2) with σ² = ηN·P/2
        let expected = ((n * eta) as f64 * power / 2.0).sqrt() * (2.0 * std::f64::consts::LN_2).sqrt();
        assert!((mean_median / expected - 1.0).abs() < 0.01, "{mean_median} vs {expected}");
    }

    #[test]
    fn both_floor_estimators_agree_on_noise() {
        let (n, eta) = (512, 8);
        let r = noise(n * eta, 1.0, 9);
        let z = generate_zc::<f64>(3, n).unwrap();
        let map = range_doppler_map(&r, &z, eta).unwrap();
        let mean = map.estimate_noise_floor(NoiseFloor::MeanPower);
        let median = map.estimate_noise_floor(NoiseFloor::Median);
        let expected = ((n * eta) as f64).sqrt();
        assert!((mean / expected - 1.0).abs() < 0.03);
        assert!((median / expected - 1.0).abs() < 0.05);
    }

    #[test]
    fn single_noiseless_echo_yields_one_detection() {
        let (n, eta) = (256, 8);
        let r = echo(3, n, eta, 200, 2.0 / (n * eta) as f64, Complex::new(1.0, 0.0));
        let map = range_doppler_map(&r, &generate_zc(3, n).unwrap(), eta).unwrap();
        let dets = detect(&map, 1e-4).unwrap();
        assert_eq!(dets.len(), 1);
        assert_eq!((dets[0].delay_bin, dets[0].doppler_bin), (200, 2));
        assert!((dets[0].amplitude_estimate - Complex::new(1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn echo_at_last_delay_bin_stays_there() {
        let (n, eta) = (128, 4);
        let r = echo(5, n, eta, n - 1, 0.0, Complex::new(1.0, 0.0));
        let map = range_doppler_map(&r, &generate_zc(5, n).unwrap(), eta).unwrap();
        let dets = detect(&map, 1e-4).unwrap();
        assert_eq!(dets.len(), 1);
        assert_eq!(dets[0].delay_bin, n - 1);
    }

    #[test]
    fn two_separated_echoes_in_noise_are_both_found() {
        let (n, eta) = (2048, 8);
        let g = (n * eta) as f64;
        // per-echo output SNR of 20 dB over a unit-power noise floor
        let amp = (100.0 / g).sqrt();
        let mut r = echo(1, n, eta, 300, 1.0 / g, Complex::new(amp, 0.0));
        let other = echo(1, n, eta, 400, -2.0 / g, Complex::new(0.0, amp));
        let nz = noise(n * eta, 1.0, 5);
        for k in 0..r.len() {
            r[k] += other[k] + nz[k];
        }
        let map = range_doppler_map(&r, &generate_zc(1, n).unwrap(), eta).unwrap();
        let dets = detect(&map, 1e-4).unwrap();
        assert!(dets.iter().any(|d| d.delay_bin == 300 && d.doppler_bin == 1));
        assert!(dets.iter().any(|d| d.delay_bin == 400 && d.doppler_bin == 6));
    }

    #[test]
    fn guard_zone_suppresses_mainlobe_duplicates() {
        let (n, eta) = (256, 8);
        // Doppler between bins spreads energy into two adjacent cells
        let r = echo(3, n, eta, 50, 1.5 / (n * eta) as f64, Complex::new(1.0, 0.0));
        let map = range_doppler_map(&r, &generate_zc(3, n).unwrap(), eta).unwrap();
        let near: Vec<_> = detect(&map, 1e-4)
            .unwrap()
            .into_iter()
            .filter(|d| cyclic_distance(d.delay_bin, 50, n) <= 2)
            .collect();
        assert_eq!(near.len(), 1);
    }

    #[test]
    fn doppler_estimates() {
        let (n, eta) = (512, 8);
        let g = (n * eta) as f64;
        let z = generate_zc::<f64>(9, n).unwrap();
        let a = Complex::new(0.3, 0.4);
        // on grid
        let r = echo(9, n, eta, 10, 2.0 / g, a);
        let map = range_doppler_map(&r, &z, eta).unwrap();
        let det = detect(&map, 1e-4).unwrap()[0];
        let est = estimate_params(&map, &det);
        assert_eq!(est.delay, 10);
        assert!((est.xi_hat * g - 2.0).abs() <= 1e-3);
        assert!((est.alpha_hat - a).norm() <= 1e-6 * a.norm());
        // half a bin off grid
        let r = echo(9, n, eta, 10, 1.5 / g, a);
        let map = range_doppler_map(&r, &z, eta).unwrap();
        let det = detect(&map, 1e-4).unwrap()[0];
        let est = estimate_params(&map, &det);
        assert!((est.xi_hat * g - 1.5).abs() <= 0.1, "{}", est.xi_hat * g);
        // zero Doppler
        let r = echo(9, n, eta, 10, 0.0, a);
        let map = range_doppler_map(&r, &z, eta).unwrap();
        let det = detect(&map, 1e-4).unwrap()[0];
        assert!(estimate_params(&map, &det).xi_hat.abs() < 1e-9);
    }

    #[test]
    fn detection_is_deterministic() {
        let (n, eta) = (256, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r: Vec<Complex<f64>> = (0..n * eta)
            .map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let map = range_doppler_map(&r, &generate_zc(3, n).unwrap(), eta).unwrap();
        assert_eq!(detect(&map, 0.01).unwrap(), detect(&map, 0.01).unwrap());
        assert!(matches!(detect(&map, 0.0), Err(Error::InvalidPfa(_))));
        assert!(detect(&map, 1.0).is_err());
    }
}
