//! N-point discrete chirp-Fourier transform.
//!
//! `X[k] = (1/√N)·Σ_n x[n]·W^{kn - βn²/2}` with `W = exp(-i2π/N)`: the
//! normalized DFT of `x[n]·W^{-βn²/2}`. The inverse multiplies the normalized
//! inverse DFT by `W^{βn²/2}`, so the pair is unitary. For a seed-`u` ZC
//! sequence delayed by `l` and `β = u` the spectrum is a single peak of
//! magnitude `√N` at bin `(u·l) mod N`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fourier::Fourier;
use crate::scalar::{quadratic_phase, Real};
use crate::zcseq::{max_seed, validate_length};

/// DCFT coefficients at a fixed integer chirp rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ChirpSpectrum<T> {
    coefficients: Vec<Complex<T>>,
    chirp_rate: u32,
}

impl<T: Real> ChirpSpectrum<T> {
    pub fn new(coefficients: Vec<Complex<T>>, chirp_rate: u32) -> Result<Self> {
        let n = coefficients.len();
        validate_length(n)?;
        validate_chirp_rate(chirp_rate as i64, n)?;
        Ok(Self {
            coefficients,
            chirp_rate,
        })
    }

    pub fn coefficients(&self) -> &[Complex<T>] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coefficients
    }

    pub fn chirp_rate(&self) -> u32 {
        self.chirp_rate
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Bin with the largest magnitude (first one on ties).
    pub fn peak_bin(&self) -> usize {
        let mut best = 0;
        for (k, v) in self.coefficients.iter().enumerate() {
            if v.norm_sqr() > self.coefficients[best].norm_sqr() {
                best = k;
            }
        }
        best
    }
}

pub fn validate_chirp_rate(beta: i64, n: usize) -> Result<()> {
    let max = max_seed(n);
    if beta < 0 || beta as u64 > max as u64 {
        return Err(Error::ChirpRateOutOfRange { beta, max });
    }
    Ok(())
}

/// Precomputed chirps and FFT plan for one `(N, β)` pair, reused across many
/// segments.
#[derive(Debug, Clone)]
pub struct DcftPlan<T: Real> {
    chirp_rate: u32,
    /// `W^{βn²/2}`; the forward de-chirp uses its conjugate.
    chirp: Vec<Complex<T>>,
    fourier: Fourier<T>,
    scale: T,
}

impl<T: Real> DcftPlan<T> {
    pub fn new(n: usize, beta: u32) -> Result<Self> {
        validate_length(n)?;
        validate_chirp_rate(beta as i64, n)?;
        let chirp = (0..n as u64)
            .map(|k| quadratic_phase(beta as u64, k, n as u64))
            .collect();
        Ok(Self {
            chirp_rate: beta,
            chirp,
            fourier: Fourier::new(n),
            scale: T::one() / T::from_usize(n).unwrap().sqrt(),
        })
    }

    pub fn len(&self) -> usize {
        self.fourier.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn chirp_rate(&self) -> u32 {
        self.chirp_rate
    }

    /// In-place forward transform of one length-`N` block.
    pub fn forward_in_place(&self, buf: &mut [Complex<T>]) {
        for (v, c) in buf.iter_mut().zip(&self.chirp) {
            *v = *v * c.conj();
        }
        self.fourier.forward(buf);
        buf.iter_mut().for_each(|v| *v = *v * self.scale);
    }

    /// In-place inverse transform of one length-`N` block.
    pub fn inverse_in_place(&self, buf: &mut [Complex<T>]) {
        self.fourier.inverse(buf);
        for (v, c) in buf.iter_mut().zip(&self.chirp) {
            *v = *v * *c * self.scale;
        }
    }

    pub fn forward(&self, x: &[Complex<T>]) -> Result<ChirpSpectrum<T>> {
        if x.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: x.len(),
            });
        }
        let mut buf = x.to_vec();
        self.forward_in_place(&mut buf);
        Ok(ChirpSpectrum {
            coefficients: buf,
            chirp_rate: self.chirp_rate,
        })
    }

    pub fn inverse(&self, spectrum: &ChirpSpectrum<T>) -> Result<Vec<Complex<T>>> {
        if spectrum.len() != self.len() || spectrum.chirp_rate != self.chirp_rate {
            return Err(Error::InvalidArgument(format!(
                "spectrum (N={}, β={}) does not match plan (N={}, β={})",
                spectrum.len(),
                spectrum.chirp_rate,
                self.len(),
                self.chirp_rate
            )));
        }
        let mut buf = spectrum.coefficients.clone();
        self.inverse_in_place(&mut buf);
        Ok(buf)
    }
}

pub fn dcft<T: Real>(x: &[Complex<T>], beta: u32) -> Result<ChirpSpectrum<T>> {
    validate_length(x.len())?;
    DcftPlan::new(x.len(), beta)?.forward(x)
}

pub fn idcft<T: Real>(spectrum: &ChirpSpectrum<T>) -> Vec<Complex<T>> {
    let plan = DcftPlan::new(spectrum.len(), spectrum.chirp_rate)
        .expect("ChirpSpectrum invariants guarantee a valid plan");
    let mut buf = spectrum.coefficients.clone();
    plan.inverse_in_place(&mut buf);
    buf
}

/// Bin `(u·l) mod N` where a delayed seed-`u` sequence peaks when `β = u`.
pub fn matched_peak_bin(u: i64, l: i64, n: usize) -> usize {
    let n = n as i128;
    ((u as i128 * l as i128).rem_euclid(n)) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zcseq::generate_zc;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_signal(n: usize, seed: u64) -> Vec<Complex<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    /// Normalized DFT straight from the definition.
    fn naive_dft(x: &[Complex<f64>]) -> Vec<Complex<f64>> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter().enumerate().fold(Complex::new(0.0, 0.0), |acc, (m, v)| {
                    let a = -2.0 * std::f64::consts::PI * ((k * m) % n) as f64 / n as f64;
                    acc + v * Complex::new(a.cos(), a.sin())
                }) / (n as f64).sqrt()
            })
            .collect()
    }

    #[test]
    fn zero_chirp_rate_is_normalized_dft() {
        let x = random_signal(64, 1);
        let s = dcft(&x, 0).unwrap();
        for (a, b) in s.coefficients().iter().zip(naive_dft(&x)) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn matched_rate_gives_single_peak_of_sqrt_n() {
        let z = generate_zc::<f64>(3, 2048).unwrap();
        let s = dcft(&z.delayed(5), 3).unwrap();
        for (k, v) in s.coefficients().iter().enumerate() {
            if k == 15 {
                assert!((v.norm() - 2048f64.sqrt()).abs() < 1e-6);
            } else {
                assert!(v.norm() <= 1e-6, "bin {k}: {}", v.norm());
            }
        }
    }

    #[test]
    fn unmatched_rate_stays_bounded_and_above_one() {
        let z = generate_zc::<f64>(3, 2048).unwrap();
        let s = dcft(z.samples(), 5).unwrap();
        let peak = s.coefficients().iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(peak <= 64.0);
        assert!(peak > 1.0);
        // de-chirped sequence is a rate-2 chirp: flat magnitude √2 on half the bins
        assert!((peak - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn chirp_rate_range_is_enforced() {
        let x = random_signal(16, 2);
        assert!(dcft(&x, 6).is_ok());
        assert!(matches!(
            dcft(&x, 7),
            Err(Error::ChirpRateOutOfRange { beta: 7, max: 6 })
        ));
    }

    #[test]
    fn impulse_at_zero_inverts_to_unit_energy_chirp() {
        let n = 256;
        let mut c = vec![Complex::new(0.0, 0.0); n];
        c[0] = Complex::new(1.0, 0.0);
        let spec = ChirpSpectrum::new(c, 7).unwrap();
        let x = idcft(&spec);
        let z = generate_zc::<f64>(7, n).unwrap();
        let scale = 1.0 / (n as f64).sqrt();
        for (a, b) in x.iter().zip(z.samples()) {
            assert!((a - b * scale).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_spectrum_inverts_to_zero() {
        let spec = ChirpSpectrum::new(vec![Complex::new(0.0, 0.0); 64], 3).unwrap();
        assert!(idcft(&spec).iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn round_trip_at_256_beta_7() {
        let x = random_signal(256, 3);
        let back = idcft(&dcft(&x, 7).unwrap());
        let err = x.iter().zip(&back).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err <= 1e-10);
    }

    #[test]
    fn peak_bin_examples() {
        assert_eq!(matched_peak_bin(3, 5, 2048), 15);
        assert_eq!(matched_peak_bin(17, 0, 2048), 0);
        assert_eq!(matched_peak_bin(3, 683, 2048), 1);
        assert_eq!(matched_peak_bin(3, -1, 2048), 2045);
        let z = generate_zc::<f64>(3, 2048).unwrap();
        assert_eq!(dcft(&z.delayed(683), 3).unwrap().peak_bin(), 1);
    }

    #[test]
    fn integer_doppler_shifts_the_impulse() {
        let n = 512;
        let u = 9;
        let z = generate_zc::<f64>(u, n).unwrap();
        let l = 40;
        for d in [-3i64, 1, 7] {
            let x: Vec<_> = z
                .delayed(l)
                .iter()
                .enumerate()
                .map(|(m, v)| {
                    let a = 2.0 * std::f64::consts::PI * (d * m as i64) as f64 / n as f64;
                    v * Complex::new(a.cos(), a.sin())
                })
                .collect();
            let s = dcft(&x, u).unwrap();
            let expect = (matched_peak_bin(u as i64, l, n) as i64 + d).rem_euclid(n as i64);
            assert_eq!(s.peak_bin() as i64, expect);
            assert!((s.coefficients()[expect as usize].norm() - (n as f64).sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn fractional_doppler_peak_decays_monotonically() {
        let n = 2048;
        let z = generate_zc::<f64>(3, n).unwrap();
        let mut last = f64::INFINITY;
        for frac in [0.0, 0.1, 0.2, 0.3, 0.5] {
            let x: Vec<_> = z
                .delayed(11)
                .iter()
                .enumerate()
                .map(|(m, v)| {
                    let a = 2.0 * std::f64::consts::PI * frac * m as f64 / n as f64;
                    v * Complex::new(a.cos(), a.sin())
                })
                .collect();
            let s = dcft(&x, 3).unwrap();
            let peak = s.coefficients()[s.peak_bin()].norm();
            assert!(peak < last || frac == 0.0);
            last = peak;
        }
        // half-bin offset: Dirichlet peak ≈ √N·2/π
        assert!((last / (n as f64).sqrt() - 2.0 / std::f64::consts::PI).abs() < 1e-3);
    }

    #[test]
    fn single_precision_round_trip() {
        let x: Vec<Complex<f32>> = random_signal(128, 4)
            .iter()
            .map(|v| Complex::new(v.re as f32, v.im as f32))
            .collect();
        let back = idcft(&dcft(&x, 11).unwrap());
        assert!(x.iter().zip(&back).all(|(a, b)| (a - b).norm() < 1e-5));
    }

    proptest! {
        #[test]
        fn linear_in_the_input(seed in 0u64..1000, beta in 0u32..30, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let n = 64;
            let x = random_signal(n, seed);
            let y = random_signal(n, seed + 7919);
            let mix: Vec<_> = x.iter().zip(&y).map(|(p, q)| p * a + q * b).collect();
            let sx = dcft(&x, beta).unwrap();
            let sy = dcft(&y, beta).unwrap();
            let sm = dcft(&mix, beta).unwrap();
            for k in 0..n {
                let lin = sx.coefficients()[k] * a + sy.coefficients()[k] * b;
                prop_assert!((sm.coefficients()[k] - lin).norm() <= 1e-10);
            }
        }

        #[test]
        fn energy_is_preserved(seed in 0u64..1000, log_n in 3u32..12, beta_frac in 0.0f64..1.0) {
            let n = 1usize << log_n;
            let beta = (beta_frac * (max_seed(n) + 1) as f64) as u32;
            let x = random_signal(n, seed);
            let s = dcft(&x, beta.min(max_seed(n) as u32)).unwrap();
            let ex: f64 = x.iter().map(|v| v.norm_sqr()).sum();
            let es: f64 = s.coefficients().iter().map(|v| v.norm_sqr()).sum();
            prop_assert!((ex - es).abs() <= 1e-9 * ex);
        }

        #[test]
        fn matched_impulse_for_any_delay(u_idx in 0u32..100, l in -5000i64..5000) {
            let n = 256;
            let u = 2 * (u_idx % 63) + 1;
            let z = generate_zc::<f64>(u, n).unwrap();
            let s = dcft(&z.delayed(l), u).unwrap();
            let k0 = matched_peak_bin(u as i64, l, n);
            for (k, v) in s.coefficients().iter().enumerate() {
                if k == k0 {
                    prop_assert!(v.norm() >= 16.0 - 1e-6);
                } else {
                    prop_assert!(v.norm() <= 1e-6);
                }
            }
        }
    }
}
