//! Zadoff-Chu sequences and periodic correlation.
//!
//! Only even, power-of-two lengths `N ≥ 8` are supported. Seeds are odd and
//! restricted to `1..=N/2-2` so that a seed can be matched unambiguously by
//! the chirp rate of the DCFT.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::fourier::Fourier;
use crate::scalar::{quadratic_phase, Real};

/// Checks that `n` is a power of two and at least 8.
pub fn validate_length(n: usize) -> Result<()> {
    if n >= 8 && n.is_power_of_two() {
        Ok(())
    } else {
        Err(Error::InvalidLength(n))
    }
}

/// Largest admissible seed (and chirp rate) for length `n`.
pub fn max_seed(n: usize) -> usize {
    n / 2 - 2
}

/// Checks a seed against a (valid) length.
pub fn validate_seed(u: i64, n: usize) -> Result<()> {
    validate_length(n)?;
    let err = |reason| Error::InvalidSeed {
        seed: u,
        len: n,
        reason,
    };
    if u.rem_euclid(2) == 0 {
        return Err(err("even seeds share a factor with the length"));
    }
    if u < 1 || u as u64 > max_seed(n) as u64 {
        return Err(err("seed must lie in 1..=N/2-2"));
    }
    Ok(())
}

/// A length-`N` Zadoff-Chu sequence with its seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ZcSequence<T> {
    seed: u32,
    samples: Vec<Complex<T>>,
}

impl<T: Real> ZcSequence<T> {
    /// `z[n] = exp(-iπ·u·n²/N)`, with `u·n²` reduced modulo `2N` in integers.
    pub fn new(seed: u32, n: usize) -> Result<Self> {
        validate_seed(seed as i64, n)?;
        let samples = (0..n as u64)
            .map(|k| quadratic_phase(seed as u64, k, n as u64))
            .collect();
        Ok(Self { seed, samples })
    }

    pub fn seed(&self) -> u32 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Complex<T>] {
        &self.samples
    }

    /// Periodic indexing: `z[i mod N]` for any integer `i`.
    pub fn sample_at(&self, i: i64) -> Complex<T> {
        self.samples[i.rem_euclid(self.len() as i64) as usize]
    }

    /// `z[n - l]` for `n = 0..N`, i.e. the sequence cyclically delayed by `l`.
    pub fn delayed(&self, l: i64) -> Vec<Complex<T>> {
        let n = self.len();
        let shift = l.rem_euclid(n as i64) as usize;
        let mut out = self.samples.clone();
        out.rotate_right(shift);
        out
    }
}

pub fn generate_zc<T: Real>(u: u32, n: usize) -> Result<ZcSequence<T>> {
    ZcSequence::new(u, n)
}

pub fn delayed_zc<T: Real>(seq: &ZcSequence<T>, l: i64) -> Vec<Complex<T>> {
    seq.delayed(l)
}

/// Periodic correlation values indexed by shift `l = 0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSequence<T> {
    values: Vec<Complex<T>>,
}

impl<T: Real> CorrelationSequence<T> {
    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest magnitude over all shifts.
    pub fn peak_magnitude(&self) -> T {
        self.values
            .iter()
            .map(|v| v.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }
}

/// `values[l] = Σ_n x[n]·conj(y[(n-l) mod N])`, evaluated as
/// `IFFT(X·conj(Y))/N`.
pub fn periodic_correlation<T: Real>(
    x: &[Complex<T>],
    y: &[Complex<T>],
) -> Result<CorrelationSequence<T>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let n = x.len();
    if n == 0 {
        return Ok(CorrelationSequence { values: Vec::new() });
    }
    let fourier = Fourier::new(n);
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    fourier.forward(&mut xs);
    fourier.forward(&mut ys);
    for (a, b) in xs.iter_mut().zip(&ys) {
        *a = *a * b.conj();
    }
    fourier.inverse(&mut xs);
    let scale = T::one() / T::from_usize(n).unwrap();
    xs.iter_mut().for_each(|v| *v = *v * scale);
    Ok(CorrelationSequence { values: xs })
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Maximum PCCF magnitude between the seed-`a` and seed-`b` sequences of
/// length `n`: `√(gcd(n, a-b)·n)`.
pub fn pccf_peak_bound(n: usize, a: u32, b: u32) -> Result<f64> {
    validate_seed(a as i64, n)?;
    validate_seed(b as i64, n)?;
    if a == b {
        return Err(Error::IdenticalSeeds(a));
    }
    let tau = gcd(n as u64, (a as i64 - b as i64).unsigned_abs());
    Ok(((tau * n as u64) as f64).sqrt())
}

/// The first `m` odd integers, `[1, 3, …, 2m-1]`.
pub fn default_seeds(m: usize, n: usize) -> Result<Vec<u32>> {
    validate_length(n)?;
    if m == 0 || 2 * m - 1 > max_seed(n) {
        return Err(Error::SeedRangeExhausted {
            count: m,
            len: n,
            max: max_seed(n),
        });
    }
    Ok((0..m as u32).map(|i| 2 * i + 1).collect())
}

/// Direct `O(N²)` evaluation of the periodic correlation. Reference only.
pub fn periodic_correlation_direct<T: Real>(
    x: &[Complex<T>],
    y: &[Complex<T>],
) -> Result<CorrelationSequence<T>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let n = x.len();
    let values = (0..n)
        .map(|l| {
            (0..n).fold(Complex::zero(), |acc, k| {
                acc + x[k] * y[(k + n - l) % n].conj()
            })
        })
        .collect();
    Ok(CorrelationSequence { values })
}
