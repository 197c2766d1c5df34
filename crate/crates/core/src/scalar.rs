//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftNum;

/// Floating-point sample type: `f32` or `f64`.
pub trait Real:
    FftNum
    + Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Draws one standard normal variate.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Converts an `f64` constant. Never fails for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Real for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

/// Unit phasor `exp(-iπ·rate·n²/len)` with the exponent reduced exactly in
/// integers modulo `2·len` before it ever becomes an angle.
#[inline]
pub(crate) fn quadratic_phase<T: Real>(rate: u64, n: u64, len: u64) -> Complex<T> {
    let period = 2 * len;
    let n_sq = (n % period) * (n % period) % period;
    let e = (rate % period) * n_sq % period;
    half_turns(e, len)
}

/// Unit phasor `exp(-iπ·e/len)` for an integer exponent `0 ≤ e < 2·len`,
/// evaluated on the symmetric range `(-π, π]`.
#[inline]
pub(crate) fn half_turns<T: Real>(e: u64, len: u64) -> Complex<T> {
    let signed = if e > len { e as f64 - 2.0 * len as f64 } else { e as f64 };
    let angle = -std::f64::consts::PI * signed / len as f64;
    Complex::new(T::lit(angle.cos()), T::lit(angle.sin()))
}

/// Unit phasor `exp(i2π·cycles)` with the integer part of `cycles` discarded
/// in `f64` first.
#[inline]
pub(crate) fn turn<T: Real>(cycles: f64) -> Complex<T> {
    let frac = cycles - cycles.round();
    let angle = 2.0 * std::f64::consts::PI * frac;
    Complex::new(T::lit(angle.cos()), T::lit(angle.sin()))
}

pub(crate) fn energy<T: Real>(x: &[Complex<T>]) -> T {
    x.iter().fold(T::zero(), |acc, v| acc + v.norm_sqr())
}
