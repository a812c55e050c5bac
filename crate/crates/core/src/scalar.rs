//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point type the simulator is generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }

    #[inline]
    fn two_pi() -> Self {
        Self::TAU()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts a cyclic frequency ν in MHz to an angular frequency in rad/µs.
#[inline]
pub fn mhz_to_angular<T: Real>(nu_mhz: T) -> T {
    T::two_pi() * nu_mhz
}

/// Converts an angular frequency in rad/µs to a cyclic frequency in kHz.
#[inline]
pub fn angular_to_khz<T: Real>(omega: T) -> T {
    omega / T::two_pi() * T::lit(1.0e3)
}

/// Wraps a phase into (−π, π].
pub fn wrap_phase<T: Real>(phi: T) -> T {
    let tau = T::two_pi();
    let mut p = phi % tau;
    if p <= -T::PI() {
        p += tau;
    } else if p > T::PI() {
        p -= tau;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_phase_range() {
        for k in -20..20 {
            let x = 0.37 * k as f64;
            let w = wrap_phase(x);
            assert!(w > -std::f64::consts::PI && w <= std::f64::consts::PI);
            assert!(((x - w) / std::f64::consts::TAU).fract().abs() < 1e-12
                || (1.0 - ((x - w) / std::f64::consts::TAU).fract().abs()) < 1e-12);
        }
        assert_eq!(wrap_phase(std::f64::consts::PI), std::f64::consts::PI);
        assert_eq!(wrap_phase(-std::f64::consts::PI), std::f64::consts::PI);
    }

    #[test]
    fn unit_conversion() {
        let w = mhz_to_angular(1.0_f64);
        assert!((w - std::f64::consts::TAU).abs() < 1e-15);
        assert!((angular_to_khz(w) - 1000.0).abs() < 1e-9);
    }
}
