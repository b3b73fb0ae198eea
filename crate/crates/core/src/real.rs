//! Scalar abstraction for the numeric core.
//!
//! All simulation math is generic over [`Real`]: an IEEE float with the few
//! extras the pipeline needs beyond `num_traits::Float` — drawing standard
//! normal and uniform variates, the complementary error function, and the
//! log-gamma function. `f32` and `f64` implement it; concrete `f64` aliases
//! for the main types live at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::StandardNormal;

/// Floating-point scalar usable throughout the simulator.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Draw from the standard normal distribution N(0, 1).
    fn standard_normal<G: Rng + ?Sized>(rng: &mut G) -> Self;

    /// Draw uniformly from the half-open interval `[low, high)`.
    fn uniform<G: Rng + ?Sized>(rng: &mut G, low: Self, high: Self) -> Self;

    /// Complementary error function.
    fn erfc(self) -> Self;

    /// Natural logarithm of the gamma function.
    fn ln_gamma(self) -> Self;

    /// Convert an `f64` constant into this scalar type.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable in scalar type")
    }

    /// Widen to `f64` (used when reporting results).
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Real for f64 {
    fn standard_normal<G: Rng + ?Sized>(rng: &mut G) -> Self {
        rng.sample(StandardNormal)
    }

    fn uniform<G: Rng + ?Sized>(rng: &mut G, low: Self, high: Self) -> Self {
        rng.random_range(low..high)
    }

    fn erfc(self) -> Self {
        libm::erfc(self)
    }

    fn ln_gamma(self) -> Self {
        libm::lgamma(self)
    }
}

impl Real for f32 {
    fn standard_normal<G: Rng + ?Sized>(rng: &mut G) -> Self {
        rng.sample(StandardNormal)
    }

    fn uniform<G: Rng + ?Sized>(rng: &mut G, low: Self, high: Self) -> Self {
        rng.random_range(low..high)
    }

    fn erfc(self) -> Self {
        libm::erfcf(self)
    }

    fn ln_gamma(self) -> Self {
        libm::lgammaf(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_stays_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let v = f64::uniform(&mut rng, 2.0, 3.0);
            assert!((2.0..3.0).contains(&v));
        }
    }

    #[test]
    fn normal_moments_roughly_standard() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| f64::standard_normal(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "var {var}");
    }

    #[test]
    fn f32_instantiates_the_same_surface() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = f32::uniform(&mut rng, 0.0, 1.0);
        assert!((0.0..1.0).contains(&v));
        assert!((Real::erfc(0.0f32) - 1.0).abs() < 1e-6);
        assert!(Real::ln_gamma(1.0f32).abs() < 1e-6);
    }

    #[test]
    fn erfc_reference_points() {
        assert!((Real::erfc(0.0f64) - 1.0).abs() < 1e-15);
        // erfc(1) = 0.15729920705028513...
        assert!((Real::erfc(1.0f64) - 0.157_299_207_050_285_13).abs() < 1e-14);
    }
}
