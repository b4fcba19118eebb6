use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Floating-point element type of latents, denoiser evaluation and samplers.
///
/// Implemented for `f32` (the storage precision of checkpoints and latent
/// files) and `f64` (used by gradient checks and high-precision invariants).
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn of_f32(v: f32) -> Self {
        Self::lit(v as f64)
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
