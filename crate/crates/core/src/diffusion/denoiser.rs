use super::{Condition, NoiseSchedule, Vocabulary};
use crate::codec::Latent;
use crate::{Error, Real, Result};

/// Data-prediction network `D(z, sigma, c)`.
///
/// Evaluation must be deterministic and shape-preserving.
pub trait Denoiser<T: Real>: Send + Sync {
    fn vocabulary(&self) -> &Vocabulary;

    fn denoise(&self, z: &Latent<T>, sigma: T, cond: &Condition) -> Result<Latent<T>>;

    /// Factor mapping codec latents onto the scale the noise schedule was
    /// trained for (roughly unit RMS).
    fn latent_scale(&self) -> f64 {
        1.0
    }
}

/// `D_null + s * (D_cond - D_null)`.
///
/// `s == 1` and a null `cond` evaluate the conditional branch only; `s == 0`
/// evaluates the null branch only.
pub fn denoise_cfg<T: Real>(
    denoiser: &dyn Denoiser<T>,
    z: &Latent<T>,
    sigma: T,
    cond: &Condition,
    scale: f64,
) -> Result<Latent<T>> {
    if scale == 1.0 || cond.is_null() {
        return denoiser.denoise(z, sigma, cond);
    }
    let null = Condition::null();
    if scale == 0.0 {
        return denoiser.denoise(z, sigma, &null);
    }
    let d_null = denoiser.denoise(z, sigma, &null)?;
    let d_cond = denoiser.denoise(z, sigma, cond)?;
    let s = T::lit(scale);
    let data = d_null
        .values()
        .iter()
        .zip(d_cond.values())
        .map(|(&u, &c)| u + s * (c - u))
        .collect();
    d_null.with_data(data)
}

/// Anything that predicts the clean latent from `(z, sigma)`; the unit the
/// samplers iterate.
pub trait DataPredictor<T: Real> {
    fn predict(&self, z: &Latent<T>, sigma: T) -> Result<Latent<T>>;
}

impl<T: Real, F> DataPredictor<T> for F
where
    F: Fn(&Latent<T>, T) -> Result<Latent<T>>,
{
    fn predict(&self, z: &Latent<T>, sigma: T) -> Result<Latent<T>> {
        self(z, sigma)
    }
}

/// A denoiser bound to a condition and guidance scale.
pub struct Guided<'a, T: Real> {
    pub denoiser: &'a dyn Denoiser<T>,
    pub cond: Condition,
    pub scale: f64,
}

impl<'a, T: Real> Guided<'a, T> {
    pub fn new(denoiser: &'a dyn Denoiser<T>, cond: Condition, scale: f64) -> Self {
        Guided { denoiser, cond, scale }
    }
}

impl<T: Real> DataPredictor<T> for Guided<'_, T> {
    fn predict(&self, z: &Latent<T>, sigma: T) -> Result<Latent<T>> {
        denoise_cfg(self.denoiser, z, sigma, &self.cond, self.scale)
    }
}

/// `alpha_i * z0 + sigma_i * w`.
pub fn forward_diffuse<T: Real>(z0: &Latent<T>, i: usize, schedule: &NoiseSchedule, w: &Latent<T>) -> Result<Latent<T>> {
    if i == 0 || i > schedule.steps() {
        return Err(Error::Schedule(format!(
            "step index {i} outside 1..={}",
            schedule.steps()
        )));
    }
    z0.lincomb(T::lit(schedule.alpha(i)), w, T::lit(schedule.sigma(i)))
}
