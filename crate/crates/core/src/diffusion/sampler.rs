use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;

use super::{DataPredictor, NoiseSchedule};
use crate::codec::Latent;
use crate::{seed, Error, Real, Result};

fn check_start(start: usize, schedule: &NoiseSchedule) -> Result<()> {
    if start > schedule.steps() {
        return Err(Error::Schedule(format!(
            "start index {start} exceeds schedule length {}",
            schedule.steps()
        )));
    }
    Ok(())
}

/// Deterministic second-order multistep DPM-Solver++ in data prediction,
/// from `sigma_start` down to `sigma_0 = 0`. `start == 0` returns the input.
pub fn sample_dpmpp2m<T: Real>(
    z_start: &Latent<T>,
    start: usize,
    schedule: &NoiseSchedule,
    model: &dyn DataPredictor<T>,
) -> Result<Latent<T>> {
    check_start(start, schedule)?;
    let mut x = z_start.clone();
    let mut previous: Option<(Latent<T>, T)> = None;
    for i in (1..=start).rev() {
        let sigma = T::lit(schedule.sigma(i));
        let next = T::lit(schedule.sigma(i - 1));
        let denoised = model.predict(&x, sigma)?;
        if next == T::zero() {
            return Ok(denoised);
        }
        let h = sigma.ln() - next.ln();
        let ratio = next / sigma;
        let gain = -(-h).exp_m1();
        let target = match &previous {
            Some((d_prev, h_prev)) => {
                let r = *h_prev / h;
                let a = T::one() + T::one() / (T::lit(2.0) * r);
                let b = T::one() / (T::lit(2.0) * r);
                denoised.lincomb(a, d_prev, -b)?
            }
            None => denoised.clone(),
        };
        x = x.lincomb(ratio, &target, gain)?;
        previous = Some((denoised, h));
    }
    Ok(x)
}

/// Euler-ancestral step `i -> i-1` in its exposed form
/// `z_{i-1} = mean + sigma_up * w`.
#[derive(Debug, Clone, PartialEq)]
pub struct AncestralStep<T: Real = f32> {
    pub denoised: Latent<T>,
    pub mean: Latent<T>,
    pub sigma_up: T,
    pub sigma_down: T,
}

pub fn ancestral_step<T: Real>(
    z: &Latent<T>,
    i: usize,
    schedule: &NoiseSchedule,
    model: &dyn DataPredictor<T>,
) -> Result<AncestralStep<T>> {
    if i == 0 || i > schedule.steps() {
        return Err(Error::Schedule(format!("step index {i} outside 1..={}", schedule.steps())));
    }
    let sigma = T::lit(schedule.sigma(i));
    let to = T::lit(schedule.sigma(i - 1));
    let sigma_up = to.min(to * (T::one() - (to * to) / (sigma * sigma)).max(T::zero()).sqrt());
    let sigma_down = (to * to - sigma_up * sigma_up).max(T::zero()).sqrt();
    let denoised = model.predict(z, sigma)?;
    let slope = (sigma_down - sigma) / sigma;
    let data = z
        .values()
        .iter()
        .zip(denoised.values())
        .map(|(&zv, &dv)| zv + slope * (zv - dv))
        .collect();
    let mean = z.with_data(data)?;
    Ok(AncestralStep {
        denoised,
        mean,
        sigma_up,
        sigma_down,
    })
}

/// Per-step noise `w_i` for the ancestral sampler.
pub trait NoiseSource<T: Real> {
    fn step_noise(&mut self, step: usize, like: &Latent<T>) -> Result<Latent<T>>;

    /// Correction added after the final step; lets a crafted trajectory land
    /// exactly where `sigma_up = 0` leaves no noise to carry it.
    fn terminal_residual(&mut self, _like: &Latent<T>) -> Result<Option<Latent<T>>> {
        Ok(None)
    }
}

/// Fresh standard-normal noise from a seeded stream.
pub struct GaussianNoise {
    rng: ChaCha8Rng,
}

impl GaussianNoise {
    pub fn new(seed: u64) -> Self {
        GaussianNoise { rng: seed::rng(seed) }
    }
}

impl<T: Real> NoiseSource<T> for GaussianNoise {
    fn step_noise(&mut self, _step: usize, like: &Latent<T>) -> Result<Latent<T>> {
        Ok(like.randn_like(&mut self.rng))
    }
}

pub struct ZeroNoise;

impl<T: Real> NoiseSource<T> for ZeroNoise {
    fn step_noise(&mut self, _step: usize, like: &Latent<T>) -> Result<Latent<T>> {
        Ok(like.zeros_like())
    }
}

/// Pre-recorded noises keyed by step index.
#[derive(Debug, Clone, Default)]
pub struct FixedNoise<T: Real = f32> {
    steps: BTreeMap<usize, Latent<T>>,
    terminal: Option<Latent<T>>,
}

impl<T: Real> FixedNoise<T> {
    pub fn new(steps: BTreeMap<usize, Latent<T>>, terminal: Option<Latent<T>>) -> Self {
        FixedNoise { steps, terminal }
    }
}

impl<T: Real> NoiseSource<T> for FixedNoise<T> {
    fn step_noise(&mut self, step: usize, like: &Latent<T>) -> Result<Latent<T>> {
        let w = self.steps.get(&step).ok_or(Error::NoiseExhausted(step))?;
        like.check_same_shape(w)?;
        Ok(w.clone())
    }

    fn terminal_residual(&mut self, _like: &Latent<T>) -> Result<Option<Latent<T>>> {
        Ok(self.terminal.clone())
    }
}

/// Stochastic Euler-ancestral sampling from index `start` to 0.
pub fn sample_ancestral<T: Real>(
    z_start: &Latent<T>,
    start: usize,
    schedule: &NoiseSchedule,
    model: &dyn DataPredictor<T>,
    noise: &mut dyn NoiseSource<T>,
) -> Result<Latent<T>> {
    check_start(start, schedule)?;
    let mut z = z_start.clone();
    for i in (1..=start).rev() {
        let step = ancestral_step(&z, i, schedule, model)?;
        let w = noise.step_noise(i, &z)?;
        z = if step.sigma_up > T::zero() {
            step.mean.lincomb(T::one(), &w, step.sigma_up)?
        } else {
            step.mean
        };
    }
    if start > 0 {
        if let Some(r) = noise.terminal_residual(&z)? {
            z = z.lincomb(T::one(), &r, T::one())?;
        }
    }
    Ok(z)
}
