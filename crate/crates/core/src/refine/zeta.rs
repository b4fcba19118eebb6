use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Backend, RefinementConfig};
use crate::codec::Latent;
use crate::diffusion::{ancestral_step, sample_ancestral, Condition, Denoiser, Guided, NoiseSchedule, NoiseSource};
use crate::{seed, Error, Real, Result};

/// States `z_0..=z_k` (with `z_0 = z_syn`) and the crafted noises
/// `w_1..=w_k` that make the ancestral sampler under the source condition
/// step exactly from `z_i` to `z_{i-1}`.
///
/// The last step has no ancestral noise (`sigma_0 = 0`), so the gap
/// `z_0 - mean_1` is kept as a terminal residual and `w_1 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct InversionTrajectory<T: Real = f32> {
    states: Vec<Latent<T>>,
    noises: Vec<Latent<T>>,
    terminal_residual: Latent<T>,
    source: Condition,
    source_scale: f64,
}

impl<T: Real> InversionTrajectory<T> {
    /// Highest inverted index.
    pub fn steps(&self) -> usize {
        self.noises.len()
    }

    pub fn state(&self, i: usize) -> &Latent<T> {
        &self.states[i]
    }

    /// Crafted noise `w_i`, `1 <= i <= steps()`.
    pub fn noise(&self, i: usize) -> &Latent<T> {
        &self.noises[i - 1]
    }

    pub fn terminal_residual(&self) -> &Latent<T> {
        &self.terminal_residual
    }

    pub fn source(&self) -> &Condition {
        &self.source
    }

    pub fn source_scale(&self) -> f64 {
        self.source_scale
    }

    /// Replays the crafted noises; steps above `steps()` are exhausted.
    pub fn replay(&self) -> ReplayNoise<'_, T> {
        ReplayNoise { trajectory: self }
    }
}

pub struct ReplayNoise<'a, T: Real> {
    trajectory: &'a InversionTrajectory<T>,
}

impl<T: Real> NoiseSource<T> for ReplayNoise<'_, T> {
    fn step_noise(&mut self, step: usize, like: &Latent<T>) -> Result<Latent<T>> {
        if step == 0 || step > self.trajectory.steps() {
            return Err(Error::NoiseExhausted(step));
        }
        let w = self.trajectory.noise(step);
        like.check_same_shape(w)?;
        Ok(w.clone())
    }

    fn terminal_residual(&mut self, _like: &Latent<T>) -> Result<Option<Latent<T>>> {
        Ok(Some(self.trajectory.terminal_residual.clone()))
    }
}

/// Edit-friendly inversion over the whole schedule:
/// `z_i = z_syn + sigma_i eps_i` with independent `eps_i`, then
/// `w_i = (z_{i-1} - mean_i(z_i, c_src)) / sigma_up_i`.
pub fn invert_ddpm<T: Real>(
    z_syn: &Latent<T>,
    schedule: &NoiseSchedule,
    denoiser: &dyn Denoiser<T>,
    source: &Condition,
    source_scale: f64,
    seed: u64,
) -> Result<InversionTrajectory<T>> {
    invert_to(z_syn, schedule, denoiser, source, source_scale, seed, schedule.steps(), None)
}

/// Inversion with the per-step draws `eps_i` supplied by `eps` (used to pin
/// degenerate cases); `None` draws them from `seed`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn invert_to<T: Real>(
    z_syn: &Latent<T>,
    schedule: &NoiseSchedule,
    denoiser: &dyn Denoiser<T>,
    source: &Condition,
    source_scale: f64,
    seed: u64,
    upto: usize,
    eps: Option<&dyn Fn(usize) -> Latent<T>>,
) -> Result<InversionTrajectory<T>> {
    if upto > schedule.steps() {
        return Err(Error::Schedule(format!(
            "cannot invert to {upto} of {} steps",
            schedule.steps()
        )));
    }
    // Draws are made for every index of the schedule so a truncated inversion
    // shares its prefix with the full one.
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, "inversion"));
    let mut states = vec![z_syn.clone()];
    for i in 1..=schedule.steps() {
        let e = match eps {
            Some(f) => f(i),
            None => z_syn.randn_like(&mut rng),
        };
        if i <= upto {
            states.push(z_syn.lincomb(T::one(), &e, T::lit(schedule.sigma(i)))?);
        }
    }
    let guided = Guided::new(denoiser, source.clone(), source_scale);
    let mut noises = Vec::with_capacity(upto);
    let mut terminal_residual = z_syn.zeros_like();
    for i in 1..=upto {
        let step = ancestral_step(&states[i], i, schedule, &guided)?;
        let gap = states[i - 1].sub(&step.mean)?;
        if step.sigma_up > T::zero() {
            noises.push(gap.scaled(T::one() / step.sigma_up));
        } else {
            if i == 1 {
                terminal_residual = gap;
            } else if gap.norm() > 0.0 {
                return Err(Error::Inversion {
                    step: i,
                    residual: gap.norm(),
                });
            }
            noises.push(z_syn.zeros_like());
        }
    }
    Ok(InversionTrajectory {
        states,
        noises,
        terminal_residual,
        source: source.clone(),
        source_scale,
    })
}

/// Inverts `z_syn` under the source prompt and re-samples from index `n`
/// with the crafted noises under the target prompt.
pub fn refine_zeta<T: Real>(
    z_syn: &Latent<T>,
    cfg: &RefinementConfig,
    schedule: &NoiseSchedule,
    denoiser: &dyn Denoiser<T>,
) -> Result<Latent<T>> {
    cfg.expect_backend(Backend::Zeta)?;
    let n = cfg.start_step;
    if n == 0 {
        return Ok(z_syn.clone());
    }
    let vocab = denoiser.vocabulary();
    let source = vocab.resolve(cfg.source_prompt.as_deref().unwrap_or_default());
    let target = vocab.resolve(cfg.target_prompt.as_deref().unwrap_or_default());
    let trajectory = invert_to(
        z_syn,
        schedule,
        denoiser,
        &source,
        cfg.source_guidance_scale,
        cfg.seed,
        n,
        None,
    )?;
    let guided = Guided::new(denoiser, target, cfg.guidance_scale);
    sample_ancestral(trajectory.state(n), n, schedule, &guided, &mut trajectory.replay())
}

/// Inversion with caller-supplied per-step draws.
pub fn invert_ddpm_with<T: Real>(
    z_syn: &Latent<T>,
    schedule: &NoiseSchedule,
    denoiser: &dyn Denoiser<T>,
    source: &Condition,
    source_scale: f64,
    eps: &dyn Fn(usize) -> Latent<T>,
) -> Result<InversionTrajectory<T>> {
    invert_to(z_syn, schedule, denoiser, source, source_scale, 0, schedule.steps(), Some(eps))
}
