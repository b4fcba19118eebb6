use super::{Backend, RefinementConfig};
use crate::codec::Latent;
use crate::diffusion::{forward_diffuse, sample_dpmpp2m, Denoiser, Guided, NoiseSchedule};
use crate::{seed, Real, Result};

/// Noises `z_syn` to index `n` with one Gaussian draw and solves back to
/// `sigma = 0` under the prompt with DPM-Solver++(2M). `n = 0` is the identity.
pub fn refine_sdedit<T: Real>(
    z_syn: &Latent<T>,
    cfg: &RefinementConfig,
    schedule: &NoiseSchedule,
    denoiser: &dyn Denoiser<T>,
) -> Result<Latent<T>> {
    cfg.expect_backend(Backend::Sdedit)?;
    let n = cfg.start_step;
    if n == 0 {
        return Ok(z_syn.clone());
    }
    let mut rng = seed::rng(seed::derive(cfg.seed, "sdedit"));
    let w = z_syn.randn_like(&mut rng);
    let z_n = forward_diffuse(z_syn, n, schedule, &w)?;
    let cond = denoiser.vocabulary().resolve(cfg.prompt.as_deref().unwrap_or_default());
    let guided = Guided::new(denoiser, cond, cfg.guidance_scale);
    sample_dpmpp2m(&z_n, n, schedule, &guided)
}
