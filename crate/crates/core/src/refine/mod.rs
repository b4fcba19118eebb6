//! Synthetic-to-realistic editing of latents: noise-and-denoise (SDEdit),
//! edit-friendly DDPM inversion (ZETA) and chunked long-audio refinement.

mod chunk;
mod config;
mod sdedit;
mod zeta;

use std::collections::BTreeMap;
use std::sync::Arc;

pub use chunk::{chunk_spans, refine_long, refine_long_with, ChunkSpan};
pub use config::{Backend, RefinementConfig};
pub use sdedit::refine_sdedit;
pub use zeta::{invert_ddpm, invert_ddpm_with, refine_zeta, InversionTrajectory, ReplayNoise};

use crate::codec::Latent;
use crate::diffusion::{Denoiser, NoiseSchedule};
use crate::{Error, Result};

/// A latent-to-latent editing strategy.
pub trait RefinementBackend: Send + Sync {
    fn name(&self) -> &str;

    fn refine(
        &self,
        z_syn: &Latent,
        cfg: &RefinementConfig,
        schedule: &NoiseSchedule,
        denoiser: &dyn Denoiser<f32>,
    ) -> Result<Latent>;
}

struct Sdedit;

impl RefinementBackend for Sdedit {
    fn name(&self) -> &str {
        Backend::Sdedit.name()
    }

    fn refine(&self, z: &Latent, cfg: &RefinementConfig, s: &NoiseSchedule, d: &dyn Denoiser<f32>) -> Result<Latent> {
        refine_sdedit(z, cfg, s, d)
    }
}

struct Zeta;

impl RefinementBackend for Zeta {
    fn name(&self) -> &str {
        Backend::Zeta.name()
    }

    fn refine(&self, z: &Latent, cfg: &RefinementConfig, s: &NoiseSchedule, d: &dyn Denoiser<f32>) -> Result<Latent> {
        refine_zeta(z, cfg, s, d)
    }
}

/// Refinement back-ends selectable by name.
pub struct BackendRegistry {
    backends: BTreeMap<String, Arc<dyn RefinementBackend>>,
}

impl Default for BackendRegistry {
    fn default() -> Self {
        let mut r = BackendRegistry {
            backends: BTreeMap::new(),
        };
        r.register(Arc::new(Sdedit));
        r.register(Arc::new(Zeta));
        r
    }
}

impl BackendRegistry {
    pub fn register(&mut self, backend: Arc<dyn RefinementBackend>) {
        self.backends.insert(backend.name().to_string(), backend);
    }

    pub fn names(&self) -> Vec<&str> {
        self.backends.keys().map(String::as_str).collect()
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn RefinementBackend>> {
        self.backends.get(name).cloned().ok_or_else(|| Error::Unregistered {
            kind: "refinement backend",
            name: name.to_string(),
            available: self.names().join(", "),
        })
    }
}
