use std::fmt;

use serde::{Deserialize, Serialize};

use crate::diffusion::{build_schedule, ConditionStyle, NoiseSchedule, DEFAULT_RHO};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Sdedit,
    Zeta,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Sdedit => "sdedit",
            Backend::Zeta => "zeta",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "sdedit" => Ok(Backend::Sdedit),
            "zeta" => Ok(Backend::Zeta),
            _ => Err(Error::Unregistered {
                kind: "refinement backend",
                name: name.to_string(),
                available: "sdedit, zeta".into(),
            }),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Editing hyperparameters. `start_step` is the intermediate index `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefinementConfig {
    pub backend: Backend,
    pub steps: usize,
    pub start_step: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub rho: f64,
    pub guidance_scale: f64,
    /// Guidance used with the source prompt while inverting (ZETA only);
    /// 1 is the plain conditional denoiser.
    pub source_guidance_scale: f64,
    /// Condition for SDEdit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_prompt: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_prompt: Option<String>,
    pub seed: u64,
    pub chunk_seconds: f64,
    pub overlap_samples: usize,
}

impl RefinementConfig {
    /// Default hyperparameters of `backend` with prompts for `instrument`.
    pub fn defaults(backend: Backend, instrument: &str) -> Self {
        let common = RefinementConfig {
            backend,
            steps: 250,
            start_step: 150,
            sigma_min: 0.05,
            sigma_max: 16.0,
            rho: DEFAULT_RHO,
            guidance_scale: 7.0,
            source_guidance_scale: 1.0,
            prompt: None,
            source_prompt: None,
            target_prompt: None,
            seed: 0,
            chunk_seconds: 47.0,
            overlap_samples: 1000,
        };
        match backend {
            Backend::Sdedit => RefinementConfig {
                prompt: Some(ConditionStyle::FullTemplate.label(instrument)),
                ..common
            },
            Backend::Zeta => RefinementConfig {
                steps: 200,
                start_step: 70,
                sigma_min: 0.3,
                sigma_max: 500.0,
                guidance_scale: 4.0,
                source_prompt: Some(ConditionStyle::Source.label(instrument)),
                target_prompt: Some(ConditionStyle::Target.label(instrument)),
                ..common
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("refinement: {m}")));
        if self.start_step > self.steps {
            return bad(format!("start_step {} exceeds steps {}", self.start_step, self.steps));
        }
        if !(self.guidance_scale >= 0.0 && self.source_guidance_scale >= 0.0) {
            return bad("guidance scales must be non-negative".into());
        }
        if !(self.chunk_seconds > 0.0 && self.chunk_seconds.is_finite()) {
            return bad(format!("chunk_seconds must be positive, got {}", self.chunk_seconds));
        }
        match self.backend {
            Backend::Sdedit if self.prompt.is_none() => bad("sdedit needs `prompt`".into()),
            Backend::Zeta if self.source_prompt.is_none() || self.target_prompt.is_none() => {
                bad("zeta needs `source_prompt` and `target_prompt`".into())
            }
            _ => Ok(()),
        }
    }

    pub fn schedule(&self) -> Result<NoiseSchedule> {
        build_schedule(self.steps, self.sigma_min, self.sigma_max, self.rho)
    }

    pub(crate) fn expect_backend(&self, backend: Backend) -> Result<()> {
        if self.backend != backend {
            return Err(Error::Config(format!(
                "configuration is for {}, not {backend}",
                self.backend
            )));
        }
        self.validate()
    }
}
