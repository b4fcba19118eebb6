use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::network::{accumulate, NetConfig};
use super::{build_schedule, NoiseSchedule, ToyDenoiser, Vocabulary, DEFAULT_RHO};
use crate::audio::Waveform;
use crate::codec::{Codec, Latent};
use crate::{seed, Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
}

#[derive(Debug, Clone)]
pub struct DatasetClip {
    pub audio: Waveform,
    pub label: String,
    pub split: Split,
}

#[derive(Debug, Clone, Default)]
pub struct ToyDataset {
    pub clips: Vec<DatasetClip>,
}

impl ToyDataset {
    pub fn new(clips: Vec<DatasetClip>) -> Self {
        ToyDataset { clips }
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &DatasetClip> {
        self.clips.iter().filter(move |c| c.split == split)
    }

    /// Keeps only clips whose label satisfies `keep`.
    pub fn filtered(&self, keep: impl Fn(&str) -> bool) -> ToyDataset {
        ToyDataset {
            clips: self.clips.iter().filter(|c| keep(&c.label)).cloned().collect(),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        let mut v: Vec<String> = self.clips.iter().map(|c| c.label.clone()).collect();
        v.sort();
        v.dedup();
        v
    }
}

/// Optimizer and sampling settings; stored as TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Learning rate at the last step relative to `learning_rate` (linear decay).
    pub final_lr_fraction: f64,
    pub label_drop: f64,
    pub seed: u64,
    pub crop_frames: usize,
    /// Global gradient-norm clip; 0 disables.
    pub grad_clip: f64,
    pub hidden: usize,
    pub fourier: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub schedule_steps: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            steps: 6000,
            batch_size: 16,
            learning_rate: 2e-3,
            final_lr_fraction: 0.1,
            label_drop: 0.1,
            seed: 0,
            crop_frames: 64,
            grad_clip: 1.0,
            hidden: 64,
            fourier: 6,
            sigma_min: 0.02,
            sigma_max: 80.0,
            schedule_steps: 1000,
        }
    }
}

impl TrainingConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plain struct serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("training: {m}")));
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.label_drop) {
            return bad("label_drop must be in [0, 1)");
        }
        if self.crop_frames == 0 || self.hidden == 0 || self.fourier == 0 || self.fourier > 30 {
            return bad("crop_frames, hidden and fourier must be positive (fourier <= 30)");
        }
        Ok(())
    }

    /// Noise levels drawn during training.
    pub fn schedule(&self) -> Result<NoiseSchedule> {
        build_schedule(self.schedule_steps, self.sigma_min, self.sigma_max, DEFAULT_RHO)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingReport {
    /// Mean batch loss per step.
    pub losses: Vec<f64>,
}

impl TrainingReport {
    /// Mean loss over consecutive windows of `window` steps.
    pub fn smoothed(&self, window: usize) -> Vec<f64> {
        self.losses
            .chunks(window.max(1))
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect()
    }
}

struct Example {
    latent: Latent<f32>,
    cond: usize,
}

struct Draw {
    example: usize,
    start: usize,
    len: usize,
    sigma: f32,
    cond: usize,
    noise: Vec<f32>,
}

/// Fits `D(z0 + sigma w, sigma, c) ~ z0` over random clip crops, schedule
/// indices and noises. With `init`, training continues from its weights
/// (fine-tuning); otherwise a fresh network is created over the dataset's
/// labels. Zero steps return `init` unchanged.
pub fn train_toy_denoiser(
    dataset: &ToyDataset,
    codec: &dyn Codec,
    schedule: &NoiseSchedule,
    config: &TrainingConfig,
    init: Option<&ToyDenoiser>,
) -> Result<(ToyDenoiser, TrainingReport)> {
    config.validate()?;
    let clips: Vec<&DatasetClip> = dataset.split(Split::Train).collect();
    if clips.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    let group = codec.latent_channels(1);
    let raw = clips
        .iter()
        .map(|c| codec.encode(&c.audio))
        .collect::<Result<Vec<_>>>()?;
    let latent_scale = match init {
        Some(m) => m.latent_scale(),
        None => {
            let (sum_sq, count) = raw.iter().fold((0.0, 0usize), |(s, n), l| (s + l.norm_sq(), n + l.len()));
            let rms = (sum_sq / count.max(1) as f64).sqrt();
            if rms > 1e-6 {
                (1.0 / rms) as f32
            } else {
                1.0
            }
        }
    };
    let latents: Vec<Latent<f32>> = raw.iter().map(|l| l.scaled(latent_scale)).collect();

    let mut model = match init {
        Some(m) => {
            if m.config().channels != group {
                return Err(Error::Checkpoint(format!(
                    "initial denoiser has {} latent channels, codec produces {group}",
                    m.config().channels
                )));
            }
            m.clone()
        }
        None => {
            let vocab = Vocabulary::new(dataset.labels());
            let (sum_sq, count) = latents
                .iter()
                .fold((0.0, 0usize), |(s, n), l| (s + l.norm_sq(), n + l.len()));
            let sigma_data = ((sum_sq / count.max(1) as f64).sqrt() as f32).max(1e-3);
            ToyDenoiser::new_random(group, config.hidden, config.fourier, vocab, sigma_data, config.seed)
                .with_latent_scale(latent_scale)?
        }
    };

    let mut examples = Vec::new();
    for (clip, latent) in clips.iter().zip(&latents) {
        let cond = model
            .vocabulary()
            .lookup(&clip.label)
            .ok_or_else(|| Error::Config(format!("label {:?} not in the denoiser vocabulary", clip.label)))?
            .index;
        for g in 0..latent.channels() / group {
            let rows = latent.values()[g * group * latent.frames()..(g + 1) * group * latent.frames()].to_vec();
            let frames = latent.frames();
            if frames == 0 {
                continue;
            }
            examples.push(Example {
                latent: Latent::new(group, frames, latent.downsample(), latent.source_rate(), rows)?,
                cond,
            });
        }
    }
    if examples.is_empty() {
        return Err(Error::Config("training clips encode to empty latents".into()));
    }

    let net: NetConfig = *model.config();
    let sigma_data = model.sigma_data();
    let mut rng = seed::rng(seed::derive(config.seed, "training"));
    let mut adam = Adam::new(net.param_count());
    let mut report = TrainingReport::default();

    for step in 0..config.steps {
        let draws: Vec<Draw> = (0..config.batch_size)
            .map(|_| {
                let example = rng.random_range(0..examples.len());
                let frames = examples[example].latent.frames();
                let len = frames.min(config.crop_frames);
                let start = rng.random_range(0..=frames - len);
                let sigma = schedule.sigma(rng.random_range(1..=schedule.steps())) as f32;
                let cond = if rng.random::<f64>() < config.label_drop {
                    0
                } else {
                    examples[example].cond
                };
                let noise = (0..group * len).map(|_| f32::standard_normal(&mut rng)).collect();
                Draw {
                    example,
                    start,
                    len,
                    sigma,
                    cond,
                    noise,
                }
            })
            .collect();
        let params = model.params();
        let results: Vec<(f32, Vec<f32>)> = draws
            .par_iter()
            .map(|d| {
                let crop = examples[d.example].latent.frame_window(d.start, d.len);
                let mut grad = vec![0.0f32; params.len()];
                let loss = accumulate(&net, params, crop.values(), &d.noise, d.len, d.sigma, sigma_data, d.cond, &mut grad);
                (loss, grad)
            })
            .collect();
        let batch = config.batch_size as f64;
        let mut loss = 0.0f64;
        let mut grad = vec![0.0f64; params.len()];
        for (l, g) in &results {
            loss += *l as f64 / batch;
            for (a, &v) in grad.iter_mut().zip(g) {
                *a += v as f64 / batch;
            }
        }
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged { step, loss });
        }
        if config.grad_clip > 0.0 {
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > config.grad_clip {
                let k = config.grad_clip / norm;
                grad.iter_mut().for_each(|g| *g *= k);
            }
        }
        let progress = if config.steps > 1 {
            step as f64 / (config.steps - 1) as f64
        } else {
            0.0
        };
        let lr = config.learning_rate * (1.0 - progress * (1.0 - config.final_lr_fraction));
        adam.update(model.params_mut(), &grad, lr);
        log::debug!("step {step} loss {loss:.6}");
        if step % 100 == 0 || step + 1 == config.steps {
            log::info!("training step {step}/{} loss {loss:.5}", config.steps);
        }
        report.losses.push(loss);
    }
    Ok((model, report))
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn update(&mut self, params: &mut [f32], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for k in 0..params.len() {
            self.m[k] = Self::BETA1 * self.m[k] + (1.0 - Self::BETA1) * grad[k];
            self.v[k] = Self::BETA2 * self.v[k] + (1.0 - Self::BETA2) * grad[k] * grad[k];
            let step = lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + Self::EPS);
            params[k] = (params[k] as f64 - step) as f32;
        }
    }
}
