//! Variance-exploding latent diffusion: schedules, the conditional toy
//! denoiser with classifier-free guidance, reverse samplers and training.

mod condition;
mod denoiser;
mod network;
mod sampler;
mod schedule;
mod toy;
mod train;

pub use condition::{condition_from_metadata, Condition, ConditionStyle, Vocabulary};
pub use denoiser::{denoise_cfg, forward_diffuse, DataPredictor, Denoiser, Guided};
pub use network::NetConfig;
pub use sampler::{
    ancestral_step, sample_ancestral, sample_dpmpp2m, AncestralStep, FixedNoise, GaussianNoise, NoiseSource,
    ZeroNoise,
};
pub use schedule::{build_schedule, NoiseSchedule, DEFAULT_RHO};
pub use toy::ToyDenoiser;
pub use train::{train_toy_denoiser, DatasetClip, Split, ToyDataset, TrainingConfig, TrainingReport};

#[doc(hidden)]
pub mod gradcheck {
    //! Exposes the network loss and its analytic gradient for finite-difference checks.
    pub use super::network::{loss_and_grad, NetConfig};
}
