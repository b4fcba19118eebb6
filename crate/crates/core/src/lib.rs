//! Score-to-audio rendering with a concatenative sampler followed by
//! diffusion-based refinement toward a target ("realistic") audio domain.
//!
//! The crate is organised by pipeline stage:
//!
//! * [`midi`]: Standard MIDI File parsing into a time-resolved [`midi::Score`].
//! * [`sampler`]: one-shot sample library, ADSR envelopes and track rendering.
//! * [`audio`]: waveform container, WAV I/O and band-limited resampling.
//! * [`codec`]: the linear latent codec the diffusion model operates on.
//! * [`diffusion`]: noise schedules, the toy conditional denoiser, samplers and training.
//! * [`refine`]: SDEdit and DDPM-inversion refinement back-ends plus long-audio chunking.
//! * [`eval`]: embeddings, Fréchet distance, monophonic transcription and note F1.
//! * [`pipeline`]: run configuration, toy corpora and the command implementations.

pub mod audio;
pub mod codec;
pub mod diffusion;
pub mod error;
pub mod eval;
pub mod midi;
pub mod pipeline;
pub mod real;
pub mod refine;
pub mod sampler;
pub mod seed;

pub use error::{Error, Result};
pub use real::Real;
