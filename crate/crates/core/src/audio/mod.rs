//! Waveform container, WAV I/O and resampling.

mod resample;
mod wav;
mod waveform;

pub use resample::resample;
pub use wav::{read_wav, wav_bytes, wav_from_bytes, write_wav, WavFormat};
pub use waveform::Waveform;
