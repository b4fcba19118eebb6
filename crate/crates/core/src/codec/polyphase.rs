use std::f64::consts::PI;

use super::{Codec, Latent};
use crate::audio::Waveform;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolyphaseBasis {
    /// Orthonormal DCT-II rows.
    Dct,
    /// Plain polyphase split (sample `k` of each frame goes to channel `k`).
    Identity,
}

/// Non-overlapping frames of `d` samples projected onto `d` orthonormal basis
/// vectors; audio channels are encoded independently and stacked, so a
/// stereo input yields `2 * d` latent channels.
pub struct PolyphaseCodec {
    name: String,
    d: usize,
    /// Row-major `d x d`, rows orthonormal.
    basis: Vec<f64>,
}

impl PolyphaseCodec {
    pub fn new(kind: PolyphaseBasis, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Codec("downsample ratio must be positive".into()));
        }
        let mut basis = vec![0.0; d * d];
        let name = match kind {
            PolyphaseBasis::Dct => {
                for j in 0..d {
                    let scale = if j == 0 { (1.0 / d as f64).sqrt() } else { (2.0 / d as f64).sqrt() };
                    for k in 0..d {
                        basis[j * d + k] = scale * (PI * (k as f64 + 0.5) * j as f64 / d as f64).cos();
                    }
                }
                "dct"
            }
            PolyphaseBasis::Identity => {
                for j in 0..d {
                    basis[j * d + j] = 1.0;
                }
                "identity"
            }
        };
        Ok(Self {
            name: name.into(),
            d,
            basis,
        })
    }
}

impl Codec for PolyphaseCodec {
    fn name(&self) -> &str {
        &self.name
    }

    fn downsample(&self) -> usize {
        self.d
    }

    fn latent_channels(&self, audio_channels: usize) -> usize {
        self.d * audio_channels
    }

    /// `frames = ceil(len / d)`; the tail frame is zero-padded.
    fn encode(&self, audio: &Waveform) -> Result<Latent> {
        if audio.is_empty() {
            return Err(Error::Codec("cannot encode an empty waveform".into()));
        }
        let d = self.d;
        let frames = audio.len().div_ceil(d);
        let channels = self.latent_channels(audio.num_channels());
        let mut data = vec![0.0f32; channels * frames];
        let mut frame = vec![0.0f64; d];
        for (ch, x) in audio.channels().iter().enumerate() {
            for f in 0..frames {
                for (k, v) in frame.iter_mut().enumerate() {
                    *v = x.get(f * d + k).map_or(0.0, |&s| s as f64);
                }
                for j in 0..d {
                    let row = &self.basis[j * d..(j + 1) * d];
                    let c: f64 = row.iter().zip(&frame).map(|(b, s)| b * s).sum();
                    data[(ch * d + j) * frames + f] = c as f32;
                }
            }
        }
        Latent::new(channels, frames, d, audio.sample_rate(), data)
    }

    /// Output length is `frames * d`.
    fn decode(&self, z: &Latent) -> Result<Waveform> {
        let d = self.d;
        if z.channels() == 0 || z.channels() % d != 0 {
            return Err(Error::Codec(format!(
                "{} latent channels is not a multiple of {d}",
                z.channels()
            )));
        }
        if !z.is_finite() {
            return Err(Error::Codec("latent contains non-finite values".into()));
        }
        if z.source_rate() == 0 {
            return Err(Error::Codec("latent has no source rate".into()));
        }
        let frames = z.frames();
        let nch = z.channels() / d;
        let mut channels = vec![vec![0.0f32; frames * d]; nch];
        for (ch, out) in channels.iter_mut().enumerate() {
            for f in 0..frames {
                for k in 0..d {
                    let mut s = 0.0f64;
                    for j in 0..d {
                        s += self.basis[j * d + k] * z.row(ch * d + j)[f] as f64;
                    }
                    out[f * d + k] = s as f32;
                }
            }
        }
        Waveform::new(z.source_rate(), channels)
    }
}
