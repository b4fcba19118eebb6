use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BackendRegistry, RefinementBackend, RefinementConfig};
use crate::audio::Waveform;
use crate::codec::Codec;
use crate::diffusion::{Denoiser, NoiseSchedule};
use crate::{seed, Error, Result};

/// Sample range `[start, end)` of one chunk and its noise seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkSpan {
    pub start: usize,
    pub end: usize,
    pub seed: u64,
}

/// Windows of `chunk_seconds` advancing by `chunk - overlap_samples`; the
/// last one is cut at the input end. Inputs no longer than a chunk give a
/// single span.
pub fn chunk_spans(len: usize, sample_rate: u32, cfg: &RefinementConfig) -> Result<Vec<ChunkSpan>> {
    let chunk = (cfg.chunk_seconds * sample_rate as f64).round() as usize;
    if chunk <= cfg.overlap_samples {
        return Err(Error::Config(format!(
            "chunk of {chunk} samples does not exceed the {}-sample overlap",
            cfg.overlap_samples
        )));
    }
    let hop = chunk - cfg.overlap_samples;
    let count = if len <= chunk { 1 } else { (len - chunk).div_ceil(hop) + 1 };
    Ok((0..count)
        .map(|k| {
            let start = k * hop;
            ChunkSpan {
                start,
                end: (start + chunk).min(len),
                seed: seed::derive_indexed(cfg.seed, "chunk", k as u64),
            }
        })
        .collect())
}

/// Refines each chunk independently with the back-end named by
/// `cfg.backend` and joins neighbours with a linear crossfade over the
/// overlap. Output length equals input length.
pub fn refine_long(
    audio: &Waveform,
    cfg: &RefinementConfig,
    schedule: &NoiseSchedule,
    denoiser: &dyn Denoiser<f32>,
    codec: &dyn Codec,
) -> Result<Waveform> {
    let backend = BackendRegistry::default().get(cfg.backend.name())?;
    refine_long_with(backend.as_ref(), audio, cfg, schedule, denoiser, codec)
}

pub fn refine_long_with(
    backend: &dyn RefinementBackend,
    audio: &Waveform,
    cfg: &RefinementConfig,
    schedule: &NoiseSchedule,
    denoiser: &dyn Denoiser<f32>,
    codec: &dyn Codec,
) -> Result<Waveform> {
    if audio.is_empty() {
        return Err(Error::Waveform("cannot refine empty audio".into()));
    }
    cfg.validate()?;
    let spans = chunk_spans(audio.len(), audio.sample_rate(), cfg)?;
    let scale = denoiser.latent_scale() as f32;
    let pieces = spans
        .par_iter()
        .map(|span| {
            let piece = audio.slice(span.start, span.end);
            let chunk_cfg = RefinementConfig {
                seed: span.seed,
                ..cfg.clone()
            };
            let z = codec.encode(&piece)?.scaled(scale);
            let refined = backend.refine(&z, &chunk_cfg, schedule, denoiser)?;
            let out = codec.decode(&refined.scaled(1.0 / scale))?;
            Ok(out.with_len(piece.len()))
        })
        .collect::<Result<Vec<Waveform>>>()?;
    crossfade_join(&pieces, &spans, audio)
}

fn crossfade_join(pieces: &[Waveform], spans: &[ChunkSpan], audio: &Waveform) -> Result<Waveform> {
    let mut channels = vec![vec![0.0f32; audio.len()]; audio.num_channels()];
    let mut written = 0usize;
    for (piece, span) in pieces.iter().zip(spans) {
        if piece.num_channels() != audio.num_channels() {
            return Err(Error::Codec(format!(
                "chunk decoded to {} channels, input has {}",
                piece.num_channels(),
                audio.num_channels()
            )));
        }
        let overlap = written.saturating_sub(span.start);
        for (out, src) in channels.iter_mut().zip(piece.channels()) {
            for j in 0..overlap {
                let w = (j + 1) as f32 / (overlap + 1) as f32;
                let a = out[span.start + j];
                out[span.start + j] = a + w * (src[j] - a);
            }
            out[span.start + overlap..span.end].copy_from_slice(&src[overlap..]);
        }
        written = span.end;
    }
    Waveform::new(audio.sample_rate(), channels)
}
