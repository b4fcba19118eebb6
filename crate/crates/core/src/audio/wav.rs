use std::io::Cursor;
use std::path::Path;

use hound::{SampleFormat, WavSpec, WavWriter};

use super::Waveform;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WavFormat {
    #[default]
    Float32,
    Pcm16,
}

/// Reads 8/16/24/32-bit integer or 32-bit float WAV into [-1, 1] floats.
pub fn read_wav(path: &Path) -> Result<Waveform> {
    let reader = hound::WavReader::open(path).map_err(|source| Error::Wav {
        path: path.to_path_buf(),
        source,
    })?;
    decode(reader, path)
}

/// Decodes an in-memory WAV stream, e.g. the output of [`wav_bytes`].
pub fn wav_from_bytes(bytes: &[u8]) -> Result<Waveform> {
    let label = Path::new("<memory>");
    let reader = hound::WavReader::new(Cursor::new(bytes)).map_err(|source| Error::Wav {
        path: label.to_path_buf(),
        source,
    })?;
    decode(reader, label)
}

fn decode<R: std::io::Read>(mut reader: hound::WavReader<R>, path: &Path) -> Result<Waveform> {
    let wav_err = |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    };
    let spec = reader.spec();
    let nch = spec.channels as usize;
    if nch == 0 {
        return Err(Error::Waveform(format!("{}: zero channels", path.display())));
    }
    let interleaved: Vec<f32> = match spec.sample_format {
        SampleFormat::Float => reader.samples::<f32>().collect::<Result<_, _>>().map_err(wav_err)?,
        SampleFormat::Int => {
            let scale = 1.0 / (1u64 << (spec.bits_per_sample - 1)) as f32;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f32 * scale))
                .collect::<Result<_, _>>()
                .map_err(wav_err)?
        }
    };
    let mut channels = vec![Vec::with_capacity(interleaved.len() / nch); nch];
    for frame in interleaved.chunks_exact(nch) {
        for (c, &s) in channels.iter_mut().zip(frame) {
            c.push(s);
        }
    }
    Waveform::new(spec.sample_rate, channels)
}

/// Encodes the waveform as a WAV byte stream. Samples are clipped to [-1, 1].
pub fn wav_bytes(audio: &Waveform, format: WavFormat) -> Result<Vec<u8>> {
    let spec = WavSpec {
        channels: audio.num_channels() as u16,
        sample_rate: audio.sample_rate(),
        bits_per_sample: match format {
            WavFormat::Float32 => 32,
            WavFormat::Pcm16 => 16,
        },
        sample_format: match format {
            WavFormat::Float32 => SampleFormat::Float,
            WavFormat::Pcm16 => SampleFormat::Int,
        },
    };
    let wav_err = |source| Error::Wav {
        path: "<memory>".into(),
        source,
    };
    let mut cursor = Cursor::new(Vec::new());
    {
        let mut w = WavWriter::new(&mut cursor, spec).map_err(wav_err)?;
        for i in 0..audio.len() {
            for c in audio.channels() {
                let s = c[i].clamp(-1.0, 1.0);
                match format {
                    WavFormat::Float32 => w.write_sample(s),
                    WavFormat::Pcm16 => w.write_sample((s * 32767.0).round() as i16),
                }
                .map_err(wav_err)?;
            }
        }
        w.finalize().map_err(wav_err)?;
    }
    Ok(cursor.into_inner())
}

pub fn write_wav(path: &Path, audio: &Waveform, format: WavFormat) -> Result<()> {
    let bytes = wav_bytes(audio, format)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
