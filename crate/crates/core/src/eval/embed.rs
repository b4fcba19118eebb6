use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::EmbeddingSet;
use crate::audio::{resample, Waveform};
use crate::{Error, Result};

pub const EMBEDDING_RATE: u32 = 16000;
pub const EMBEDDING_DIM: usize = 2 * MEL_BANDS + 4;

const FFT_LEN: usize = 512;
const HOP: usize = 160;
const MEL_BANDS: usize = 14;
const MEL_LOW_HZ: f64 = 60.0;
const MEL_HIGH_HZ: f64 = 7600.0;
/// Absolute floor on band energy (silence).
const ENERGY_FLOOR: f64 = 1e-10;
/// Floor relative to the loudest band energy of the clip (-60 dB).
const RELATIVE_FLOOR: f64 = 1e-6;

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

struct Analysis {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    /// `(first bin, weights)` per band.
    bands: Vec<(usize, Vec<f64>)>,
}

fn analysis() -> &'static Analysis {
    static CELL: OnceLock<Analysis> = OnceLock::new();
    CELL.get_or_init(|| {
        let fft = FftPlanner::new().plan_fft_forward(FFT_LEN);
        let window = (0..FFT_LEN)
            .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / FFT_LEN as f64).cos())
            .collect();
        let (lo, hi) = (hz_to_mel(MEL_LOW_HZ), hz_to_mel(MEL_HIGH_HZ));
        let edges: Vec<f64> = (0..MEL_BANDS + 2)
            .map(|k| mel_to_hz(lo + (hi - lo) * k as f64 / (MEL_BANDS + 1) as f64))
            .collect();
        let bin_hz = EMBEDDING_RATE as f64 / FFT_LEN as f64;
        let bands = (0..MEL_BANDS)
            .map(|b| {
                let (l, c, r) = (edges[b], edges[b + 1], edges[b + 2]);
                let first = (l / bin_hz).ceil() as usize;
                let last = ((r / bin_hz).floor() as usize).min(FFT_LEN / 2);
                let weights = (first..=last)
                    .map(|k| {
                        let f = k as f64 * bin_hz;
                        if f <= c {
                            (f - l) / (c - l)
                        } else {
                            (r - f) / (r - c)
                        }
                        .max(0.0)
                    })
                    .collect();
                (first, weights)
            })
            .collect();
        Analysis { fft, window, bands }
    })
}

/// Log mel energies, `frames x MEL_BANDS`, floored 60 dB below the loudest.
fn log_mel(x: &[f32]) -> Vec<[f64; MEL_BANDS]> {
    let a = analysis();
    let frames = if x.len() <= FFT_LEN { 1 } else { 1 + (x.len() - FFT_LEN) / HOP };
    let mut buf = vec![Complex::new(0.0, 0.0); FFT_LEN];
    let mut out = Vec::with_capacity(frames);
    for t in 0..frames {
        for (n, slot) in buf.iter_mut().enumerate() {
            let v = x.get(t * HOP + n).copied().unwrap_or(0.0) as f64;
            *slot = Complex::new(v * a.window[n], 0.0);
        }
        a.fft.process(&mut buf);
        let mut row = [0.0; MEL_BANDS];
        for (b, (first, weights)) in a.bands.iter().enumerate() {
            row[b] = weights.iter().enumerate().map(|(j, w)| w * buf[first + j].norm_sqr()).sum();
        }
        out.push(row);
    }
    let loudest = out.iter().flatten().copied().fold(0.0, f64::max);
    let floor = (RELATIVE_FLOOR * loudest).max(ENERGY_FLOOR);
    for row in &mut out {
        for e in row.iter_mut() {
            *e = e.max(floor).ln();
        }
    }
    out
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64;
    (m, var.sqrt())
}

/// Fixed 32-dimensional descriptor of a clip at 16 kHz: per-band mean and
/// standard deviation of log mel energy (14 bands each), then mean, standard
/// deviation, 90th percentile and maximum of the log-mel spectral flux.
pub fn embed_toy(audio: &Waveform) -> Result<Vec<f64>> {
    if audio.is_empty() {
        return Err(Error::Eval("cannot embed empty audio".into()));
    }
    let mono = resample(&audio.to_mono(), EMBEDDING_RATE);
    let frames = log_mel(mono.channel(0));
    let mut v = Vec::with_capacity(EMBEDDING_DIM);
    let mut stds = Vec::with_capacity(MEL_BANDS);
    for b in 0..MEL_BANDS {
        let col: Vec<f64> = frames.iter().map(|r| r[b]).collect();
        let (m, s) = mean_std(&col);
        v.push(m);
        stds.push(s);
    }
    v.extend(stds);
    let mut flux: Vec<f64> = frames
        .windows(2)
        .map(|w| w[1].iter().zip(&w[0]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .collect();
    let (m, s) = mean_std(&flux);
    flux.sort_by(f64::total_cmp);
    let pct = |q: f64| {
        if flux.is_empty() {
            0.0
        } else {
            flux[((flux.len() - 1) as f64 * q).round() as usize]
        }
    };
    v.extend([m, s, pct(0.9), pct(1.0)]);
    debug_assert_eq!(v.len(), EMBEDDING_DIM);
    Ok(v)
}

/// Embeds clips in parallel, preserving order.
pub fn embed_set(clips: &[Waveform], source: &str) -> Result<EmbeddingSet> {
    let vectors = clips.par_iter().map(embed_toy).collect::<Result<Vec<_>>>()?;
    EmbeddingSet::new(EMBEDDING_DIM, vectors, source)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, vibrato_hz: f64, depth: f64, amp: f32) -> Waveform {
        let mut phase = 0.0f64;
        let s = (0..16000)
            .map(|k| {
                let t = k as f64 / 16000.0;
                let f = freq * (1.0 + depth * (2.0 * std::f64::consts::PI * vibrato_hz * t).sin());
                phase += 2.0 * std::f64::consts::PI * f / 16000.0;
                amp * phase.sin() as f32
            })
            .collect();
        Waveform::mono(16000, s).unwrap()
    }

    #[test]
    fn deterministic_and_sized() {
        let a = embed_toy(&tone(440.0, 0.0, 0.0, 0.5)).unwrap();
        assert_eq!(a.len(), 32);
        assert_eq!(a, embed_toy(&tone(440.0, 0.0, 0.0, 0.5)).unwrap());
    }

    #[test]
    fn silence_is_defined() {
        let v = embed_toy(&Waveform::silent(16000, 1, 3000).unwrap()).unwrap();
        assert!(v.iter().all(|x| x.is_finite()));
        assert!((v[0] - ENERGY_FLOOR.ln()).abs() < 1e-12);
        assert!(embed_toy(&Waveform::silent(16000, 1, 0).unwrap()).is_err());
    }

    #[test]
    fn vibrato_shows_in_flux() {
        let plain = embed_toy(&tone(440.0, 0.0, 0.0, 0.5)).unwrap();
        let plain2 = embed_toy(&tone(440.0 * 1.0001, 0.0, 0.0, 0.5)).unwrap();
        let vib = embed_toy(&tone(440.0, 6.0, 0.02, 0.5)).unwrap();
        let floor: f64 = (28..32).map(|k| (plain[k] - plain2[k]).abs()).sum::<f64>().max(1e-9);
        let diff: f64 = (28..32).map(|k| (plain[k] - vib[k]).abs()).sum();
        assert!(diff > 10.0 * floor, "{diff} vs {floor}");
    }

    #[test]
    fn half_amplitude_shifts_means_only() {
        let a = embed_toy(&tone(440.0, 6.0, 0.02, 0.5)).unwrap();
        let b = embed_toy(&tone(440.0, 6.0, 0.02, 0.25)).unwrap();
        let shift = 0.25f64.ln();
        for k in 0..MEL_BANDS {
            assert!((b[k] - a[k] - shift).abs() < 1e-6, "band {k}");
        }
        for k in MEL_BANDS..EMBEDDING_DIM {
            assert!((a[k] - b[k]).abs() < 1e-6, "component {k}");
        }
    }
}
