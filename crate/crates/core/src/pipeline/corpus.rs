use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::audio::{read_wav, write_wav, WavFormat, Waveform};
use crate::diffusion::{ConditionStyle, DatasetClip, Split, ToyDataset};
use crate::midi::{NoteEvent, Score};
use crate::sampler::{render_track, NoteSample, RenderOptions, SampleLibrary};
use crate::{seed, Error, Result};

/// Corpus rendering rate; also the rate the toy model works at.
pub const TOY_RATE: u32 = 16_000;
const LIBRARY_VELOCITY: u8 = 100;
const LIBRARY_SECONDS: f64 = 3.0;
const PEAK_LEVEL: f64 = 0.5;
const MAX_PARTIAL_HZ: f64 = 7000.0;
const RELEASE_S: f64 = 0.2;

/// Performance style of one corpus class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StyleParams {
    pub vibrato_rate_hz: f64,
    pub vibrato_depth_cents: f64,
    /// Relative depth of the slow amplitude swell within each note.
    pub expression_depth: f64,
    /// Standard deviation of onset displacement, seconds.
    pub onset_jitter_s: f64,
    /// Level of broadband noise following the note envelope.
    pub breath_noise: f64,
}

impl StyleParams {
    pub fn synthetic() -> Self {
        StyleParams {
            vibrato_rate_hz: 0.0,
            vibrato_depth_cents: 0.0,
            expression_depth: 0.0,
            onset_jitter_s: 0.0,
            breath_noise: 0.0,
        }
    }

    pub fn realistic() -> Self {
        StyleParams {
            vibrato_rate_hz: 5.5,
            vibrato_depth_cents: 40.0,
            expression_depth: 0.3,
            onset_jitter_s: 0.012,
            breath_noise: 0.02,
        }
    }

    fn is_static(&self) -> bool {
        self.vibrato_depth_cents == 0.0 && self.expression_depth == 0.0
    }

    fn all_finite_nonnegative(&self) -> bool {
        [
            self.vibrato_rate_hz,
            self.vibrato_depth_cents,
            self.expression_depth,
            self.onset_jitter_s,
            self.breath_noise,
        ]
        .iter()
        .all(|v| v.is_finite() && *v >= 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyCorpusSpec {
    pub instruments: Vec<String>,
    pub clips_per_class: usize,
    pub clip_seconds: f64,
    pub synthetic: StyleParams,
    pub realistic: StyleParams,
    /// Every `validation_every`-th clip of a class goes to the validation split; 0 disables.
    pub validation_every: usize,
    pub pitch_low: u8,
    pub pitch_high: u8,
    pub seed: u64,
}

impl Default for ToyCorpusSpec {
    fn default() -> Self {
        ToyCorpusSpec {
            instruments: vec!["violin".into()],
            clips_per_class: 100,
            clip_seconds: 2.0,
            synthetic: StyleParams::synthetic(),
            realistic: StyleParams::realistic(),
            validation_every: 10,
            pitch_low: 57,
            pitch_high: 76,
            seed: 0,
        }
    }
}

impl ToyCorpusSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plain struct serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.instruments.is_empty() || self.instruments.iter().any(|i| i.trim().is_empty()) {
            return fail("corpus needs at least one non-empty instrument label".into());
        }
        if !(self.clip_seconds.is_finite() && self.clip_seconds >= 0.5) {
            return fail(format!("clip_seconds {} must be at least 0.5", self.clip_seconds));
        }
        if !(self.synthetic.all_finite_nonnegative() && self.realistic.all_finite_nonnegative()) {
            return fail("style parameters must be finite and non-negative".into());
        }
        if !self.synthetic.is_static() {
            return fail("the synthetic class must have zero vibrato and expression".into());
        }
        if self.realistic.vibrato_depth_cents <= 0.0
            || self.realistic.vibrato_rate_hz <= 0.0
            || self.realistic.expression_depth <= 0.0
        {
            return fail("the realistic class needs nonzero vibrato and expression".into());
        }
        if self.pitch_low >= self.pitch_high || self.pitch_high > 96 {
            return fail(format!("bad pitch range {}..={}", self.pitch_low, self.pitch_high));
        }
        Ok(())
    }
}

/// Relative partial amplitudes giving each toy instrument its timbre.
pub fn harmonic_weights(instrument: &str) -> Vec<f64> {
    match instrument {
        "violin" => (1..=10).map(|h| 1.0 / h as f64).collect(),
        "flute" => vec![1.0, 0.5, 0.2, 0.08],
        "clarinet" => (1..=9).map(|h| if h % 2 == 1 { 1.0 / h as f64 } else { 0.05 / h as f64 }).collect(),
        other => {
            let tilt = 1.0 + (seed::derive(0, other) % 10) as f64 / 10.0;
            (1..=8).map(|h| (h as f64).powf(-tilt)).collect()
        }
    }
}

pub fn midi_hz(pitch: f64) -> f64 {
    440.0 * 2f64.powf((pitch - 69.0) / 12.0)
}

fn tone_level(weights: &[f64]) -> f64 {
    PEAK_LEVEL / weights.iter().sum::<f64>()
}

/// Steady harmonic tone starting at cosine phase, so its first sample is at peak.
pub fn toy_note_sample(instrument: &str, pitch: u8, rate: u32, seconds: f64) -> Waveform {
    let weights = harmonic_weights(instrument);
    let level = tone_level(&weights);
    let f0 = midi_hz(pitch as f64);
    let len = (seconds * rate as f64).round() as usize;
    let partials: Vec<(f64, f64)> = weights
        .iter()
        .enumerate()
        .map(|(k, &a)| ((k + 1) as f64 * f0, a))
        .filter(|&(f, _)| f < MAX_PARTIAL_HZ.min(0.45 * rate as f64))
        .collect();
    let samples = (0..len)
        .map(|n| {
            let t = n as f64 / rate as f64;
            (level * partials.iter().map(|&(f, a)| a * (TAU * f * t).cos()).sum::<f64>()) as f32
        })
        .collect();
    Waveform::mono(rate, samples).expect("mono")
}

/// One sample per semitone over `[low, high]` for every instrument.
pub fn toy_library(instruments: &[String], low: u8, high: u8, rate: u32) -> Result<SampleLibrary> {
    let mut samples = Vec::new();
    for instrument in instruments {
        for pitch in low..=high {
            samples.push(NoteSample {
                instrument: instrument.clone(),
                pitch,
                velocity: LIBRARY_VELOCITY,
                audio: toy_note_sample(instrument, pitch, rate, LIBRARY_SECONDS),
            });
        }
    }
    SampleLibrary::from_samples(rate, samples)
}

/// Writes the toy library as WAV files plus `manifest.csv` under `dir`.
pub fn write_toy_library(lib: &SampleLibrary, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = dir.join("manifest.csv");
    let mut w = csv::Writer::from_path(&manifest).map_err(|e| Error::Library(format!("{}: {e}", manifest.display())))?;
    for s in lib.samples() {
        let file = format!("{}_{:03}_{:03}.wav", s.instrument, s.pitch, s.velocity);
        write_wav(&dir.join(&file), &s.audio, WavFormat::Float32)?;
        w.serialize(crate::sampler::ManifestEntry {
            file,
            instrument: s.instrument.clone(),
            pitch: s.pitch,
            velocity: s.velocity,
        })
        .map_err(|e| Error::Library(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(&manifest, e))?;
    Ok(manifest)
}

/// Random monophonic melody filling `seconds` including the final release.
/// Consecutive notes never repeat a pitch.
pub fn random_score<R: Rng + ?Sized>(rng: &mut R, low: u8, high: u8, seconds: f64) -> Score {
    let mut notes = Vec::new();
    let mut t = rng.random_range(0.05..0.2);
    let mut pitch = rng.random_range(low..=high) as i32;
    loop {
        let dur = rng.random_range(0.25..0.6);
        if t + dur + RELEASE_S > seconds {
            break;
        }
        notes.push(NoteEvent {
            pitch: pitch as u8,
            velocity: LIBRARY_VELOCITY,
            onset_s: t,
            offset_s: t + dur,
            channel: 0,
        });
        t += dur + rng.random_range(0.03..0.15);
        loop {
            let step = rng.random_range(1..=5) * if rng.random_bool(0.5) { 1 } else { -1 };
            let next = pitch + step;
            if next >= low as i32 && next <= high as i32 {
                pitch = next;
                break;
            }
        }
    }
    Score::from_notes(notes, 120.0).expect("generated notes are valid")
}

/// Concatenative render of `score` at the toy rate, cut or padded to `len`.
pub fn render_synthetic(score: &Score, lib: &SampleLibrary, instrument: &str, len: usize) -> Result<Waveform> {
    let opts = RenderOptions {
        working_rate: TOY_RATE,
        out_rate: TOY_RATE,
        ..RenderOptions::default()
    };
    Ok(render_track(score, lib, instrument, &opts)?.with_len(len))
}

/// Expressive additive rendering of `score`: vibrato fading in over the
/// first 150 ms, a slow amplitude swell, displaced onsets and breath noise,
/// with the same partials and release length as the sampled tones.
pub fn render_performed<R: Rng + ?Sized>(
    score: &Score,
    instrument: &str,
    style: &StyleParams,
    rng: &mut R,
    len: usize,
) -> Waveform {
    let rate = TOY_RATE as f64;
    let weights = harmonic_weights(instrument);
    let level = tone_level(&weights);
    let jitter = Normal::new(0.0, style.onset_jitter_s.max(1e-12)).expect("valid normal");
    let mut out = vec![0.0f64; len];
    for note in score.notes() {
        let shift = if style.onset_jitter_s > 0.0 { jitter.sample(rng) } else { 0.0 };
        let start = ((note.onset_s + shift).max(0.0) * rate).round() as usize;
        let dur = note.duration_s();
        let total = ((dur + RELEASE_S) * rate).round() as usize;
        let f0 = midi_hz(note.pitch as f64);
        let vib_phase = rng.random_range(0.0..TAU);
        let swell_rate = rng.random_range(0.8..2.0);
        let swell_phase = rng.random_range(0.0..TAU);
        let partials: Vec<(f64, f64)> = weights
            .iter()
            .enumerate()
            .map(|(k, &a)| ((k + 1) as f64, a))
            .filter(|&(h, _)| h * f0 * 2f64.powf(style.vibrato_depth_cents / 1200.0) < MAX_PARTIAL_HZ)
            .collect();
        let mut phase = 0.0f64;
        for k in 0..total {
            let n = start + k;
            if n >= len {
                break;
            }
            let t = k as f64 / rate;
            let attack = (t / 0.03).min(1.0);
            let release = if t < dur { 1.0 } else { (1.0 - (t - dur) / RELEASE_S).max(0.0) };
            let swell = 1.0 + style.expression_depth * (TAU * swell_rate * t + swell_phase).sin();
            let env = attack * release * swell;
            let tone: f64 = partials.iter().map(|&(h, a)| a * (h * phase).cos()).sum();
            let breath: f64 = if style.breath_noise > 0.0 {
                style.breath_noise * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            };
            out[n] += env * (level * tone + breath);
            let fade = (t / 0.15).min(1.0);
            let cents = style.vibrato_depth_cents * fade * (TAU * style.vibrato_rate_hz * t + vib_phase).sin();
            phase += TAU * f0 * 2f64.powf(cents / 1200.0) / rate;
        }
    }
    Waveform::mono(TOY_RATE, out.into_iter().map(|x| x as f32).collect()).expect("mono")
}

/// One row of the corpus manifest. `labels` joins every conditioning label
/// of the clip with `|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub file: String,
    pub class: String,
    pub instrument: String,
    pub split: String,
    pub labels: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSummary {
    pub clips: usize,
    pub manifest: PathBuf,
    pub library_manifest: PathBuf,
}

fn class_labels(class: &str, instrument: &str) -> Vec<String> {
    if class == "synthetic" {
        vec![ConditionStyle::Source.label(instrument)]
    } else {
        vec![
            ConditionStyle::Target.label(instrument),
            ConditionStyle::FullTemplate.label(instrument),
        ]
    }
}

/// Generates the labelled two-class corpus under `dir`: `clips/*.wav`,
/// `manifest.csv`, the one-shot library under `library/`, and `corpus.toml`.
pub fn make_toy_corpus(spec: &ToyCorpusSpec, dir: &Path) -> Result<CorpusSummary> {
    spec.validate()?;
    let clips_dir = dir.join("clips");
    std::fs::create_dir_all(&clips_dir).map_err(|e| Error::io(&clips_dir, e))?;
    let lib = toy_library(&spec.instruments, spec.pitch_low, spec.pitch_high, TOY_RATE)?;
    let library_manifest = write_toy_library(&lib, &dir.join("library"))?;
    let len = (spec.clip_seconds * TOY_RATE as f64).round() as usize;
    let root = seed::derive(spec.seed, "corpus");

    let mut entries = Vec::new();
    for instrument in &spec.instruments {
        for class in ["synthetic", "realistic"] {
            for k in 0..spec.clips_per_class {
                let mut rng = seed::rng(seed::derive_indexed(root, &format!("{class}/{instrument}"), k as u64));
                let score = random_score(&mut rng, spec.pitch_low, spec.pitch_high, spec.clip_seconds);
                let audio = match class {
                    "synthetic" => render_synthetic(&score, &lib, instrument, len)?,
                    _ => render_performed(&score, instrument, &spec.realistic, &mut rng, len),
                };
                let file = format!("clips/{class}_{instrument}_{k:03}.wav");
                write_wav(&dir.join(&file), &audio, WavFormat::Float32)?;
                let validation = spec.validation_every > 0 && k % spec.validation_every == spec.validation_every - 1;
                entries.push(CorpusEntry {
                    file,
                    class: class.into(),
                    instrument: instrument.clone(),
                    split: if validation { "validation" } else { "train" }.into(),
                    labels: class_labels(class, instrument).join("|"),
                });
            }
        }
    }

    let manifest = dir.join("manifest.csv");
    let mut w = csv::Writer::from_path(&manifest).map_err(|e| Error::Config(format!("{}: {e}", manifest.display())))?;
    for e in &entries {
        w.serialize(e).map_err(|e| Error::Config(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(&manifest, e))?;
    let spec_path = dir.join("corpus.toml");
    std::fs::write(&spec_path, spec.to_toml()).map_err(|e| Error::io(&spec_path, e))?;
    Ok(CorpusSummary {
        clips: entries.len(),
        manifest,
        library_manifest,
    })
}

pub fn read_corpus_manifest(dir: &Path) -> Result<Vec<CorpusEntry>> {
    let manifest = dir.join("manifest.csv");
    let mut r = csv::Reader::from_path(&manifest).map_err(|e| Error::Config(format!("{}: {e}", manifest.display())))?;
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| Error::Config(format!("{} row {}: {e}", manifest.display(), i + 2))))
        .collect()
}

/// Loads a corpus directory as a training dataset, one clip per label.
pub fn load_toy_dataset(dir: &Path) -> Result<ToyDataset> {
    let mut clips = Vec::new();
    for entry in read_corpus_manifest(dir)? {
        let audio = read_wav(&dir.join(&entry.file))?;
        let split = match entry.split.as_str() {
            "train" => Split::Train,
            "validation" => Split::Validation,
            other => return Err(Error::Config(format!("{}: unknown split {other:?}", entry.file))),
        };
        for label in entry.labels.split('|').filter(|l| !l.is_empty()) {
            clips.push(DatasetClip {
                audio: audio.clone(),
                label: label.to_string(),
                split,
            });
        }
    }
    if clips.is_empty() {
        return Err(Error::Config(format!("{}: corpus has no clips", dir.display())));
    }
    Ok(ToyDataset::new(clips))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spec_is_valid_and_round_trips() {
        let spec = ToyCorpusSpec::default();
        spec.validate().unwrap();
        assert_eq!(ToyCorpusSpec::from_toml(&spec.to_toml()).unwrap(), spec);
    }

    #[test]
    fn style_invariants_enforced() {
        let mut spec = ToyCorpusSpec::default();
        spec.synthetic.vibrato_depth_cents = 10.0;
        assert!(spec.validate().is_err());
        let mut spec = ToyCorpusSpec::default();
        spec.realistic.expression_depth = 0.0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn random_scores_avoid_repeats_and_fit() {
        let mut rng = seed::rng(3);
        for _ in 0..50 {
            let score = random_score(&mut rng, 57, 76, 2.0);
            let notes = score.notes();
            assert!(!notes.is_empty());
            assert!(notes.windows(2).all(|w| w[0].pitch != w[1].pitch && w[1].onset_s > w[0].offset_s));
            assert!(score.end_s() + RELEASE_S <= 2.0 + 1e-9);
            assert!(notes.iter().all(|n| (57..=76).contains(&n.pitch)));
        }
    }

    #[test]
    fn note_sample_starts_at_peak() {
        let s = toy_note_sample("violin", 69, TOY_RATE, 0.1);
        assert!((s.channel(0)[0] as f64 - PEAK_LEVEL).abs() < 1e-6);
        assert!(s.peak() as f64 <= PEAK_LEVEL + 1e-6);
    }

    #[test]
    fn static_performance_matches_plain_partials() {
        let score = Score::from_notes(
            vec![NoteEvent {
                pitch: 69,
                velocity: 100,
                onset_s: 0.0,
                offset_s: 0.5,
                channel: 0,
            }],
            120.0,
        )
        .unwrap();
        let mut rng = seed::rng(0);
        let a = render_performed(&score, "flute", &StyleParams::synthetic(), &mut rng, 16000);
        let plain = toy_note_sample("flute", 69, TOY_RATE, 1.0);
        // Past the 30 ms attack the static performance is the steady tone.
        for n in [600usize, 2000, 7000] {
            assert!((a.channel(0)[n] - plain.channel(0)[n]).abs() < 1e-3, "sample {n}");
        }
        assert!(a.channel(0)[(0.75 * 16000.0) as usize].abs() < 1e-9);
    }
}
