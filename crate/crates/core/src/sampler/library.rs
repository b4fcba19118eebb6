use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audio::{read_wav, resample, Waveform};
use crate::{Error, Result};

/// One row of a sample manifest (CSV with header `file,instrument,pitch,velocity`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub instrument: String,
    pub pitch: u8,
    pub velocity: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoteSample {
    pub instrument: String,
    pub pitch: u8,
    pub velocity: u8,
    pub audio: Waveform,
}

/// Result of a library lookup: the chosen sample and the pitch shift (in
/// semitones, requested minus found) the renderer must apply.
#[derive(Debug, Clone, Copy)]
pub struct Selection<'a> {
    pub sample: &'a NoteSample,
    pub pitch_shift: i32,
}

type Key = (String, u8, u8);

/// Immutable set of one-shot samples at a common working rate.
#[derive(Debug, Clone)]
pub struct SampleLibrary {
    working_rate: u32,
    samples: BTreeMap<Key, NoteSample>,
    manifest: Option<PathBuf>,
}

impl SampleLibrary {
    pub fn from_samples(working_rate: u32, samples: Vec<NoteSample>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for s in samples {
            if s.audio.is_empty() {
                return Err(Error::Library(format!(
                    "empty audio for ({}, {}, {})",
                    s.instrument, s.pitch, s.velocity
                )));
            }
            let key = (s.instrument.clone(), s.pitch, s.velocity);
            if map.contains_key(&key) {
                return Err(Error::Library(format!("duplicate key {key:?}")));
            }
            let audio = resample(&s.audio, working_rate);
            map.insert(key, NoteSample { audio, ..s });
        }
        Ok(Self {
            working_rate,
            samples: map,
            manifest: None,
        })
    }

    /// Parses manifest text; `base_dir` resolves relative file paths.
    pub fn from_manifest(text: &str, base_dir: &Path, working_rate: u32) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut seen: BTreeMap<Key, (u64, String)> = BTreeMap::new();
        let mut samples = Vec::new();
        let manifest_err = |e: csv::Error| Error::Library(format!("manifest: {e}"));
        let headers = reader.headers().map_err(manifest_err)?.clone();
        let mut record = csv::StringRecord::new();
        while reader.read_record(&mut record).map_err(manifest_err)? {
            let line = record.position().map_or(0, |p| p.line());
            let entry: ManifestEntry = record.deserialize(Some(&headers)).map_err(manifest_err)?;
            if entry.pitch > 127 || !(1..=127).contains(&entry.velocity) {
                return Err(Error::Library(format!(
                    "line {line} ({}): pitch/velocity out of range",
                    entry.file
                )));
            }
            let key = (entry.instrument.clone(), entry.pitch, entry.velocity);
            if let Some((first_line, first_file)) = seen.get(&key) {
                return Err(Error::Library(format!(
                    "duplicate key ({}, {}, {}): line {first_line} ({first_file}) and line {line} ({})",
                    key.0, key.1, key.2, entry.file
                )));
            }
            seen.insert(key, (line, entry.file.clone()));
            let path = base_dir.join(&entry.file);
            if !path.exists() {
                return Err(Error::Library(format!(
                    "line {line}: missing audio file {}",
                    path.display()
                )));
            }
            let audio = read_wav(&path)
                .map_err(|e| Error::Library(format!("line {line} ({}): {e}", entry.file)))?;
            samples.push(NoteSample {
                instrument: entry.instrument,
                pitch: entry.pitch,
                velocity: entry.velocity,
                audio,
            });
        }
        Self::from_samples(working_rate, samples)
    }

    pub fn working_rate(&self) -> u32 {
        self.working_rate
    }

    pub fn manifest_path(&self) -> Option<&Path> {
        self.manifest.as_deref()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn instruments(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.samples.keys().map(|k| k.0.as_str()).collect();
        v.dedup();
        v
    }

    pub fn get(&self, instrument: &str, pitch: u8, velocity: u8) -> Option<&NoteSample> {
        self.samples.get(&(instrument.to_string(), pitch, velocity))
    }

    pub fn samples(&self) -> impl Iterator<Item = &NoteSample> {
        self.samples.values()
    }

    /// Exact match if present; otherwise the nearest pitch (ties to the lower
    /// pitch), then the nearest velocity at that pitch (ties to the lower).
    pub fn select(&self, instrument: &str, pitch: u8, velocity: u8) -> Result<Selection<'_>> {
        let candidates: Vec<&NoteSample> = self
            .samples
            .range((instrument.to_string(), 0, 0)..=(instrument.to_string(), 127, 127))
            .map(|(_, s)| s)
            .collect();
        if candidates.is_empty() {
            return Err(Error::UnknownInstrument(instrument.to_string()));
        }
        let dist = |a: u8, b: u8| (a as i32 - b as i32).abs();
        // Candidates are sorted by (pitch, velocity), so min_by_key keeps the lower on ties.
        let best_pitch = candidates
            .iter()
            .map(|s| s.pitch)
            .min_by_key(|&p| dist(p, pitch))
            .expect("non-empty");
        let sample = candidates
            .iter()
            .filter(|s| s.pitch == best_pitch)
            .min_by_key(|s| dist(s.velocity, velocity))
            .expect("non-empty");
        Ok(Selection {
            sample,
            pitch_shift: pitch as i32 - best_pitch as i32,
        })
    }
}

/// Loads a manifest file; sample paths are relative to the manifest's directory.
pub fn load_library(manifest: &Path, working_rate: u32) -> Result<SampleLibrary> {
    let text = std::fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut lib = SampleLibrary::from_manifest(&text, base, working_rate)?;
    lib.manifest = Some(manifest.to_path_buf());
    Ok(lib)
}
