use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audio::WavFormat;
use crate::codec::DEFAULT_DOWNSAMPLE;
use crate::refine::{Backend, RefinementConfig};
use crate::sampler::{AdsrEnvelope, RenderOptions};
use crate::{seed, Error, Result};

/// Everything a render/refine/synth run needs. Parsed from TOML with
/// `key=value` overrides; the `[refine]` table starts from the defaults of
/// the selected back-end, so only deviations need to be written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub midi: Option<PathBuf>,
    /// Sample library manifest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub library: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    /// Audio to refine (refine only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub instrument: String,
    pub seed: u64,
    pub codec: String,
    pub downsample: usize,
    /// Rate of the sampler mix and of the refinement model.
    pub working_rate: u32,
    pub out_rate: u32,
    pub wav_format: WavFormat,
    /// Fold CC64 sustain into note durations before rendering.
    pub sustain_pedal: bool,
    pub envelope: AdsrEnvelope,
    pub velocity_gain: bool,
    pub expression_gain: bool,
    pub refine: RefinementConfig,
}

impl RunConfig {
    pub fn defaults(backend: Backend, instrument: &str, seed: u64) -> Self {
        let mut refine = RefinementConfig::defaults(backend, instrument);
        refine.seed = seed::derive(seed, "refinement");
        let render = RenderOptions::default();
        RunConfig {
            midi: None,
            library: None,
            checkpoint: None,
            input: None,
            output: None,
            instrument: instrument.to_string(),
            seed,
            codec: "dct".into(),
            downsample: DEFAULT_DOWNSAMPLE,
            working_rate: render.working_rate,
            out_rate: render.out_rate,
            wav_format: WavFormat::Float32,
            sustain_pedal: true,
            envelope: render.envelope,
            velocity_gain: render.velocity_gain,
            expression_gain: render.expression_gain,
            refine,
        }
    }

    /// Parses `text` after applying `overrides` (`key=value`, dotted keys
    /// address tables, values are TOML literals or bare strings). Missing
    /// keys take the defaults of the chosen backend and instrument;
    /// `refine.seed` defaults to the refinement sub-stream of `seed`.
    ///
    /// A run-metadata sidecar is accepted too: its recorded `config` table is
    /// used, which reproduces that run.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if table.contains_key("chunks") {
            if let Some(toml::Value::Table(recorded)) = table.remove("config") {
                table = recorded;
            }
        }
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let str_at = |t: &toml::Table, key: &str| t.get(key).and_then(|v| v.as_str()).map(str::to_string);
        let instrument = str_at(&table, "instrument").unwrap_or_else(|| "violin".into());
        let top_seed = match table.get("seed") {
            None => 0,
            Some(v) => v
                .as_integer()
                .filter(|&s| s >= 0)
                .ok_or_else(|| Error::Config(format!("seed must be a non-negative integer, got {v}")))?
                as u64,
        };
        let refine = table.get("refine").and_then(|v| v.as_table());
        let backend = match refine.and_then(|r| str_at(r, "backend")) {
            Some(name) => Backend::parse(&name)?,
            None => Backend::Sdedit,
        };
        let defaults = toml::Table::try_from(RunConfig::defaults(backend, &instrument, top_seed))
            .map_err(|e| Error::Config(e.to_string()))?;
        let merged = merge(defaults, table);
        let cfg: RunConfig = merged.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, overrides).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.instrument.trim().is_empty() {
            return Err(Error::Config("instrument label is empty".into()));
        }
        if self.working_rate == 0 || self.out_rate == 0 {
            return Err(Error::Config("sample rates must be positive".into()));
        }
        if !self.envelope.is_valid() {
            return Err(Error::Config(format!("invalid envelope {:?}", self.envelope)));
        }
        self.refine.validate()
    }

    pub fn render_options(&self) -> RenderOptions {
        RenderOptions {
            working_rate: self.working_rate,
            out_rate: self.out_rate,
            envelope: self.envelope,
            velocity_gain: self.velocity_gain,
            expression_gain: self.expression_gain,
        }
    }

    /// The path stored under `key`, which must be set and exist.
    pub(crate) fn existing(&self, key: &str) -> Result<&Path> {
        let path = self.path(key)?;
        if !path.exists() {
            return Err(Error::io(
                path,
                std::io::Error::new(std::io::ErrorKind::NotFound, format!("{key} file not found")),
            ));
        }
        Ok(path)
    }

    pub(crate) fn path(&self, key: &str) -> Result<&Path> {
        let slot = match key {
            "midi" => &self.midi,
            "library" => &self.library,
            "checkpoint" => &self.checkpoint,
            "input" => &self.input,
            "output" => &self.output,
            _ => unreachable!("unknown path key {key}"),
        };
        slot.as_deref().ok_or_else(|| Error::Config(format!("no {key} path configured")))
    }
}

/// `key="value"` with TOML string quoting, for overrides that must stay strings.
pub fn string_override(key: &str, value: &str) -> String {
    format!("{key}={}", toml::Value::String(value.to_string()))
}

/// Recursively overlays `top` on `base`.
fn merge(mut base: toml::Table, top: toml::Table) -> toml::Table {
    for (k, v) in top {
        match (base.remove(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => {
                base.insert(k, toml::Value::Table(merge(b, t)));
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
    base
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key {key:?}")));
    }
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override {key:?}: {part} is not a table")))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_takes_sdedit_defaults() {
        let cfg = RunConfig::parse("", &[]).unwrap();
        assert_eq!(cfg.refine.backend, Backend::Sdedit);
        assert_eq!((cfg.refine.steps, cfg.refine.start_step), (250, 150));
        assert_eq!((cfg.refine.sigma_max, cfg.refine.guidance_scale), (16.0, 7.0));
        assert_eq!(cfg.refine.seed, seed::derive(0, "refinement"));
    }

    #[test]
    fn choosing_zeta_switches_the_whole_column() {
        let cfg = RunConfig::parse("instrument = \"flute\"\n[refine]\nbackend = \"zeta\"\n", &[]).unwrap();
        assert_eq!((cfg.refine.steps, cfg.refine.start_step), (200, 70));
        assert_eq!((cfg.refine.sigma_min, cfg.refine.sigma_max, cfg.refine.guidance_scale), (0.3, 500.0, 4.0));
        assert_eq!(cfg.refine.target_prompt.as_deref(), Some("realistic, flute"));
    }

    #[test]
    fn overrides_win_over_file_values() {
        let over = ["refine.backend=zeta".to_string(), "refine.start_step=0".into(), "output=out.wav".into(), "seed=9".into()];
        let cfg = RunConfig::parse("seed = 3\n[refine]\nstart_step = 10\n", &over).unwrap();
        assert_eq!(cfg.refine.backend, Backend::Zeta);
        assert_eq!(cfg.refine.start_step, 0);
        assert_eq!(cfg.output.as_deref(), Some(Path::new("out.wav")));
        assert_eq!(cfg.refine.seed, seed::derive(9, "refinement"));
    }

    #[test]
    fn round_trip_and_rejections() {
        let cfg = RunConfig::parse("", &["refine.guidance_scale=2.5".into()]).unwrap();
        assert_eq!(RunConfig::parse(&cfg.to_toml(), &[]).unwrap(), cfg);
        assert!(RunConfig::parse("bogus = 1", &[]).is_err());
        assert!(RunConfig::parse("[refine]\nstart_step = 400\n", &[]).is_err());
        assert!(RunConfig::parse("", &["novalue".into()]).is_err());
        let cfg = RunConfig::parse("", &[string_override("output", "12"), string_override("midi", "a \"b\".mid")]).unwrap();
        assert_eq!(cfg.output.as_deref(), Some(Path::new("12")));
        assert_eq!(cfg.midi.as_deref(), Some(Path::new("a \"b\".mid")));
    }
}
