use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::corpus::{load_toy_dataset, make_toy_corpus, CorpusSummary, ToyCorpusSpec};
use crate::audio::{read_wav, resample, wav_bytes, wav_from_bytes, write_wav, Waveform};
use crate::codec::CodecRegistry;
use crate::diffusion::{train_toy_denoiser, ToyDenoiser, TrainingConfig};
use crate::eval::{config_hash, content_hash, embed_set, frechet_distance, note_f1, transcribe_mono, MetricReport};
use crate::eval::DEFAULT_ONSET_TOLERANCE_S;
use crate::midi::{apply_sustain, parse_smf, Score};
use crate::refine::{chunk_spans, refine_long, ChunkSpan};
use crate::sampler::{load_library, render_track};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RenderSummary {
    pub notes: usize,
    pub duration_s: f64,
    pub peak: f32,
}

/// Reproducibility record written next to every refined file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub command: String,
    pub input_rate: u32,
    pub input_samples: usize,
    pub model_rate: u32,
    pub checkpoint_hash: String,
    pub config: RunConfig,
    /// Chunk boundaries in samples at the model rate.
    pub chunks: Vec<ChunkSpan>,
}

impl RunMetadata {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("metadata serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| e.in_file(path))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineSummary {
    pub duration_s: f64,
    pub peak: f32,
    pub chunks: usize,
    pub sidecar: PathBuf,
}

/// `out.wav` -> `out.meta.toml`.
pub fn sidecar_path(output: &Path) -> PathBuf {
    output.with_extension("meta.toml")
}

pub fn read_score(path: &Path) -> Result<Score> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_smf(&bytes).map_err(|e| Error::from(e).in_file(path))
}

/// Concatenative render of the configured score, kept in memory.
pub fn render_audio(cfg: &RunConfig) -> Result<(Waveform, RenderSummary)> {
    cfg.validate()?;
    let midi = cfg.existing("midi")?;
    let manifest = cfg.existing("library")?;
    let mut score = read_score(midi)?;
    if cfg.sustain_pedal {
        score = apply_sustain(&score);
    }
    let lib = load_library(manifest, cfg.working_rate).map_err(|e| e.in_file(manifest))?;
    let audio = render_track(&score, &lib, &cfg.instrument, &cfg.render_options())?;
    let summary = RenderSummary {
        notes: score.notes().len(),
        duration_s: audio.duration_s(),
        peak: audio.peak(),
    };
    Ok((audio, summary))
}

fn write_output(cfg: &RunConfig, audio: &Waveform) -> Result<PathBuf> {
    let out = cfg.path("output")?.to_path_buf();
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    write_wav(&out, audio, cfg.wav_format)?;
    Ok(out)
}

pub fn cmd_render(cfg: &RunConfig) -> Result<RenderSummary> {
    let (audio, summary) = render_audio(cfg)?;
    let out = write_output(cfg, &audio)?;
    info!(
        "rendered {} notes, {:.3} s, peak {:.3} -> {}",
        summary.notes,
        summary.duration_s,
        summary.peak,
        out.display()
    );
    Ok(summary)
}

/// Refines `input` at the model's working rate and returns it at the input
/// rate and length, with the metadata describing the run.
pub fn refine_audio(cfg: &RunConfig, input: &Waveform) -> Result<(Waveform, RunMetadata)> {
    cfg.validate()?;
    let ckpt_path = cfg.existing("checkpoint")?;
    let ckpt_bytes = std::fs::read(ckpt_path).map_err(|e| Error::io(ckpt_path, e))?;
    let model = ToyDenoiser::from_bytes(&ckpt_bytes).map_err(|e| e.in_file(ckpt_path))?;
    let codec = CodecRegistry::default().build(&cfg.codec, cfg.downsample)?;
    let expected = codec.latent_channels(1);
    if model.config().channels != expected {
        return Err(Error::ShapeMismatch {
            expected: format!("{expected} latent channels per audio channel ({} codec)", codec.name()),
            actual: format!("checkpoint {} with {} channels", ckpt_path.display(), model.config().channels),
        }
        .in_file(ckpt_path));
    }
    let work = if input.sample_rate() == cfg.working_rate {
        input.clone()
    } else {
        resample(input, cfg.working_rate)
    };
    let schedule = cfg.refine.schedule()?;
    let refined = refine_long(&work, &cfg.refine, &schedule, &model, codec.as_ref())?;
    let out = if input.sample_rate() == cfg.working_rate {
        refined
    } else {
        resample(&refined, input.sample_rate()).with_len(input.len())
    };
    let meta = RunMetadata {
        command: "refine".into(),
        input_rate: input.sample_rate(),
        input_samples: input.len(),
        model_rate: cfg.working_rate,
        checkpoint_hash: content_hash(&ckpt_bytes),
        config: cfg.clone(),
        chunks: chunk_spans(work.len(), cfg.working_rate, &cfg.refine)?,
    };
    Ok((out, meta))
}

fn finish_refine(cfg: &RunConfig, audio: &Waveform, meta: &RunMetadata) -> Result<RefineSummary> {
    let out = write_output(cfg, audio)?;
    let sidecar = sidecar_path(&out);
    std::fs::write(&sidecar, meta.to_toml()).map_err(|e| Error::io(&sidecar, e))?;
    info!(
        "refined {:.3} s with {} in {} chunk(s) -> {}",
        audio.duration_s(),
        cfg.refine.backend,
        meta.chunks.len(),
        out.display()
    );
    Ok(RefineSummary {
        duration_s: audio.duration_s(),
        peak: audio.peak(),
        chunks: meta.chunks.len(),
        sidecar,
    })
}

pub fn cmd_refine(cfg: &RunConfig) -> Result<RefineSummary> {
    let input_path = cfg.existing("input")?;
    let input = read_wav(input_path)?;
    let (out, meta) = refine_audio(cfg, &input)?;
    finish_refine(cfg, &out, &meta)
}

/// Render followed by refine in one process. The rendered audio passes
/// through the configured WAV encoding, so the result is byte-identical to
/// running `render` and then `refine` on its output.
pub fn cmd_synth(cfg: &RunConfig) -> Result<RefineSummary> {
    let (rendered, summary) = render_audio(cfg)?;
    info!("rendered {} notes, {:.3} s", summary.notes, summary.duration_s);
    let as_stored = wav_from_bytes(&wav_bytes(&rendered, cfg.wav_format)?)?;
    let (out, mut meta) = refine_audio(cfg, &as_stored)?;
    meta.command = "synth".into();
    finish_refine(cfg, &out, &meta)
}

pub fn cmd_make_toy_corpus(spec: &ToyCorpusSpec, dir: &Path) -> Result<CorpusSummary> {
    let summary = make_toy_corpus(spec, dir)?;
    info!("wrote {} clips to {}", summary.clips, dir.display());
    Ok(summary)
}

/// Inputs of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainJob {
    pub dataset: PathBuf,
    pub config: TrainingConfig,
    pub codec: String,
    pub downsample: usize,
    /// Fine-tune from this checkpoint instead of a fresh network.
    pub init: Option<PathBuf>,
    /// Keep only clips with one of these labels; empty keeps all.
    pub labels: Vec<String>,
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub steps: usize,
    pub first_loss: Option<f64>,
    pub last_loss: Option<f64>,
    pub checkpoint: PathBuf,
    pub loss_log: PathBuf,
}

/// Trains (or fine-tunes) the toy denoiser, writing the checkpoint and a
/// `step,loss` CSV next to it.
pub fn cmd_train(job: &TrainJob) -> Result<TrainSummary> {
    let mut dataset = load_toy_dataset(&job.dataset)?;
    if !job.labels.is_empty() {
        dataset = dataset.filtered(|l| job.labels.iter().any(|k| k == l));
    }
    let init = match &job.init {
        Some(p) => Some(ToyDenoiser::load(p)?),
        None => None,
    };
    let codec = CodecRegistry::default().build(&job.codec, job.downsample)?;
    let schedule = job.config.schedule()?;
    let (model, report) = train_toy_denoiser(&dataset, codec.as_ref(), &schedule, &job.config, init.as_ref())?;
    if let Some(dir) = job.output.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    model.save(&job.output)?;
    let loss_log = job.output.with_extension("loss.csv");
    let mut text = String::from("step,loss\n");
    for (i, l) in report.losses.iter().enumerate() {
        text.push_str(&format!("{i},{l}\n"));
    }
    std::fs::write(&loss_log, text).map_err(|e| Error::io(&loss_log, e))?;
    info!("trained {} steps -> {}", report.losses.len(), job.output.display());
    Ok(TrainSummary {
        steps: report.losses.len(),
        first_loss: report.losses.first().copied(),
        last_loss: report.losses.last().copied(),
        checkpoint: job.output.clone(),
        loss_log,
    })
}

/// Audio and score sets of an evaluation. Entries may be files or
/// directories (all `*.wav` / `*.mid` inside, in name order).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalJob {
    pub reference: Vec<PathBuf>,
    pub candidate: Vec<PathBuf>,
    pub concat: Vec<PathBuf>,
    /// Source scores, paired with candidates in order.
    pub scores: Vec<PathBuf>,
    pub output: Option<PathBuf>,
}

pub(crate) fn expand(paths: &[PathBuf], ext: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| Error::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x.eq_ignore_ascii_case(ext)))
                .collect();
            found.sort();
            out.extend(found);
        } else if p.exists() {
            out.push(p.clone());
        } else {
            return Err(Error::io(p, std::io::Error::new(std::io::ErrorKind::NotFound, "not found")));
        }
    }
    Ok(out)
}

fn load_set(paths: &[PathBuf], what: &str) -> Result<Vec<Waveform>> {
    let files = expand(paths, "wav")?;
    if files.is_empty() {
        return Err(Error::Eval(format!("{what} set is empty")));
    }
    files.iter().map(|f| read_wav(f)).collect()
}

/// FAD_r against the realistic references, FAD_t against the concatenative
/// renders and note scores against the source MIDI.
pub fn cmd_eval(job: &EvalJob) -> Result<MetricReport> {
    let reference = load_set(&job.reference, "reference")?;
    let candidate = load_set(&job.candidate, "candidate")?;
    let er = embed_set(&reference, "reference")?;
    let ec = embed_set(&candidate, "candidate")?;
    let fad_r = frechet_distance(&ec, &er)?;

    let (fad_t, concat_size) = if job.concat.is_empty() {
        (None, 0)
    } else {
        let concat = load_set(&job.concat, "concat")?;
        let et = embed_set(&concat, "concat")?;
        (Some(frechet_distance(&ec, &et)?), concat.len())
    };

    let (mut precision, mut recall, mut f1) = (None, None, None);
    if !job.scores.is_empty() {
        let scores = expand(&job.scores, "mid")?;
        if scores.len() != candidate.len() {
            return Err(Error::Eval(format!(
                "{} scores for {} candidate clips",
                scores.len(),
                candidate.len()
            )));
        }
        let (mut matched, mut refs, mut hyps) = (0usize, 0usize, 0usize);
        for (path, audio) in scores.iter().zip(&candidate) {
            let notes = read_score(path)?.notes();
            let hyp = transcribe_mono(audio);
            matched += note_f1(&notes, &hyp, DEFAULT_ONSET_TOLERANCE_S).matched;
            refs += notes.len();
            hyps += hyp.len();
        }
        let p = if hyps > 0 { matched as f64 / hyps as f64 } else { 0.0 };
        let r = if refs > 0 { matched as f64 / refs as f64 } else { 0.0 };
        precision = Some(p);
        recall = Some(r);
        f1 = Some(if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 });
    }

    let describe = |set: &[PathBuf]| set.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join("\n");
    let report = MetricReport {
        fad_r,
        fad_t,
        precision,
        recall,
        f1,
        reference_size: reference.len(),
        concat_size,
        candidate_size: candidate.len(),
        config_hash: config_hash(&format!(
            "reference\n{}\ncandidate\n{}\nconcat\n{}\nscores\n{}",
            describe(&job.reference),
            describe(&job.candidate),
            describe(&job.concat),
            describe(&job.scores)
        )),
    };
    if let Some(out) = &job.output {
        report.write(out)?;
    }
    Ok(report)
}
