use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use refsynth::diffusion::TrainingConfig;
use refsynth::pipeline::{
    cmd_eval, cmd_make_toy_corpus, cmd_refine, cmd_render, cmd_synth, cmd_train, string_override, EvalJob, RunConfig,
    ToyCorpusSpec, TrainJob,
};

/// Render MIDI with a concatenative sampler and refine the result with a
/// diffusion model.
#[derive(Parser)]
#[command(name = "refsynth", version)]
struct Cli {
    /// Log progress (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a MIDI file with the sample library.
    Render(RunArgs),
    /// Refine an audio file toward the target domain.
    Refine(RunArgs),
    /// Render and refine in one go.
    Synth(RunArgs),
    /// Generate the two-class toy training corpus.
    MakeToyCorpus(CorpusArgs),
    /// Train or fine-tune the toy denoiser.
    Train(TrainArgs),
    /// Compute realism, timbre and note metrics.
    Eval(EvalArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration (TOML); a refinement sidecar replays its run.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    midi: Option<PathBuf>,
    /// Sample library manifest (CSV).
    #[arg(long)]
    library: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(short, long)]
    input: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    instrument: Option<String>,
    /// sdedit or zeta.
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write 16-bit PCM instead of 32-bit float.
    #[arg(long)]
    pcm16: bool,
    /// Override any config key, e.g. `--set refine.start_step=100`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut overrides = Vec::new();
        let paths = [
            ("midi", &self.midi),
            ("library", &self.library),
            ("checkpoint", &self.checkpoint),
            ("input", &self.input),
            ("output", &self.output),
        ];
        for (key, value) in paths {
            if let Some(p) = value {
                overrides.push(string_override(key, &p.to_string_lossy()));
            }
        }
        if let Some(i) = &self.instrument {
            overrides.push(string_override("instrument", i));
        }
        if let Some(b) = &self.backend {
            overrides.push(string_override("refine.backend", b));
        }
        if let Some(s) = self.seed {
            overrides.push(format!("seed={s}"));
        }
        if self.pcm16 {
            overrides.push("wav_format=\"pcm16\"".into());
        }
        overrides.extend(self.set.iter().cloned());
        let cfg = match &self.config {
            Some(path) => RunConfig::load(path, &overrides)?,
            None => RunConfig::parse("", &overrides)?,
        };
        Ok(cfg)
    }
}

#[derive(Args)]
struct CorpusArgs {
    /// Output directory.
    #[arg(short, long)]
    out: PathBuf,
    /// Corpus description (TOML); flags below override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    clips_per_class: Option<usize>,
    #[arg(long)]
    clip_seconds: Option<f64>,
    /// Instrument labels (repeatable).
    #[arg(long = "instrument")]
    instruments: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    /// Corpus directory written by make-toy-corpus.
    #[arg(short, long)]
    dataset: PathBuf,
    /// Checkpoint to write.
    #[arg(short, long)]
    output: PathBuf,
    /// Training configuration (TOML).
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Fine-tune from this checkpoint.
    #[arg(long)]
    init: Option<PathBuf>,
    /// Train only on clips with this label (repeatable).
    #[arg(long = "label")]
    labels: Vec<String>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "dct")]
    codec: String,
    #[arg(long, default_value_t = refsynth::codec::DEFAULT_DOWNSAMPLE)]
    downsample: usize,
}

#[derive(Args)]
struct EvalArgs {
    /// Realistic reference clips (files or directories).
    #[arg(long, num_args = 1.., required = true)]
    reference: Vec<PathBuf>,
    /// Clips under evaluation.
    #[arg(long, num_args = 1.., required = true)]
    candidate: Vec<PathBuf>,
    /// Concatenative renders, for the timbre distance.
    #[arg(long, num_args = 1..)]
    concat: Vec<PathBuf>,
    /// Source MIDI files paired with the candidates in name order.
    #[arg(long, num_args = 1..)]
    scores: Vec<PathBuf>,
    /// Report file (TOML).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Render(args) => {
            let cfg = args.load()?;
            let s = cmd_render(&cfg)?;
            println!("notes {}  duration {:.3} s  peak {:.4}", s.notes, s.duration_s, s.peak);
        }
        Command::Refine(args) => {
            let s = cmd_refine(&args.load()?)?;
            println!(
                "duration {:.3} s  chunks {}  peak {:.4}  metadata {}",
                s.duration_s,
                s.chunks,
                s.peak,
                s.sidecar.display()
            );
        }
        Command::Synth(args) => {
            let s = cmd_synth(&args.load()?)?;
            println!(
                "duration {:.3} s  chunks {}  peak {:.4}  metadata {}",
                s.duration_s,
                s.chunks,
                s.peak,
                s.sidecar.display()
            );
        }
        Command::MakeToyCorpus(args) => {
            let mut spec = match &args.spec {
                Some(p) => {
                    let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                    ToyCorpusSpec::from_toml(&text).with_context(|| p.display().to_string())?
                }
                None => ToyCorpusSpec::default(),
            };
            if let Some(n) = args.clips_per_class {
                spec.clips_per_class = n;
            }
            if let Some(s) = args.clip_seconds {
                spec.clip_seconds = s;
            }
            if !args.instruments.is_empty() {
                spec.instruments = args.instruments.clone();
            }
            if let Some(s) = args.seed {
                spec.seed = s;
            }
            let s = cmd_make_toy_corpus(&spec, &args.out)?;
            println!("clips {}  manifest {}", s.clips, s.manifest.display());
        }
        Command::Train(args) => {
            let mut config = match &args.config {
                Some(p) => {
                    let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                    TrainingConfig::from_toml(&text).with_context(|| p.display().to_string())?
                }
                None => TrainingConfig::default(),
            };
            if let Some(n) = args.steps {
                config.steps = n;
            }
            if let Some(s) = args.seed {
                config.seed = s;
            }
            let s = cmd_train(&TrainJob {
                dataset: args.dataset,
                config,
                codec: args.codec,
                downsample: args.downsample,
                init: args.init,
                labels: args.labels,
                output: args.output,
            })?;
            let fmt = |l: Option<f64>| l.map_or("-".to_string(), |v| format!("{v:.4}"));
            println!(
                "steps {}  first loss {}  last loss {}  checkpoint {}",
                s.steps,
                fmt(s.first_loss),
                fmt(s.last_loss),
                s.checkpoint.display()
            );
        }
        Command::Eval(args) => {
            let report = cmd_eval(&EvalJob {
                reference: args.reference,
                candidate: args.candidate,
                concat: args.concat,
                scores: args.scores,
                output: args.output,
            })?;
            print!("{}", report.to_toml());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
