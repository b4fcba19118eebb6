use std::path::{Path, PathBuf};

use refsynth::audio::{read_wav, write_wav, Waveform};
use refsynth::codec::{CodecRegistry, Latent};
use refsynth::diffusion::{sample_dpmpp2m, Denoiser, Guided, ToyDenoiser, TrainingConfig, Vocabulary};
use refsynth::eval::{embed_set, embed_toy, frechet_distance};
use refsynth::midi::{write_smf, NoteEvent, Score};
use refsynth::pipeline::*;
use refsynth::refine::Backend;
use refsynth::seed;
use tempfile::TempDir;

const SRC: &str = "synthetic, violin";
const TGT: &str = "realistic, violin";

fn note(pitch: u8, onset_s: f64, offset_s: f64) -> NoteEvent {
    NoteEvent {
        pitch,
        velocity: 100,
        onset_s,
        offset_s,
        channel: 0,
    }
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        let lib = toy_library(&["violin".to_string()], 57, 76, TOY_RATE).unwrap();
        write_toy_library(&lib, &dir.path().join("lib")).unwrap();
        let model = ToyDenoiser::new_random(32, 16, 4, Vocabulary::new([SRC, TGT]), 0.5, 4);
        model.save(&dir.path().join("tiny.ckpt")).unwrap();
        Fixture { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn midi(&self, name: &str, notes: Vec<NoteEvent>) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, write_smf(&Score::from_notes(notes, 120.0).unwrap())).unwrap();
        p
    }

    fn config(&self, backend: Backend, midi: &Path, output: &str) -> RunConfig {
        let mut cfg = RunConfig::defaults(backend, "violin", 7);
        cfg.midi = Some(midi.to_path_buf());
        cfg.library = Some(self.path("lib/manifest.csv"));
        cfg.checkpoint = Some(self.path("tiny.ckpt"));
        cfg.output = Some(self.path(output));
        cfg
    }

    /// Short schedules keep the tiny-model runs fast.
    fn quick(&self, backend: Backend, midi: &Path, output: &str) -> RunConfig {
        let mut cfg = self.config(backend, midi, output);
        cfg.refine.steps = 6;
        cfg.refine.start_step = 4;
        cfg
    }
}

fn melody() -> Vec<NoteEvent> {
    vec![note(60, 0.1, 0.4), note(64, 0.5, 0.8), note(67, 0.75, 1.1)]
}

#[test]
fn render_duration_is_last_offset_plus_release() {
    let fx = Fixture::new();
    let midi = fx.midi("m.mid", melody());
    let cfg = fx.config(Backend::Sdedit, &midi, "out/render.wav");
    let summary = cmd_render(&cfg).unwrap();
    assert_eq!(summary.notes, 3);
    let audio = read_wav(&fx.path("out/render.wav")).unwrap();
    assert_eq!(audio.sample_rate(), 44_100);
    assert!((audio.duration_s() - 1.3).abs() <= 1.0 / 44_100.0, "{}", audio.duration_s());
    assert!(summary.peak > 0.0);
}

#[test]
fn missing_library_error_names_the_path() {
    let fx = Fixture::new();
    let midi = fx.midi("m.mid", melody());
    let mut cfg = fx.config(Backend::Sdedit, &midi, "x.wav");
    cfg.library = Some(fx.path("nowhere/manifest.csv"));
    let err = cmd_render(&cfg).unwrap_err().to_string();
    assert!(err.contains("nowhere/manifest.csv"), "{err}");
    assert!(!fx.path("x.wav").exists());
}

#[test]
fn corrupt_midi_error_names_the_file() {
    let fx = Fixture::new();
    let bad = fx.path("bad.mid");
    std::fs::write(&bad, b"MThd\0\0\0\x06\0\x01").unwrap();
    let cfg = fx.config(Backend::Sdedit, &bad, "x.wav");
    let err = cmd_render(&cfg).unwrap_err().to_string();
    assert!(err.contains("bad.mid"), "{err}");
}

#[test]
fn rendering_twice_is_byte_identical() {
    let fx = Fixture::new();
    let midi = fx.midi("m.mid", melody());
    cmd_render(&fx.config(Backend::Sdedit, &midi, "a.wav")).unwrap();
    cmd_render(&fx.config(Backend::Sdedit, &midi, "b.wav")).unwrap();
    assert_eq!(std::fs::read(fx.path("a.wav")).unwrap(), std::fs::read(fx.path("b.wav")).unwrap());
}

#[test]
fn sidecar_records_backend_defaults() {
    let fx = Fixture::new();
    let midi = fx.midi("m.mid", vec![note(69, 0.0, 0.1)]);
    for (backend, steps, start, sigma_min, sigma_max, scale) in
        [(Backend::Sdedit, 250, 150, 0.05, 16.0, 7.0), (Backend::Zeta, 200, 70, 0.3, 500.0, 4.0)]
    {
        let mut cfg = fx.config(backend, &midi, "r.wav");
        cfg.input = Some(fx.path("in.wav"));
        cfg.out_rate = 16_000;
        cmd_render(&RunConfig {
            output: cfg.input.clone(),
            ..cfg.clone()
        })
        .unwrap();
        let summary = cmd_refine(&cfg).unwrap();
        let meta = RunMetadata::load(&summary.sidecar).unwrap();
        let r = &meta.config.refine;
        assert_eq!(r.backend, backend);
        assert_eq!((r.steps, r.start_step), (steps, start));
        assert_eq!((r.sigma_min, r.sigma_max, r.guidance_scale), (sigma_min, sigma_max, scale));
        assert_eq!(meta.command, "refine");
        assert_eq!(meta.input_samples, 16_000 * 3 / 10);
    }
}

#[test]
fn zero_start_returns_the_input() {
    let fx = Fixture::new();
    let midi = fx.midi("m.mid", melody());
    let mut cfg = fx.config(Backend::Sdedit, &midi, "refined.wav");
    cfg.out_rate = 16_000;
    cfg.refine.start_step = 0;
    let (rendered, _) = render_audio(&cfg).unwrap();
    write_wav(&fx.path("in.wav"), &rendered, cfg.wav_format).unwrap();
    cfg.input = Some(fx.path("in.wav"));
    cmd_refine(&cfg).unwrap();
    let out = read_wav(&fx.path("refined.wav")).unwrap();
    assert_eq!(out.len(), rendered.len());
    let err = out.channel(0).iter().zip(rendered.channel(0)).map(|(a, b)| (a - b).abs()).fold(0.0, f32::max);
    assert!(err <= 1e-5, "{err}");
}

#[test]
fn synth_equals_render_then_refine() {
    let fx = Fixture::new();
    let midi = fx.midi("m.mid", melody());
    for backend in [Backend::Sdedit, Backend::Zeta] {
        let synth = fx.quick(backend, &midi, "synth.wav");
        cmd_synth(&synth).unwrap();
        cmd_render(&fx.quick(backend, &midi, "render.wav")).unwrap();
        let mut refine = fx.quick(backend, &midi, "refine.wav");
        refine.input = Some(fx.path("render.wav"));
        cmd_refine(&refine).unwrap();
        assert_eq!(
            std::fs::read(fx.path("synth.wav")).unwrap(),
            std::fs::read(fx.path("refine.wav")).unwrap(),
            "{backend}"
        );
        let meta = RunMetadata::load(&sidecar_path(&fx.path("synth.wav"))).unwrap();
        assert_eq!(meta.command, "synth");
    }
}

#[test]
fn synth_of_an_empty_score_succeeds() {
    let fx = Fixture::new();
    let midi = fx.midi("empty.mid", vec![]);
    let summary = cmd_synth(&fx.quick(Backend::Zeta, &midi, "e.wav")).unwrap();
    assert!((summary.duration_s - 0.2).abs() < 1e-3);
    let out = read_wav(&fx.path("e.wav")).unwrap();
    assert!(out.channel(0).iter().all(|v| v.is_finite()));
}

#[test]
fn long_score_is_chunked_and_length_preserving() {
    let fx = Fixture::new();
    let notes: Vec<NoteEvent> = (0..210).map(|k| note(57 + (k % 12) as u8, k as f64 * 0.5, k as f64 * 0.5 + 0.3)).collect();
    let midi = fx.midi("long.mid", notes);
    let mut cfg = fx.quick(Backend::Sdedit, &midi, "long.wav");
    cfg.refine.steps = 2;
    cfg.refine.start_step = 1;
    let summary = cmd_synth(&cfg).unwrap();
    let (rendered, _) = render_audio(&cfg).unwrap();
    let out = read_wav(&fx.path("long.wav")).unwrap();
    assert_eq!(out.len(), rendered.len());
    assert!(rendered.duration_s() > 100.0);
    assert!(summary.chunks >= 2, "{}", summary.chunks);
}

#[test]
fn sidecar_replays_bit_identically() {
    let fx = Fixture::new();
    let midi = fx.midi("m.mid", melody());
    let mut cfg = fx.quick(Backend::Zeta, &midi, "first.wav");
    cfg.refine.seed = 1234;
    cfg.refine.guidance_scale = 2.5;
    let summary = cmd_synth(&cfg).unwrap();
    let replay = RunConfig::load(&summary.sidecar, &[string_override("output", fx.path("second.wav").to_str().unwrap())]).unwrap();
    assert_eq!(replay.refine, cfg.refine);
    cmd_synth(&replay).unwrap();
    assert_eq!(std::fs::read(fx.path("first.wav")).unwrap(), std::fs::read(fx.path("second.wav")).unwrap());
}

#[test]
fn checkpoint_shape_mismatch_is_reported() {
    let fx = Fixture::new();
    let midi = fx.midi("m.mid", melody());
    let mut cfg = fx.quick(Backend::Sdedit, &midi, "x.wav");
    cfg.downsample = 16;
    let err = cmd_synth(&cfg).unwrap_err().to_string();
    assert!(err.contains("tiny.ckpt") && err.contains("channels"), "{err}");
}

fn small_corpus(dir: &Path, clips: usize) -> ToyCorpusSpec {
    let spec = ToyCorpusSpec {
        clips_per_class: clips,
        ..ToyCorpusSpec::default()
    };
    cmd_make_toy_corpus(&spec, dir).unwrap();
    spec
}

#[test]
fn corpus_counts_labels_and_determinism() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    small_corpus(a.path(), 50);
    small_corpus(b.path(), 50);
    let entries = read_corpus_manifest(a.path()).unwrap();
    assert_eq!(entries.len(), 100);
    assert_eq!(entries.iter().filter(|e| e.class == "synthetic").count(), 50);
    assert_eq!(entries.iter().filter(|e| e.split == "validation").count(), 10);
    for e in &entries {
        assert!(e.labels.split('|').any(|l| l == format!("{}, violin", e.class)), "{}", e.labels);
        let bytes = std::fs::read(a.path().join(&e.file)).unwrap();
        assert_eq!(bytes, std::fs::read(b.path().join(&e.file)).unwrap(), "{}", e.file);
    }
    assert_eq!(
        std::fs::read(a.path().join("manifest.csv")).unwrap(),
        std::fs::read(b.path().join("manifest.csv")).unwrap()
    );
}

/// Frame-to-frame spectral-flux spread, embedding dimension 29.
fn flux_std(audio: &Waveform) -> f64 {
    embed_toy(audio).unwrap()[29]
}

#[test]
fn corpus_styles_differ_in_flux_signature() {
    let dir = TempDir::new().unwrap();
    small_corpus(dir.path(), 12);
    let entries = read_corpus_manifest(dir.path()).unwrap();
    // Whole clips: vibrato keeps the flux up between onsets, so the mean and
    // 90th percentile of the flux (dimensions 28 and 30) rise.
    let class_mean = |class: &str, dim: usize| {
        let v: Vec<f64> = entries
            .iter()
            .filter(|e| e.class == class)
            .map(|e| embed_toy(&read_wav(&dir.path().join(&e.file)).unwrap()).unwrap()[dim])
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    // Inside a held note a static sample has a flat flux curve.
    let sustain = |w: Waveform| w.slice(4_800, 24_000);
    let lib = toy_library(&["violin".to_string()], 57, 76, TOY_RATE).unwrap();
    let steady = sustain(render_synthetic(&Score::from_notes(vec![note(65, 0.0, 1.8)], 120.0).unwrap(), &lib, "violin", 32_000).unwrap());
    let performed = sustain(render_performed(
        &Score::from_notes(vec![note(65, 0.0, 1.8)], 120.0).unwrap(),
        "violin",
        &StyleParams::realistic(),
        &mut seed::rng(3),
        32_000,
    ));
    assert!(flux_std(&steady) < 1e-2 * flux_std(&performed), "{} vs {}", flux_std(&steady), flux_std(&performed));
    for dim in [28, 30] {
        assert!(class_mean("realistic", dim) > 1.2 * class_mean("synthetic", dim), "dimension {dim}");
    }
}

fn quick_training(steps: usize) -> TrainingConfig {
    TrainingConfig {
        steps,
        hidden: 16,
        batch_size: 8,
        crop_frames: 32,
        ..TrainingConfig::default()
    }
}

fn train(corpus: &Path, config: TrainingConfig, init: Option<PathBuf>, labels: &[&str], out: PathBuf) -> TrainSummary {
    cmd_train(&TrainJob {
        dataset: corpus.to_path_buf(),
        config,
        codec: "dct".into(),
        downsample: 32,
        init,
        labels: labels.iter().map(|s| s.to_string()).collect(),
        output: out,
    })
    .unwrap()
}

#[test]
fn training_from_scratch_lowers_the_loss_and_zero_steps_keep_init() {
    let dir = TempDir::new().unwrap();
    small_corpus(dir.path(), 10);
    let first = train(dir.path(), quick_training(600), None, &[], dir.path().join("a.ckpt"));
    let losses: Vec<f64> = std::fs::read_to_string(&first.loss_log)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(losses.len(), 600);
    let windows: Vec<f64> = losses.chunks(200).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    assert!(windows.windows(2).all(|w| w[1] < w[0]), "{windows:?}");

    let again = train(
        dir.path(),
        quick_training(0),
        Some(first.checkpoint.clone()),
        &[],
        dir.path().join("b.ckpt"),
    );
    assert_eq!(again.steps, 0);
    assert_eq!(std::fs::read(&first.checkpoint).unwrap(), std::fs::read(&again.checkpoint).unwrap());
}

/// Clips sampled from pure noise under `label`, decoded to audio.
fn generate(model: &ToyDenoiser, label: &str, count: u64) -> Vec<Waveform> {
    let codec = CodecRegistry::default().build("dct", 32).unwrap();
    let schedule = refsynth::diffusion::build_schedule(30, 0.02, 80.0, 7.0).unwrap();
    let cond = Denoiser::<f32>::vocabulary(model).resolve(label);
    let guided = Guided::new(model, cond, 1.0);
    (0..count)
        .map(|k| {
            let noise = Latent::<f32>::zeros(32, 500, 32, TOY_RATE).randn_like(&mut seed::rng(k));
            let z = sample_dpmpp2m(&noise.scaled(80.0), 30, &schedule, &guided).unwrap();
            codec.decode(&z.scaled(1.0 / model.latent_scale())).unwrap()
        })
        .collect()
}

#[test]
fn fine_tuning_on_realistic_clips_shifts_samples_toward_them() {
    let dir = TempDir::new().unwrap();
    small_corpus(dir.path(), 16);
    let entries = read_corpus_manifest(dir.path()).unwrap();
    let realistic: Vec<Waveform> = entries
        .iter()
        .filter(|e| e.class == "realistic")
        .map(|e| read_wav(&dir.path().join(&e.file)).unwrap())
        .collect();
    let reference = embed_set(&realistic, "realistic").unwrap();

    let mut config = quick_training(1000);
    config.sigma_max = 80.0;
    let base = train(dir.path(), config.clone(), None, &[], dir.path().join("base.ckpt"));
    config.steps = 600;
    config.seed = 1;
    let tuned = train(
        dir.path(),
        config,
        Some(base.checkpoint.clone()),
        &[TGT],
        dir.path().join("tuned.ckpt"),
    );
    let distance = |ckpt: &Path| {
        let model = ToyDenoiser::load(ckpt).unwrap();
        let set = embed_set(&generate(&model, SRC, 16), "generated").unwrap();
        frechet_distance(&set, &reference).unwrap()
    };
    let before = distance(&base.checkpoint);
    let after = distance(&tuned.checkpoint);
    assert!(after < before, "FAD to realistic: before {before:.2}, after {after:.2}");
}

#[test]
fn eval_identities_and_errors() {
    let dir = TempDir::new().unwrap();
    small_corpus(dir.path(), 6);
    let entries = read_corpus_manifest(dir.path()).unwrap();
    let set: Vec<PathBuf> = entries
        .iter()
        .filter(|e| e.class == "realistic")
        .map(|e| dir.path().join(&e.file))
        .collect();
    let report = cmd_eval(&EvalJob {
        reference: set.clone(),
        candidate: set.clone(),
        concat: set.clone(),
        output: Some(dir.path().join("report.toml")),
        ..EvalJob::default()
    })
    .unwrap();
    assert!(report.fad_r.abs() <= 1e-6);
    assert!(report.fad_t.unwrap().abs() <= 1e-6);
    assert!(report.f1.is_none());
    assert!(dir.path().join("report.toml").exists());

    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let err = cmd_eval(&EvalJob {
        reference: set,
        candidate: vec![empty],
        ..EvalJob::default()
    })
    .unwrap_err();
    assert!(err.to_string().contains("empty"), "{err}");
}

#[test]
fn eval_scores_concat_renders_against_their_scores() {
    let dir = TempDir::new().unwrap();
    let lib = toy_library(&["violin".to_string()], 57, 76, TOY_RATE).unwrap();
    let (mut wavs, mut mids) = (Vec::new(), Vec::new());
    for k in 0..4 {
        let score = random_score(&mut seed::rng(k), 57, 76, 2.0);
        let wav = dir.path().join(format!("c{k}.wav"));
        let mid = dir.path().join(format!("c{k}.mid"));
        write_wav(&wav, &render_synthetic(&score, &lib, "violin", 32_000).unwrap(), Default::default()).unwrap();
        std::fs::write(&mid, write_smf(&score)).unwrap();
        wavs.push(wav);
        mids.push(mid);
    }
    let report = cmd_eval(&EvalJob {
        reference: wavs.clone(),
        candidate: wavs,
        scores: mids,
        ..EvalJob::default()
    })
    .unwrap();
    assert!(report.f1.unwrap() >= 0.95, "{:?}", report.f1);
}
