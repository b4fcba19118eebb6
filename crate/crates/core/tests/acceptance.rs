//! Acceptance run: one line per criterion, nonzero exit if any fails.
//!
//! `cargo test -p refsynth --test acceptance` runs everything;
//! `cargo test -p refsynth --test acceptance -- 3 5` runs a subset.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use refsynth::audio::Waveform;
use refsynth::codec::{Codec, CodecRegistry, Latent};
use refsynth::diffusion::gradcheck::{loss_and_grad, NetConfig};
use refsynth::diffusion::{
    build_schedule, forward_diffuse, sample_dpmpp2m, train_toy_denoiser, DataPredictor, Denoiser, Guided, ToyDenoiser,
    TrainingConfig, Vocabulary,
};
use refsynth::eval::{embed_set, embed_toy, frechet_distance, note_f1, transcribe_mono, EmbeddingSet, COVARIANCE_EPSILON};
use refsynth::midi::{NoteEvent, Score};
use refsynth::pipeline::{
    load_toy_dataset, make_toy_corpus, random_score, render_performed, render_synthetic, toy_library, StyleParams,
    ToyCorpusSpec, TOY_RATE,
};
use refsynth::refine::{chunk_spans, refine_long, refine_sdedit, refine_zeta, Backend, RefinementConfig};
use refsynth::sampler::{render_track, AdsrEnvelope, RenderOptions};
use refsynth::{seed, Real};
use statrs::distribution::{ContinuousCDF, StudentsT};

const INSTRUMENT: &str = "violin";
const ROOT_SEED: u64 = 2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------- criterion 1

fn perfect_reconstruction() -> Outcome {
    let t = Instant::now();
    let model = ToyDenoiser::new_random(
        32,
        64,
        6,
        Vocabulary::new(["synthetic, violin", "realistic, violin"]),
        1.0,
        seed::derive(ROOT_SEED, "random denoiser"),
    );
    let mut worst = 0.0f64;
    let seeds = 20u64;
    for k in 0..seeds {
        let mut cfg = RefinementConfig::defaults(Backend::Zeta, INSTRUMENT);
        cfg.target_prompt = cfg.source_prompt.clone();
        cfg.source_guidance_scale = cfg.guidance_scale;
        cfg.start_step = cfg.steps;
        cfg.seed = seed::derive_indexed(ROOT_SEED, "reconstruction", k);
        let z = Latent::<f32>::zeros(32, 64, 32, TOY_RATE).randn_like(&mut seed::rng(cfg.seed));
        let out = refine_zeta(&z, &cfg, &cfg.schedule().unwrap(), &model).unwrap();
        worst = worst.max(out.relative_l2(&z));
    }
    let elapsed = t.elapsed();
    outcome(
        worst <= 1e-4 && elapsed < Duration::from_secs(60),
        format!("worst relative L2 {worst:.2e} over {seeds} seeds (N = n = 200, s = 4), {elapsed:.1?}"),
    )
}

// ---------------------------------------------------------------- criterion 2

/// Two-sided Welch t-test p-value.
fn welch_p(a: &[f64], b: &[f64]) -> f64 {
    let stats = |v: &[f64]| {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (n, m, var)
    };
    let (na, ma, va) = stats(a);
    let (nb, mb, vb) = stats(b);
    let (sa, sb) = (va / na, vb / nb);
    if sa + sb == 0.0 {
        return if ma == mb { 1.0 } else { 0.0 };
    }
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    2.0 * (1.0 - StudentsT::new(0.0, 1.0, df).unwrap().cdf(t.abs()))
}

fn sdedit_identity(run: &ToyRun) -> Outcome {
    let codec = run.codec.as_ref();
    let scale = run.model.latent_scale();
    let mut cfg = RefinementConfig::defaults(Backend::Sdedit, INSTRUMENT);
    let schedule = cfg.schedule().unwrap();

    cfg.start_step = 0;
    let z = codec.encode(&run.concat[0]).unwrap().scaled(scale);
    let identity = refine_sdedit(&z, &cfg, &schedule, &run.model).unwrap() == z;

    cfg.start_step = cfg.steps;
    let cond = Denoiser::<f32>::vocabulary(&run.model).resolve(cfg.prompt.as_deref().unwrap());
    let guided = Guided::new(&run.model, cond, cfg.guidance_scale);
    let (mut edited, mut generated) = (Vec::new(), Vec::new());
    for (k, clip) in run.concat.iter().enumerate() {
        let z = codec.encode(clip).unwrap().scaled(scale);
        cfg.seed = seed::derive_indexed(ROOT_SEED, "sdedit full", k as u64);
        let out = refine_sdedit(&z, &cfg, &schedule, &run.model).unwrap();
        edited.push(embed_toy(&codec.decode(&out.scaled(1.0 / scale)).unwrap()).unwrap());

        let noise = z.randn_like(&mut seed::rng(seed::derive_indexed(ROOT_SEED, "generation", k as u64)));
        let start = noise.scaled(schedule.sigma_max() as f32);
        let out = sample_dpmpp2m(&start, schedule.steps(), &schedule, &guided).unwrap();
        generated.push(embed_toy(&codec.decode(&out.scaled(1.0 / scale)).unwrap()).unwrap());
    }
    let dims = edited[0].len();
    let min_p = (0..dims)
        .map(|d| {
            let a: Vec<f64> = edited.iter().map(|e| e[d]).collect();
            let b: Vec<f64> = generated.iter().map(|e| e[d]).collect();
            welch_p(&a, &b)
        })
        .fold(1.0, f64::min);
    let p = (min_p * dims as f64).min(1.0);
    outcome(
        identity && p > 0.01,
        format!(
            "n = 0 bit-exact: {identity}; n = N vs generation from noise: Bonferroni p = {p:.3} ({dims} Welch tests, {} clips each)",
            edited.len()
        ),
    )
}

// ---------------------------------------------------------------- criterion 3

fn schedule_and_forward_process() -> Outcome {
    let mut endpoints_ok = true;
    for (n, lo, hi) in [(250, 0.05, 16.0), (200, 0.3, 500.0), (2, 0.1, 1.0), (7, 0.002, 80.0), (1000, 0.02, 500.0)] {
        let s = build_schedule(n, lo, hi, 7.0).unwrap();
        endpoints_ok &= s.sigma(n) == hi && s.sigma(1) == lo && s.sigma(0) == 0.0;
    }
    let s = build_schedule(200, 0.3, 500.0, 7.0).unwrap();
    let i = 70;
    let z0 = Latent::<f64>::new(1, 2, 1, TOY_RATE, vec![0.6, -1.1]).unwrap();
    let mut rng = seed::rng(seed::derive(ROOT_SEED, "forward"));
    let draws = 100_000;
    let (mut sum, mut sum_sq) = ([0.0f64; 2], [0.0f64; 2]);
    for _ in 0..draws {
        let w = z0.randn_like(&mut rng);
        let x = forward_diffuse(&z0, i, &s, &w).unwrap();
        for k in 0..2 {
            sum[k] += x.values()[k];
            sum_sq[k] += x.values()[k].powi(2);
        }
    }
    let n = draws as f64;
    let var = s.sigma(i).powi(2);
    let mut worst_se = 0.0f64;
    for k in 0..2 {
        let mean = sum[k] / n;
        let sample_var = sum_sq[k] / n - mean * mean;
        worst_se = worst_se.max((mean - z0.values()[k]).abs() / (var / n).sqrt());
        worst_se = worst_se.max((sample_var - var).abs() / (var * (2.0 / n).sqrt()));
    }
    outcome(
        endpoints_ok && worst_se < 3.0,
        format!("endpoints exact: {endpoints_ok}; forward moments within {worst_se:.2} standard errors at 1e5 draws"),
    )
}

// ---------------------------------------------------------------- criterion 4

fn sampler_correctness(run: &ToyRun) -> Outcome {
    let model = &run.model;
    let cfg = RefinementConfig::defaults(Backend::Sdedit, INSTRUMENT);
    let cond = Denoiser::<f64>::vocabulary(model).resolve(cfg.prompt.as_deref().unwrap());
    let guided = Guided::new(model, cond, cfg.guidance_scale);
    let z = run.codec.encode(&run.concat[1]).unwrap().scaled(model.latent_scale()).frame_window(0, 200);
    let z: Latent<f64> = z.cast();
    let noise = z.randn_like(&mut seed::rng(seed::derive(ROOT_SEED, "convergence")));

    let table = cfg.schedule().unwrap();
    let near_clean = z.lincomb(1.0, &noise, table.sigma(1)).unwrap();
    let single = sample_dpmpp2m(&near_clean, 1, &table, &guided).unwrap();
    let single_exact = single == guided.predict(&near_clean, table.sigma(1)).unwrap();

    let start = z.lincomb(1.0, &noise, cfg.sigma_max).unwrap();
    let solve = |n: usize| {
        let s = build_schedule(n, cfg.sigma_min, cfg.sigma_max, cfg.rho).unwrap();
        sample_dpmpp2m(&start, n, &s, &guided).unwrap()
    };
    let reference = solve(640);
    let gaps: Vec<f64> = [2, 5, 10, 20, 40].iter().map(|&n| solve(n).sub(&reference).unwrap().norm()).collect();
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let shown: Vec<String> = gaps.iter().map(|g| format!("{g:.3}")).collect();
    outcome(
        single_exact && decreasing,
        format!(
            "single step equals prediction: {single_exact}; L2 gap to 640 steps for 2/5/10/20/40 steps: {}",
            shown.join(" > ")
        ),
    )
}

// ---------------------------------------------------------------- criterion 5

fn sampler_timing() -> Outcome {
    let lib = toy_library(&[INSTRUMENT.to_string()], 57, 76, TOY_RATE).unwrap();
    let opts = RenderOptions {
        out_rate: TOY_RATE,
        ..RenderOptions::default()
    };
    let note = NoteEvent {
        pitch: 69,
        velocity: 100,
        onset_s: 1.0,
        offset_s: 1.5,
        channel: 0,
    };
    let audio = render_track(&Score::from_notes(vec![note], 120.0).unwrap(), &lib, INSTRUMENT, &opts).unwrap();
    let first = audio.channel(0).iter().position(|v| *v != 0.0);
    let env = AdsrEnvelope::default();
    let g = env.gain_curve(0.5, TOY_RATE);
    let offset = 8000;
    let attack_ok = g[..80].windows(2).all(|w| w[1] > w[0]) && g[79] < 1.0 && g[80] == 1.0;
    let sustain_ok = g[80..offset].iter().all(|&v| v == 1.0);
    let release_ok = g.len() == offset + 3200 && g[offset] < 1.0 && g[offset..].windows(2).all(|w| w[1] < w[0]);
    outcome(
        first == Some(16_000) && attack_ok && sustain_ok && release_ok,
        format!(
            "first nonzero sample {first:?}; breakpoints 0/80/{offset}/{}: attack {attack_ok}, sustain {sustain_ok}, release {release_ok}",
            offset + 3200
        ),
    )
}

// ---------------------------------------------------------------- criterion 6

fn set(vectors: Vec<Vec<f64>>) -> EmbeddingSet {
    let dim = vectors[0].len();
    EmbeddingSet::new(dim, vectors, "acceptance").unwrap()
}

fn gauss(rng: &mut impl rand::Rng, shift: f64) -> Vec<Vec<f64>> {
    (0..100_000).map(|_| vec![shift + f64::standard_normal(rng)]).collect()
}

fn frechet_metric() -> Outcome {
    let mut rng = seed::rng(seed::derive(ROOT_SEED, "frechet"));
    let a = set(gauss(&mut rng, 0.0));
    let identical = frechet_distance(&a, &a).unwrap();
    let m = 1.5;
    let shifted = frechet_distance(&a, &set(gauss(&mut rng, m))).unwrap();
    let rel_shift = (shifted - m * m).abs() / (m * m);

    // Four points per set give diagonal covariances with variances (vx, vy).
    let diag = |mx: f64, my: f64, vx: f64, vy: f64| {
        let (kx, ky) = ((1.5 * vx).sqrt(), (1.5 * vy).sqrt());
        set(vec![vec![mx + kx, my], vec![mx - kx, my], vec![mx, my + ky], vec![mx, my - ky]])
    };
    let e = COVARIANCE_EPSILON;
    let closed = 1.0 + 4.0 + ((1.0 + e).sqrt() - (9.0 + e).sqrt()).powi(2) + ((4.0 + e).sqrt() - (0.25 + e).sqrt()).powi(2);
    let analytic = frechet_distance(&diag(0.0, 0.0, 1.0, 4.0), &diag(1.0, -2.0, 9.0, 0.25)).unwrap();
    let err = (analytic - closed).abs();
    outcome(
        identical.abs() <= 1e-6 && rel_shift <= 0.02 && err <= 1e-6,
        format!(
            "identical {identical:.1e}; mean shift {m}: {shifted:.4} vs {:.4} ({:.2}%); 2-D diagonal error {err:.1e}",
            m * m,
            100.0 * rel_shift
        ),
    )
}

// ---------------------------------------------------------------- criterion 7

fn micro_f1(scores: &[Score], audio: &[Waveform]) -> f64 {
    let (mut matched, mut refs, mut hyps) = (0usize, 0usize, 0usize);
    for (score, clip) in scores.iter().zip(audio) {
        let notes = transcribe_mono(clip);
        matched += note_f1(&score.notes(), &notes, 0.05).matched;
        refs += score.notes().len();
        hyps += notes.len();
    }
    let p = if hyps > 0 { matched as f64 / hyps as f64 } else { 0.0 };
    let r = if refs > 0 { matched as f64 / refs as f64 } else { 0.0 };
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

fn transcription_calibration() -> Outcome {
    let t = Instant::now();
    let lib = toy_library(&[INSTRUMENT.to_string()], 57, 76, TOY_RATE).unwrap();
    let (mut scores, mut audio) = (Vec::new(), Vec::new());
    for k in 0..50 {
        let mut rng = seed::rng(seed::derive_indexed(ROOT_SEED, "calibration", k));
        let score = random_score(&mut rng, 57, 76, 3.0);
        audio.push(render_synthetic(&score, &lib, INSTRUMENT, 48_000).unwrap());
        scores.push(score);
    }
    let f1 = micro_f1(&scores, &audio);
    let elapsed = t.elapsed();
    outcome(
        f1 >= 0.95 && elapsed < Duration::from_secs(120),
        format!("note F1 {f1:.3} on 50 rendered scores, {elapsed:.1?}"),
    )
}

// ------------------------------------------------------------ criteria 8 and 9

struct ToyRun {
    codec: std::sync::Arc<dyn Codec>,
    model: ToyDenoiser,
    train_time: Duration,
    final_loss: f64,
    concat: Vec<Waveform>,
    fad_r_concat: f64,
    f1_concat: f64,
    /// (backend, FAD_r, FAD_t, F1)
    refined: Vec<(Backend, f64, f64, f64)>,
}

fn toy_run() -> &'static ToyRun {
    static RUN: OnceLock<ToyRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let dir = tempfile::TempDir::new().unwrap();
        let spec = ToyCorpusSpec::default();
        make_toy_corpus(&spec, dir.path()).unwrap();
        let dataset = load_toy_dataset(dir.path()).unwrap();
        let codec = CodecRegistry::default().build("dct", refsynth::codec::DEFAULT_DOWNSAMPLE).unwrap();
        let config = TrainingConfig::default();
        let t = Instant::now();
        let (model, report) = train_toy_denoiser(&dataset, codec.as_ref(), &config.schedule().unwrap(), &config, None).unwrap();
        let train_time = t.elapsed();
        let smoothed = report.smoothed(200);

        let lib = toy_library(&spec.instruments, spec.pitch_low, spec.pitch_high, TOY_RATE).unwrap();
        let len = (spec.clip_seconds * TOY_RATE as f64) as usize;
        let (mut scores, mut concat, mut real) = (Vec::new(), Vec::new(), Vec::new());
        for k in 0..20 {
            let mut rng = seed::rng(seed::derive_indexed(ROOT_SEED, "test score", k));
            let score = random_score(&mut rng, spec.pitch_low, spec.pitch_high, spec.clip_seconds);
            concat.push(render_synthetic(&score, &lib, INSTRUMENT, len).unwrap());
            real.push(render_performed(&score, INSTRUMENT, &StyleParams::realistic(), &mut rng, len));
            scores.push(score);
        }
        let reference = embed_set(&real, "realistic").unwrap();
        let concat_set = embed_set(&concat, "concat").unwrap();
        let fad_r_concat = frechet_distance(&concat_set, &reference).unwrap();
        let f1_concat = micro_f1(&scores, &concat);

        let mut refined = Vec::new();
        for backend in [Backend::Sdedit, Backend::Zeta] {
            let base = RefinementConfig::defaults(backend, INSTRUMENT);
            let schedule = base.schedule().unwrap();
            let outputs: Vec<Waveform> = concat
                .iter()
                .enumerate()
                .map(|(k, clip)| {
                    let cfg = RefinementConfig {
                        seed: seed::derive_indexed(ROOT_SEED, backend.name(), k as u64),
                        ..base.clone()
                    };
                    refine_long(clip, &cfg, &schedule, &model, codec.as_ref()).unwrap()
                })
                .collect();
            let out_set = embed_set(&outputs, backend.name()).unwrap();
            refined.push((
                backend,
                frechet_distance(&out_set, &reference).unwrap(),
                frechet_distance(&out_set, &concat_set).unwrap(),
                micro_f1(&scores, &outputs),
            ));
        }
        ToyRun {
            codec,
            model,
            train_time,
            final_loss: *smoothed.last().unwrap(),
            concat,
            fad_r_concat,
            f1_concat,
            refined,
        }
    })
}

fn directional_reproduction(run: &ToyRun) -> Outcome {
    let realism = run.refined.iter().any(|r| r.1 <= 0.7 * run.fad_r_concat);
    let faithful = run.refined.iter().all(|r| r.3 >= 0.8 * run.f1_concat);
    let rows: Vec<String> = run
        .refined
        .iter()
        .map(|(b, fad_r, _, f1)| format!("{b} FAD_r {fad_r:.1} F1 {f1:.3}"))
        .collect();
    outcome(
        realism && faithful && run.train_time < Duration::from_secs(15 * 60),
        format!(
            "concat FAD_r {:.1} F1 {:.3}; {}; training {:.0?} (final loss {:.3})",
            run.fad_r_concat,
            run.f1_concat,
            rows.join("; "),
            run.train_time,
            run.final_loss
        ),
    )
}

fn timbre_preservation(run: &ToyRun) -> Outcome {
    let fad_t = |b: Backend| run.refined.iter().find(|r| r.0 == b).unwrap().2;
    let (zeta, sdedit) = (fad_t(Backend::Zeta), fad_t(Backend::Sdedit));
    outcome(zeta <= sdedit, format!("FAD_t zeta {zeta:.1} vs sdedit {sdedit:.1}"))
}

// --------------------------------------------------------------- criterion 10

fn gradient_check() -> Outcome {
    let cfg = NetConfig {
        channels: 6,
        hidden: 8,
        fourier: 3,
        vocab: 3,
    };
    let len = 13;
    let mut rng = seed::rng(seed::derive(ROOT_SEED, "gradient"));
    let p: Vec<f64> = (0..cfg.param_count()).map(|_| 0.3 * f64::standard_normal(&mut rng)).collect();
    let z0: Vec<f64> = (0..cfg.channels * len).map(|_| 0.5 * f64::standard_normal(&mut rng)).collect();
    let noise: Vec<f64> = (0..cfg.channels * len).map(|_| f64::standard_normal(&mut rng)).collect();
    let (sigma, sigma_data, cond) = (1.7, 0.8, 1);
    let (_, grad) = loss_and_grad(&cfg, &p, &z0, &noise, len, sigma, sigma_data, cond);
    let h = 1e-5;
    let (mut worst, mut checked) = (0.0f64, 0);
    for k in sample(&mut rng, p.len(), 160) {
        let (mut plus, mut minus) = (p.clone(), p.clone());
        plus[k] += h;
        minus[k] -= h;
        let numeric = (loss_and_grad(&cfg, &plus, &z0, &noise, len, sigma, sigma_data, cond).0
            - loss_and_grad(&cfg, &minus, &z0, &noise, len, sigma, sigma_data, cond).0)
            / (2.0 * h);
        let scale = grad[k].abs().max(numeric.abs());
        if scale > 0.0 {
            worst = worst.max((grad[k] - numeric).abs() / scale);
            checked += 1;
        }
    }
    outcome(
        checked >= 100 && worst <= 1e-4,
        format!("worst relative error {worst:.2e} over {checked} parameters"),
    )
}

// --------------------------------------------------------------- criterion 11

fn max_delta(x: &[f32]) -> f32 {
    x.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f32::max)
}

fn chunking(run: &ToyRun) -> Outcome {
    let lib = toy_library(&[INSTRUMENT.to_string()], 57, 76, TOY_RATE).unwrap();
    let len = 100 * TOY_RATE as usize;
    let score = random_score(&mut seed::rng(seed::derive(ROOT_SEED, "long")), 57, 76, 100.0);
    let input = render_synthetic(&score, &lib, INSTRUMENT, len).unwrap();
    let cfg = RefinementConfig {
        seed: seed::derive(ROOT_SEED, "long refinement"),
        ..RefinementConfig::defaults(Backend::Sdedit, INSTRUMENT)
    };
    let out = refine_long(&input, &cfg, &cfg.schedule().unwrap(), &run.model, run.codec.as_ref()).unwrap();
    let spans = chunk_spans(len, TOY_RATE, &cfg).unwrap();
    let x = out.channel(0);
    let mut worst_ratio = 0.0f32;
    for pair in spans.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        // Seam region: the overlap plus one sample on each side.
        let seam = max_delta(&x[b.start - 1..(a.end + 1).min(x.len())]);
        let own_a = max_delta(&x[a.start..b.start]);
        let next_end = spans.iter().find(|s| s.start > b.start).map_or(b.end, |s| s.start);
        let own_b = max_delta(&x[a.end..next_end]);
        worst_ratio = worst_ratio.max(seam / own_a.max(own_b));
    }
    outcome(
        out.len() == len && spans.len() >= 3 && worst_ratio <= 2.0,
        format!(
            "{} samples in, {} out, {} chunks; worst seam delta / chunk max delta = {worst_ratio:.3}",
            len,
            out.len(),
            spans.len()
        ),
    )
}

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: Vec<(u32, &str, Box<dyn Fn() -> Outcome>)> = vec![
        (1, "perfect reconstruction", Box::new(perfect_reconstruction)),
        (3, "schedule and forward process", Box::new(schedule_and_forward_process)),
        (5, "sampler timing", Box::new(sampler_timing)),
        (6, "Frechet metric", Box::new(frechet_metric)),
        (7, "transcription calibration", Box::new(transcription_calibration)),
        (10, "gradient check", Box::new(gradient_check)),
        (8, "directional reproduction", Box::new(|| directional_reproduction(toy_run()))),
        (9, "timbre preservation", Box::new(|| timbre_preservation(toy_run()))),
        (2, "SDEdit identity", Box::new(|| sdedit_identity(toy_run()))),
        (4, "sampler correctness", Box::new(|| sampler_correctness(toy_run()))),
        (11, "chunking", Box::new(|| chunking(toy_run()))),
    ];
    let mut failures = 0;
    for (n, name, check) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failures += 1;
        }
        println!(
            "criterion {n:>2} {} {name}: {} [{:.1?}]",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            t.elapsed()
        );
    }
    if failures > 0 {
        println!("{failures} criterion/criteria failed");
        std::process::exit(1);
    }
}
