//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.
//!
//! Set `KST_PAPER_LOOCV=1` to also cross-validate the C = 64, b = 7 network
//! (about 1.5 h on one core).

use std::fs;
use std::ops::ControlFlow;
use std::path::Path;
use std::time::Instant;

use kst_mixer::cli::{cmd_eval, cmd_synth, cmd_train, EvalArgs, SynthArgs, TrainArgs};
use kst_mixer::data::{
    extract_patches, make_window_samples, window_input, ColonFrame, ColonoscopeFrame, NormalizationStats, WindowInput,
    WindowSample,
};
use kst_mixer::model::{model_grad_check, MixerConfig, Model, ModelParams};
use kst_mixer::nn::{GradCheckOptions, Mode, Parameters, Tensor2D};
use kst_mixer::synth::{generate_suite, PhantomSpec, Preset, SuiteSpec};
use kst_mixer::train::{
    evaluate_mse, measure_latency, med, paired_t_test, run_loocv, train_with, LatencyOptions, LoocvOptions, TrainConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRAD_TOL: f64 = 1e-4;
const GRAD_SEEDS: u64 = 5;
const GRAD_LIMIT_S: f64 = 120.0;
const OVERFIT_MSE: f64 = 1e-4;
const OVERFIT_STEPS: u64 = 2000;
const OVERFIT_LIMIT_S: f64 = 300.0;
const LOOCV_GAIN: f64 = 0.30;
const LOOCV_LIMIT_S: f64 = 7200.0;
const LATENCY_MEDIAN_MS: f64 = 50.0;
const LATENCY_SPREAD: f64 = 3.0;
const IDENTITY_TOL: f64 = 1e-12;
const ORACLE_TOL: f64 = 1e-12;
const ORACLE_CASES: usize = 100;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn suite() -> Vec<kst_mixer::data::InsertionRecording> {
    generate_suite(&SuiteSpec::paper_scale(PhantomSpec::default(), 0), 18).expect("suite")
}

fn gradient_fidelity() -> Outcome {
    let cfg = MixerConfig::tiny();
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for seed in 0..GRAD_SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = ModelParams::init(&cfg, &mut rng);
        let patches = Tensor2D::from_fn(cfg.tokens(), cfg.patch_len(), |_, _| rng.gen());
        let lengths = Tensor2D::from_fn(1, cfg.tau, |_, _| rng.gen());
        let targets = Tensor2D::from_fn(1, cfg.output_dim(), |_, _| rng.gen());
        let r = model_grad_check(
            &cfg,
            &params,
            &patches,
            &lengths,
            &targets,
            GradCheckOptions::with_tolerance(GRAD_TOL),
            None,
        )
        .map_err(fail)?;
        worst = worst.max(r.max_rel_error);
        checked += r.checked;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        worst < GRAD_TOL && secs < GRAD_LIMIT_S,
        format!(
            "tiny config, {GRAD_SEEDS} seeds, {checked} gradients: max relative error {worst:.2e} (< {GRAD_TOL:.0e}), {secs:.1} s (< {GRAD_LIMIT_S} s)"
        ),
    )
}

fn paper_shapes() -> Outcome {
    let cfg = MixerConfig::default();
    let recs = suite();
    let stats = NormalizationStats::from_recordings(&recs[1..]).map_err(fail)?;
    let window: Vec<&ColonoscopeFrame> = recs[0].scope_frames().take(cfg.tau).collect();
    let input = window_input(&window, cfg.window_spec(), &stats).map_err(fail)?;
    let model = Model {
        params: ModelParams::init(&cfg, &mut ChaCha8Rng::seed_from_u64(0)),
        config: cfg.clone(),
        stats,
    };
    let xi = model.params.embed_patches(&input.patches).map_err(fail)?;
    let raw = model
        .params
        .predict(&cfg, &input.patches, &input.lengths)
        .map_err(fail)?;
    let shape = model.estimate_input(&input).map_err(fail)?;
    let s = cfg.patches();
    ensure(
        s == 18
            && input.patches.rows() == 36
            && (xi.rows(), xi.cols()) == (36, cfg.hidden_dim)
            && raw.len() == 36
            && shape.markers.len() == 12,
        format!(
            "S = {s}, Ξ {}×{} (C = {}), output {} values = {} points",
            xi.rows(),
            xi.cols(),
            cfg.hidden_dim,
            raw.len(),
            shape.markers.len()
        ),
    )
}

fn residual_identity() -> Outcome {
    let cfg = MixerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut params = ModelParams::init(&cfg, &mut rng);
    for (name, t) in params.named_tensors_mut() {
        if name.starts_with("blocks.") && name.contains(".fc") {
            t.fill(0.0);
        }
    }
    let batch = 2;
    let input = Tensor2D::from_fn(batch * cfg.tokens(), cfg.hidden_dim, |_, _| rng.gen_range(-3.0..3.0));
    let mut x = input.clone();
    let mut no_draws = rand::rngs::mock::StepRng::new(0, 0);
    for block in &params.blocks {
        x = block
            .forward(&x, batch, cfg.d1, Mode::Infer, &mut no_draws)
            .map_err(fail)?
            .0;
    }
    let diff = x
        .data()
        .iter()
        .zip(input.data())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure(
        diff < IDENTITY_TOL,
        format!(
            "{} zero-weight blocks, max |out − in| = {diff:.1e} (< {IDENTITY_TOL:.0e})",
            cfg.blocks
        ),
    )
}

fn overfit() -> Outcome {
    let cfg = MixerConfig {
        d1: 0.0,
        d2: 0.0,
        ..MixerConfig::default()
    };
    let recs = suite();
    let stats = NormalizationStats::from_recordings(&recs).map_err(fail)?;
    let samples: Vec<WindowSample> = make_window_samples(&recs[0], cfg.window_spec(), &stats)
        .map_err(fail)?
        .samples
        .into_iter()
        .step_by(2)
        .take(64)
        .collect();
    let tc = TrainConfig {
        minibatch: samples.len(),
        epochs: OVERFIT_STEPS as usize,
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let mut reached: Option<(u64, f64)> = None;
    train_with(&samples, &cfg, &tc, |e| {
        if (e.epoch + 1) % 10 != 0 {
            return ControlFlow::Continue(());
        }
        match evaluate_mse(e.params, &cfg, &samples) {
            Ok(mse) if mse < OVERFIT_MSE => {
                reached = Some((e.steps, mse));
                ControlFlow::Break(())
            }
            _ => ControlFlow::Continue(()),
        }
    })
    .map_err(fail)?;
    let secs = start.elapsed().as_secs_f64();
    match reached {
        Some((steps, mse)) => ensure(
            secs < OVERFIT_LIMIT_S,
            format!(
                "{} samples, paper network without dropout: MSE {mse:.2e} after {steps} steps (< {OVERFIT_MSE:.0e} within {OVERFIT_STEPS}), {secs:.0} s (< {OVERFIT_LIMIT_S} s)",
                samples.len()
            ),
        ),
        None => Err(format!("MSE still ≥ {OVERFIT_MSE:.0e} after {OVERFIT_STEPS} steps ({secs:.0} s)")),
    }
}

fn learning_signal(cfg: &MixerConfig, label: &str) -> Outcome {
    let recs = suite();
    let frames: usize = recs.iter().map(|r| r.len()).sum();
    let start = Instant::now();
    let run = run_loocv(&recs, cfg, &TrainConfig::default(), &LoocvOptions::default()).map_err(fail)?;
    let secs = start.elapsed().as_secs_f64();
    let folds = &run.report.folds;
    let gains: Vec<String> = folds
        .iter()
        .map(|f| format!("{:.1}/{:.1}", f.med, f.baseline_med))
        .collect();
    let worst = folds
        .iter()
        .map(|f| 1.0 - f.med / f.baseline_med)
        .fold(f64::INFINITY, f64::min);
    ensure(
        worst >= LOOCV_GAIN && secs < LOOCV_LIMIT_S,
        format!(
            "{label}, {} recordings / {frames} frames, 200 epochs: MED {} mm vs mean shape {} mm, smallest gain {:.0}% (≥ {:.0}%), fold MED/baseline mm [{}], {:.0} s (< {LOOCV_LIMIT_S} s)",
            recs.len(),
            run.report.model,
            run.report.baseline,
            100.0 * worst,
            100.0 * LOOCV_GAIN,
            gains.join(", "),
            secs
        ),
    )
}

fn inputs(cfg: &MixerConfig, stats: &NormalizationStats) -> Vec<WindowInput> {
    let recs = suite();
    make_window_samples(&recs[0], cfg.window_spec(), stats)
        .expect("windows")
        .samples
        .into_iter()
        .map(|s| WindowInput {
            t_c: s.t_c,
            patches: s.patches,
            lengths: s.lengths,
            clamped: 0,
        })
        .collect()
}

fn latency() -> Outcome {
    let recs = suite();
    let stats = NormalizationStats::from_recordings(&recs).map_err(fail)?;
    let mut measured = Vec::new();
    for cfg in [MixerConfig::default(), MixerConfig::tiny()] {
        let model = Model {
            params: ModelParams::init(&cfg, &mut ChaCha8Rng::seed_from_u64(0)),
            config: cfg.clone(),
            stats: stats.clone(),
        };
        measured.push(measure_latency(&model, &inputs(&cfg, &stats), LatencyOptions::default()).map_err(fail)?);
    }
    let (paper, tiny) = (&measured[0], &measured[1]);
    let spread = paper.p95_ms / paper.median_ms;
    ensure(
        paper.median_ms <= LATENCY_MEDIAN_MS && spread < LATENCY_SPREAD && tiny.median_ms < paper.median_ms,
        format!(
            "paper config, one thread: median {:.2} ms (≤ {LATENCY_MEDIAN_MS} ms), p95 {:.2} ms (p95/median {spread:.2} < {LATENCY_SPREAD}), tiny config median {:.2} ms",
            paper.median_ms, paper.p95_ms, tiny.median_ms
        ),
    )
}

fn pipeline(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let data = dir.join("data");
    cmd_synth(&SynthArgs {
        out: data.clone(),
        insertions: 3,
        frames: Some(30),
        seed: 11,
        preset: Preset::Default,
        tau: 18,
        force: false,
    })
    .map_err(fail)?;
    let config = dir.join("run.toml");
    fs::write(&config, "hidden_dim = 8\nblocks = 2\nepochs = 3\nminibatch = 8\n").map_err(fail)?;
    let ckpt = dir.join("model.kst");
    cmd_train(&TrainArgs {
        data: data.clone(),
        config: Some(config.clone()),
        out: ckpt.clone(),
        seed: Some(21),
        epochs: None,
    })
    .map_err(fail)?;
    let eval = |out: &str, loocv: bool| EvalArgs {
        model: ckpt.clone(),
        data: data.clone(),
        loocv,
        config: Some(config.clone()),
        seed: Some(21),
        epochs: None,
        parallel: loocv,
        out: dir.join(out),
        latency_reps: 5,
        latency_warmup: 1,
    };
    cmd_eval(&eval("holdout", false)).map_err(fail)?;
    cmd_eval(&eval("loocv", true)).map_err(fail)?;
    let mut files = Vec::new();
    for name in [
        "data/insertion-01.jsonl",
        "data/insertion-03.jsonl",
        "model.kst",
        "model.loss.csv",
        "holdout/report.json",
        "holdout/report.txt",
        "loocv/report.json",
        "loocv/report.txt",
    ] {
        files.push((name.to_string(), fs::read(dir.join(name)).map_err(fail)?));
    }
    Ok(files)
}

fn determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().map_err(fail)?, tempfile::tempdir().map_err(fail)?);
    let first = pipeline(a.path())?;
    let second = pipeline(b.path())?;
    let differing: Vec<&str> = first
        .iter()
        .zip(&second)
        .filter(|(x, y)| x.1 != y.1)
        .map(|(x, _)| x.0.as_str())
        .collect();
    ensure(
        differing.is_empty(),
        if differing.is_empty() {
            format!(
                "synth → train → eval → eval --loocv twice: {} artifacts bitwise identical",
                first.len()
            )
        } else {
            format!("differing artifacts: {}", differing.join(", "))
        },
    )
}

fn frames(rng: &mut ChaCha8Rng, n: usize) -> Vec<ColonFrame> {
    (0..n)
        .map(|t| ColonFrame {
            t,
            markers: (0..12)
                .map(|_| {
                    [
                        rng.gen_range(-300.0..300.0),
                        rng.gen_range(-300.0..300.0),
                        rng.gen_range(-300.0..300.0),
                    ]
                })
                .collect(),
        })
        .collect()
}

/// Two-sided Student-t tail probability in closed form for 1 to 4 degrees
/// of freedom.
fn t_two_sided(t: f64, df: usize) -> f64 {
    let t = t.abs();
    let pi = std::f64::consts::PI;
    match df {
        1 => 1.0 - 2.0 / pi * t.atan(),
        2 => 1.0 - t / (t * t + 2.0).sqrt(),
        3 => {
            let x = t / 3f64.sqrt();
            1.0 - 2.0 / pi * (x.atan() + x / (1.0 + x * x))
        }
        4 => 1.0 - t * (t * t + 6.0) / (t * t + 4.0).powf(1.5),
        _ => unreachable!(),
    }
}

fn oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut med_err, mut mm_err, mut patch_err, mut t_err, mut p_err) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..ORACLE_CASES {
        let n = rng.gen_range(1..30);
        let (est, truth) = (frames(&mut rng, n), frames(&mut rng, n));
        let mut total = 0.0;
        for t in 0..n {
            for m in 0..12 {
                let (a, b) = (est[t].markers[m], truth[t].markers[m]);
                total += ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
            }
        }
        let got = med(&est, &truth).map_err(fail)?.med;
        med_err = med_err.max((got - total / (12 * n) as f64).abs());
    }
    for _ in 0..ORACLE_CASES {
        let (m, k, n) = (rng.gen_range(1..40), rng.gen_range(1..40), rng.gen_range(1..40));
        let a = Tensor2D::from_fn(m, k, |_, _| rng.gen_range(-1.0..1.0));
        let b = Tensor2D::from_fn(k, n, |_, _| rng.gen_range(-1.0..1.0));
        let c = a.matmul(&b).map_err(fail)?;
        for i in 0..m {
            for j in 0..n {
                let mut s = 0.0;
                for l in 0..k {
                    s += a.get(i, l) * b.get(l, j);
                }
                mm_err = mm_err.max((c.get(i, j) - s).abs());
            }
        }
    }
    for _ in 0..ORACLE_CASES {
        let (s1, s2) = (rng.gen_range(1..7), rng.gen_range(1..7));
        let (gr, gc) = (rng.gen_range(1..7), rng.gen_range(1..7));
        let mtx = Tensor2D::from_fn(gr * s1, gc * s2, |_, _| rng.gen_range(-500.0..500.0));
        let p = extract_patches(&mtx, s1, s2).map_err(fail)?;
        for gi in 0..gr {
            for gj in 0..gc {
                for i in 0..s1 {
                    for j in 0..s2 {
                        let d = (p.get(gi * gc + gj, i * s2 + j) - mtx.get(gi * s1 + i, gj * s2 + j)).abs();
                        patch_err = patch_err.max(d);
                    }
                }
            }
        }
    }
    for _ in 0..ORACLE_CASES {
        let n = rng.gen_range(2..6);
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(5.0..20.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(5.0..20.0)).collect();
        let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let mut sum = 0.0;
        for v in &d {
            sum += v;
        }
        let mean = sum / n as f64;
        let mut ss = 0.0;
        for v in &d {
            ss += (v - mean) * (v - mean);
        }
        let t = mean / ((ss / (n - 1) as f64).sqrt() / (n as f64).sqrt());
        let r = paired_t_test(&a, &b).map_err(fail)?;
        t_err = t_err.max((r.t - t).abs() / t.abs().max(1.0));
        p_err = p_err.max((r.p - t_two_sided(t, n - 1)).abs());
    }
    let worst = med_err.max(mm_err).max(patch_err).max(t_err).max(p_err);
    ensure(
        worst <= ORACLE_TOL,
        format!(
            "{ORACLE_CASES} cases each, max deviation: MED {med_err:.1e}, matmul {mm_err:.1e}, patches {patch_err:.1e}, t {t_err:.1e}, p {p_err:.1e} (≤ {ORACLE_TOL:.0e})"
        ),
    )
}

fn main() {
    let mut criteria: Vec<(&str, &str, Box<dyn Fn() -> Outcome>)> = vec![
        ("1", "gradient fidelity", Box::new(gradient_fidelity)),
        ("2", "paper configuration shapes", Box::new(paper_shapes)),
        ("3", "residual identity", Box::new(residual_identity)),
        ("4", "overfit sanity", Box::new(overfit)),
        (
            "5",
            "end-to-end learning signal",
            Box::new(|| learning_signal(&MixerConfig::tiny(), "C = 8, b = 2, d1 = 0.1, d2 = 0.3")),
        ),
        ("6", "latency", Box::new(latency)),
        ("7", "determinism", Box::new(determinism)),
        ("8", "oracle equivalence", Box::new(oracles)),
    ];
    if std::env::var_os("KST_PAPER_LOOCV").is_some() {
        criteria.push((
            "5b",
            "end-to-end learning signal, paper network",
            Box::new(|| learning_signal(&MixerConfig::default(), "C = 64, b = 7, d1 = 0.1, d2 = 0.3")),
        ));
    }
    let mut failed = 0;
    for (id, name, check) in &criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{id}] {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{id}] {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
