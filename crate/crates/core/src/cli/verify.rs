use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::{assemble_patches, distance, extract_patches, loocv_split, make_window_samples, ColonFrame};
use crate::error::{Error, Result};
use crate::model::{encode_checkpoint, model_grad_check, MixerConfig, Model, ModelParams};
use crate::nn::{GradCheckOptions, Tensor2D};
use crate::synth::{generate_suite, PhantomSpec, SuiteSpec};
use crate::train::{med, paired_t_test, train, TrainConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            other => Err(Error::Config(format!(
                "unknown level {other:?} (expected quick or full)"
            ))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{tag} {:<28} {:>7.2}s  {}", c.name, c.seconds, c.detail)?;
        }
        Ok(())
    }
}

/// Narrow enough to check every parameter in a few seconds.
fn quick_config() -> MixerConfig {
    MixerConfig {
        hidden_dim: 4,
        blocks: 1,
        h_s: 8,
        h_c: 8,
        length_features: 4,
        head_hidden: [16, 8],
        ..MixerConfig::tiny()
    }
}

fn grad_check(cfg: &MixerConfig, seeds: u64, fault: Option<&str>) -> Result<String> {
    let mut worst = 0.0f64;
    let mut checked = 0;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = ModelParams::init(cfg, &mut rng);
        let patches = Tensor2D::from_fn(2 * cfg.tokens(), cfg.patch_len(), |_, _| rng.gen());
        let lengths = Tensor2D::from_fn(2, cfg.tau, |_, _| rng.gen());
        let targets = Tensor2D::from_fn(2, cfg.output_dim(), |_, _| rng.gen());
        let report = model_grad_check(
            cfg,
            &params,
            &patches,
            &lengths,
            &targets,
            GradCheckOptions::with_tolerance(1e-4),
            fault,
        )?;
        worst = worst.max(report.max_rel_error);
        checked += report.checked;
    }
    Ok(format!(
        "{checked} parameters over {seeds} seed(s), max relative error {worst:.2e}"
    ))
}

fn patch_round_trip() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let (s1, s2) = (rng.gen_range(1..5), rng.gen_range(1..5));
        let (rows, cols) = (s1 * rng.gen_range(1..5), s2 * rng.gen_range(1..5));
        let m = Tensor2D::from_fn(rows, cols, |_, _| rng.gen_range(-1e3..1e3));
        let back = assemble_patches(&extract_patches(&m, s1, s2)?, rows, cols, s1, s2)?;
        if back != m {
            return Err(Error::contract(format!(
                "{rows}×{cols} matrix with {s1}×{s2} patches did not round-trip"
            )));
        }
    }
    Ok("20 random matrices round-trip exactly".into())
}

fn med_oracle() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut frame = |t| ColonFrame {
        t,
        markers: (0..12)
            .map(|_| {
                [
                    rng.gen_range(-200.0..200.0),
                    rng.gen_range(-200.0..200.0),
                    rng.gen_range(-200.0..200.0),
                ]
            })
            .collect(),
    };
    let est: Vec<ColonFrame> = (0..30).map(&mut frame).collect();
    let truth: Vec<ColonFrame> = (0..30).map(&mut frame).collect();
    let mut sum = 0.0;
    for (a, b) in est.iter().zip(&truth) {
        for (p, q) in a.markers.iter().zip(&b.markers) {
            sum += distance(*p, *q);
        }
    }
    let naive = sum / (12.0 * 30.0);
    let got = med(&est, &truth)?.med;
    if (got - naive).abs() > 1e-12 {
        return Err(Error::contract(format!("MED {got} differs from loop {naive}")));
    }
    Ok(format!("MED {got:.6} mm matches the double loop"))
}

fn t_test_closed_form() -> Result<String> {
    let r = paired_t_test(&[1.0, 2.0, 3.0], &[0.0; 3])?;
    let expected = 2.0 / (1.0 / 3f64.sqrt());
    if (r.t - expected).abs() > 1e-12 || r.df != 2 {
        return Err(Error::contract(format!(
            "t = {} (df {}), expected {expected} (df 2)",
            r.t, r.df
        )));
    }
    Ok(format!("t = {:.4}, df = 2, p = {:.4}", r.t, r.p))
}

fn determinism() -> Result<String> {
    let cfg = quick_config();
    let mut suite = SuiteSpec::paper_scale(PhantomSpec::default(), 3);
    suite.count = 2;
    suite.frames = vec![30, 30];
    let recs = generate_suite(&suite, cfg.tau)?;
    let fold = &loocv_split(&recs)?[0];
    let stats = fold.stats()?;
    let samples = make_window_samples(fold.train[0], cfg.window_spec(), &stats)?.samples;
    let tc = TrainConfig {
        epochs: 2,
        minibatch: 5,
        seed: 5,
        ..TrainConfig::default()
    };
    let run = || -> Result<Vec<u8>> {
        let model = Model {
            config: cfg.clone(),
            params: train(&samples, &cfg, &tc)?.params,
            stats: stats.clone(),
        };
        let first = model.estimate(&samples[0])?;
        if model.estimate(&samples[0])? != first {
            return Err(Error::contract("repeated inference differs"));
        }
        encode_checkpoint(&model)
    };
    let (a, b) = (run()?, run()?);
    if a != b {
        return Err(Error::contract(
            "two training runs with one seed produced different checkpoints",
        ));
    }
    Ok(format!("{} checkpoint bytes identical across runs", a.len()))
}

/// Runs the self-checks. `fault` negates the analytic gradient of one named
/// tensor to show the gradient check catches it.
pub fn run_verify(level: Level, fault: Option<&str>) -> VerifyReport {
    let mut checks: Vec<(&str, Box<dyn Fn() -> Result<String> + '_>)> = vec![
        (
            "gradient (small config)",
            Box::new(|| grad_check(&quick_config(), 1, fault)),
        ),
        ("patch round trip", Box::new(patch_round_trip)),
        ("MED oracle", Box::new(med_oracle)),
        ("paired t-test", Box::new(t_test_closed_form)),
        ("determinism", Box::new(determinism)),
    ];
    if level == Level::Full {
        checks.push((
            "gradient (tiny config)",
            Box::new(|| grad_check(&MixerConfig::tiny(), 5, fault)),
        ));
    }
    let checks = checks
        .into_iter()
        .map(|(name, check)| {
            let start = Instant::now();
            let outcome = check();
            let seconds = start.elapsed().as_secs_f64();
            let (passed, detail) = match outcome {
                Ok(d) => (true, d),
                Err(e) => (false, e.to_string()),
            };
            CheckResult {
                name: name.to_string(),
                passed,
                detail,
                seconds,
            }
        })
        .collect();
    VerifyReport { checks }
}
