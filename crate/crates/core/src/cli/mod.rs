//! The `kst` command line: synthesis, training, evaluation, streaming
//! estimation and self-checks.

mod config_file;
mod estimate;
mod manifest;
mod verify;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::info;

pub use config_file::RunConfig;
pub use estimate::{stream_estimates, StreamSummary};
pub use manifest::RunManifest;
pub use verify::{run_verify, CheckResult, Level, VerifyReport};

use crate::data::io::write_atomic;
use crate::data::{load_dir, make_window_samples, save_recording, InsertionRecording, NormalizationStats, WindowInput};
use crate::error::{Error, Result};
use crate::model::{load_checkpoint, save_checkpoint, MixerConfig, Model};
use crate::synth::{generate_suite, split_frames, PhantomSpec, Preset, SuiteSpec};
use crate::train::{
    evaluate_model, render_holdout, render_latency, render_loocv, run_loocv, time_estimates, train_with, FoldLatency,
    LatencyOptions, LatencyReport, LatencyStats, LoocvOptions,
};

#[derive(Debug, Parser)]
#[command(name = "kst", version, about = "Colon shape estimation from colonoscope tracking")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic phantom withdrawals.
    Synth(SynthArgs),
    /// Train a model on every recording in a directory.
    Train(TrainArgs),
    /// Evaluate a checkpoint, or cross-validate its configuration.
    Eval(EvalArgs),
    /// Stream scope frames (JSON lines on stdin) into shape estimates.
    Estimate(EstimateArgs),
    /// Run the built-in consistency checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub insertions: usize,
    /// Frames per insertion. Defaults to 1388 frames split across the suite.
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "default")]
    pub preset: Preset,
    /// Window length the recordings must support.
    #[arg(long, default_value_t = 18)]
    pub tau: usize,
    /// Write into a non-empty directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Flat TOML with model and training keys; unset keys take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides `seed` from the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `epochs` from the config file.
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Leave-one-insertion-out cross validation of the checkpoint's
    /// architecture instead of scoring its weights.
    #[arg(long)]
    pub loocv: bool,
    /// Training settings for `--loocv`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Train folds concurrently.
    #[arg(long)]
    pub parallel: bool,
    /// Directory for report and latency files.
    #[arg(long, default_value = "eval")]
    pub out: PathBuf,
    /// Timed single estimates per measurement (0 skips latency).
    #[arg(long, default_value_t = 200)]
    pub latency_reps: usize,
    #[arg(long, default_value_t = 100)]
    pub latency_warmup: usize,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value = "quick")]
    pub level: Level,
    /// Negate the analytic gradient of this tensor.
    #[arg(long, hide = true)]
    pub inject_fault: Option<String>,
}

/// Runs a parsed command line, returning the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Synth(a) => cmd_synth(&a).map(|_| 0),
        Command::Train(a) => cmd_train(&a).map(|_| 0),
        Command::Eval(a) => cmd_eval(&a).map(|text| {
            print!("{text}");
            0
        }),
        Command::Estimate(a) => cmd_estimate(&a).map(|_| 0),
        Command::Verify(a) => {
            let report = run_verify(a.level, a.inject_fault.as_deref());
            print!("{report}");
            Ok(if report.passed() { 0 } else { 1 })
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// `<stem>.<suffix>` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn cmd_synth(a: &SynthArgs) -> Result<Vec<PathBuf>> {
    let started = Instant::now();
    if a.out.exists() && fs::read_dir(&a.out)?.next().is_some() && !a.force {
        return Err(Error::Config(format!(
            "{} is not empty (pass --force to write into it)",
            a.out.display()
        )));
    }
    fs::create_dir_all(&a.out)?;
    let frames = match a.frames {
        Some(n) => vec![n; a.insertions],
        None => split_frames(1388, a.insertions),
    };
    let suite = SuiteSpec {
        count: a.insertions,
        frames,
        ..SuiteSpec::paper_scale(PhantomSpec::preset(a.preset), a.seed)
    };
    let recordings = generate_suite(&suite, a.tau)?;
    let mut outputs = Vec::new();
    for rec in &recordings {
        let path = a.out.join(format!("{}.jsonl", rec.id));
        save_recording(rec, &path)?;
        outputs.push(path);
    }
    let mut manifest = RunManifest::new("synth");
    manifest.config = serde_json::to_value(&suite)?;
    manifest.seeds = vec![a.seed];
    manifest.outputs = outputs.clone();
    manifest.write(&a.out.join("manifest.json"), started)?;
    info!("wrote {} recordings to {}", recordings.len(), a.out.display());
    Ok(outputs)
}

fn load_config(path: Option<&Path>, seed: Option<u64>, epochs: Option<usize>) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.train.seed = s;
    }
    if let Some(e) = epochs {
        cfg.train.epochs = e;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn check_dims(cfg: &MixerConfig, recordings: &[InsertionRecording]) -> Result<()> {
    for rec in recordings {
        let (scope, colon) = &rec.frames[0];
        if scope.sensors() != cfg.sensors || colon.markers.len() != cfg.markers {
            return Err(Error::Config(format!(
                "{}: {} sensors and {} markers, model expects {} and {}",
                rec.id,
                scope.sensors(),
                colon.markers.len(),
                cfg.sensors,
                cfg.markers
            )));
        }
    }
    Ok(())
}

fn load_data(dir: &Path, cfg: &MixerConfig) -> Result<Vec<InsertionRecording>> {
    let recordings = load_dir(dir)?;
    if recordings.is_empty() {
        return Err(Error::Config(format!("{}: no .jsonl recordings", dir.display())));
    }
    check_dims(cfg, &recordings)?;
    Ok(recordings)
}

pub fn cmd_train(a: &TrainArgs) -> Result<Model> {
    let started = Instant::now();
    let cfg = load_config(a.config.as_deref(), a.seed, a.epochs)?;
    let recordings = load_data(&a.data, &cfg.model)?;
    let stats = NormalizationStats::from_recordings(&recordings)?;
    let mut samples = Vec::new();
    for rec in &recordings {
        samples.extend(make_window_samples(rec, cfg.model.window_spec(), &stats)?.samples);
    }
    info!(
        "training on {} windows from {} recordings",
        samples.len(),
        recordings.len()
    );
    let outcome = train_with(&samples, &cfg.model, &cfg.train, |e| {
        info!("epoch {}: loss {:.6}", e.epoch + 1, e.loss);
        std::ops::ControlFlow::Continue(())
    })?;
    let mut csv = String::from("epoch,loss\n");
    for (i, l) in outcome.loss_curve.iter().enumerate() {
        csv.push_str(&format!("{},{l:e}\n", i + 1));
    }
    let model = Model {
        config: cfg.model.clone(),
        params: outcome.params,
        stats,
    };
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    save_checkpoint(&model, &a.out)?;
    let loss_path = sibling(&a.out, "loss.csv");
    write_text(&loss_path, &csv)?;

    let mut manifest = RunManifest::new("train");
    manifest.config = serde_json::json!({ "model": cfg.model, "train": cfg.train });
    manifest.seeds = vec![cfg.train.seed];
    manifest.inputs = vec![a.data.clone()];
    manifest.outputs = vec![a.out.clone(), loss_path];
    manifest.write(&sibling(&a.out, "manifest.json"), started)?;
    Ok(model)
}

fn latency_options(a: &EvalArgs) -> Option<LatencyOptions> {
    (a.latency_reps > 0).then_some(LatencyOptions {
        warmup: a.latency_warmup,
        reps: a.latency_reps,
    })
}

/// Writes the report files and returns the rendered tables.
pub fn cmd_eval(a: &EvalArgs) -> Result<String> {
    let started = Instant::now();
    let checkpoint = load_checkpoint(&a.model)?;
    let recordings = load_data(&a.data, &checkpoint.config)?;
    fs::create_dir_all(&a.out)?;
    let mut manifest = RunManifest::new("eval");
    manifest.inputs = vec![a.model.clone(), a.data.clone()];

    let mut text;
    let latency = if a.loocv {
        let cfg = load_config(a.config.as_deref(), a.seed, a.epochs)?;
        let opts = LoocvOptions {
            parallel: a.parallel,
            latency: latency_options(a),
        };
        let run = run_loocv(&recordings, &checkpoint.config, &cfg.train, &opts)?;
        write_json(&a.out.join("report.json"), &run.report)?;
        text = render_loocv(&run.report);
        write_text(&a.out.join("report.txt"), &text)?;
        manifest.config = serde_json::json!({ "model": checkpoint.config, "train": cfg.train });
        manifest.seeds = run.report.folds.iter().map(|f| f.seed).collect();
        run.latency
    } else {
        let report = evaluate_model(&checkpoint, &recordings)?;
        write_json(&a.out.join("report.json"), &report)?;
        text = render_holdout(&report);
        write_text(&a.out.join("report.txt"), &text)?;
        manifest.config = serde_json::json!({ "model": checkpoint.config });
        match latency_options(a) {
            Some(lo) => Some(checkpoint_latency(&checkpoint, &recordings, lo)?),
            None => None,
        }
    };
    manifest.outputs = vec![a.out.join("report.json"), a.out.join("report.txt")];
    if let Some(lat) = latency {
        write_json(&a.out.join("latency.json"), &lat)?;
        let rendered = render_latency(&lat);
        write_text(&a.out.join("latency.txt"), &rendered)?;
        text.push('\n');
        text.push_str(&rendered);
        manifest.outputs.push(a.out.join("latency.json"));
        manifest.outputs.push(a.out.join("latency.txt"));
    }
    manifest.write(&a.out.join("manifest.json"), started)?;
    Ok(text)
}

fn checkpoint_latency(model: &Model, recordings: &[InsertionRecording], opts: LatencyOptions) -> Result<LatencyReport> {
    let mut folds = Vec::new();
    let mut pooled = Vec::new();
    for (k, rec) in recordings
        .iter()
        .enumerate()
        .filter(|(_, r)| r.len() >= model.config.tau)
    {
        let inputs: Vec<WindowInput> = make_window_samples(rec, model.config.window_spec(), &model.stats)?
            .samples
            .into_iter()
            .map(|s| WindowInput {
                t_c: s.t_c,
                patches: s.patches,
                lengths: s.lengths,
                clamped: 0,
            })
            .collect();
        let ms = time_estimates(model, &inputs, opts)?;
        pooled.extend_from_slice(&ms);
        folds.push(FoldLatency {
            fold: k,
            stats: LatencyStats::from_samples(ms)?,
        });
    }
    Ok(LatencyReport {
        folds,
        overall: LatencyStats::from_samples(pooled)?,
    })
}

pub fn cmd_estimate(a: &EstimateArgs) -> Result<StreamSummary> {
    let model = load_checkpoint(&a.model)?;
    let stdin = io::stdin();
    let stdout = io::stdout();
    let summary = stream_estimates(&model, stdin.lock(), stdout.lock(), io::stderr())?;
    io::stdout().flush()?;
    info!(
        "{} frames, {} estimates, {} rejected lines",
        summary.frames, summary.estimates, summary.errors
    );
    Ok(summary)
}
