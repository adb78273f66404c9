use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{
    loocv_split, make_window_samples, ColonFrame, Fold, InsertionRecording, NormalizationStats, Vec3, WindowSample,
};
use crate::error::{Error, Result};
use crate::model::{MixerConfig, Model};
use crate::train::eval::estimate_samples;
use crate::train::latency::{LatencyOptions, LatencyStats};
use crate::train::{med, paired_t_test, train, Summary, TTest, TrainConfig};

#[derive(Clone, Debug, Default)]
pub struct LoocvOptions {
    /// Train folds concurrently on the rayon pool.
    pub parallel: bool,
    /// Time single estimates on each held-out recording once all folds are
    /// trained.
    pub latency: Option<LatencyOptions>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub test_recording: String,
    pub train_recordings: Vec<String>,
    pub train_samples: usize,
    pub test_samples: usize,
    /// SHA-256 of the fold's normalization statistics (JSON).
    pub stats_sha256: String,
    pub clamped_inputs: usize,
    pub seed: u64,
    pub loss_curve: Vec<f64>,
    pub t_c: Vec<usize>,
    pub per_frame_med: Vec<f64>,
    pub per_marker_med: Vec<f64>,
    pub med: f64,
    /// MED of always predicting the mean training shape.
    pub baseline_med: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoocvReport {
    pub config: MixerConfig,
    pub train: TrainConfig,
    pub folds: Vec<FoldResult>,
    /// Across folds.
    pub model: Summary,
    pub baseline: Summary,
    /// Per fold, `1 − med / baseline_med`.
    pub improvement: Vec<f64>,
    /// Model MEDs against baseline MEDs; absent when the differences have no
    /// variance.
    pub vs_baseline: Option<TTest>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldLatency {
    pub fold: usize,
    pub stats: LatencyStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub folds: Vec<FoldLatency>,
    /// All fold timings pooled.
    pub overall: LatencyStats,
}

pub struct LoocvRun {
    pub report: LoocvReport,
    pub latency: Option<LatencyReport>,
    pub models: Vec<Model>,
}

pub fn stats_sha256(stats: &NormalizationStats) -> Result<String> {
    let digest = Sha256::digest(serde_json::to_vec(stats)?);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn mean_shape(samples: &[WindowSample]) -> Vec<Vec3> {
    let m = samples[0].target.markers.len();
    let mut mean = vec![[0.0; 3]; m];
    for s in samples {
        for (acc, p) in mean.iter_mut().zip(&s.target.markers) {
            for a in 0..3 {
                acc[a] += p[a];
            }
        }
    }
    let n = samples.len() as f64;
    mean.iter_mut().flatten().for_each(|v| *v /= n);
    mean
}

fn windows(
    recs: &[&InsertionRecording],
    cfg: &MixerConfig,
    stats: &NormalizationStats,
) -> Result<(Vec<WindowSample>, usize)> {
    let mut samples = Vec::new();
    let mut clamped = 0;
    for r in recs {
        let set = make_window_samples(r, cfg.window_spec(), stats)?;
        clamped += set.clamped;
        samples.extend(set.samples);
    }
    Ok((samples, clamped))
}

fn run_fold(fold: &Fold, cfg: &MixerConfig, tc: &TrainConfig) -> Result<(FoldResult, Model)> {
    let stats = fold.stats()?;
    let (train_samples, _) = windows(&fold.train, cfg, &stats)?;
    let (test_samples, clamped) = windows(&[fold.test], cfg, &stats)?;
    if train_samples.is_empty() || test_samples.is_empty() {
        return Err(Error::contract(format!(
            "fold has {} training and {} test windows",
            train_samples.len(),
            test_samples.len()
        )));
    }
    let seed = tc.seed;
    info!(
        "fold {}: training on {} windows, testing on {} ({})",
        fold.index,
        train_samples.len(),
        test_samples.len(),
        fold.test.id
    );
    let outcome = train(&train_samples, cfg, tc)?;
    let model = Model {
        config: cfg.clone(),
        params: outcome.params,
        stats: stats.clone(),
    };

    let truths: Vec<ColonFrame> = test_samples.iter().map(|s| s.target.clone()).collect();
    let estimates = estimate_samples(&model, &test_samples)?;
    let result = med(&estimates, &truths)?;
    let mean = mean_shape(&train_samples);
    let baseline: Vec<ColonFrame> = truths
        .iter()
        .map(|y| ColonFrame {
            t: y.t,
            markers: mean.clone(),
        })
        .collect();
    let baseline_med = med(&baseline, &truths)?.med;
    info!(
        "fold {}: MED {:.3} mm, baseline {:.3} mm",
        fold.index, result.med, baseline_med
    );

    Ok((
        FoldResult {
            fold: fold.index,
            test_recording: fold.test.id.clone(),
            train_recordings: fold.train.iter().map(|r| r.id.clone()).collect(),
            train_samples: train_samples.len(),
            test_samples: test_samples.len(),
            stats_sha256: stats_sha256(&stats)?,
            clamped_inputs: clamped,
            seed,
            loss_curve: outcome.loss_curve,
            t_c: test_samples.iter().map(|s| s.t_c).collect(),
            per_frame_med: result.per_frame,
            per_marker_med: result.per_marker,
            med: result.med,
            baseline_med,
        },
        model,
    ))
}

/// Leave-one-insertion-out cross validation. Fold `k` holds out recording
/// `k` and takes its normalization statistics from the other recordings
/// only. Every fold trains from the same seed.
pub fn run_loocv(
    recordings: &[InsertionRecording],
    cfg: &MixerConfig,
    tc: &TrainConfig,
    opts: &LoocvOptions,
) -> Result<LoocvRun> {
    cfg.validate()?;
    tc.validate()?;
    let folds = loocv_split(recordings)?;
    let run = |f: &Fold| {
        run_fold(f, cfg, tc).map_err(|e| Error::Fold {
            fold: f.index,
            source: Box::new(e),
        })
    };
    let results: Vec<(FoldResult, Model)> = if opts.parallel {
        folds.par_iter().map(run).collect::<Result<_>>()?
    } else {
        folds.iter().map(run).collect::<Result<_>>()?
    };
    let (folds_out, models): (Vec<FoldResult>, Vec<Model>) = results.into_iter().unzip();

    let meds: Vec<f64> = folds_out.iter().map(|f| f.med).collect();
    let base: Vec<f64> = folds_out.iter().map(|f| f.baseline_med).collect();
    let report = LoocvReport {
        config: cfg.clone(),
        train: tc.clone(),
        model: Summary::of(&meds),
        baseline: Summary::of(&base),
        improvement: meds.iter().zip(&base).map(|(m, b)| 1.0 - m / b).collect(),
        vs_baseline: paired_t_test(&meds, &base).ok(),
        folds: folds_out,
    };

    let latency = match opts.latency {
        Some(lo) => Some(measure_folds(recordings, &models, lo)?),
        None => None,
    };
    Ok(LoocvRun {
        report,
        latency,
        models,
    })
}

fn measure_folds(recordings: &[InsertionRecording], models: &[Model], opts: LatencyOptions) -> Result<LatencyReport> {
    let mut folds = Vec::with_capacity(models.len());
    let mut pooled = Vec::new();
    for (k, model) in models.iter().enumerate() {
        let set = make_window_samples(&recordings[k], model.config.window_spec(), &model.stats)?;
        let inputs: Vec<_> = set
            .samples
            .into_iter()
            .map(|s| crate::data::WindowInput {
                t_c: s.t_c,
                patches: s.patches,
                lengths: s.lengths,
                clamped: 0,
            })
            .collect();
        let ms = crate::train::latency::time_estimates(model, &inputs, opts)?;
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
