use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::WindowInput;
use crate::error::{Error, Result};
use crate::model::Model;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyOptions {
    /// Untimed estimates run first.
    pub warmup: usize,
    pub reps: usize,
}

impl Default for LatencyOptions {
    fn default() -> Self {
        Self { warmup: 100, reps: 200 }
    }
}

/// Wall-clock time of single estimates on the calling thread, ms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub median_ms: f64,
    pub p95_ms: f64,
    pub mean_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
    pub reps: usize,
}

impl LatencyStats {
    pub fn from_samples(mut ms: Vec<f64>) -> Result<LatencyStats> {
        if ms.is_empty() {
            return Err(Error::contract("no latency samples"));
        }
        ms.sort_by(f64::total_cmp);
        let n = ms.len();
        let median = if n % 2 == 1 {
            ms[n / 2]
        } else {
            0.5 * (ms[n / 2 - 1] + ms[n / 2])
        };
        // nearest rank
        let p95 = ms[((0.95 * n as f64).ceil() as usize).clamp(1, n) - 1];
        Ok(LatencyStats {
            median_ms: median,
            p95_ms: p95,
            mean_ms: ms.iter().sum::<f64>() / n as f64,
            min_ms: ms[0],
            max_ms: ms[n - 1],
            reps: n,
        })
    }
}

/// Times `opts.reps` full estimates (normalized window in, mm out), cycling
/// through `inputs`, after `opts.warmup` untimed ones.
pub fn measure_latency(model: &Model, inputs: &[WindowInput], opts: LatencyOptions) -> Result<LatencyStats> {
    LatencyStats::from_samples(time_estimates(model, inputs, opts)?)
}

/// The raw timings behind [`measure_latency`], ms.
pub fn time_estimates(model: &Model, inputs: &[WindowInput], opts: LatencyOptions) -> Result<Vec<f64>> {
    if inputs.is_empty() || opts.reps == 0 {
        return Err(Error::contract(
            "latency measurement needs inputs and at least one repetition",
        ));
    }
    for i in 0..opts.warmup {
        std::hint::black_box(model.estimate_input(&inputs[i % inputs.len()])?);
    }
    let mut ms = Vec::with_capacity(opts.reps);
    for i in 0..opts.reps {
        let input = &inputs[i % inputs.len()];
        let start = Instant::now();
        std::hint::black_box(model.estimate_input(input)?);
        ms.push(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(ms)
}
