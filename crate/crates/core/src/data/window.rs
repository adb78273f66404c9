use log::warn;
use serde::{Deserialize, Serialize};

use crate::data::frame::{ColonFrame, ColonoscopeFrame, InsertionRecording};
use crate::data::matrix::{build_directional_matrix, build_positional_matrix};
use crate::data::normalize::{MatrixKind, NormalizationStats};
use crate::data::patch::extract_patches;
use crate::error::{Error, Result};
use crate::nn::Tensor2D;

/// Tag stored in checkpoints describing how the `2S` patch stack is laid out.
pub const PATCH_ORDERING: &str = "row-major-grid;positional-then-directional";

/// Window length and patch geometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub tau: usize,
    pub s1: usize,
    pub s2: usize,
}

impl WindowSpec {
    /// Patches per matrix, `S = 3Nτ / (s1·s2)`.
    pub fn patches_per_matrix(&self, sensors: usize) -> Result<usize> {
        let rows = 3 * sensors;
        if self.s1 == 0 || self.s2 == 0 || rows % self.s1 != 0 || self.tau % self.s2 != 0 {
            return Err(Error::contract(format!(
                "patch size ({}, {}) does not tile the {rows}×{} window",
                self.s1, self.s2, self.tau
            )));
        }
        Ok(rows * self.tau / (self.s1 * self.s2))
    }
}

/// Model input for one estimation time `t_c`.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowSample {
    pub recording: String,
    pub t_c: usize,
    /// `2S × (s1·s2)`: the `S` positional patches followed by the `S`
    /// directional patches.
    pub patches: Tensor2D,
    /// Normalized insertion lengths, newest first (`τ` values).
    pub lengths: Vec<f64>,
    /// Ground truth in mm.
    pub target: ColonFrame,
    /// Ground truth flattened to `3M` normalized values.
    pub target_norm: Vec<f64>,
}

/// Normalized model input built from `τ` chronological scope frames.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowInput {
    pub t_c: usize,
    pub patches: Tensor2D,
    pub lengths: Vec<f64>,
    pub clamped: usize,
}

pub fn window_input(window: &[&ColonoscopeFrame], spec: WindowSpec, stats: &NormalizationStats) -> Result<WindowInput> {
    let pos = build_positional_matrix(window, spec.tau)?;
    let dir = build_directional_matrix(window, spec.tau)?;
    let (pos, c1) = stats.normalize_matrix(&pos, MatrixKind::Position)?;
    let (dir, c2) = stats.normalize_matrix(&dir, MatrixKind::Direction)?;
    let pp = extract_patches(&pos, spec.s1, spec.s2)?;
    let dp = extract_patches(&dir, spec.s1, spec.s2)?;
    let mut stacked = pp.into_data();
    stacked.extend_from_slice(dp.data());
    let patches = Tensor2D::new(2 * dp.rows(), dp.cols(), stacked)?;
    let raw_lengths: Vec<f64> = window.iter().rev().map(|f| f.insertion_length).collect();
    let (lengths, c3) = stats.normalize_lengths(&raw_lengths);
    Ok(WindowInput {
        t_c: window[window.len() - 1].t,
        patches,
        lengths,
        clamped: c1 + c2 + c3,
    })
}

#[derive(Clone, Debug, Default)]
pub struct WindowSet {
    pub samples: Vec<WindowSample>,
    /// Input values clamped into `[0, 1]` across all samples.
    pub clamped: usize,
    pub warnings: Vec<String>,
}

/// One sample per `t_c` with a full window behind it, so `T − τ + 1` samples
/// for a recording of `T ≥ τ` frames. Windows never span recordings.
pub fn make_window_samples(
    rec: &InsertionRecording,
    spec: WindowSpec,
    stats: &NormalizationStats,
) -> Result<WindowSet> {
    let mut set = WindowSet::default();
    if rec.len() < spec.tau {
        let msg = format!(
            "recording {} has {} frames, fewer than τ = {}; no windows produced",
            rec.id,
            rec.len(),
            spec.tau
        );
        warn!("{msg}");
        set.warnings.push(msg);
        return Ok(set);
    }
    let scope: Vec<&ColonoscopeFrame> = rec.scope_frames().collect();
    for end in spec.tau..=rec.len() {
        let input = window_input(&scope[end - spec.tau..end], spec, stats)?;
        let target = rec.frames[end - 1].1.clone();
        set.clamped += input.clamped;
        set.samples.push(WindowSample {
            recording: rec.id.clone(),
            t_c: input.t_c,
            patches: input.patches,
            lengths: input.lengths,
            target_norm: stats.normalize_markers(&target),
            target,
        });
    }
    if set.clamped > 0 {
        warn!("recording {}: clamped {} input values into [0, 1]", rec.id, set.clamped);
    }
    Ok(set)
}
