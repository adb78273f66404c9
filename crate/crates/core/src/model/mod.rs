//! The spatio-temporal mixer network.

mod checkpoint;
mod config;
mod gradient;
mod network;
mod params;

use serde::{Deserialize, Serialize};

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, FORMAT_VERSION, MAGIC};
pub use config::MixerConfig;
pub use gradient::{loss_and_gradient, model_grad_check};
pub use network::{BlockCache, ForwardPass, HeadCache, TrunkCache};
pub use params::{MixingBlock, ModelParams};

use crate::data::{NormalizationStats, Vec3, WindowInput, WindowSample};
use crate::error::{Error, Result};
use crate::nn::Tensor2D;

/// Row-stacked model inputs and normalized targets of several samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    /// `(B·2S) × (s1·s2)`
    pub patches: Tensor2D,
    /// `B × τ`
    pub lengths: Tensor2D,
    /// `B × 3M`
    pub targets: Tensor2D,
}

impl Batch {
    pub fn from_samples(samples: &[&WindowSample]) -> Result<Batch> {
        let first = samples
            .first()
            .ok_or_else(|| Error::contract("a batch needs at least one sample"))?;
        let (tokens, plen) = (first.patches.rows(), first.patches.cols());
        let (tau, out) = (first.lengths.len(), first.target_norm.len());
        let mut patches = Vec::with_capacity(samples.len() * tokens * plen);
        let mut lengths = Vec::with_capacity(samples.len() * tau);
        let mut targets = Vec::with_capacity(samples.len() * out);
        for s in samples {
            if s.patches.shape() != first.patches.shape() || s.lengths.len() != tau || s.target_norm.len() != out {
                return Err(Error::shape(
                    format!("batch sample {} t_c = {}", s.recording, s.t_c),
                    format!("patches {}, {tau} lengths, {out} targets", first.patches.shape()),
                    format!(
                        "patches {}, {} lengths, {} targets",
                        s.patches.shape(),
                        s.lengths.len(),
                        s.target_norm.len()
                    ),
                ));
            }
            patches.extend_from_slice(s.patches.data());
            lengths.extend_from_slice(&s.lengths);
            targets.extend_from_slice(&s.target_norm);
        }
        let b = samples.len();
        Ok(Batch {
            patches: Tensor2D::new(b * tokens, plen, patches)?,
            lengths: Tensor2D::new(b, tau, lengths)?,
            targets: Tensor2D::new(b, out, targets)?,
        })
    }

    pub fn len(&self) -> usize {
        self.lengths.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Colon shape predicted for time `t_c`, in mm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatedColonShape {
    pub t_c: usize,
    pub markers: Vec<Vec3>,
}

/// A frozen network together with the statistics it was trained under.
/// Immutable, so one instance can serve many threads.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: MixerConfig,
    pub params: ModelParams,
    pub stats: NormalizationStats,
}

impl Model {
    pub fn estimate_input(&self, input: &WindowInput) -> Result<EstimatedColonShape> {
        let out = self.params.predict(&self.config, &input.patches, &input.lengths)?;
        self.to_shape(input.t_c, &out)
    }

    pub fn estimate(&self, sample: &WindowSample) -> Result<EstimatedColonShape> {
        let out = self.params.predict(&self.config, &sample.patches, &sample.lengths)?;
        self.to_shape(sample.t_c, &out)
    }

    /// Estimates for many samples in one batched forward pass.
    pub fn estimate_batch(&self, samples: &[&WindowSample]) -> Result<Vec<EstimatedColonShape>> {
        if samples.is_empty() {
            return Ok(Vec::new());
        }
        let batch = Batch::from_samples(samples)?;
        let out = self
            .params
            .predict_batch(&self.config, &batch.patches, &batch.lengths)?;
        samples
            .iter()
            .enumerate()
            .map(|(i, s)| self.to_shape(s.t_c, out.row(i)))
            .collect()
    }

    fn to_shape(&self, t_c: usize, normalized: &[f64]) -> Result<EstimatedColonShape> {
        if normalized.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract(format!("non-finite estimate at t_c = {t_c}")));
        }
        Ok(EstimatedColonShape {
            t_c,
            markers: self.stats.denormalize_markers(normalized),
        })
    }
}
