use std::ops::ControlFlow;

use log::debug;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::WindowSample;
use crate::error::{Error, Result};
use crate::model::{Batch, MixerConfig, ModelParams};
use crate::nn::{mse_loss, AdamState, Mode, Parameters};
use crate::train::TrainConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub params: ModelParams,
    /// Mean training-mode minibatch MSE of each epoch, weighted by batch size.
    pub loss_curve: Vec<f64>,
    pub steps: u64,
}

/// Progress handed to the monitor of [`train_with`] after every epoch.
pub struct EpochEnd<'a> {
    /// Zero-based.
    pub epoch: usize,
    pub loss: f64,
    pub steps: u64,
    pub params: &'a ModelParams,
}

/// Trains a freshly initialized network for `tc.epochs` epochs.
pub fn train(samples: &[WindowSample], cfg: &MixerConfig, tc: &TrainConfig) -> Result<TrainOutcome> {
    train_with(samples, cfg, tc, |_| ControlFlow::Continue(()))
}

/// [`train`] with a per-epoch callback that may stop training early.
///
/// Weights are drawn from a generator seeded with `tc.seed`; shuffling and
/// dropout masks come from a second stream of the same seed, so a run is a
/// pure function of its inputs.
pub fn train_with(
    samples: &[WindowSample],
    cfg: &MixerConfig,
    tc: &TrainConfig,
    mut monitor: impl FnMut(&EpochEnd) -> ControlFlow<()>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    tc.validate()?;
    if samples.is_empty() {
        return Err(Error::contract("no training samples"));
    }
    let mut init_rng = ChaCha8Rng::seed_from_u64(tc.seed);
    let mut params = ModelParams::init(cfg, &mut init_rng);
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    rng.set_stream(1);

    let mut adam = AdamState::new(tc.adam());
    let mut grads = ModelParams::zeros(cfg);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut loss_curve = Vec::with_capacity(tc.epochs);
    for epoch in 0..tc.epochs {
        if tc.shuffle {
            order.shuffle(&mut rng);
        }
        let mut weighted = 0.0;
        for (batch_index, chunk) in order.chunks(tc.minibatch).enumerate() {
            let members: Vec<&WindowSample> = chunk.iter().map(|&i| &samples[i]).collect();
            let batch = Batch::from_samples(&members)?;
            let pass = params.forward(cfg, &batch.patches, &batch.lengths, Mode::Train, &mut rng)?;
            let (loss, grad_out) = mse_loss(&pass.output, &batch.targets)?;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: batch_index,
                });
            }
            grads.zero();
            params.backward(cfg, &pass, &grad_out, &mut grads)?;
            adam.step(&mut params, &grads).map_err(|e| match e {
                Error::NonFiniteGradient { .. } => Error::Diverged {
                    epoch,
                    batch: batch_index,
                },
                other => other,
            })?;
            weighted += loss * chunk.len() as f64;
        }
        let loss = weighted / samples.len() as f64;
        debug!("epoch {epoch}: loss {loss:.6e}");
        loss_curve.push(loss);
        let end = EpochEnd {
            epoch,
            loss,
            steps: adam.steps(),
            params: &params,
        };
        if monitor(&end).is_break() {
            break;
        }
    }
    Ok(TrainOutcome {
        params,
        loss_curve,
        steps: adam.steps(),
    })
}

/// Inference-mode MSE of `params` over `samples`, in normalized units.
pub fn evaluate_mse(params: &ModelParams, cfg: &MixerConfig, samples: &[WindowSample]) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for chunk in samples.chunks(256) {
        let members: Vec<&WindowSample> = chunk.iter().collect();
        let batch = Batch::from_samples(&members)?;
        let out = params.predict_batch(cfg, &batch.patches, &batch.lengths)?;
        let (loss, _) = mse_loss(&out, &batch.targets)?;
        sum += loss * batch.targets.len() as f64;
        count += batch.targets.len();
    }
    if count == 0 {
        return Err(Error::contract("no samples to evaluate"));
    }
    Ok(sum / count as f64)
}
