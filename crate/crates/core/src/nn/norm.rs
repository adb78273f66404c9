use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Tensor2D;

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Row-wise layer normalization with a learnable per-channel gain and bias.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerNorm {
    pub gain: Tensor2D,
    pub bias: Tensor2D,
}

/// Activations kept from the forward pass.
#[derive(Clone, Debug)]
pub struct LayerNormCache {
    normalized: Tensor2D,
    inv_std: Vec<f64>,
}

impl LayerNormCache {
    /// The pre-affine normalized rows.
    pub fn normalized(&self) -> &Tensor2D {
        &self.normalized
    }
}

/// Normalizes each row to zero mean and unit variance (population variance,
/// `LAYER_NORM_EPS` added before the square root).
pub fn normalize_rows(x: &Tensor2D) -> Result<(Tensor2D, Vec<f64>)> {
    if x.cols() < 2 {
        return Err(Error::contract(format!(
            "layer norm needs at least 2 values per row, got {}",
            x.cols()
        )));
    }
    let c = x.cols() as f64;
    let mut out = Tensor2D::zeros(x.rows(), x.cols());
    let mut inv_std = Vec::with_capacity(x.rows());
    for r in 0..x.rows() {
        let row = x.row(r);
        let mean = row.iter().sum::<f64>() / c;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / c;
        let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        for (o, v) in out.row_mut(r).iter_mut().zip(row) {
            *o = (v - mean) * inv;
        }
        inv_std.push(inv);
    }
    Ok((out, inv_std))
}

impl LayerNorm {
    pub fn new(channels: usize) -> Self {
        Self {
            gain: Tensor2D::filled(1, channels, 1.0),
            bias: Tensor2D::zeros(1, channels),
        }
    }

    pub fn zeros(channels: usize) -> Self {
        Self {
            gain: Tensor2D::zeros(1, channels),
            bias: Tensor2D::zeros(1, channels),
        }
    }

    pub fn channels(&self) -> usize {
        self.gain.cols()
    }

    pub fn forward(&self, x: &Tensor2D) -> Result<(Tensor2D, LayerNormCache)> {
        if x.cols() != self.channels() {
            return Err(Error::shape("layer norm input columns", self.channels(), x.cols()));
        }
        let (normalized, inv_std) = normalize_rows(x)?;
        let mut out = normalized.clone();
        let (g, b) = (self.gain.data(), self.bias.data());
        for r in 0..out.rows() {
            for ((v, g), b) in out.row_mut(r).iter_mut().zip(g).zip(b) {
                *v = *v * g + b;
            }
        }
        Ok((out, LayerNormCache { normalized, inv_std }))
    }

    /// Accumulates gain/bias gradients into `grads` and returns `dL/dx`.
    pub fn backward(&self, cache: &LayerNormCache, grad_out: &Tensor2D, grads: &mut LayerNorm) -> Result<Tensor2D> {
        let xhat = &cache.normalized;
        xhat.check_same_shape("layer norm backward", grad_out)?;
        let c = xhat.cols() as f64;
        let gain = self.gain.data();
        let mut dx = Tensor2D::zeros(xhat.rows(), xhat.cols());
        let mut dxhat = vec![0.0; xhat.cols()];
        for r in 0..xhat.rows() {
            let (dy, xh) = (grad_out.row(r), xhat.row(r));
            let mut sum_d = 0.0;
            let mut sum_dx = 0.0;
            for j in 0..dy.len() {
                grads.gain.data_mut()[j] += dy[j] * xh[j];
                grads.bias.data_mut()[j] += dy[j];
                dxhat[j] = dy[j] * gain[j];
                sum_d += dxhat[j];
                sum_dx += dxhat[j] * xh[j];
            }
            let scale = cache.inv_std[r] / c;
            for (j, out) in dx.row_mut(r).iter_mut().enumerate() {
                *out = scale * (c * dxhat[j] - sum_d - xh[j] * sum_dx);
            }
        }
        Ok(dx)
    }
}
