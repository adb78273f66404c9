use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::tensor::gemm;
use crate::nn::{Parameters, Tensor2D};

/// Fully connected layer `y = x·Wᵀ + b`.
///
/// Inputs are batches of row vectors (`n × in`), so the weight is stored
/// `out × in` and a single column vector `x` is passed as a `1 × in` row.
/// The layer itself holds no activations; callers keep the forward input and
/// hand it back to [`Dense::backward`], which lets a frozen layer be shared
/// across threads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Tensor2D,
    pub bias: Tensor2D,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Tensor2D::zeros(outputs, inputs),
            bias: Tensor2D::zeros(1, outputs),
        }
    }

    pub fn new(weight: Tensor2D, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != weight.rows() {
            return Err(Error::shape("Dense bias", weight.rows(), bias.len()));
        }
        Ok(Self {
            weight,
            bias: Tensor2D::row_vector(bias),
        })
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        Self {
            weight: Tensor2D::from_fn(outputs, inputs, |_, _| rng.gen_range(-limit..=limit)),
            bias: Tensor2D::zeros(1, outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.rows()
    }

    pub fn forward(&self, x: &Tensor2D) -> Result<Tensor2D> {
        if x.cols() != self.inputs() {
            return Err(Error::shape(
                format!(
                    "dense forward: input {} against weight {}",
                    x.shape(),
                    self.weight.shape()
                ),
                format!("{} input columns", self.inputs()),
                x.cols(),
            ));
        }
        let mut out = Tensor2D::zeros(x.rows(), self.outputs());
        for r in 0..x.rows() {
            out.row_mut(r).copy_from_slice(self.bias.data());
        }
        gemm(x, false, &self.weight, true, &mut out, 1.0);
        Ok(out)
    }

    /// Accumulates `dL/dW` and `dL/db` into `grads` and returns `dL/dx`.
    pub fn backward(&self, x: &Tensor2D, grad_out: &Tensor2D, grads: &mut Dense) -> Result<Tensor2D> {
        if grad_out.rows() != x.rows() || grad_out.cols() != self.outputs() {
            return Err(Error::shape(
                "dense backward: output gradient",
                format!("{}×{}", x.rows(), self.outputs()),
                grad_out.shape(),
            ));
        }
        gemm(grad_out, true, x, false, &mut grads.weight, 1.0);
        let db = grads.bias.data_mut();
        for r in 0..grad_out.rows() {
            for (acc, g) in db.iter_mut().zip(grad_out.row(r)) {
                *acc += g;
            }
        }
        let mut dx = Tensor2D::zeros(x.rows(), self.inputs());
        gemm(grad_out, false, &self.weight, false, &mut dx, 0.0);
        Ok(dx)
    }

    pub(crate) fn push_named<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Tensor2D)>) {
        out.push((format!("{prefix}.w"), &self.weight));
        out.push((format!("{prefix}.b"), &self.bias));
    }

    pub(crate) fn push_named_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<(String, &'a mut Tensor2D)>) {
        out.push((format!("{prefix}.w"), &mut self.weight));
        out.push((format!("{prefix}.b"), &mut self.bias));
    }
}

impl Parameters for Dense {
    fn named_tensors(&self) -> Vec<(String, &Tensor2D)> {
        let mut v = Vec::with_capacity(2);
        self.push_named("dense", &mut v);
        v
    }

    fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor2D)> {
        let mut v = Vec::with_capacity(2);
        self.push_named_mut("dense", &mut v);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_weight_passes_input_through() {
        let layer = Dense::new(Tensor2D::from_fn(2, 2, |r, c| (r == c) as u8 as f64), vec![0.0; 2]).unwrap();
        let y = layer.forward(&Tensor2D::row_vector(vec![3.0, 5.0])).unwrap();
        assert_eq!(y.data(), &[3.0, 5.0]);
    }

    #[test]
    fn hand_computed_affine_map() {
        let w = Tensor2D::from_rows(&[vec![1.0, 1.0], vec![0.0, 2.0]]).unwrap();
        let layer = Dense::new(w, vec![1.0, 0.0]).unwrap();
        let y = layer.forward(&Tensor2D::row_vector(vec![1.0, 2.0])).unwrap();
        assert_eq!(y.data(), &[4.0, 4.0]);
    }

    #[test]
    fn random_layer_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let layer = Dense::glorot(3, 4, &mut rng);
        let x = Tensor2D::from_fn(5, 3, |_, _| rng.gen_range(-1.0..1.0));
        let y = layer.forward(&x).unwrap();
        for n in 0..5 {
            for o in 0..4 {
                let mut acc = layer.bias.get(0, o);
                for i in 0..3 {
                    acc += layer.weight.get(o, i) * x.get(n, i);
                }
                assert!((y.get(n, o) - acc).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn mismatched_input_names_both_shapes() {
        let layer = Dense::zeros(3, 2);
        let msg = layer.forward(&Tensor2D::zeros(1, 4)).unwrap_err().to_string();
        assert!(msg.contains("1×4") && msg.contains("2×3"), "{msg}");
    }
}
