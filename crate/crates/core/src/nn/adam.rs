use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Parameters, Tensor2D};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias correction. Moment buffers are created zeroed on the first
/// step, shaped like the parameters they track.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    first: Vec<Tensor2D>,
    second: Vec<Tensor2D>,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step<P: Parameters>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        let grads = grads.named_tensors();
        for (name, g) in &grads {
            if let Some(index) = g.data().iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteGradient {
                    tensor: name.clone(),
                    index,
                });
            }
        }
        let mut params = params.named_tensors_mut();
        if params.len() != grads.len() {
            return Err(Error::contract("gradient layout differs from parameter layout"));
        }
        for ((name, p), (_, g)) in params.iter().zip(&grads) {
            p.check_same_shape(name, g)?;
        }
        if self.first.is_empty() {
            self.first = params
                .iter()
                .map(|(_, p)| Tensor2D::zeros(p.rows(), p.cols()))
                .collect();
            self.second = self.first.clone();
        }

        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for (i, (_, p)) in params.iter_mut().enumerate() {
            let g = grads[i].1.data();
            let m = self.first[i].data_mut();
            let v = self.second[i].data_mut();
            for (j, w) in p.data_mut().iter_mut().enumerate() {
                m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
                v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
                let m_hat = m[j] / c1;
                let v_hat = v[j] / c2;
                *w -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::NamedTensors;

    fn scalar(v: f64) -> NamedTensors {
        NamedTensors(vec![("p".into(), Tensor2D::row_vector(vec![v]))])
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = scalar(0.25);
        let mut adam = AdamState::new(AdamConfig::default());
        for _ in 0..5 {
            adam.step(&mut p, &scalar(0.0)).unwrap();
        }
        assert_eq!(p, scalar(0.25));
        assert_eq!(adam.steps(), 5);
    }

    #[test]
    fn positive_gradient_descends() {
        let mut p = scalar(0.0);
        let mut adam = AdamState::new(AdamConfig::default());
        let mut last = 0.0;
        for _ in 0..20 {
            adam.step(&mut p, &scalar(1.0)).unwrap();
            let now = p.0[0].1.get(0, 0);
            assert!(now < last);
            last = now;
        }
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // m̂ = g, v̂ = g², so the step is lr·g/(|g| + eps).
        let mut p = scalar(0.0);
        let mut adam = AdamState::new(AdamConfig::default());
        adam.step(&mut p, &scalar(1.0)).unwrap();
        let expected = -1e-3 * 1.0 / (1.0 + 1e-8);
        assert!((p.0[0].1.get(0, 0) - expected).abs() < 1e-15);
    }

    #[test]
    fn nan_gradient_names_tensor() {
        let mut p = scalar(0.0);
        let mut adam = AdamState::new(AdamConfig::default());
        let err = adam.step(&mut p, &scalar(f64::NAN)).unwrap_err();
        assert!(err.to_string().contains("tensor p"), "{err}");
        assert_eq!(adam.steps(), 0);
    }
}
