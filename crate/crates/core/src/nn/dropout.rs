use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Tensor2D;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Train,
    Infer,
}

/// Per-element scale factors (0 or `1/(1-p)`) drawn in train mode.
#[derive(Clone, Debug)]
pub struct DropoutMask(Option<Vec<f64>>);

impl DropoutMask {
    pub fn identity() -> Self {
        DropoutMask(None)
    }

    pub fn backward(&self, grad_out: &Tensor2D) -> Tensor2D {
        let mut g = grad_out.clone();
        if let Some(m) = &self.0 {
            for (v, s) in g.data_mut().iter_mut().zip(m) {
                *v *= s;
            }
        }
        g
    }
}

/// Inverted dropout. Identity in [`Mode::Infer`] and for `p == 0`.
pub fn dropout<R: Rng + ?Sized>(x: &Tensor2D, p: f64, mode: Mode, rng: &mut R) -> Result<(Tensor2D, DropoutMask)> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::contract(format!("dropout probability {p} outside [0, 1)")));
    }
    if mode == Mode::Infer || p == 0.0 {
        return Ok((x.clone(), DropoutMask::identity()));
    }
    let keep = 1.0 / (1.0 - p);
    let mask: Vec<f64> = (0..x.len())
        .map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep })
        .collect();
    let mut y = x.clone();
    for (v, s) in y.data_mut().iter_mut().zip(&mask) {
        *v *= s;
    }
    Ok((y, DropoutMask(Some(mask))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_probability_is_identity() {
        let x = Tensor2D::from_fn(3, 4, |r, c| (r * c) as f64 - 1.5);
        let (y, _) = dropout(&x, 0.0, Mode::Train, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn inference_is_identity() {
        let x = Tensor2D::from_fn(3, 4, |r, c| (r + c) as f64);
        let (y, _) = dropout(&x, 0.9, Mode::Infer, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn preserves_expectation() {
        let x = Tensor2D::filled(1000, 1000, 1.0);
        let (y, _) = dropout(&x, 0.5, Mode::Train, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let mean = y.data().iter().sum::<f64>() / y.len() as f64;
        assert!((0.99..=1.01).contains(&mean), "{mean}");
    }

    #[test]
    fn rejects_probability_one() {
        let x = Tensor2D::zeros(1, 1);
        assert!(dropout(&x, 1.0, Mode::Train, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
