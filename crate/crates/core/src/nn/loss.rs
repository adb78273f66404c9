use crate::error::Result;
use crate::nn::Tensor2D;

/// Mean squared error over all entries and its gradient `2(pred − target)/count`.
pub fn mse_loss(pred: &Tensor2D, target: &Tensor2D) -> Result<(f64, Tensor2D)> {
    pred.check_same_shape("mse_loss", target)?;
    let n = pred.len().max(1) as f64;
    let mut grad = Tensor2D::zeros(pred.rows(), pred.cols());
    let mut sum = 0.0;
    for ((g, p), t) in grad.data_mut().iter_mut().zip(pred.data()).zip(target.data()) {
        let d = p - t;
        sum += d * d;
        *g = 2.0 * d / n;
    }
    Ok((sum / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn equal_inputs_give_zero() {
        let a = Tensor2D::from_fn(2, 3, |r, c| (r + c) as f64);
        assert_eq!(mse_loss(&a, &a).unwrap().0, 0.0);
    }

    #[test]
    fn unit_offset() {
        let (l, g) = mse_loss(&Tensor2D::filled(1, 2, 1.0), &Tensor2D::zeros(1, 2)).unwrap();
        assert_eq!(l, 1.0);
        assert_eq!(g.data(), &[1.0, 1.0]);
    }

    #[test]
    fn random_pair_matches_scalar_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = Tensor2D::from_fn(4, 9, |_, _| rng.gen_range(-2.0..2.0));
        let b = Tensor2D::from_fn(4, 9, |_, _| rng.gen_range(-2.0..2.0));
        let mut acc = 0.0;
        for r in 0..4 {
            for c in 0..9 {
                acc += (a.get(r, c) - b.get(r, c)) * (a.get(r, c) - b.get(r, c));
            }
        }
        assert!((mse_loss(&a, &b).unwrap().0 - acc / 36.0).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        assert!(mse_loss(&Tensor2D::zeros(1, 2), &Tensor2D::zeros(2, 1)).is_err());
    }
}
