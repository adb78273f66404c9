use crate::error::{Error, Result};
use crate::nn::Parameters;

#[derive(Clone, Copy, Debug)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub step: f64,
    /// Largest accepted relative error.
    pub tolerance: f64,
    /// Lower bound on the relative-error denominator, so entries whose true
    /// gradient is ~0 are judged on absolute error instead.
    pub floor: f64,
}

impl GradCheckOptions {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            step: 1e-5,
            tolerance,
            floor: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_tensor: String,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

impl GradCheckReport {
    fn empty() -> Self {
        Self {
            max_rel_error: 0.0,
            worst_tensor: String::new(),
            worst_index: 0,
            analytic: 0.0,
            numeric: 0.0,
            checked: 0,
        }
    }

    /// Combines two reports over disjoint tensor sets.
    pub fn merge(self, other: GradCheckReport) -> GradCheckReport {
        let checked = self.checked + other.checked;
        let mut worst = if other.max_rel_error > self.max_rel_error {
            other
        } else {
            self
        };
        worst.checked = checked;
        worst
    }

    pub fn ensure(self, tolerance: f64) -> Result<GradCheckReport> {
        if self.max_rel_error > tolerance || self.max_rel_error.is_nan() {
            return Err(Error::GradientMismatch {
                tensor: self.worst_tensor,
                index: self.worst_index,
                rel_error: self.max_rel_error,
                tolerance,
                analytic: self.analytic,
                numeric: self.numeric,
            });
        }
        Ok(self)
    }
}

pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares every entry of `analytic` with a central finite difference of
/// `loss` around `params`.
pub fn grad_check<P, F>(params: &P, analytic: &P, loss: F, opts: GradCheckOptions) -> Result<GradCheckReport>
where
    P: Parameters + Clone,
    F: Fn(&P) -> f64,
{
    grad_check_subset(params, analytic, loss, opts, |_| true)
}

/// [`grad_check`] restricted to the tensors whose names pass `include`.
pub fn grad_check_subset<P, F, I>(
    params: &P,
    analytic: &P,
    loss: F,
    opts: GradCheckOptions,
    include: I,
) -> Result<GradCheckReport>
where
    P: Parameters + Clone,
    F: Fn(&P) -> f64,
    I: Fn(&str) -> bool,
{
    let layout: Vec<(String, usize)> = params.named_tensors().into_iter().map(|(n, t)| (n, t.len())).collect();
    let grads: Vec<Vec<f64>> = analytic
        .named_tensors()
        .into_iter()
        .map(|(_, t)| t.data().to_vec())
        .collect();
    if grads.len() != layout.len() {
        return Err(Error::contract("analytic gradient layout differs from parameters"));
    }

    let mut probe = params.clone();
    let mut report = GradCheckReport::empty();
    for (t, (name, len)) in layout.iter().enumerate() {
        if !include(name) {
            continue;
        }
        if grads[t].len() != *len {
            return Err(Error::shape(format!("analytic gradient {name}"), len, grads[t].len()));
        }
        for i in 0..*len {
            let original = element(&mut probe, t, i, |v| *v);
            element(&mut probe, t, i, |v| *v = original + opts.step);
            let up = loss(&probe);
            element(&mut probe, t, i, |v| *v = original - opts.step);
            let down = loss(&probe);
            element(&mut probe, t, i, |v| *v = original);

            let numeric = (up - down) / (2.0 * opts.step);
            let a = grads[t][i];
            let err = relative_error(a, numeric, opts.floor);
            report.checked += 1;
            if err > report.max_rel_error || err.is_nan() {
                report.max_rel_error = err;
                report.worst_tensor = name.clone();
                report.worst_index = i;
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    report.ensure(opts.tolerance)
}

fn element<P: Parameters, T>(p: &mut P, tensor: usize, index: usize, f: impl FnOnce(&mut f64) -> T) -> T {
    let t = p.tensor_mut(tensor).expect("index from the parameter layout");
    f(&mut t.data_mut()[index])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{mse_loss, Dense, Tensor2D};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(seed: u64) -> (Dense, Tensor2D, Tensor2D) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layer = Dense::glorot(5, 3, &mut rng);
        let x = Tensor2D::from_fn(4, 5, |_, _| rng.gen_range(-1.0..1.0));
        let y = Tensor2D::from_fn(4, 3, |_, _| rng.gen_range(-1.0..1.0));
        (layer, x, y)
    }

    fn analytic(layer: &Dense, x: &Tensor2D, y: &Tensor2D) -> Dense {
        let out = layer.forward(x).unwrap();
        let (_, g) = mse_loss(&out, y).unwrap();
        let mut grads = Dense::zeros(layer.inputs(), layer.outputs());
        layer.backward(x, &g, &mut grads).unwrap();
        grads
    }

    #[test]
    fn dense_with_mse_passes() {
        let (layer, x, y) = setup(1);
        let grads = analytic(&layer, &x, &y);
        let report = grad_check(
            &layer,
            &grads,
            |p| mse_loss(&p.forward(&x).unwrap(), &y).unwrap().0,
            GradCheckOptions::with_tolerance(1e-6),
        )
        .unwrap();
        assert_eq!(report.checked, 18);
    }

    #[test]
    fn linear_model_agrees_to_high_precision() {
        let (layer, x, _) = setup(2);
        // loss = sum of outputs: linear in W, so differences are exact up to rounding.
        let loss = |p: &Dense| p.forward(&x).unwrap().data().iter().sum::<f64>();
        let mut grads = Dense::zeros(5, 3);
        layer.backward(&x, &Tensor2D::filled(4, 3, 1.0), &mut grads).unwrap();
        let report = grad_check(&layer, &grads, loss, GradCheckOptions::with_tolerance(1e-7)).unwrap();
        assert!(report.max_rel_error < 1e-7);
    }

    #[test]
    fn corrupted_gradient_is_reported_by_name() {
        let (layer, x, y) = setup(3);
        let mut grads = analytic(&layer, &x, &y);
        grads.bias.data_mut()[1] *= -1.0;
        let err = grad_check(
            &layer,
            &grads,
            |p| mse_loss(&p.forward(&x).unwrap(), &y).unwrap().0,
            GradCheckOptions::with_tolerance(1e-6),
        )
        .unwrap_err();
        match err {
            Error::GradientMismatch { tensor, index, .. } => {
                assert_eq!(tensor, "dense.b");
                assert_eq!(index, 1);
            }
            other => panic!("unexpected {other}"),
        }
    }
}
