use libm::erf;

use crate::nn::Tensor2D;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Exact GELU, `x·Φ(x)` with the erf-based normal CDF.
#[inline]
pub fn gelu(x: f64) -> f64 {
    x * normal_cdf(x)
}

/// `d/dx [x·Φ(x)] = Φ(x) + x·φ(x)`.
#[inline]
pub fn gelu_grad(x: f64) -> f64 {
    gelu_grad_with_cdf(x, normal_cdf(x))
}

#[inline]
fn gelu_grad_with_cdf(x: f64, cdf: f64) -> f64 {
    cdf + x * FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

#[inline]
fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x * std::f64::consts::FRAC_1_SQRT_2))
}

pub fn gelu_tensor(x: &Tensor2D) -> Tensor2D {
    x.map(gelu)
}

/// Pre-activations and their `Φ(x)`, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct GeluCache {
    pre: Tensor2D,
    cdf: Vec<f64>,
}

impl GeluCache {
    pub fn pre(&self) -> &Tensor2D {
        &self.pre
    }

    /// Multiplies `grad_out` elementwise by `gelu'(pre)`.
    pub fn backward(&self, grad_out: &Tensor2D) -> Tensor2D {
        debug_assert_eq!(self.pre.shape(), grad_out.shape());
        let mut g = grad_out.clone();
        for ((v, &x), &c) in g.data_mut().iter_mut().zip(self.pre.data()).zip(&self.cdf) {
            *v *= gelu_grad_with_cdf(x, c);
        }
        g
    }
}

/// GELU that keeps what its backward pass needs.
pub fn gelu_forward(pre: Tensor2D) -> (Tensor2D, GeluCache) {
    let cdf: Vec<f64> = pre.data().iter().map(|&x| normal_cdf(x)).collect();
    let mut out = pre.clone();
    for (v, c) in out.data_mut().iter_mut().zip(&cdf) {
        *v *= c;
    }
    (out, GeluCache { pre, cdf })
}

/// Multiplies `grad_out` elementwise by `gelu'(pre)`.
pub fn gelu_backward(pre: &Tensor2D, grad_out: &Tensor2D) -> Tensor2D {
    debug_assert_eq!(pre.shape(), grad_out.shape());
    let mut out = grad_out.clone();
    for (g, &x) in out.data_mut().iter_mut().zip(pre.data()) {
        *g *= gelu_grad(x);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// erf from its Maclaurin series; converges quickly for |x| ≤ 1.
    fn erf_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        for n in 1..60 {
            term *= -x * x / n as f64;
            sum += term / (2 * n + 1) as f64;
        }
        sum * 2.0 / std::f64::consts::PI.sqrt()
    }

    #[test]
    fn fixed_points() {
        assert_eq!(gelu(0.0), 0.0);
        assert!((gelu(10.0) - 10.0).abs() < 1e-9);
    }

    #[test]
    fn negative_one_matches_series_oracle() {
        let oracle = -0.5 * (1.0 + erf_series(-std::f64::consts::FRAC_1_SQRT_2));
        assert!((oracle + 0.158_655_253_931_457_05).abs() < 1e-15);
        assert!((gelu(-1.0) - oracle).abs() < 1e-14, "{} vs {}", gelu(-1.0), oracle);
    }

    #[test]
    fn derivative_matches_central_difference() {
        for &x in &[-3.0, -1.2, -0.3, 0.0, 0.7, 2.5] {
            let h = 1e-5;
            let fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((fd - gelu_grad(x)).abs() < 1e-9, "x = {x}");
        }
    }

    #[test]
    fn cached_pass_matches_direct() {
        let pre = Tensor2D::from_fn(3, 5, |r, c| r as f64 - c as f64 * 0.7);
        let g = Tensor2D::from_fn(3, 5, |r, c| 1.0 + (r * c) as f64);
        let (act, cache) = gelu_forward(pre.clone());
        assert_eq!(act, gelu_tensor(&pre));
        assert_eq!(cache.backward(&g), gelu_backward(&pre, &g));
    }
}
