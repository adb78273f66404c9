use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::data::{distance, ColonFrame};
use crate::error::{Error, Result};

/// Mean Euclidean distance between estimated and true markers, mm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MedReport {
    /// Mean over all frames and markers.
    pub med: f64,
    /// Mean over markers, one value per frame.
    pub per_frame: Vec<f64>,
    /// Mean over frames, one value per marker.
    pub per_marker: Vec<f64>,
}

/// `(1 / MT) Σ_t Σ_m ‖ŷ_m⁽ᵗ⁾ − y_m⁽ᵗ⁾‖` over aligned frame lists.
pub fn med(estimates: &[ColonFrame], truths: &[ColonFrame]) -> Result<MedReport> {
    if estimates.len() != truths.len() {
        return Err(Error::contract(format!(
            "{} estimates for {} ground-truth frames",
            estimates.len(),
            truths.len()
        )));
    }
    if truths.is_empty() {
        return Err(Error::contract("MED of zero frames"));
    }
    let m = truths[0].markers.len();
    let mut per_frame = Vec::with_capacity(truths.len());
    let mut per_marker = vec![0.0; m];
    for (e, y) in estimates.iter().zip(truths) {
        if e.t != y.t {
            return Err(Error::contract(format!(
                "estimate for t = {} aligned with truth t = {}",
                e.t, y.t
            )));
        }
        if e.markers.len() != m || y.markers.len() != m {
            return Err(Error::contract(format!(
                "frame t = {}: {} estimated and {} true markers, expected {m}",
                y.t,
                e.markers.len(),
                y.markers.len()
            )));
        }
        let mut sum = 0.0;
        for (k, (a, b)) in e.markers.iter().zip(&y.markers).enumerate() {
            let d = distance(*a, *b);
            sum += d;
            per_marker[k] += d;
        }
        per_frame.push(sum / m as f64);
    }
    let t = truths.len() as f64;
    per_marker.iter_mut().for_each(|v| *v /= t);
    Ok(MedReport {
        med: per_frame.iter().sum::<f64>() / t,
        per_frame,
        per_marker,
    })
}

/// Mean and sample standard deviation (`n − 1` denominator).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Summary { mean, sd, n }
    }
}

impl std::fmt::Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.2} ± {:.2}", self.mean, self.sd)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    /// Two-sided.
    pub p: f64,
    pub df: usize,
}

/// Paired two-sided t-test on `a − b`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::contract(format!(
            "paired t-test needs two equal-length samples of at least 2 (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let s = Summary::of(&diffs);
    if !(s.sd > 0.0) {
        return Err(Error::contract("paired differences have zero variance; t is undefined"));
    }
    let df = diffs.len() - 1;
    let t = s.mean / (s.sd / (diffs.len() as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, df as f64).map_err(|e| Error::contract(e.to_string()))?;
    let p = 2.0 * dist.sf(t.abs());
    Ok(TTest { t, p, df })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(t: usize, markers: Vec<[f64; 3]>) -> ColonFrame {
        ColonFrame { t, markers }
    }

    #[test]
    fn identical_frames_give_zero() {
        let f = vec![frame(0, vec![[1.0, 2.0, 3.0]; 12]), frame(1, vec![[0.0; 3]; 12])];
        assert_eq!(med(&f, &f).unwrap().med, 0.0);
    }

    #[test]
    fn uniform_offset() {
        let truth = vec![frame(4, (0..12).map(|i| [i as f64, 1.0, -2.0]).collect())];
        let est = vec![frame(4, (0..12).map(|i| [i as f64 + 3.0, 1.0, -2.0]).collect())];
        let r = med(&est, &truth).unwrap();
        assert!((r.med - 3.0).abs() < 1e-15);
        assert!(r.per_marker.iter().all(|v| (v - 3.0).abs() < 1e-15));
    }

    #[test]
    fn misaligned_input_is_rejected() {
        let a = vec![frame(0, vec![[0.0; 3]; 12])];
        assert!(med(&a, &[]).is_err());
        assert!(med(&a, &[frame(1, vec![[0.0; 3]; 12])]).is_err());
        assert!(med(&a, &[frame(0, vec![[0.0; 3]; 11])]).is_err());
    }

    #[test]
    fn t_test_closed_form() {
        let r = paired_t_test(&[2.0, 4.0, 6.0], &[1.0, 2.0, 3.0]).unwrap();
        // mean 2, sd 1, n 3: t = 2 / (1 / √3)
        assert!((r.t - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.df, 2);
        let swapped = paired_t_test(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert_eq!(swapped.t, -r.t);
        assert_eq!(swapped.p, r.p);
    }

    #[test]
    fn zero_variance_is_an_error() {
        assert!(paired_t_test(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(paired_t_test(&[2.0, 3.0], &[1.0, 2.0]).is_err());
    }
}
