use serde::{Deserialize, Serialize};

use crate::data::frame::{ColonFrame, InsertionRecording, Vec3};
use crate::error::{Error, Result};
use crate::nn::Tensor2D;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
}

impl AxisRange {
    fn empty() -> Self {
        Self {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }

    fn include(&mut self, v: f64) {
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }

    fn check(&self, what: &str) -> Result<()> {
        if !(self.max > self.min) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::contract(format!(
                "degenerate normalization range for {what}: min {} max {}",
                self.min, self.max
            )));
        }
        Ok(())
    }

    /// Maps `[min, max]` onto `[0, 1]`; returns the clamped value and whether
    /// clamping was needed.
    #[inline]
    pub fn normalize(&self, v: f64) -> (f64, bool) {
        let x = (v - self.min) / (self.max - self.min);
        if x < 0.0 {
            (0.0, true)
        } else if x > 1.0 {
            (1.0, true)
        } else {
            (x, false)
        }
    }

    /// Unclamped forward map.
    #[inline]
    pub fn scale(&self, v: f64) -> f64 {
        (v - self.min) / (self.max - self.min)
    }

    #[inline]
    pub fn denormalize(&self, x: f64) -> f64 {
        self.min + x * (self.max - self.min)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixKind {
    Position,
    Direction,
}

/// Min-max statistics taken from training recordings only.
///
/// Sensor positions and colon markers are scaled per coordinate axis,
/// insertion lengths by their global range, and direction components by the
/// fixed affine map `(d + 1) / 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub position: [AxisRange; 3],
    pub direction: AxisRange,
    pub length: AxisRange,
    pub marker: [AxisRange; 3],
}

impl NormalizationStats {
    pub fn from_recordings<'a>(recordings: impl IntoIterator<Item = &'a InsertionRecording>) -> Result<Self> {
        let mut position = [AxisRange::empty(); 3];
        let mut marker = [AxisRange::empty(); 3];
        let mut length = AxisRange::empty();
        for rec in recordings {
            for (scope, colon) in &rec.frames {
                for p in &scope.positions {
                    for a in 0..3 {
                        position[a].include(p[a]);
                    }
                }
                for m in &colon.markers {
                    for a in 0..3 {
                        marker[a].include(m[a]);
                    }
                }
                length.include(scope.insertion_length);
            }
        }
        let stats = Self {
            position,
            direction: AxisRange { min: -1.0, max: 1.0 },
            length,
            marker,
        };
        stats.validate()?;
        Ok(stats)
    }

    pub fn validate(&self) -> Result<()> {
        for (a, name) in ["x", "y", "z"].iter().enumerate() {
            self.position[a].check(&format!("position {name}"))?;
            self.marker[a].check(&format!("marker {name}"))?;
        }
        self.direction.check("direction")?;
        self.length.check("insertion length")
    }

    /// Normalizes a `3N × τ` window matrix. Returns the matrix and how many
    /// entries were clamped into `[0, 1]`.
    pub fn normalize_matrix(&self, m: &Tensor2D, kind: MatrixKind) -> Result<(Tensor2D, usize)> {
        self.validate()?;
        if m.rows() % 3 != 0 {
            return Err(Error::shape("window matrix rows", "a multiple of 3", m.rows()));
        }
        let mut out = m.clone();
        let mut clamped = 0;
        for r in 0..m.rows() {
            let range = match kind {
                MatrixKind::Position => self.position[r % 3],
                MatrixKind::Direction => self.direction,
            };
            for v in out.row_mut(r) {
                let (x, c) = range.normalize(*v);
                *v = x;
                clamped += c as usize;
            }
        }
        Ok((out, clamped))
    }

    pub fn denormalize_matrix(&self, m: &Tensor2D, kind: MatrixKind) -> Tensor2D {
        let mut out = m.clone();
        for r in 0..m.rows() {
            let range = match kind {
                MatrixKind::Position => self.position[r % 3],
                MatrixKind::Direction => self.direction,
            };
            out.row_mut(r).iter_mut().for_each(|v| *v = range.denormalize(*v));
        }
        out
    }

    pub fn normalize_lengths(&self, lengths: &[f64]) -> (Vec<f64>, usize) {
        let mut clamped = 0;
        let out = lengths
            .iter()
            .map(|&l| {
                let (x, c) = self.length.normalize(l);
                clamped += c as usize;
                x
            })
            .collect();
        (out, clamped)
    }

    /// Flattens markers to `(y₁x, y₁y, y₁z, …)` in normalized units. Targets
    /// are not clamped.
    pub fn normalize_markers(&self, frame: &ColonFrame) -> Vec<f64> {
        frame
            .markers
            .iter()
            .flat_map(|m| (0..3).map(move |a| self.marker[a].scale(m[a])))
            .collect()
    }

    pub fn denormalize_markers(&self, values: &[f64]) -> Vec<Vec3> {
        values
            .chunks_exact(3)
            .map(|c| {
                [
                    self.marker[0].denormalize(c[0]),
                    self.marker[1].denormalize(c[1]),
                    self.marker[2].denormalize(c[2]),
                ]
            })
            .collect()
    }
}
