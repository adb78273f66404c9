use serde::{Deserialize, Serialize};

pub type Vec3 = [f64; 3];

/// Tolerance on `|d| = 1` for sensor directions.
pub const UNIT_TOLERANCE: f64 = 1e-6;

pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 6.0;

pub fn norm(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub fn distance(a: Vec3, b: Vec3) -> f64 {
    norm([a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}

/// One sample of the tracked colonoscope: sensor positions (mm) along the
/// scope centerline, tip first, with their unit tangent directions, plus the
/// inserted length (mm).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColonoscopeFrame {
    pub t: usize,
    pub positions: Vec<Vec3>,
    pub directions: Vec<Vec3>,
    pub insertion_length: f64,
}

impl ColonoscopeFrame {
    pub fn sensors(&self) -> usize {
        self.positions.len()
    }

    /// Returns a description of the first violated invariant.
    pub fn check(&self) -> Result<(), String> {
        if self.positions.len() != self.directions.len() {
            return Err(format!(
                "{} positions but {} directions",
                self.positions.len(),
                self.directions.len()
            ));
        }
        if self.positions.is_empty() {
            return Err("no sensors".into());
        }
        for (n, d) in self.directions.iter().enumerate() {
            let len = norm(*d);
            if (len - 1.0).abs() > UNIT_TOLERANCE {
                return Err(format!("direction of sensor {} has norm {len} (expected 1)", n + 1));
            }
        }
        if !(self.insertion_length >= 0.0) || !self.insertion_length.is_finite() {
            return Err(format!(
                "insertion length {} must be finite and >= 0",
                self.insertion_length
            ));
        }
        let finite = |v: &Vec3| v.iter().all(|c| c.is_finite());
        if !self.positions.iter().all(finite) || !self.directions.iter().all(finite) {
            return Err("non-finite coordinate".into());
        }
        Ok(())
    }
}

/// Colon marker positions (mm), cecum first and anus last.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColonFrame {
    pub t: usize,
    pub markers: Vec<Vec3>,
}

/// Time-aligned frame pairs from one colonoscope insertion.
#[derive(Clone, Debug, PartialEq)]
pub struct InsertionRecording {
    pub id: String,
    pub sample_rate: f64,
    pub frames: Vec<(ColonoscopeFrame, ColonFrame)>,
}

impl InsertionRecording {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn scope_frames(&self) -> impl Iterator<Item = &ColonoscopeFrame> {
        self.frames.iter().map(|(s, _)| s)
    }

    pub fn colon_frames(&self) -> impl Iterator<Item = &ColonFrame> {
        self.frames.iter().map(|(_, c)| c)
    }
}
