//! Synthetic phantom withdrawals.
//!
//! A colon centerline is fixed in space. The scope tip is pulled back along it
//! from near the cecum at constant speed, with its sensors trailing behind the
//! tip at fixed arc-length spacing (on a straight line once they leave the
//! anus). The colon bulges outward around the tip:
//!
//! ```text
//! A(u) = κ · w · exp(−(u − u_tip)² / 2w²) · sin(π u / L)
//! ```
//!
//! applied along the outward normal, where `u` is arc length from the cecum
//! and `L` the centerline length. The sine taper pins both ends, so the first
//! (cecum) and last (anus) markers never move. Sensors sit on the deformed
//! centerline and their directions are its tangents.

mod centerline;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use centerline::Centerline;

use crate::data::{ColonFrame, ColonoscopeFrame, InsertionRecording, Vec3, DEFAULT_SAMPLE_RATE_HZ};
use crate::error::{Error, Result};
use centerline::unit;

/// Default phantom centerline, cecum to anus, in mm.
pub const DEFAULT_CONTROL_POINTS: [Vec3; 13] = [
    [-80.0, -60.0, 20.0],
    [-95.0, 40.0, 0.0],
    [-90.0, 140.0, 10.0],
    [-75.0, 225.0, 35.0],
    [-10.0, 190.0, 75.0],
    [60.0, 185.0, 60.0],
    [115.0, 235.0, 30.0],
    [125.0, 130.0, 0.0],
    [120.0, 20.0, -10.0],
    [70.0, -55.0, 25.0],
    [0.0, -30.0, 65.0],
    [-10.0, -125.0, 30.0],
    [0.0, -210.0, 0.0],
];

const SPLINE_SAMPLES_PER_SPAN: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Default,
    /// No deformation and no sensor noise: the colon never moves.
    Rigid,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Preset::Default),
            "rigid" => Ok(Preset::Rigid),
            other => Err(Error::Config(format!(
                "unknown preset {other:?} (expected default or rigid)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    /// Centerline control points from cecum to anus, mm.
    pub control_points: Vec<Vec3>,
    /// Rest-state marker positions as arc length from the cecum, mm;
    /// strictly increasing. Empty means evenly spaced from cecum to anus.
    pub stations: Vec<f64>,
    pub markers: usize,
    /// Peak outward displacement per mm of falloff width.
    pub kappa: f64,
    /// Width `w` of the deformation bump, mm.
    pub falloff: f64,
    /// Positional sensor noise, mm (per axis).
    pub sigma_pos: f64,
    /// Angular direction noise, rad.
    pub sigma_dir: f64,
    /// Tip withdrawal per frame, mm.
    pub speed: f64,
    pub sensors: usize,
    /// Arc length between neighbouring sensors, mm.
    pub sensor_spacing: f64,
    /// Distance from the cecum to the tip at the first frame, mm.
    pub start_offset: f64,
    pub sample_rate: f64,
    pub seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            control_points: DEFAULT_CONTROL_POINTS.to_vec(),
            stations: Vec::new(),
            markers: 12,
            kappa: 0.6,
            falloff: 120.0,
            sigma_pos: 0.5,
            sigma_dir: 0.01,
            speed: 5.3,
            sensors: 6,
            sensor_spacing: 100.0,
            start_offset: 40.0,
            sample_rate: DEFAULT_SAMPLE_RATE_HZ,
            seed: 0,
        }
    }
}

impl PhantomSpec {
    pub fn preset(preset: Preset) -> Self {
        match preset {
            Preset::Default => Self::default(),
            Preset::Rigid => Self {
                kappa: 0.0,
                sigma_pos: 0.0,
                sigma_dir: 0.0,
                ..Self::default()
            },
        }
    }

    pub fn centerline(&self) -> Result<Centerline> {
        Centerline::catmull_rom(&self.control_points, SPLINE_SAMPLES_PER_SPAN)
    }

    /// Marker stations in arc length, filling in the even default.
    pub fn resolved_stations(&self, length: f64) -> Vec<f64> {
        if !self.stations.is_empty() {
            return self.stations.clone();
        }
        let m = self.markers.max(2);
        (0..m).map(|i| length * i as f64 / (m - 1) as f64).collect()
    }

    fn validate(&self, length: f64) -> Result<()> {
        let stations = self.resolved_stations(length);
        if self.markers < 2 || stations.len() != self.markers {
            return Err(Error::contract(format!(
                "{} stations for {} markers (need at least 2, one per marker)",
                stations.len(),
                self.markers
            )));
        }
        if stations.windows(2).any(|w| w[1] <= w[0])
            || stations[0] < 0.0
            || stations[stations.len() - 1] > length + 1e-9
        {
            return Err(Error::contract(format!(
                "stations must increase strictly within [0, {length:.1}] mm"
            )));
        }
        let checks = [
            ("kappa", self.kappa, self.kappa >= 0.0),
            ("falloff", self.falloff, self.falloff > 0.0),
            ("sigma_pos", self.sigma_pos, self.sigma_pos >= 0.0),
            ("sigma_dir", self.sigma_dir, self.sigma_dir >= 0.0),
            ("speed", self.speed, self.speed > 0.0),
            ("sensor_spacing", self.sensor_spacing, self.sensor_spacing > 0.0),
            ("start_offset", self.start_offset, self.start_offset >= 0.0),
            ("sample_rate", self.sample_rate, self.sample_rate > 0.0),
        ];
        for (name, v, ok) in checks {
            if !ok || !v.is_finite() {
                return Err(Error::contract(format!("phantom {name} = {v} out of range")));
            }
        }
        if self.sensors == 0 {
            return Err(Error::contract("phantom needs at least one sensor"));
        }
        Ok(())
    }
}

/// The colon as seen with the tip at arc length `tip`.
struct Deformed<'a> {
    line: &'a Centerline,
    centre: Vec3,
    amplitude: f64,
    falloff: f64,
    tip: f64,
}

impl Deformed<'_> {
    fn point(&self, u: f64) -> Vec3 {
        let base = self.line.point(u);
        let length = self.line.length();
        if self.amplitude == 0.0 || u <= 0.0 || u >= length {
            return base;
        }
        let z = (u - self.tip) / self.falloff;
        let a = self.amplitude * (-0.5 * z * z).exp() * (std::f64::consts::PI * u / length).sin();
        let n = self.line.outward_normal(u, self.centre);
        [base[0] + a * n[0], base[1] + a * n[1], base[2] + a * n[2]]
    }

    /// Unit tangent of the deformed curve, towards the anus.
    fn tangent(&self, u: f64) -> Vec3 {
        if self.amplitude == 0.0 {
            return self.line.tangent(u);
        }
        let h = 0.25;
        let (a, b) = (self.point(u - h), self.point(u + h));
        unit([b[0] - a[0], b[1] - a[1], b[2] - a[2]])
    }
}

/// Rotates the unit vector `d` by a small random angle of scale `sigma`.
fn perturb_direction<R: Rng + ?Sized>(d: Vec3, sigma: f64, rng: &mut R) -> Vec3 {
    if sigma == 0.0 {
        return d;
    }
    let noise = Normal::new(0.0, sigma).expect("sigma is finite and non-negative");
    let g = [noise.sample(rng), noise.sample(rng), noise.sample(rng)];
    let along = g[0] * d[0] + g[1] * d[1] + g[2] * d[2];
    unit([
        d[0] + g[0] - along * d[0],
        d[1] + g[1] - along * d[1],
        d[2] + g[2] - along * d[2],
    ])
}

/// Simulates one withdrawal of `frames` frames.
pub fn generate_recording(spec: &PhantomSpec, frames: usize, tau: usize, id: &str) -> Result<InsertionRecording> {
    if frames < tau {
        return Err(Error::contract(format!(
            "{frames} frames requested, fewer than the window length τ = {tau}"
        )));
    }
    let line = spec.centerline()?;
    let length = line.length();
    spec.validate(length)?;
    let travel = spec.speed * frames.saturating_sub(1) as f64;
    if spec.start_offset + travel >= length {
        return Err(Error::contract(format!(
            "withdrawing {travel:.1} mm from {:.1} mm past the cecum leaves the {length:.1} mm colon",
            spec.start_offset
        )));
    }
    let stations = spec.resolved_stations(length);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pos_noise = Normal::new(0.0, spec.sigma_pos.max(f64::MIN_POSITIVE)).expect("finite sigma");
    let centre = line.centroid();

    let mut out = Vec::with_capacity(frames);
    for t in 0..frames {
        let tip = spec.start_offset + spec.speed * t as f64;
        let colon = Deformed {
            line: &line,
            centre,
            amplitude: spec.kappa * spec.falloff,
            falloff: spec.falloff,
            tip,
        };
        let mut positions = Vec::with_capacity(spec.sensors);
        let mut directions = Vec::with_capacity(spec.sensors);
        for k in 0..spec.sensors {
            let u = tip + k as f64 * spec.sensor_spacing;
            let mut p = colon.point(u);
            if spec.sigma_pos > 0.0 {
                for c in &mut p {
                    *c += pos_noise.sample(&mut rng);
                }
            }
            positions.push(p);
            // the scope points into the colon, towards the cecum
            let d = colon.tangent(u);
            directions.push(perturb_direction([-d[0], -d[1], -d[2]], spec.sigma_dir, &mut rng));
        }
        let scope = ColonoscopeFrame {
            t,
            positions,
            directions,
            insertion_length: length - tip,
        };
        let markers = stations.iter().map(|&u| colon.point(u)).collect();
        out.push((scope, ColonFrame { t, markers }));
    }
    Ok(InsertionRecording {
        id: id.to_string(),
        sample_rate: spec.sample_rate,
        frames: out,
    })
}

/// Splits `total` frames over `count` recordings as evenly as possible.
pub fn split_frames(total: usize, count: usize) -> Vec<usize> {
    (0..count)
        .map(|i| total / count + usize::from(i < total % count))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSpec {
    pub base: PhantomSpec,
    pub count: usize,
    /// Frames of each recording.
    pub frames: Vec<usize>,
    pub seed: u64,
    /// Relative jitter applied per recording to speed, κ, falloff and noise.
    pub jitter: f64,
}

impl SuiteSpec {
    /// Eight withdrawals totalling 1,388 frames.
    pub fn paper_scale(base: PhantomSpec, seed: u64) -> Self {
        Self {
            base,
            count: 8,
            frames: split_frames(1388, 8),
            seed,
            jitter: 0.15,
        }
    }
}

/// The spec of recording `index` of a suite.
pub fn suite_member(suite: &SuiteSpec, index: usize) -> PhantomSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(suite.seed);
    rng.set_stream(index as u64 + 1);
    let j = suite.jitter;
    let mut factor = || 1.0 + if j > 0.0 { rng.gen_range(-j..=j) } else { 0.0 };
    let b = &suite.base;
    PhantomSpec {
        speed: b.speed * factor(),
        kappa: b.kappa * factor(),
        falloff: b.falloff * factor(),
        sigma_pos: b.sigma_pos * factor(),
        sigma_dir: b.sigma_dir * factor(),
        seed: suite
            .seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(index as u64),
        ..b.clone()
    }
}

pub fn generate_suite(suite: &SuiteSpec, tau: usize) -> Result<Vec<InsertionRecording>> {
    if suite.count < 2 {
        return Err(Error::contract(format!(
            "a suite needs at least 2 recordings, got {}",
            suite.count
        )));
    }
    if suite.frames.len() != suite.count {
        return Err(Error::contract(format!(
            "{} frame counts for {} recordings",
            suite.frames.len(),
            suite.count
        )));
    }
    (0..suite.count)
        .map(|i| {
            generate_recording(
                &suite_member(suite, i),
                suite.frames[i],
                tau,
                &format!("insertion-{:02}", i + 1),
            )
        })
        .collect()
}
