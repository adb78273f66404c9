use crate::data::{norm, Vec3};
use crate::error::{Error, Result};

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn add_scaled(a: Vec3, b: Vec3, s: f64) -> Vec3 {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn unit(v: Vec3) -> Vec3 {
    let n = norm(v);
    [v[0] / n, v[1] / n, v[2] / n]
}

/// A curve sampled densely enough to be treated as smooth, parameterized by
/// arc length `u` from its first control point. Beyond either end it
/// continues as a straight line along the end tangent.
#[derive(Clone, Debug, PartialEq)]
pub struct Centerline {
    points: Vec<Vec3>,
    tangents: Vec<Vec3>,
    arc: Vec<f64>,
}

impl Centerline {
    /// Uniform Catmull-Rom spline through `control`, each span sampled
    /// `per_span` times. End spans use reflected phantom points.
    pub fn catmull_rom(control: &[Vec3], per_span: usize) -> Result<Self> {
        if control.len() < 2 || per_span == 0 {
            return Err(Error::contract("a centerline needs at least two control points"));
        }
        for w in control.windows(2) {
            if norm(sub(w[1], w[0])) == 0.0 {
                return Err(Error::contract("repeated centerline control point"));
            }
        }
        let n = control.len();
        let at = |i: isize| -> Vec3 {
            if i < 0 {
                add_scaled(control[0], sub(control[0], control[1]), 1.0)
            } else if i as usize >= n {
                add_scaled(control[n - 1], sub(control[n - 1], control[n - 2]), 1.0)
            } else {
                control[i as usize]
            }
        };
        let mut points = Vec::with_capacity((n - 1) * per_span + 1);
        for seg in 0..n - 1 {
            let (p0, p1, p2, p3) = (
                at(seg as isize - 1),
                at(seg as isize),
                at(seg as isize + 1),
                at(seg as isize + 2),
            );
            for k in 0..per_span {
                let s = k as f64 / per_span as f64;
                let (s2, s3) = (s * s, s * s * s);
                let mut p = [0.0; 3];
                for d in 0..3 {
                    p[d] = 0.5
                        * (2.0 * p1[d]
                            + (p2[d] - p0[d]) * s
                            + (2.0 * p0[d] - 5.0 * p1[d] + 4.0 * p2[d] - p3[d]) * s2
                            + (3.0 * p1[d] - p0[d] - 3.0 * p2[d] + p3[d]) * s3);
                }
                points.push(p);
            }
        }
        points.push(control[n - 1]);
        Self::from_polyline(points)
    }

    pub fn from_polyline(points: Vec<Vec3>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::contract("a centerline needs at least two points"));
        }
        let mut arc = Vec::with_capacity(points.len());
        arc.push(0.0);
        for w in points.windows(2) {
            let step = norm(sub(w[1], w[0]));
            if step == 0.0 {
                return Err(Error::contract("centerline polyline has a zero-length step"));
            }
            arc.push(arc.last().unwrap() + step);
        }
        let last = points.len() - 1;
        let tangents = (0..points.len())
            .map(|i| unit(sub(points[(i + 1).min(last)], points[i.saturating_sub(1)])))
            .collect();
        Ok(Self { points, tangents, arc })
    }

    pub fn length(&self) -> f64 {
        *self.arc.last().unwrap()
    }

    /// Index `i` and fraction `f` with `u` between vertices `i` and `i + 1`.
    fn locate(&self, u: f64) -> (usize, f64) {
        let i = self.arc.partition_point(|&a| a <= u).clamp(1, self.arc.len() - 1) - 1;
        (i, (u - self.arc[i]) / (self.arc[i + 1] - self.arc[i]))
    }

    pub fn point(&self, u: f64) -> Vec3 {
        let last = self.points.len() - 1;
        if u <= 0.0 {
            return add_scaled(self.points[0], self.tangents[0], u);
        }
        if u >= self.length() {
            return add_scaled(self.points[last], self.tangents[last], u - self.length());
        }
        let (i, f) = self.locate(u);
        let d = sub(self.points[i + 1], self.points[i]);
        add_scaled(self.points[i], d, f)
    }

    /// Unit tangent pointing towards increasing `u`.
    pub fn tangent(&self, u: f64) -> Vec3 {
        let last = self.tangents.len() - 1;
        if u <= 0.0 {
            return self.tangents[0];
        }
        if u >= self.length() {
            return self.tangents[last];
        }
        let (i, f) = self.locate(u);
        let d = sub(self.tangents[i + 1], self.tangents[i]);
        unit(add_scaled(self.tangents[i], d, f))
    }

    /// Mean of the sampled points.
    pub fn centroid(&self) -> Vec3 {
        let n = self.points.len() as f64;
        let mut c = [0.0; 3];
        for p in &self.points {
            for d in 0..3 {
                c[d] += p[d] / n;
            }
        }
        c
    }

    /// Unit vector perpendicular to the tangent at `u`, pointing away from
    /// `centre`.
    pub fn outward_normal(&self, u: f64, centre: Vec3) -> Vec3 {
        let t = self.tangent(u);
        let r = sub(self.point(u), centre);
        let perp = add_scaled(r, t, -dot(r, t));
        if norm(perp) > 1e-9 {
            return unit(perp);
        }
        // radial direction along the tangent: any perpendicular will do
        let axis = if t[0].abs() < 0.9 {
            [1.0, 0.0, 0.0]
        } else {
            [0.0, 1.0, 0.0]
        };
        unit(add_scaled(axis, t, -dot(axis, t)))
    }
}
