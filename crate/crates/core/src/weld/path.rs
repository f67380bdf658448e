use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arc-length parameterized polyline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeldPath {
    points: Vec<[f64; 2]>,
    arc: Vec<f64>,
}

/// Nearest-point data for a query location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// arc length of the foot point
    pub s: f64,
    /// signed distance, positive on the left of the travel direction
    pub d_perp: f64,
    pub foot: [f64; 2],
    pub normal: [f64; 2],
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

impl WeldPath {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidInput("weld path needs at least two points".into()));
        }
        let mut arc = Vec::with_capacity(points.len());
        arc.push(0.0);
        for w in points.windows(2) {
            let l = dot(sub(w[1], w[0]), sub(w[1], w[0])).sqrt();
            if l <= 0.0 || !l.is_finite() {
                return Err(Error::InvalidInput("weld path has a degenerate segment".into()));
            }
            arc.push(arc.last().unwrap() + l);
        }
        Ok(Self { points, arc })
    }

    /// Straight path through `center` at angle `theta` to the x axis.
    pub fn straight(center: [f64; 2], theta: f64, length: f64) -> Result<Self> {
        let (s, c) = theta.sin_cos();
        let h = 0.5 * length;
        Self::new(vec![
            [center[0] - h * c, center[1] - h * s],
            [center[0] + h * c, center[1] + h * s],
        ])
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        *self.arc.last().unwrap()
    }

    fn segment_at(&self, s: f64) -> usize {
        let i = self.arc.partition_point(|&a| a <= s);
        i.clamp(1, self.points.len() - 1) - 1
    }

    fn tangent(&self, seg: usize) -> [f64; 2] {
        let d = sub(self.points[seg + 1], self.points[seg]);
        let l = self.arc[seg + 1] - self.arc[seg];
        [d[0] / l, d[1] / l]
    }

    /// Point at arc length `s`; extrapolates linearly beyond the ends.
    pub fn point_at(&self, s: f64) -> [f64; 2] {
        let seg = self.segment_at(s);
        let t = self.tangent(seg);
        let ds = s - self.arc[seg];
        [self.points[seg][0] + ds * t[0], self.points[seg][1] + ds * t[1]]
    }

    pub fn tangent_at(&self, s: f64) -> [f64; 2] {
        self.tangent(self.segment_at(s))
    }

    pub fn normal_at(&self, s: f64) -> [f64; 2] {
        let t = self.tangent_at(s);
        [-t[1], t[0]]
    }

    /// Maps path coordinates `(s, d)` back to the plane.
    pub fn to_plane(&self, s: f64, d: f64) -> [f64; 2] {
        let p = self.point_at(s);
        let n = self.normal_at(s);
        [p[0] + d * n[0], p[1] + d * n[1]]
    }

    pub fn project(&self, p: [f64; 2]) -> Projection {
        let mut best: Option<(f64, Projection)> = None;
        for seg in 0..self.points.len() - 1 {
            let a = self.points[seg];
            let t = self.tangent(seg);
            let len = self.arc[seg + 1] - self.arc[seg];
            let along = dot(sub(p, a), t).clamp(0.0, len);
            let foot = [a[0] + along * t[0], a[1] + along * t[1]];
            let r = sub(p, foot);
            let dist2 = dot(r, r);
            if best.as_ref().is_none_or(|(d, _)| dist2 < *d) {
                let normal = [-t[1], t[0]];
                best = Some((
                    dist2,
                    Projection {
                        s: self.arc[seg] + along,
                        d_perp: dot(r, normal).signum() * dist2.sqrt(),
                        foot,
                        normal,
                    },
                ));
            }
        }
        best.unwrap().1
    }
}
