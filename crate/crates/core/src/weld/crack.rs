use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::path::WeldPath;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarGrid};

/// Surface-breaking crack realized as a polyline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrackSpec {
    pub present: bool,
    pub start: [f64; 2],
    pub length: f64,
    pub depth_ratio: f64,
    pub width: f64,
    pub path: Vec<[f64; 2]>,
}

impl CrackSpec {
    pub fn absent() -> Self {
        Self {
            present: false,
            start: [0.0, 0.0],
            length: 0.0,
            depth_ratio: 0.0,
            width: 0.0,
            path: Vec::new(),
        }
    }

    pub fn arc_length(&self) -> f64 {
        self.path
            .windows(2)
            .map(|w| ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt())
            .sum()
    }

    /// Distance from `p` to the crack polyline.
    pub fn distance(&self, p: [f64; 2]) -> f64 {
        self.path
            .windows(2)
            .map(|w| segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    let t = if l2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((p[0] - a[0] - t * d[0]).powi(2) + (p[1] - a[1] - t * d[1]).powi(2)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkParams {
    /// fixed step length (m)
    pub step: f64,
    /// standard deviation of the heading increment per step (rad)
    pub heading_std: f64,
    /// half-width of the confining corridor (m)
    pub corridor: f64,
}

/// Correlated random walk in weld coordinates `(s, d_perp)`, reflected at
/// `|d_perp| = corridor`. The walk starts at `seed.start` heading along the
/// weld.
pub fn crack_walk<R: Rng + ?Sized>(
    seed: &CrackSpec,
    walk: &WalkParams,
    path: &WeldPath,
    rng: &mut R,
) -> Result<CrackSpec> {
    if !seed.present {
        return Ok(CrackSpec::absent());
    }
    if !(seed.length > 0.0 && walk.step > 0.0 && walk.corridor > 0.0) {
        return Err(Error::InvalidInput("crack length, step, and corridor must be positive".into()));
    }
    let turn = Normal::new(0.0, walk.heading_std).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let steps = ((seed.length / walk.step).round() as usize).max(1);
    let q = path.project(seed.start);
    let r = walk.corridor;
    let mut s = q.s;
    let mut d = q.d_perp.clamp(-r, r);
    let mut heading = turn.sample(rng);
    let mut pts = vec![path.to_plane(s, d)];
    for _ in 0..steps {
        let mut left = walk.step;
        while left > 0.0 {
            let (sin, cos) = heading.sin_cos();
            let nd = d + left * sin;
            let wall = if nd > r {
                r
            } else if nd < -r {
                -r
            } else {
                s += left * cos;
                d = nd;
                break;
            };
            let t = (wall - d) / sin;
            s += t * cos;
            d = wall;
            left -= t;
            heading = -heading;
            pts.push(path.to_plane(s, d));
        }
        pts.push(path.to_plane(s, d));
        heading += turn.sample(rng);
    }
    pts.dedup();
    Ok(CrackSpec {
        present: true,
        start: pts[0],
        length: seed.length,
        depth_ratio: seed.depth_ratio,
        width: seed.width,
        path: pts,
    })
}

/// Smoothed mask `1 - c_d^2` along the crack, 1 elsewhere. `sigma` is the
/// smoothing standard deviation in metres.
pub fn crack_mask(grid: GridSpec, crack: &CrackSpec, sigma: f64) -> ScalarGrid {
    let mut mask = ScalarGrid::constant(grid, 1.0);
    if !crack.present || crack.path.len() < 2 {
        return mask;
    }
    let half = (0.5 * crack.width).max(0.5 * grid.dx.hypot(grid.dy));
    let low = 1.0 - crack.depth_ratio * crack.depth_ratio;
    for w in crack.path.windows(2) {
        let (a, b) = (w[0], w[1]);
        let ci = |x: f64| ((x - grid.origin[0]) / grid.dx).round();
        let cj = |y: f64| ((y - grid.origin[1]) / grid.dy).round();
        let pad_i = (half / grid.dx).ceil() + 1.0;
        let pad_j = (half / grid.dy).ceil() + 1.0;
        let i0 = (ci(a[0].min(b[0])) - pad_i).max(0.0) as usize;
        let i1 = (ci(a[0].max(b[0])) + pad_i).min(grid.nx as f64 - 1.0);
        let j0 = (cj(a[1].min(b[1])) - pad_j).max(0.0) as usize;
        let j1 = (cj(a[1].max(b[1])) + pad_j).min(grid.ny as f64 - 1.0);
        if i1 < 0.0 || j1 < 0.0 {
            continue;
        }
        for j in j0..=j1 as usize {
            for i in i0..=i1 as usize {
                if segment_distance(grid.point(i, j), a, b) <= half {
                    mask.values[j * grid.nx + i] = low;
                }
            }
        }
    }
    mask.gaussian_smooth(sigma / grid.dx, sigma / grid.dy)
}
