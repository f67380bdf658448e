//! Uniform cell-centred scalar grids.

use serde::{Deserialize, Serialize};

/// Sample `(i, j)` sits at `origin + (i dx, j dy)`, stored row-major
/// (`j * nx + i`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub origin: [f64; 2],
}

impl GridSpec {
    /// Grid of `nx x ny` cell centres tiling `[x0, x0 + lx] x [y0, y0 + ly]`.
    pub fn cell_centred(origin: [f64; 2], lx: f64, ly: f64, nx: usize, ny: usize) -> Self {
        let dx = lx / nx as f64;
        let dy = ly / ny as f64;
        Self {
            nx,
            ny,
            dx,
            dy,
            origin: [origin[0] + 0.5 * dx, origin[1] + 0.5 * dy],
        }
    }

    /// Grid with spacing at most `h` covering the rectangle.
    pub fn covering(origin: [f64; 2], lx: f64, ly: f64, h: f64) -> Self {
        let nx = ((lx / h).ceil() as usize).max(1);
        let ny = ((ly / h).ceil() as usize).max(1);
        Self::cell_centred(origin, lx, ly, nx, ny)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [self.origin[0] + i as f64 * self.dx, self.origin[1] + j as f64 * self.dy]
    }

    pub fn points(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.ny).flat_map(move |j| (0..self.nx).map(move |i| self.point(i, j)))
    }

    /// Extent covered by the cells, `[xmin, xmax, ymin, ymax]`.
    pub fn bounds(&self) -> [f64; 4] {
        [
            self.origin[0] - 0.5 * self.dx,
            self.origin[0] + (self.nx as f64 - 0.5) * self.dx,
            self.origin[1] - 0.5 * self.dy,
            self.origin[1] + (self.ny as f64 - 0.5) * self.dy,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl ScalarGrid {
    pub fn constant(spec: GridSpec, v: f64) -> Self {
        Self {
            spec,
            values: vec![v; spec.len()],
        }
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self {
            spec,
            values: spec.points().map(f).collect(),
        }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.spec.nx + i]
    }

    /// Bilinear interpolation; points outside the sample hull take the
    /// nearest edge value.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let s = &self.spec;
        let fx = ((x - s.origin[0]) / s.dx).clamp(0.0, (s.nx - 1) as f64);
        let fy = ((y - s.origin[1]) / s.dy).clamp(0.0, (s.ny - 1) as f64);
        let i0 = (fx.floor() as usize).min(s.nx.saturating_sub(2));
        let j0 = (fy.floor() as usize).min(s.ny.saturating_sub(2));
        let i1 = (i0 + 1).min(s.nx - 1);
        let j1 = (j0 + 1).min(s.ny - 1);
        let tx = fx - i0 as f64;
        let ty = fy - j0 as f64;
        let v00 = self.at(i0, j0);
        let v10 = self.at(i1, j0);
        let v01 = self.at(i0, j1);
        let v11 = self.at(i1, j1);
        (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            spec: self.spec,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Separable Gaussian smoothing with standard deviations given in cells.
    /// Kernels are truncated at four deviations and renormalized near the
    /// edges so that constants are preserved.
    pub fn gaussian_smooth(&self, sigma_x: f64, sigma_y: f64) -> Self {
        let (nx, ny) = (self.spec.nx, self.spec.ny);
        let tmp = convolve_axis(&self.values, nx, ny, sigma_x, true);
        let values = convolve_axis(&tmp, nx, ny, sigma_y, false);
        Self {
            spec: self.spec,
            values,
        }
    }
}

pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let r = (4.0 * sigma).ceil() as i64;
    (-r..=r)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect()
}

fn convolve_axis(v: &[f64], nx: usize, ny: usize, sigma: f64, along_x: bool) -> Vec<f64> {
    let ker = gaussian_kernel(sigma);
    let r = (ker.len() / 2) as i64;
    let mut out = vec![0.0; v.len()];
    let (len, count) = if along_x { (nx, ny) } else { (ny, nx) };
    for line in 0..count {
        let idx = |t: usize| if along_x { line * nx + t } else { t * nx + line };
        for t in 0..len {
            let mut acc = 0.0;
            let mut wsum = 0.0;
            for (kk, w) in ker.iter().enumerate() {
                let s = t as i64 + kk as i64 - r;
                if s >= 0 && (s as usize) < len {
                    acc += w * v[idx(s as usize)];
                    wsum += w;
                }
            }
            out[idx(t)] = acc / wsum;
        }
    }
    out
}
