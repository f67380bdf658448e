//! Uniform complex surface grids and the operations on them.

mod corrupt;
mod fft;
mod filter;
mod scan;
mod stack;

pub use corrupt::{synth_corrupt, CorruptionRecord, CorruptionSpec, MaskMode, SigmaRule};
pub use fft::{fft2, ifft2, radial_spectrum, wavenumbers, RadialSpectrum};
pub use filter::{filter_sigma, mode_filter, mode_filter_gain};
pub use scan::{crop_centered, export_scan, import_scan, read_scan, ScanMeta};
pub use stack::{build_channel_stack, ChannelStack, CHANNELS, CHANNEL_NAMES};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::em::ComplexField;
use crate::error::{Error, Result};

type C = Complex64;

pub const MIN_GRID: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Provenance {
    Em = 0,
    Nl = 1,
    Scan = 2,
    Generated = 3,
}

impl Provenance {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Provenance::Em),
            1 => Some(Provenance::Nl),
            2 => Some(Provenance::Scan),
            3 => Some(Provenance::Generated),
            _ => None,
        }
    }
}

/// Sample `(i, j)` sits at `origin + (i dx, j dy)`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavefieldGrid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub origin: [f64; 2],
    pub omega: f64,
    pub provenance: Provenance,
    pub values: Vec<C>,
}

/// Anything that can be evaluated at a point of the plane.
pub trait Sampled {
    fn sample_at(&self, p: [f64; 2]) -> Result<C>;
    fn omega(&self) -> f64;
    fn provenance(&self) -> Provenance;
}

impl Sampled for ComplexField {
    fn sample_at(&self, p: [f64; 2]) -> Result<C> {
        self.eval(p)
    }

    fn omega(&self) -> f64 {
        self.omega
    }

    fn provenance(&self) -> Provenance {
        Provenance::Em
    }
}

impl Sampled for WavefieldGrid {
    fn sample_at(&self, p: [f64; 2]) -> Result<C> {
        self.bilinear(p)
    }

    fn omega(&self) -> f64 {
        self.omega
    }

    fn provenance(&self) -> Provenance {
        self.provenance
    }
}

impl WavefieldGrid {
    pub fn new(
        nx: usize,
        ny: usize,
        dx: f64,
        dy: f64,
        origin: [f64; 2],
        omega: f64,
        provenance: Provenance,
        values: Vec<C>,
    ) -> Result<Self> {
        if nx < MIN_GRID || ny < MIN_GRID {
            return Err(Error::ShapeMismatch {
                expected: format!("at least {MIN_GRID}x{MIN_GRID}"),
                found: format!("{nx}x{ny}"),
            });
        }
        if values.len() != nx * ny {
            return Err(Error::ShapeMismatch {
                expected: format!("{} values", nx * ny),
                found: format!("{}", values.len()),
            });
        }
        if !(dx > 0.0 && dy > 0.0) {
            return Err(Error::InvalidInput("grid spacing must be positive".into()));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidInput("wavefield contains non-finite values".into()));
        }
        Ok(Self {
            nx,
            ny,
            dx,
            dy,
            origin,
            omega,
            provenance,
            values,
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            values: vec![C::new(0.0, 0.0); self.values.len()],
            ..self.clone()
        }
    }

    pub fn with_values(&self, values: Vec<C>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self { values, ..self.clone() }
    }

    pub fn at(&self, i: usize, j: usize) -> C {
        self.values[j * self.nx + i]
    }

    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [self.origin[0] + i as f64 * self.dx, self.origin[1] + j as f64 * self.dy]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.dx == other.dx && self.dy == other.dy && self.origin == other.origin
    }

    /// Bilinear interpolation inside the sample hull.
    pub fn bilinear(&self, p: [f64; 2]) -> Result<C> {
        let fx = (p[0] - self.origin[0]) / self.dx;
        let fy = (p[1] - self.origin[1]) / self.dy;
        let eps = 1e-9;
        if fx < -eps || fy < -eps || fx > (self.nx - 1) as f64 + eps || fy > (self.ny - 1) as f64 + eps {
            return Err(Error::OutOfBounds { x: p[0], y: p[1] });
        }
        let fx = fx.clamp(0.0, (self.nx - 1) as f64);
        let fy = fy.clamp(0.0, (self.ny - 1) as f64);
        let i0 = (fx.floor() as usize).min(self.nx - 2);
        let j0 = (fy.floor() as usize).min(self.ny - 2);
        let (tx, ty) = (fx - i0 as f64, fy - j0 as f64);
        Ok(self.at(i0, j0) * ((1.0 - tx) * (1.0 - ty))
            + self.at(i0 + 1, j0) * (tx * (1.0 - ty))
            + self.at(i0, j0 + 1) * ((1.0 - tx) * ty)
            + self.at(i0 + 1, j0 + 1) * (tx * ty))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// Uniform target: `nx x ny` cell centres of the rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub region: [f64; 4],
    pub nx: usize,
    pub ny: usize,
}

impl Target {
    pub fn spacing(&self) -> (f64, f64) {
        (
            (self.region[1] - self.region[0]) / self.nx as f64,
            (self.region[3] - self.region[2]) / self.ny as f64,
        )
    }

    pub fn origin(&self) -> [f64; 2] {
        let (dx, dy) = self.spacing();
        [self.region[0] + 0.5 * dx, self.region[2] + 0.5 * dy]
    }
}

/// Samples `field` at the target cell centres.
pub fn resample_to_grid(field: &impl Sampled, target: &Target) -> Result<WavefieldGrid> {
    let (dx, dy) = target.spacing();
    let o = target.origin();
    let values = (0..target.ny)
        .flat_map(|j| (0..target.nx).map(move |i| [o[0] + i as f64 * dx, o[1] + j as f64 * dy]))
        .map(|p| field.sample_at(p))
        .collect::<Result<Vec<_>>>()?;
    WavefieldGrid::new(target.nx, target.ny, dx, dy, o, field.omega(), field.provenance(), values)
}

/// Grid-to-grid resampling. Targets whose sample positions coincide with
/// the grid's (to 1e-9 of a pixel) return the grid unchanged.
pub fn regrid(grid: &WavefieldGrid, target: &Target) -> Result<WavefieldGrid> {
    let (dx, dy) = target.spacing();
    let o = target.origin();
    let close = |a: f64, b: f64, scale: f64| (a - b).abs() <= 1e-9 * scale;
    if grid.nx == target.nx
        && grid.ny == target.ny
        && close(grid.dx, dx, dx)
        && close(grid.dy, dy, dy)
        && close(grid.origin[0], o[0], dx)
        && close(grid.origin[1], o[1], dy)
    {
        return Ok(grid.clone());
    }
    resample_to_grid(grid, target)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> WavefieldGrid {
        let (nx, ny) = (10, 12);
        let values = (0..ny)
            .flat_map(|j| (0..nx).map(move |i| C::new(i as f64 * 0.1 + j as f64, -(j as f64))))
            .collect();
        WavefieldGrid::new(nx, ny, 0.1, 0.2, [0.05, 0.1], 1.0, Provenance::Nl, values).unwrap()
    }

    #[test]
    fn regrid_identity() {
        let g = ramp();
        let t = Target {
            region: [0.0, 1.0, 0.0, 2.4],
            nx: 10,
            ny: 12,
        };
        assert_eq!(regrid(&g, &t).unwrap(), g);
        // a linear field is reproduced by bilinear resampling
        let t2 = Target {
            region: [0.1, 0.9, 0.2, 2.2],
            nx: 8,
            ny: 9,
        };
        let r = regrid(&g, &t2).unwrap();
        for j in 0..r.ny {
            for i in 0..r.nx {
                let p = r.point(i, j);
                let want = C::new((p[0] - 0.05) + (p[1] - 0.1) / 0.2, -(p[1] - 0.1) / 0.2);
                assert!((r.at(i, j) - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn shape_checks() {
        assert!(WavefieldGrid::new(4, 10, 1.0, 1.0, [0.0; 2], 1.0, Provenance::Em, vec![C::new(0.0, 0.0); 40]).is_err());
        assert!(WavefieldGrid::new(8, 8, 1.0, 1.0, [0.0; 2], 1.0, Provenance::Em, vec![C::new(0.0, 0.0); 63]).is_err());
        assert!(ramp().bilinear([5.0, 0.5]).is_err());
    }
}
