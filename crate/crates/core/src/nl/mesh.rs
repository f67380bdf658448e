use serde::{Deserialize, Serialize};

use crate::em::DomainSpec;
use crate::error::{Error, Result};

pub const MIN_NODES_PER_WAVELENGTH: f64 = 10.0;
pub const MIN_LAYERS: usize = 4;

/// Structured trilinear hexahedra over the computational box
/// `[x0, x0 + nx hx] x [y0, y0 + ny hy] x [0, H]`. Physical-region
/// boundaries fall on grid lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh3D {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub hx: f64,
    pub hy: f64,
    pub hz: f64,
    pub origin: [f64; 2],
    /// cells in the absorbing layer on each side, per axis
    pub layer_cells: [usize; 2],
    /// x = x_max nodes are merged with x = x_min nodes
    pub periodic: bool,
}

impl Mesh3D {
    /// Spacing at most `lambda_min / nodes_per_wavelength` in-plane and
    /// `H / layers` through the thickness.
    pub fn build(domain: &DomainSpec, lambda_min: f64, nodes_per_wavelength: f64, layers: usize) -> Result<Self> {
        if nodes_per_wavelength < MIN_NODES_PER_WAVELENGTH {
            return Err(Error::InvalidInput(format!(
                "need at least {MIN_NODES_PER_WAVELENGTH} nodes per wavelength, got {nodes_per_wavelength}"
            )));
        }
        if layers < MIN_LAYERS {
            return Err(Error::InvalidInput(format!(
                "need at least {MIN_LAYERS} elements through the thickness, got {layers}"
            )));
        }
        if !(lambda_min > 0.0 && lambda_min.is_finite()) {
            return Err(Error::InvalidInput(format!("invalid wavelength {lambda_min}")));
        }
        let h = lambda_min / nodes_per_wavelength;
        let cells = |l: f64| ((l / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let (px, py) = (cells(domain.lx), cells(domain.ly));
        let (hx, hy) = (domain.lx / px as f64, domain.ly / py as f64);
        let layer = |w: f64, hh: f64| if w > 0.0 { ((w / hh) - 1e-9).ceil() as usize } else { 0 };
        let (lx, ly) = (layer(domain.pml_x, hx), layer(domain.pml_y, hy));
        Ok(Self {
            nx: px + 2 * lx,
            ny: py + 2 * ly,
            nz: layers,
            hx,
            hy,
            hz: domain.thickness / layers as f64,
            origin: [-(lx as f64) * hx, -(ly as f64) * hy],
            layer_cells: [lx, ly],
            periodic: domain.is_periodic(),
        })
    }

    pub fn thickness(&self) -> f64 {
        self.nz as f64 * self.hz
    }

    /// Absorbing-layer widths actually meshed.
    pub fn layer_widths(&self) -> [f64; 2] {
        [self.layer_cells[0] as f64 * self.hx, self.layer_cells[1] as f64 * self.hy]
    }

    pub fn physical(&self) -> [f64; 4] {
        let [wx, wy] = self.layer_widths();
        [
            self.origin[0] + wx,
            self.origin[0] + self.nx as f64 * self.hx - wx,
            self.origin[1] + wy,
            self.origin[1] + self.ny as f64 * self.hy - wy,
        ]
    }

    /// Distinct node columns along x.
    fn columns_x(&self) -> usize {
        if self.periodic {
            self.nx
        } else {
            self.nx + 1
        }
    }

    pub fn node_count(&self) -> usize {
        self.columns_x() * (self.ny + 1) * (self.nz + 1)
    }

    pub fn n_dofs(&self) -> usize {
        3 * self.node_count()
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> usize {
        let i = if self.periodic && i == self.nx { 0 } else { i };
        (k * (self.ny + 1) + j) * self.columns_x() + i
    }

    pub fn position(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.origin[0] + i as f64 * self.hx,
            self.origin[1] + j as f64 * self.hy,
            k as f64 * self.hz,
        ]
    }

    pub fn element_count(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    /// `(i, j, k)` of element `e`, x fastest.
    pub fn element_index(&self, e: usize) -> (usize, usize, usize) {
        (e % self.nx, (e / self.nx) % self.ny, e / (self.nx * self.ny))
    }

    /// Local node `a = ax + 2 ay + 4 az`.
    pub fn element_nodes(&self, e: usize) -> [usize; 8] {
        let (i, j, k) = self.element_index(e);
        std::array::from_fn(|a| self.node(i + (a & 1), j + ((a >> 1) & 1), k + ((a >> 2) & 1)))
    }

    pub fn element_dofs(&self, e: usize) -> [usize; 24] {
        let n = self.element_nodes(e);
        std::array::from_fn(|d| 3 * n[d / 3] + d % 3)
    }

    /// Coordinates of every DOF, for the fill-reducing ordering.
    pub fn dof_coords(&self) -> Vec<[f64; 3]> {
        let mut out = vec![[0.0; 3]; self.n_dofs()];
        for k in 0..=self.nz {
            for j in 0..=self.ny {
                for i in 0..self.columns_x() {
                    let p = self.position(i, j, k);
                    let n = self.node(i, j, k);
                    out[3 * n..3 * n + 3].fill(p);
                }
            }
        }
        out
    }

    /// Top-surface cell containing `p` and its local coordinates in [0, 1]^2.
    pub fn locate_top(&self, p: [f64; 2]) -> Option<(usize, usize, f64, f64)> {
        let fx = (p[0] - self.origin[0]) / self.hx;
        let fy = (p[1] - self.origin[1]) / self.hy;
        let eps = 1e-9;
        if fx < -eps || fy < -eps || fx > self.nx as f64 + eps || fy > self.ny as f64 + eps {
            return None;
        }
        let i = (fx.max(0.0).floor() as usize).min(self.nx - 1);
        let j = (fy.max(0.0).floor() as usize).min(self.ny - 1);
        Some((i, j, (fx - i as f64).clamp(0.0, 1.0), (fy - j as f64).clamp(0.0, 1.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::em::BcClass;

    #[test]
    fn sizing_and_alignment() {
        let d = DomainSpec::new(BcClass::Scattering, 0.1, 0.08, 6e-3, 0.02, 6).unwrap();
        let m = Mesh3D::build(&d, 0.018, 10.0, 4).unwrap();
        assert!(m.hx <= 0.0018 + 1e-15 && m.hy <= 0.0018 + 1e-15);
        let ph = m.physical();
        assert!((ph[0]).abs() < 1e-12 && (ph[1] - 0.1).abs() < 1e-12 && (ph[3] - 0.08).abs() < 1e-12);
        assert!(m.layer_widths()[0] >= 0.02 - 1e-12);
        assert_eq!(m.node_count(), (m.nx + 1) * (m.ny + 1) * 5);
        assert!(Mesh3D::build(&d, 0.018, 8.0, 4).is_err());
        assert!(Mesh3D::build(&d, 0.018, 10.0, 3).is_err());
    }

    #[test]
    fn periodic_merge() {
        let d = DomainSpec::new(BcClass::Periodic, 0.02, 0.02, 6e-3, 0.01, 6).unwrap();
        let m = Mesh3D::build(&d, 0.02, 10.0, 4).unwrap();
        assert_eq!(m.node(m.nx, 3, 2), m.node(0, 3, 2));
        assert_eq!(m.node_count(), m.nx * (m.ny + 1) * 5);
        let mut seen = vec![false; m.node_count()];
        (0..m.element_count()).flat_map(|e| m.element_nodes(e)).for_each(|n| seen[n] = true);
        assert!(seen.iter().all(|&s| s));
    }
}
