//! Time-harmonic Navier-Lame solves on structured trilinear hexahedra.

mod mesh;

pub use mesh::{Mesh3D, MIN_LAYERS, MIN_NODES_PER_WAVELENGTH};

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::{DispersionTable, DEFAULT_MAX_ORDER};
use crate::em::{gaussian_source, DomainSpec, SolveDiagnostics};
use crate::error::{Error, Result};
use crate::grid::ScalarGrid;
use crate::material::{lame, Material};
use crate::pml::PmlProfile;
use crate::sparse::{CsrMatrix, DirectSolver, FactorOptions, Pattern};
use crate::wavefield::{Provenance, WavefieldGrid};
use crate::weld::CrackSpec;

type C = Complex64;

pub const DEFAULT_DOF_CAP: usize = 3_000_000;
/// Stiffness and density factor of crack void cells.
pub const VOID_RATIO: f64 = 1e-4;

const CHUNK: usize = 2048;
const GAUSS: f64 = 0.577_350_269_189_625_8;

#[derive(Debug, Clone)]
pub struct NlSystem {
    pub mesh: Arc<Mesh3D>,
    pub omega: f64,
    pub k: CsrMatrix,
    pub m: CsrMatrix,
}

impl NlSystem {
    /// `K - omega^2 M`
    pub fn operator(&self) -> CsrMatrix {
        self.k.axpy(C::new(-self.omega * self.omega, 0.0), &self.m)
    }
}

/// Point-wise elastic properties: Young's modulus at a point and a per-element
/// void flag.
pub struct Medium<'a> {
    pub material: Material,
    pub modulus: Box<dyn Fn([f64; 3]) -> f64 + Sync + 'a>,
    /// empty for no voids
    pub voids: Vec<bool>,
}

impl<'a> Medium<'a> {
    pub fn homogeneous(material: Material) -> Self {
        let e = material.youngs_modulus;
        Self {
            material,
            modulus: Box::new(move |_| e),
            voids: Vec::new(),
        }
    }

    /// `E0` times the relative stiffness grid, constant through the thickness.
    pub fn from_stiffness(material: Material, stiffness: &'a ScalarGrid) -> Self {
        let e = material.youngs_modulus;
        Self {
            material,
            modulus: Box::new(move |p| e * stiffness.sample(p[0], p[1])),
            voids: Vec::new(),
        }
    }

    pub fn with_voids(mut self, voids: Vec<bool>) -> Self {
        self.voids = voids;
        self
    }
}

/// Elements under the crack ribbon whose thickness span reaches into the
/// top `c_d H` of the plate.
pub fn crack_voids(mesh: &Mesh3D, crack: &CrackSpec) -> Vec<bool> {
    if !crack.present || crack.path.len() < 2 {
        return vec![false; mesh.element_count()];
    }
    let half = (0.5 * crack.width).max(0.5 * mesh.hx.hypot(mesh.hy));
    let top = mesh.thickness() * (1.0 - crack.depth_ratio);
    (0..mesh.element_count())
        .map(|e| {
            let (i, j, k) = mesh.element_index(e);
            let c = mesh.position(i, j, k);
            let centre = [c[0] + 0.5 * mesh.hx, c[1] + 0.5 * mesh.hy];
            (k + 1) as f64 * mesh.hz > top + 1e-12 * mesh.thickness() && crack.distance(centre) <= half
        })
        .collect()
}

/// Trilinear shape values and reference gradients at `xi`.
fn shape(xi: [f64; 3]) -> ([f64; 8], [[f64; 3]; 8]) {
    let mut n = [0.0; 8];
    let mut g = [[0.0; 3]; 8];
    for a in 0..8 {
        let s = [
            if a & 1 == 1 { 1.0 } else { -1.0 },
            if a & 2 == 2 { 1.0 } else { -1.0 },
            if a & 4 == 4 { 1.0 } else { -1.0 },
        ];
        let f = [1.0 + s[0] * xi[0], 1.0 + s[1] * xi[1], 1.0 + s[2] * xi[2]];
        n[a] = 0.125 * f[0] * f[1] * f[2];
        g[a] = [
            0.125 * s[0] * f[1] * f[2],
            0.125 * s[1] * f[0] * f[2],
            0.125 * s[2] * f[0] * f[1],
        ];
    }
    (n, g)
}

type ElementMatrix = Box<[C; 576]>;

fn element(mesh: &Mesh3D, e: usize, medium: &Medium<'_>, omega: f64, pml: &PmlProfile) -> Result<(ElementMatrix, ElementMatrix)> {
    let (i, j, k) = mesh.element_index(e);
    let o = mesh.position(i, j, k);
    let h = [mesh.hx, mesh.hy, mesh.hz];
    let det = h[0] * h[1] * h[2] / 8.0;
    let void = medium.voids.get(e).copied().unwrap_or(false);
    let scale = if void { VOID_RATIO } else { 1.0 };
    let rho = medium.material.density * scale;
    let nu = medium.material.poisson_ratio;
    let mut ke: ElementMatrix = Box::new([C::new(0.0, 0.0); 576]);
    let mut me: ElementMatrix = Box::new([C::new(0.0, 0.0); 576]);
    for gp in 0..8 {
        let xi = [
            if gp & 1 == 1 { GAUSS } else { -GAUSS },
            if gp & 2 == 2 { GAUSS } else { -GAUSS },
            if gp & 4 == 4 { GAUSS } else { -GAUSS },
        ];
        let x = [
            o[0] + 0.5 * (1.0 + xi[0]) * h[0],
            o[1] + 0.5 * (1.0 + xi[1]) * h[1],
            o[2] + 0.5 * (1.0 + xi[2]) * h[2],
        ];
        let young = (medium.modulus)(x) * scale;
        let (lam, mu) = lame(young, nu);
        if !(lam > 0.0 && mu > 0.0 && lam.is_finite() && mu.is_finite()) {
            return Err(Error::SingularMaterial { lambda: lam, mu });
        }
        let (sx, sy) = pml.stretches([x[0], x[1]], omega);
        let (n, g) = shape(xi);
        let s = [sx, sy, C::new(1.0, 0.0)];
        // stretched physical gradients
        let d: [[C; 3]; 8] = std::array::from_fn(|a| std::array::from_fn(|c| g[a][c] * (2.0 / h[c]) / s[c]));
        let w = sx * sy * det;
        for a in 0..8 {
            for b in 0..8 {
                let dot = d[a][0] * d[b][0] + d[a][1] * d[b][1] + d[a][2] * d[b][2];
                for p in 0..3 {
                    for q in 0..3 {
                        let mut v = lam * d[a][p] * d[b][q] + mu * d[a][q] * d[b][p];
                        if p == q {
                            v += mu * dot;
                        }
                        ke[(3 * a + p) * 24 + 3 * b + q] += w * v;
                    }
                    me[(3 * a + p) * 24 + 3 * b + p] += w * (rho * n[a] * n[b]);
                }
            }
        }
    }
    Ok((ke, me))
}

pub fn pattern(mesh: &Mesh3D) -> Pattern {
    let dofs: Vec<[usize; 24]> = (0..mesh.element_count()).map(|e| mesh.element_dofs(e)).collect();
    Pattern::from_elements(mesh.n_dofs(), dofs.iter().map(|d| d.as_slice()))
}

/// Stiffness and mass with directional stretching in the strain operator
/// and the Jacobian `sx sy` in the weight. Top and bottom faces are
/// traction free.
pub fn assemble_nl(mesh: &Arc<Mesh3D>, medium: &Medium<'_>, omega: f64, pml: &PmlProfile) -> Result<NlSystem> {
    let pat = Arc::new(pattern(mesh));
    let mut k = CsrMatrix::zeros(Arc::clone(&pat));
    let mut m = CsrMatrix::zeros(pat);
    let n = mesh.element_count();
    for start in (0..n).step_by(CHUNK) {
        let end = (start + CHUNK).min(n);
        let mats: Vec<(ElementMatrix, ElementMatrix)> = (start..end)
            .into_par_iter()
            .map(|e| element(mesh, e, medium, omega, pml))
            .collect::<Result<_>>()?;
        for (e, (ke, me)) in (start..end).zip(mats) {
            let d = mesh.element_dofs(e);
            for r in 0..24 {
                for c in 0..24 {
                    k.add(d[r], d[c], ke[r * 24 + c]);
                    let mv = me[r * 24 + c];
                    if mv != C::new(0.0, 0.0) {
                        m.add(d[r], d[c], mv);
                    }
                }
            }
        }
    }
    Ok(NlSystem {
        mesh: Arc::clone(mesh),
        omega,
        k,
        m,
    })
}

/// Consistent nodal load of the traction `-f(x, y) e_z` on the top face.
pub fn surface_load(mesh: &Mesh3D, f: impl Fn([f64; 2]) -> f64 + Sync, omega: f64, pml: &PmlProfile) -> Vec<C> {
    const G3: [(f64, f64); 3] = [(-0.774_596_669_241_483_4, 5.0 / 9.0), (0.0, 8.0 / 9.0), (0.774_596_669_241_483_4, 5.0 / 9.0)];
    let area = 0.25 * mesh.hx * mesh.hy;
    let parts: Vec<[C; 4]> = (0..mesh.nx * mesh.ny)
        .into_par_iter()
        .map(|cell| {
            let (i, j) = (cell % mesh.nx, cell / mesh.nx);
            let o = mesh.position(i, j, mesh.nz);
            let mut fe = [C::new(0.0, 0.0); 4];
            for &(u, wu) in &G3 {
                for &(v, wv) in &G3 {
                    let (tx, ty) = (0.5 * (1.0 + u), 0.5 * (1.0 + v));
                    let x = [o[0] + tx * mesh.hx, o[1] + ty * mesh.hy];
                    let val = f(x);
                    if val == 0.0 {
                        continue;
                    }
                    let (sx, sy) = pml.stretches(x, omega);
                    let nn = [(1.0 - tx) * (1.0 - ty), tx * (1.0 - ty), (1.0 - tx) * ty, tx * ty];
                    for a in 0..4 {
                        fe[a] -= sx * sy * (wu * wv * area * val * nn[a]);
                    }
                }
            }
            fe
        })
        .collect();
    let mut out = vec![C::new(0.0, 0.0); mesh.n_dofs()];
    for (cell, fe) in parts.iter().enumerate() {
        let (i, j) = (cell % mesh.nx, cell / mesh.nx);
        for a in 0..4 {
            out[3 * mesh.node(i + (a & 1), j + (a >> 1), mesh.nz) + 2] += fe[a];
        }
    }
    out
}

/// Unit point force `-e_z` on the top face at `p`.
pub fn point_load(mesh: &Mesh3D, p: [f64; 2]) -> Result<Vec<C>> {
    let (i, j, tx, ty) = mesh.locate_top(p).ok_or(Error::OutOfBounds { x: p[0], y: p[1] })?;
    let mut out = vec![C::new(0.0, 0.0); mesh.n_dofs()];
    let nn = [(1.0 - tx) * (1.0 - ty), tx * (1.0 - ty), (1.0 - tx) * ty, tx * ty];
    for (a, w) in nn.into_iter().enumerate() {
        out[3 * mesh.node(i + (a & 1), j + (a >> 1), mesh.nz) + 2] -= w;
    }
    Ok(out)
}

/// Complex nodal displacements `(u_x, u_y, u_z)`.
#[derive(Debug, Clone)]
pub struct ElasticField {
    pub mesh: Arc<Mesh3D>,
    pub omega: f64,
    pub values: Vec<C>,
}

impl ElasticField {
    pub fn displacement(&self, i: usize, j: usize, k: usize) -> [C; 3] {
        let n = self.mesh.node(i, j, k);
        [self.values[3 * n], self.values[3 * n + 1], self.values[3 * n + 2]]
    }

    fn surface_window(&self, i0: usize, i1: usize, j0: usize, j1: usize) -> Result<WavefieldGrid> {
        let m = &self.mesh;
        let values = (j0..=j1)
            .flat_map(|j| (i0..=i1).map(move |i| (i, j)))
            .map(|(i, j)| self.displacement(i, j, m.nz)[2])
            .collect();
        let o = m.position(i0, j0, m.nz);
        WavefieldGrid::new(i1 - i0 + 1, j1 - j0 + 1, m.hx, m.hy, [o[0], o[1]], self.omega, Provenance::Nl, values)
    }

    /// `u_z` at every top-surface node.
    pub fn extract_surface(&self) -> Result<WavefieldGrid> {
        self.surface_window(0, self.mesh.nx, 0, self.mesh.ny)
    }

    /// `u_z` at the top-surface nodes of the physical region, boundaries
    /// included.
    pub fn physical_surface(&self) -> Result<WavefieldGrid> {
        let m = &self.mesh;
        let [lx, ly] = m.layer_cells;
        self.surface_window(lx, m.nx - lx, ly, m.ny - ly)
    }
}

pub fn extract_surface(field: &ElasticField) -> Result<WavefieldGrid> {
    field.extract_surface()
}

/// Factored operator, reusable across loads.
#[derive(Debug, Clone)]
pub struct NlSolver {
    pub mesh: Arc<Mesh3D>,
    pub omega: f64,
    pub solver: DirectSolver,
}

impl NlSolver {
    pub fn new(system: &NlSystem, options: FactorOptions, dof_cap: usize) -> Result<Self> {
        let dofs = system.mesh.n_dofs();
        if dofs > dof_cap {
            return Err(Error::DofCapExceeded { dofs, cap: dof_cap });
        }
        let solver = DirectSolver::new(system.operator(), &system.mesh.dof_coords(), options)?;
        Ok(Self {
            mesh: Arc::clone(&system.mesh),
            omega: system.omega,
            solver,
        })
    }

    pub fn solve(&self, load: &[C]) -> Result<(ElasticField, SolveDiagnostics)> {
        let (u, report) = self.solver.solve(load)?;
        let diag = SolveDiagnostics {
            dofs: self.mesh.n_dofs(),
            factor: self.solver.diagnostics().clone(),
            solve: report,
        };
        let field = ElasticField {
            mesh: Arc::clone(&self.mesh),
            omega: self.omega,
            values: u,
        };
        Ok((field, diag))
    }
}

pub fn solve_nl(system: &NlSystem, load: &[C], options: FactorOptions, dof_cap: usize) -> Result<(ElasticField, SolveDiagnostics)> {
    NlSolver::new(system, options, dof_cap)?.solve(load)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NlConfig {
    pub max_order: usize,
    pub nodes_per_wavelength: f64,
    pub layers: usize,
    pub dof_cap: usize,
    pub factor: FactorOptions,
}

impl Default for NlConfig {
    fn default() -> Self {
        Self {
            max_order: DEFAULT_MAX_ORDER,
            nodes_per_wavelength: MIN_NODES_PER_WAVELENGTH,
            layers: MIN_LAYERS,
            dof_cap: DEFAULT_DOF_CAP,
            factor: FactorOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NlProblem<'a> {
    pub domain: &'a DomainSpec,
    pub material: &'a Material,
    pub freq_hz: f64,
    pub source: [f64; 2],
    /// relative stiffness `E/E0`; homogeneous when `None`
    pub stiffness: Option<&'a ScalarGrid>,
    pub crack: Option<&'a CrackSpec>,
}

#[derive(Debug, Clone)]
pub struct NlSolution {
    pub table: DispersionTable,
    pub source_sigma: f64,
    pub field: ElasticField,
    pub diagnostics: SolveDiagnostics,
}

/// Meshes, assembles and solves one Gaussian top-surface load of width
/// `lambda_min / 4`.
pub fn simulate_nl(problem: &NlProblem<'_>, config: &NlConfig) -> Result<NlSolution> {
    let omega = 2.0 * PI * problem.freq_hz;
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidFrequency(omega));
    }
    let table = DispersionTable::compute(problem.material, omega, 0.5 * problem.domain.thickness, config.max_order)?;
    let k_max = table.modes.iter().map(|m| m.k).fold(0.0, f64::max);
    if k_max == 0.0 {
        return Err(Error::InvalidInput("no propagating modes".into()));
    }
    let c_max = table.modes.iter().map(|m| m.vp).fold(problem.material.ct(), f64::max);
    let lambda_min = 2.0 * PI / k_max;
    let mesh = Mesh3D::build(problem.domain, lambda_min, config.nodes_per_wavelength, config.layers)?;
    if mesh.n_dofs() > config.dof_cap {
        return Err(Error::DofCapExceeded {
            dofs: mesh.n_dofs(),
            cap: config.dof_cap,
        });
    }
    let mesh = Arc::new(mesh);
    let widths = mesh.layer_widths();
    let pml = if widths[0] > 0.0 || widths[1] > 0.0 {
        PmlProfile::new(mesh.physical(), widths, c_max)
    } else {
        PmlProfile::none()
    };
    let medium = match problem.stiffness {
        Some(s) => Medium::from_stiffness(*problem.material, s),
        None => Medium::homogeneous(*problem.material),
    };
    let medium = match problem.crack {
        Some(c) => medium.with_voids(crack_voids(&mesh, c)),
        None => medium,
    };
    let system = assemble_nl(&mesh, &medium, omega, &pml)?;
    let sigma = 0.25 * lambda_min;
    let load = surface_load(&mesh, gaussian_source(problem.source, sigma), omega, &pml);
    let (field, diagnostics) = solve_nl(&system, &load, config.factor, config.dof_cap)?;
    Ok(NlSolution {
        table,
        source_sigma: sigma,
        field,
        diagnostics,
    })
}
