//! Per-mode effective-medium Helmholtz solves on P2 triangles.

mod assemble;
mod mesh;
pub mod p2;

pub use assemble::{assemble, assemble_with, gaussian_source, kappa_from, load_vector, pattern, point_load, EmSystem};
pub use mesh::{BaseGrid, Mesh2D, DEFAULT_NODE_CAP};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dispersion::{amplitude_projection, DispersionTable, ModeId, SurfaceForce, DEFAULT_MAX_ORDER};
use crate::error::{Error, Result};
use crate::grid::ScalarGrid;
use crate::material::Material;
use crate::pml::PmlProfile;
use crate::sparse::{DirectSolver, FactorDiagnostics, FactorOptions, SolveReport};
use crate::weld::{impedance_modulation, CrackSpec, ScalingTable};

type C = Complex64;

pub const MIN_ELEMENTS_PER_WAVELENGTH: usize = 6;
/// PML width in wavelengths of the shortest mode.
pub const PML_WAVELENGTHS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcClass {
    /// absorbing layers on all four sides
    Scattering,
    /// periodic in x, absorbing in y
    Periodic,
    /// traction-free coupon edges
    #[serde(rename = "coupon")]
    FreeFree,
}

impl fmt::Display for BcClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BcClass::Scattering => "scattering",
            BcClass::Periodic => "periodic",
            BcClass::FreeFree => "coupon",
        })
    }
}

impl FromStr for BcClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "scattering" => Ok(BcClass::Scattering),
            "periodic" => Ok(BcClass::Periodic),
            "coupon" | "freefree" | "free-free" => Ok(BcClass::FreeFree),
            other => Err(Error::InvalidInput(format!("unknown boundary class {other:?}"))),
        }
    }
}

/// Physical region `[0, lx] x [0, ly]` plus absorbing layers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub lx: f64,
    pub ly: f64,
    pub thickness: f64,
    pub bc: BcClass,
    pub pml_x: f64,
    pub pml_y: f64,
    pub elements_per_wavelength: usize,
}

impl DomainSpec {
    /// Layer widths follow the class: `chi` on absorbing sides, 0 elsewhere.
    pub fn new(bc: BcClass, lx: f64, ly: f64, thickness: f64, chi: f64, epw: usize) -> Result<Self> {
        if !(lx > 0.0 && ly > 0.0 && thickness > 0.0) {
            return Err(Error::InvalidInput("domain dimensions must be positive".into()));
        }
        if epw < MIN_ELEMENTS_PER_WAVELENGTH {
            return Err(Error::InvalidInput(format!(
                "need at least {MIN_ELEMENTS_PER_WAVELENGTH} elements per wavelength, got {epw}"
            )));
        }
        let (pml_x, pml_y) = match bc {
            BcClass::Scattering => (chi, chi),
            BcClass::Periodic => (0.0, chi),
            BcClass::FreeFree => (0.0, 0.0),
        };
        if bc != BcClass::FreeFree && !(chi > 0.0) {
            return Err(Error::InvalidInput(format!("{bc} domain needs a positive layer width")));
        }
        Ok(Self {
            lx,
            ly,
            thickness,
            bc,
            pml_x,
            pml_y,
            elements_per_wavelength: epw,
        })
    }

    pub fn physical(&self) -> [f64; 4] {
        [0.0, self.lx, 0.0, self.ly]
    }

    /// Computational extent including the layers.
    pub fn bounds(&self) -> [f64; 4] {
        [-self.pml_x, self.lx + self.pml_x, -self.pml_y, self.ly + self.pml_y]
    }

    pub fn is_periodic(&self) -> bool {
        self.bc == BcClass::Periodic
    }

    /// Layers must span at least three of the shortest wavelengths.
    pub fn check_layers(&self, lambda_min: f64) -> Result<()> {
        let need = PML_WAVELENGTHS * lambda_min * (1.0 - 1e-9);
        for w in [self.pml_x, self.pml_y] {
            if w > 0.0 && w < need {
                return Err(Error::DomainTooSmall(format!(
                    "absorbing layer {w:.4} m is thinner than {PML_WAVELENGTHS} wavelengths ({need:.4} m)"
                )));
            }
        }
        Ok(())
    }

    pub fn pml(&self, c_max: f64) -> PmlProfile {
        if self.pml_x == 0.0 && self.pml_y == 0.0 {
            return PmlProfile::none();
        }
        PmlProfile::new(self.physical(), [self.pml_x, self.pml_y], c_max)
    }
}

/// Nodal complex values on a mesh.
#[derive(Debug, Clone)]
pub struct ComplexField {
    pub mesh: Arc<Mesh2D>,
    pub omega: f64,
    pub values: Vec<C>,
}

impl ComplexField {
    pub fn from_dofs(mesh: Arc<Mesh2D>, omega: f64, u: &[C]) -> Self {
        let values = mesh.dof_of.iter().map(|&d| u[d]).collect();
        Self { mesh, omega, values }
    }

    /// Quadratic interpolation at `p`.
    pub fn eval(&self, p: [f64; 2]) -> Result<C> {
        let (t, l) = self.mesh.locate(p).ok_or(Error::OutOfBounds { x: p[0], y: p[1] })?;
        Ok(self.mesh.triangles[t]
            .iter()
            .zip(p2::values(l))
            .map(|(&n, v)| self.values[n] * v)
            .sum())
    }

    pub fn same_mesh(&self, other: &ComplexField) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) || *self.mesh == *other.mesh
    }
}

/// `sum_j a_j psi_j`
pub fn superpose(fields: &[(C, &ComplexField)]) -> Result<ComplexField> {
    let (_, first) = fields
        .first()
        .ok_or_else(|| Error::InvalidInput("nothing to superpose".into()))?;
    if fields.iter().any(|(_, f)| !f.same_mesh(first) || f.omega != first.omega) {
        return Err(Error::MeshMismatch);
    }
    let mut values = vec![C::new(0.0, 0.0); first.values.len()];
    for (a, f) in fields {
        values.iter_mut().zip(&f.values).for_each(|(v, x)| *v += a * x);
    }
    Ok(ComplexField {
        mesh: Arc::clone(&first.mesh),
        omega: first.omega,
        values,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub dofs: usize,
    pub factor: FactorDiagnostics,
    pub solve: SolveReport,
}

/// An assembled operator with its factorization, reusable across loads.
#[derive(Debug, Clone)]
pub struct ModeSolver {
    pub system: EmSystem,
    pub solver: DirectSolver,
}

impl ModeSolver {
    pub fn new(system: EmSystem, options: FactorOptions) -> Result<Self> {
        let coords = system.mesh.dof_coords();
        let solver = DirectSolver::new(system.operator(), &coords, options)?;
        Ok(Self { system, solver })
    }

    pub fn solve(&self, f: &[C]) -> Result<(ComplexField, SolveDiagnostics)> {
        let (u, report) = self.solver.solve(f)?;
        let diag = SolveDiagnostics {
            dofs: self.system.mesh.n_dofs,
            factor: self.solver.diagnostics().clone(),
            solve: report,
        };
        Ok((ComplexField::from_dofs(Arc::clone(&self.system.mesh), self.system.omega, &u), diag))
    }
}

/// Factors `K - omega^2 M` and solves for one load.
pub fn solve_mode(system: EmSystem, f: &[C], options: FactorOptions) -> Result<(ComplexField, SolveDiagnostics)> {
    ModeSolver::new(system, options)?.solve(f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub max_order: usize,
    /// restrict to these modes; all propagating modes otherwise
    pub modes: Option<Vec<ModeId>>,
    pub scaling: ScalingTable,
    pub node_cap: usize,
    pub factor: FactorOptions,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_order: DEFAULT_MAX_ORDER,
            modes: None,
            scaling: ScalingTable::default(),
            node_cap: DEFAULT_NODE_CAP,
            factor: FactorOptions::default(),
        }
    }
}

/// Everything an effective-medium run needs besides configuration.
#[derive(Debug, Clone, Copy)]
pub struct EmProblem<'a> {
    pub domain: &'a DomainSpec,
    pub material: &'a Material,
    pub freq_hz: f64,
    /// centre of the Gaussian surface load
    pub source: [f64; 2],
    pub stiffness: &'a ScalarGrid,
    pub thickness: &'a ScalarGrid,
    pub mask: &'a ScalarGrid,
    pub crack: Option<&'a CrackSpec>,
}

#[derive(Debug, Clone)]
pub struct ModeSolution {
    pub id: ModeId,
    pub amplitude: f64,
    pub field: ComplexField,
    pub diagnostics: SolveDiagnostics,
}

#[derive(Debug, Clone)]
pub struct EmSolution {
    pub table: DispersionTable,
    pub source_sigma: f64,
    pub modes: Vec<ModeSolution>,
    pub total: ComplexField,
}

/// Solves every selected mode with its modulated wavespeed and a Gaussian
/// load, then superposes with the projected modal amplitudes.
pub fn simulate_em(problem: &EmProblem<'_>, config: &EmConfig) -> Result<EmSolution> {
    let omega = 2.0 * std::f64::consts::PI * problem.freq_hz;
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidFrequency(omega));
    }
    let h = 0.5 * problem.domain.thickness;
    let mut table = DispersionTable::compute(problem.material, omega, h, config.max_order)?;
    if let Some(ids) = &config.modes {
        if let Some(id) = ids.iter().find(|id| table.get(**id).is_none()) {
            return Err(Error::MissingMode(id.to_string()));
        }
        table = table.restricted(ids);
    }
    if table.modes.is_empty() {
        return Err(Error::InvalidInput("no propagating modes".into()));
    }
    let k_max = table.modes.iter().map(|m| m.k).fold(0.0, f64::max);
    let c_max = table.modes.iter().map(|m| m.vp).fold(0.0, f64::max);
    let lambda_min = 2.0 * std::f64::consts::PI / k_max;
    problem.domain.check_layers(lambda_min)?;
    let sigma = 0.25 * lambda_min;
    let table = amplitude_projection(&table, &SurfaceForce::gaussian(sigma, 4))?;
    let ids: Vec<ModeId> = table.modes.iter().map(|m| m.id()).collect();
    let modulation = impedance_modulation(
        problem.stiffness,
        problem.thickness,
        problem.domain.thickness,
        &config.scaling,
        &ids,
    )?;

    let mesh = Arc::new(Mesh2D::build(problem.domain, k_max, problem.crack, config.node_cap)?);
    let pml = problem.domain.pml(c_max);
    let load = load_vector(&mesh, gaussian_source(problem.source, sigma), omega, &pml);
    let amplitudes = table.amplitudes.clone().unwrap_or_default();

    let mut modes = Vec::with_capacity(table.modes.len());
    for (mode, &amp) in table.modes.iter().zip(&amplitudes) {
        let phi = modulation.get(mode.id()).expect("modulation built for every mode");
        let system = assemble(&mesh, phi, problem.mask, mode.vp, omega, &pml)?;
        let (field, diagnostics) = solve_mode(system, &load, config.factor)?;
        modes.push(ModeSolution {
            id: mode.id(),
            amplitude: amp,
            field,
            diagnostics,
        });
    }
    let parts: Vec<(C, &ComplexField)> = modes.iter().map(|m| (C::new(m.amplitude, 0.0), &m.field)).collect();
    let total = superpose(&parts)?;
    Ok(EmSolution {
        table,
        source_sigma: sigma,
        modes,
        total,
    })
}
