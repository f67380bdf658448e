use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::mesh::Mesh2D;
use super::p2::{self, Affine, QUADRATURE};
use crate::error::{Error, Result};
use crate::grid::ScalarGrid;
use crate::pml::PmlProfile;
use crate::sparse::{CsrMatrix, Pattern};

type C = Complex64;

const CHUNK: usize = 4096;

/// Stiffness and mass of `-div(kappa grad psi) - omega^2 psi` on a shared
/// pattern.
#[derive(Debug, Clone)]
pub struct EmSystem {
    pub mesh: Arc<Mesh2D>,
    pub omega: f64,
    pub k: CsrMatrix,
    pub m: CsrMatrix,
}

impl EmSystem {
    /// `K - omega^2 M`
    pub fn operator(&self) -> CsrMatrix {
        self.k.axpy(C::new(-self.omega * self.omega, 0.0), &self.m)
    }
}

/// `kappa = (Phi vp C)^2` sampled from the material grids.
pub fn kappa_from<'a>(phi: &'a ScalarGrid, mask: &'a ScalarGrid, vp: f64) -> impl Fn([f64; 2]) -> f64 + Sync + 'a {
    move |p| (phi.sample(p[0], p[1]) * vp * mask.sample(p[0], p[1])).powi(2)
}

fn element(
    mesh: &Mesh2D,
    t: usize,
    kappa: &(impl Fn([f64; 2]) -> f64 + Sync),
    omega: f64,
    pml: &PmlProfile,
) -> Result<([C; 36], [C; 36])> {
    let c = mesh.corners(t);
    let aff = Affine::new(c);
    let mut ke = [C::new(0.0, 0.0); 36];
    let mut me = [C::new(0.0, 0.0); 36];
    for &(l1, l2, l3, w) in &QUADRATURE {
        let l = [l1, l2, l3];
        let x = Affine::point(c, l);
        let kap = kappa(x);
        if !(kap > 0.0 && kap.is_finite()) {
            return Err(Error::SingularCoefficient {
                value: kap,
                x: x[0],
                y: x[1],
            });
        }
        let (sx, sy) = pml.stretches(x, omega);
        let wa = w * aff.area;
        let cxx = kap * wa * sy / sx;
        let cyy = kap * wa * sx / sy;
        let cm = wa * sx * sy;
        let g = aff.gradients(l);
        let n = p2::values(l);
        for i in 0..6 {
            for j in 0..6 {
                ke[6 * i + j] += cxx * (g[i][0] * g[j][0]) + cyy * (g[i][1] * g[j][1]);
                me[6 * i + j] += cm * (n[i] * n[j]);
            }
        }
    }
    Ok((ke, me))
}

pub fn pattern(mesh: &Mesh2D) -> Pattern {
    let dofs: Vec<[usize; 6]> = (0..mesh.triangles.len()).map(|t| mesh.element_dofs(t)).collect();
    Pattern::from_elements(mesh.n_dofs, dofs.iter().map(|d| d.as_slice()))
}

/// Assembles K and M for a scalar coefficient field. Element matrices are
/// computed in parallel and summed in element order.
pub fn assemble_with(
    mesh: &Arc<Mesh2D>,
    kappa: impl Fn([f64; 2]) -> f64 + Sync,
    omega: f64,
    pml: &PmlProfile,
) -> Result<EmSystem> {
    let pat = Arc::new(pattern(mesh));
    let mut k = CsrMatrix::zeros(Arc::clone(&pat));
    let mut m = CsrMatrix::zeros(pat);
    let n = mesh.triangles.len();
    for start in (0..n).step_by(CHUNK) {
        let end = (start + CHUNK).min(n);
        let mats: Vec<([C; 36], [C; 36])> = (start..end)
            .into_par_iter()
            .map(|t| element(mesh, t, &kappa, omega, pml))
            .collect::<Result<_>>()?;
        for (t, (ke, me)) in (start..end).zip(mats) {
            let d = mesh.element_dofs(t);
            for i in 0..6 {
                for j in 0..6 {
                    k.add(d[i], d[j], ke[6 * i + j]);
                    m.add(d[i], d[j], me[6 * i + j]);
                }
            }
        }
    }
    Ok(EmSystem {
        mesh: Arc::clone(mesh),
        omega,
        k,
        m,
    })
}

pub fn assemble(
    mesh: &Arc<Mesh2D>,
    phi: &ScalarGrid,
    mask: &ScalarGrid,
    vp: f64,
    omega: f64,
    pml: &PmlProfile,
) -> Result<EmSystem> {
    assemble_with(mesh, kappa_from(phi, mask, vp), omega, pml)
}

/// `F_i = int f phi_i` with the stretched-coordinate weight `sx sy`.
pub fn load_vector(mesh: &Mesh2D, f: impl Fn([f64; 2]) -> f64 + Sync, omega: f64, pml: &PmlProfile) -> Vec<C> {
    let parts: Vec<[C; 6]> = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let c = mesh.corners(t);
            let aff = Affine::new(c);
            let mut fe = [C::new(0.0, 0.0); 6];
            for &(l1, l2, l3, w) in &QUADRATURE {
                let l = [l1, l2, l3];
                let x = Affine::point(c, l);
                let v = f(x);
                if v == 0.0 {
                    continue;
                }
                let (sx, sy) = pml.stretches(x, omega);
                let n = p2::values(l);
                for i in 0..6 {
                    fe[i] += sx * sy * (w * aff.area * v * n[i]);
                }
            }
            fe
        })
        .collect();
    let mut out = vec![C::new(0.0, 0.0); mesh.n_dofs];
    for (t, fe) in parts.iter().enumerate() {
        for (i, d) in mesh.element_dofs(t).into_iter().enumerate() {
            out[d] += fe[i];
        }
    }
    out
}

/// Unit point load: the basis functions evaluated at `p`.
pub fn point_load(mesh: &Mesh2D, p: [f64; 2]) -> Result<Vec<C>> {
    let (t, l) = mesh.locate(p).ok_or(Error::OutOfBounds { x: p[0], y: p[1] })?;
    let mut out = vec![C::new(0.0, 0.0); mesh.n_dofs];
    for (d, v) in mesh.element_dofs(t).into_iter().zip(p2::values(l)) {
        out[d] += v;
    }
    Ok(out)
}

/// Unit-integral isotropic Gaussian centred at `c`.
pub fn gaussian_source(c: [f64; 2], sigma: f64) -> impl Fn([f64; 2]) -> f64 + Sync {
    let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma * sigma);
    move |p| {
        let r2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
        if r2 > 64.0 * sigma * sigma {
            0.0
        } else {
            norm * (-r2 / (2.0 * sigma * sigma)).exp()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{BcClass, DomainSpec};
    use super::*;
    use crate::em::mesh::DEFAULT_NODE_CAP;

    fn small(bc: BcClass) -> Arc<Mesh2D> {
        let d = DomainSpec::new(bc, 0.02, 0.015, 6e-3, 0.004, 6).unwrap();
        Arc::new(Mesh2D::build(&d, 800.0, None, DEFAULT_NODE_CAP).unwrap())
    }

    #[test]
    fn symmetric_and_annihilates_constants() {
        let mesh = small(BcClass::FreeFree);
        let sys = assemble_with(&mesh, |p| 1.0 + p[0] * 30.0, 1e5, &PmlProfile::none()).unwrap();
        assert!(sys.k.symmetry_defect() < 1e-12);
        assert!(sys.m.symmetry_defect() < 1e-12);
        let ones = vec![C::new(1.0, 0.0); mesh.n_dofs];
        let r = sys.k.matvec(&ones);
        assert!(r.iter().all(|v| v.norm() < 1e-9 * sys.k.max_abs()));
        // mass of the constant function is the domain area
        let area: C = sys.m.matvec(&ones).iter().sum();
        let b = DomainSpec::new(BcClass::FreeFree, 0.02, 0.015, 6e-3, 0.004, 6).unwrap().bounds();
        assert!((area.re - (b[1] - b[0]) * (b[3] - b[2])).abs() < 1e-15);
    }

    #[test]
    fn pml_system_is_complex_symmetric() {
        let mesh = small(BcClass::Scattering);
        let b = [0.0, 0.02, 0.0, 0.015];
        let pml = PmlProfile::new(b, [0.004, 0.004], 3000.0);
        let sys = assemble_with(&mesh, |_| 9e6, 2e6, &pml).unwrap();
        let a = sys.operator();
        assert!(a.symmetry_defect() < 1e-12);
        assert!(a.values.iter().any(|v| v.im != 0.0));
    }

    #[test]
    fn singular_coefficient() {
        let mesh = small(BcClass::FreeFree);
        let r = assemble_with(&mesh, |p| if p[0] > 0.01 { -1.0 } else { 1.0 }, 1e5, &PmlProfile::none());
        assert!(matches!(r, Err(Error::SingularCoefficient { .. })));
    }

    #[test]
    fn periodic_rows_merge() {
        let mesh = small(BcClass::Periodic);
        let sys = assemble_with(&mesh, |_| 1.0, 1e5, &PmlProfile::none()).unwrap();
        assert_eq!(sys.k.n(), mesh.n_dofs);
        let ones = vec![C::new(1.0, 0.0); mesh.n_dofs];
        assert!(sys.k.matvec(&ones).iter().all(|v| v.norm() < 1e-9 * sys.k.max_abs()));
    }

    #[test]
    fn gaussian_load_integrates_to_one() {
        let d = DomainSpec::new(BcClass::FreeFree, 0.05, 0.05, 6e-3, 0.0, 6).unwrap();
        let mesh = Mesh2D::build(&d, 800.0, None, DEFAULT_NODE_CAP).unwrap();
        let f = load_vector(&mesh, gaussian_source([0.025, 0.02], 2e-3), 1e5, &PmlProfile::none());
        let total: C = f.iter().sum();
        assert!((total.re - 1.0).abs() < 1e-6, "{total}");
    }
}
