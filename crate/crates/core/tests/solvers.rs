use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C;

use weldwave::dataset::{generate_sample, DatasetConfig, Model, SampleRecord, INCH};
use weldwave::dispersion::{DispersionTable, ModeId, DEFAULT_MAX_ORDER};
use weldwave::em::{assemble_with, gaussian_source, load_vector, BcClass, DomainSpec, Mesh2D, ModeSolver, DEFAULT_NODE_CAP};
use weldwave::material::Material;
use weldwave::nl::{assemble_nl, surface_load, Medium, Mesh3D, NlSolver, DEFAULT_DOF_CAP};
use weldwave::pml::PmlProfile;
use weldwave::sparse::FactorOptions;

fn a0(freq: f64) -> weldwave::dispersion::LambMode {
    let table = DispersionTable::compute(&Material::steel_like(), 2.0 * PI * freq, 0.125 * INCH, DEFAULT_MAX_ORDER).unwrap();
    *table.get(ModeId::A0).unwrap()
}

fn em_solver(bc: BcClass, l: f64) -> (ModeSolver, Vec<C>) {
    let mode = a0(225e3);
    let omega = mode.omega;
    let d = DomainSpec::new(bc, l, l, 0.25 * INCH, 3.0 * mode.wavelength(), 6).unwrap();
    let mesh = Arc::new(Mesh2D::build(&d, mode.k, None, DEFAULT_NODE_CAP).unwrap());
    let pml = d.pml(mode.vp);
    let sys = assemble_with(&mesh, |_| mode.vp * mode.vp, omega, &pml).unwrap();
    let f = load_vector(&mesh, gaussian_source([0.4 * l, 0.55 * l], mode.wavelength() / 4.0), omega, &pml);
    (ModeSolver::new(sys, FactorOptions::default()).unwrap(), f)
}

fn rel_diff(a: &[C], b: &[C]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let den = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
    num / den
}

#[test]
fn em_zero_load_and_linearity() {
    let (solver, f) = em_solver(BcClass::Scattering, 2.0 * INCH);
    let zero = vec![C::new(0.0, 0.0); f.len()];
    let (u0, _) = solver.solve(&zero).unwrap();
    assert!(u0.values.iter().all(|v| *v == C::new(0.0, 0.0)));

    let (u1, _) = solver.solve(&f).unwrap();
    let f2: Vec<C> = f.iter().map(|v| v * 2.0).collect();
    let (u2, _) = solver.solve(&f2).unwrap();
    let twice: Vec<C> = u1.values.iter().map(|v| v * 2.0).collect();
    assert!(rel_diff(&u2.values, &twice) < 1e-12);
}

#[test]
fn periodic_seam_matches() {
    let l = 2.0 * INCH;
    let (solver, f) = em_solver(BcClass::Periodic, l);
    let (u, _) = solver.solve(&f).unwrap();
    let mesh = &u.mesh;
    let left: Vec<usize> = (0..mesh.nodes.len()).filter(|&n| mesh.nodes[n][0] == 0.0).collect();
    let right: Vec<usize> = (0..mesh.nodes.len()).filter(|&n| mesh.nodes[n][0] == l).collect();
    assert!(left.len() > 10 && left.len() == right.len());
    for &a in &left {
        let b = *right.iter().find(|&&b| mesh.nodes[b][1] == mesh.nodes[a][1]).expect("paired node");
        assert_eq!(u.values[a], u.values[b]);
    }
    // interpolation inside the seam elements differs only by rounding
    for j in 0..=20 {
        let y = l * j as f64 / 20.0;
        let (a, b) = (u.eval([0.0, y]).unwrap(), u.eval([l, y]).unwrap());
        assert!((a - b).norm() <= 1e-14 * a.norm(), "y = {y}");
    }
    assert!(u.eval([0.0, 0.5 * l]).unwrap().norm() > 0.0);
}

fn field_norm(r: &SampleRecord) -> f64 {
    let ch = &r.stack.channels;
    let s: f64 = ch[0].iter().zip(&ch[1]).map(|(&a, &b)| f64::from(a).powi(2) + f64::from(b).powi(2)).sum();
    r.stack.scale * s.sqrt()
}

#[test]
fn crack_changes_field_and_removal_restores_it() {
    let mut cfg = DatasetConfig::new(BcClass::FreeFree, Model::Em, 1, 8);
    cfg.generation.grid = 64;
    let mut p = cfg.params_for(0, cfg.margin().unwrap());
    p.cracked = false;
    let baseline = generate_sample(&p, Model::Em, cfg.freq_hz, &cfg.generation).unwrap();

    let mut cracked = p.clone();
    cracked.cracked = true;
    cracked.crack_depth = cracked.geometry.thickness;
    cracked.crack_length = 0.03;
    let with = generate_sample(&cracked, Model::Em, cfg.freq_hz, &cfg.generation).unwrap();
    assert!(with.label_crack.contains(&1));
    assert!((field_norm(&with) - field_norm(&baseline)).abs() > 0.0);

    let again = generate_sample(&p, Model::Em, cfg.freq_hz, &cfg.generation).unwrap();
    assert_eq!(again.to_bytes().unwrap(), baseline.to_bytes().unwrap());
}

#[test]
fn nl_linearity_and_decay_into_layer() {
    let mode = a0(120e3);
    let m = Material::steel_like();
    let l = 1.5 * INCH;
    let lam = mode.wavelength();
    let d = DomainSpec::new(BcClass::Scattering, l, l, 0.25 * INCH, 3.0 * lam, 6).unwrap();
    let mesh = Arc::new(Mesh3D::build(&d, lam, 10.0, 4).unwrap());
    let pml = PmlProfile::new(mesh.physical(), mesh.layer_widths(), m.cl());
    let sys = assemble_nl(&mesh, &Medium::homogeneous(m), mode.omega, &pml).unwrap();
    let solver = NlSolver::new(&sys, FactorOptions::default(), DEFAULT_DOF_CAP).unwrap();
    let f = surface_load(&mesh, gaussian_source([0.5 * l, 0.5 * l], lam / 4.0), mode.omega, &pml);

    let (zero, _) = solver.solve(&vec![C::new(0.0, 0.0); f.len()]).unwrap();
    assert!(zero.values.iter().all(|v| *v == C::new(0.0, 0.0)));
    let (u, _) = solver.solve(&f).unwrap();
    let f3: Vec<C> = f.iter().map(|v| v * 3.0).collect();
    let (u3, _) = solver.solve(&f3).unwrap();
    let thrice: Vec<C> = u.values.iter().map(|v| v * 3.0).collect();
    assert!(rel_diff(&u3.values, &thrice) < 1e-12);

    // mean |u_z| over bands of columns stepping through the +x layer, rows
    // restricted to the physical strip
    let [lx, ly] = mesh.layer_cells;
    let first = mesh.nx - lx;
    let band = (lx / 4).max(1);
    let means: Vec<f64> = (0..lx / band)
        .map(|b| {
            let cols = first + b * band..first + (b + 1) * band;
            let mut sum = 0.0;
            let mut n = 0;
            for i in cols {
                for j in ly..=mesh.ny - ly {
                    sum += u.displacement(i, j, mesh.nz)[2].norm();
                    n += 1;
                }
            }
            sum / n as f64
        })
        .collect();
    assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
    assert!(means.last().unwrap() < &(0.1 * means[0]), "{means:?}");
}
