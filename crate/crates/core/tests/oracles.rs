//! Element matrices, group velocity and weld statistics against routes
//! written independently of the library code.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use weldwave::dispersion::{find_modes, group_velocity, ModeId, Symmetry};
use weldwave::em::{assemble_with, BcClass, DomainSpec, Mesh2D, DEFAULT_NODE_CAP};
use weldwave::grid::{GridSpec, ScalarGrid};
use weldwave::material::Material;
use weldwave::nl::{assemble_nl, Medium, Mesh3D};
use weldwave::pml::PmlProfile;
use weldwave::weld::{crack_walk, variation_field, CrackSpec, WalkParams, WeldPath};

// Quadratic triangle with the right angle at v0 and unit legs, local order
// v0 v1 v2 m01 m12 m20.
const K_REF_X6: [[f64; 6]; 6] = [
    [6.0, 1.0, 1.0, -4.0, 0.0, -4.0],
    [1.0, 3.0, 0.0, -4.0, 0.0, 0.0],
    [1.0, 0.0, 3.0, 0.0, 0.0, -4.0],
    [-4.0, -4.0, 0.0, 16.0, -8.0, 0.0],
    [0.0, 0.0, 0.0, -8.0, 16.0, -8.0],
    [-4.0, 0.0, -4.0, 0.0, -8.0, 16.0],
];
const M_REF_X360: [[f64; 6]; 6] = [
    [6.0, -1.0, -1.0, 0.0, -4.0, 0.0],
    [-1.0, 6.0, -1.0, 0.0, 0.0, -4.0],
    [-1.0, -1.0, 6.0, -4.0, 0.0, 0.0],
    [0.0, 0.0, -4.0, 32.0, 16.0, 16.0],
    [-4.0, 0.0, 0.0, 16.0, 32.0, 16.0],
    [0.0, -4.0, 0.0, 16.0, 16.0, 32.0],
];

#[test]
fn p2_matrices_match_hand_assembly() {
    // two square cells of side 0.01, four right isosceles triangles
    let domain = DomainSpec::new(BcClass::FreeFree, 0.02, 0.01, 0.005, 0.0, 6).unwrap();
    let mesh = Arc::new(Mesh2D::build(&domain, 100.0, None, DEFAULT_NODE_CAP).unwrap());
    assert_eq!(mesh.triangles.len(), 4);
    let kappa = 2.5e7;
    let sys = assemble_with(&mesh, |_| kappa, 1.0, &PmlProfile::none()).unwrap();

    let n = mesh.n_dofs;
    let mut k = vec![0.0; n * n];
    let mut m = vec![0.0; n * n];
    for t in 0..mesh.triangles.len() {
        let c = mesh.corners(t);
        let leg = |a: usize, b: usize| [c[b][0] - c[a][0], c[b][1] - c[a][1]];
        // local vertex holding the right angle
        let r = (0..3)
            .find(|&r| {
                let (u, v) = (leg(r, (r + 1) % 3), leg(r, (r + 2) % 3));
                (u[0] * v[0] + u[1] * v[1]).abs() < 1e-15
            })
            .expect("right triangle");
        let u = leg(r, (r + 1) % 3);
        let area = 0.5 * (u[0] * u[0] + u[1] * u[1]);
        let perm = [r, (r + 1) % 3, (r + 2) % 3, 3 + r, 3 + (r + 1) % 3, 3 + (r + 2) % 3];
        let dofs = mesh.element_dofs(t);
        for a in 0..6 {
            for b in 0..6 {
                let (ga, gb) = (dofs[perm[a]], dofs[perm[b]]);
                k[ga * n + gb] += kappa * K_REF_X6[a][b] / 6.0;
                m[ga * n + gb] += 2.0 * area * M_REF_X360[a][b] / 360.0;
            }
        }
    }
    let (kmax, mmax) = (kappa, 0.01 * 0.01 / 180.0 * 32.0);
    for i in 0..n {
        for j in 0..n {
            let (ks, ms) = (sys.k.get(i, j), sys.m.get(i, j));
            assert!(ks.im == 0.0 && ms.im == 0.0);
            assert!((ks.re - k[i * n + j]).abs() < 1e-12 * kmax, "K[{i},{j}] {} vs {}", ks.re, k[i * n + j]);
            assert!((ms.re - m[i * n + j]).abs() < 1e-12 * mmax, "M[{i},{j}] {} vs {}", ms.re, m[i * n + j]);
        }
    }
}

/// 3x3x3 Gauss, Voigt strain-displacement matrix and isotropic D.
fn hex_oracle(h: [f64; 3], young: f64, nu: f64, rho: f64) -> (Vec<f64>, Vec<f64>) {
    let g = (0.6f64).sqrt();
    let pts = [(-g, 5.0 / 9.0), (0.0, 8.0 / 9.0), (g, 5.0 / 9.0)];
    let lam = young * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = young / (2.0 * (1.0 + nu));
    let mut d = [[0.0; 6]; 6];
    for i in 0..3 {
        d[i][..3].fill(lam);
        d[i][i] += 2.0 * mu;
        d[i + 3][i + 3] = mu;
    }
    let jac = h[0] * h[1] * h[2] / 8.0;
    let mut ke = vec![0.0; 576];
    let mut me = vec![0.0; 576];
    for &(x, wx) in &pts {
        for &(y, wy) in &pts {
            for &(z, wz) in &pts {
                let xi = [x, y, z];
                let mut nval = [0.0; 8];
                let mut grad = [[0.0; 3]; 8];
                for a in 0..8 {
                    let s: [f64; 3] = std::array::from_fn(|c| if (a >> c) & 1 == 1 { 1.0 } else { -1.0 });
                    let f: [f64; 3] = std::array::from_fn(|c| 0.5 * (1.0 + s[c] * xi[c]));
                    nval[a] = f[0] * f[1] * f[2];
                    grad[a] = [
                        s[0] / h[0] * f[1] * f[2],
                        s[1] / h[1] * f[0] * f[2],
                        s[2] / h[2] * f[0] * f[1],
                    ];
                }
                // strains: xx yy zz yz xz xy
                let mut b = [[0.0; 24]; 6];
                for a in 0..8 {
                    let [dx, dy, dz] = grad[a];
                    b[0][3 * a] = dx;
                    b[1][3 * a + 1] = dy;
                    b[2][3 * a + 2] = dz;
                    b[3][3 * a + 1] = dz;
                    b[3][3 * a + 2] = dy;
                    b[4][3 * a] = dz;
                    b[4][3 * a + 2] = dx;
                    b[5][3 * a] = dy;
                    b[5][3 * a + 1] = dx;
                }
                let w = wx * wy * wz * jac;
                for r in 0..24 {
                    for c in 0..24 {
                        let mut acc = 0.0;
                        for i in 0..6 {
                            for j in 0..6 {
                                acc += b[i][r] * d[i][j] * b[j][c];
                            }
                        }
                        ke[r * 24 + c] += w * acc;
                        if r % 3 == c % 3 {
                            me[r * 24 + c] += w * rho * nval[r / 3] * nval[c / 3];
                        }
                    }
                }
            }
        }
    }
    (ke, me)
}

#[test]
fn single_hex_matches_strain_energy_form() {
    let h = [1.3e-3, 0.9e-3, 0.7e-3];
    let mesh = Arc::new(Mesh3D {
        nx: 1,
        ny: 1,
        nz: 1,
        hx: h[0],
        hy: h[1],
        hz: h[2],
        origin: [0.0, 0.0],
        layer_cells: [0, 0],
        periodic: false,
    });
    let mat = Material::steel_like();
    let sys = assemble_nl(&mesh, &Medium::homogeneous(mat), 1.0, &PmlProfile::none()).unwrap();
    let (ke, me) = hex_oracle(h, mat.youngs_modulus, mat.poisson_ratio, mat.density);
    let dofs = mesh.element_dofs(0);
    let kmax = ke.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mmax = me.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for r in 0..24 {
        for c in 0..24 {
            let ks: C = sys.k.get(dofs[r], dofs[c]);
            let ms: C = sys.m.get(dofs[r], dofs[c]);
            assert!((ks.re - ke[r * 24 + c]).abs() < 1e-10 * kmax && ks.im == 0.0, "K[{r},{c}]");
            assert!((ms.re - me[r * 24 + c]).abs() < 1e-10 * mmax && ms.im == 0.0, "M[{r},{c}]");
        }
    }
}

fn a0_k(m: &Material, omega: f64, h: f64) -> f64 {
    find_modes(m, omega, h, 0)
        .unwrap()
        .into_iter()
        .find(|md| md.id() == ModeId::A0)
        .unwrap()
        .k
}

#[test]
fn a0_group_velocity_against_five_point_stencil() {
    // quarter-inch steel at 250 kHz
    let m = Material::steel_like();
    let h = 0.5 * 6.35e-3;
    let omega = 2.0 * PI * 250e3;
    let five = |d: f64| {
        12.0 * d
            / (-a0_k(&m, omega + 2.0 * d, h) + 8.0 * a0_k(&m, omega + d, h) - 8.0 * a0_k(&m, omega - d, h)
                + a0_k(&m, omega - 2.0 * d, h))
    };
    let reference = five(2e-3 * omega);
    let vg = group_velocity(&m, Symmetry::A, 0, omega, h, 1e-3 * omega).unwrap();
    assert!((vg - reference).abs() < 5e-3 * reference, "vg {vg} vs {reference}");

    // central difference error is second order in the step
    let e1 = group_velocity(&m, Symmetry::A, 0, omega, h, 0.08 * omega).unwrap() - reference;
    let e2 = group_velocity(&m, Symmetry::A, 0, omega, h, 0.04 * omega).unwrap() - reference;
    let ratio = e1 / e2;
    assert!((3.5..4.5).contains(&ratio), "error ratio {ratio}");
}

fn lag_correlation(f: &ScalarGrid, lag: usize) -> f64 {
    let (nx, ny) = (f.spec.nx, f.spec.ny);
    let mean = f.values.iter().sum::<f64>() / f.values.len() as f64;
    let v = |i: usize, j: usize| f.values[j * nx + i] - mean;
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..ny {
        for i in 0..nx - lag {
            num += v(i, j) * v(i + lag, j);
            den += v(i, j) * v(i, j);
        }
    }
    num / den
}

#[test]
fn variation_field_is_a_discrete_convolution() {
    let spec = GridSpec::cell_centred([0.0, 0.0], 0.064, 0.064, 64, 64);
    let (eps, bw) = (0.03, 2.5e-3);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let field = variation_field(spec, eps, bw, &mut rng);

    // same white noise, smoothed by a direct 2-D sum over the truncated kernel
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let white: Vec<f64> = (0..64 * 64).map(|_| StandardNormal.sample(&mut rng)).collect();
    let s = bw / spec.dx;
    let r = (4.0 * s).ceil() as i64;
    for j in 0..64i64 {
        for i in 0..64i64 {
            let (mut acc, mut wsum) = (0.0, 0.0);
            for q in (j - r).max(0)..=(j + r).min(63) {
                for p in (i - r).max(0)..=(i + r).min(63) {
                    let d2 = ((p - i).pow(2) + (q - j).pow(2)) as f64;
                    let w = (-d2 / (2.0 * s * s)).exp();
                    acc += w * white[(q * 64 + p) as usize];
                    wsum += w;
                }
            }
            let got = field.values[(j * 64 + i) as usize];
            let want = eps * acc / wsum;
            assert!((got - want).abs() < 1e-12, "({i},{j}) {got} vs {want}");
        }
    }

    // longer kernels give longer correlation
    let corr: Vec<f64> = [1e-3, 2e-3, 4e-3]
        .iter()
        .map(|&b| lag_correlation(&variation_field(spec, eps, b, &mut ChaCha8Rng::seed_from_u64(5)), 3))
        .collect();
    assert!(corr[0] < corr[1] && corr[1] < corr[2], "{corr:?}");
}

fn mean_square_excursion(length: f64, corridor: f64, seed: u64) -> f64 {
    let path = WeldPath::straight([0.0, 0.0], 0.0, 10.0).unwrap();
    let walk = WalkParams {
        step: 5e-4,
        heading_std: 0.35,
        corridor,
    };
    let spec = CrackSpec {
        present: true,
        start: [0.0, 0.0],
        length,
        depth_ratio: 0.5,
        width: 2.5e-4,
        path: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 1000;
    (0..n)
        .map(|_| {
            let c = crack_walk(&spec, &walk, &path, &mut rng).unwrap();
            let end = c.path.last().unwrap();
            end[1] * end[1]
        })
        .sum::<f64>()
        / n as f64
}

#[test]
fn confined_walk_spreads_sublinearly() {
    let r = 2e-3;
    let (short, long) = (5e-3, 40e-3);
    let confined = mean_square_excursion(long, r, 1) / mean_square_excursion(short, r, 2);
    let free = mean_square_excursion(long, 1.0, 1) / mean_square_excursion(short, 1.0, 2);
    // 8x the length: free spreading grows at least linearly
    assert!(free > 8.0, "free ratio {free}");
    assert!(confined < 0.5 * free, "confined {confined} vs free {free}");
    assert!(mean_square_excursion(long, r, 3) <= r * r);
}
