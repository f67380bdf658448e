//! Multifrontal `L D L^T` for complex symmetric (not Hermitian) matrices.
//!
//! Fronts follow the nested-dissection tree. Each front is assembled from
//! the original entries of its pivot columns plus the update matrices of its
//! children, partially factored with a blocked right-looking kernel, and
//! its Schur complement handed to the parent. Pivoting is static: a pivot
//! smaller than `pivot_tol * max|A|` is replaced and counted, and the solve
//! recovers accuracy by iterative refinement.

use std::time::Instant;

use faer::linalg::matmul::triangular::{matmul as tri_matmul, BlockStructure};
use faer::linalg::matmul::matmul;
use faer::linalg::triangular_solve::{solve_unit_lower_triangular_in_place, solve_unit_upper_triangular_in_place};
use faer::prelude::{Reborrow, ReborrowMut};
use faer::{Accum, MatMut, MatRef, Par};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::csr::CsrMatrix;
use super::ordering::{Ordering, DEFAULT_LEAF_SIZE};
use crate::error::{Error, Result};

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);
const PANEL: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorOptions {
    pub leaf_size: usize,
    pub pivot_tol: f64,
    pub refine_steps: usize,
    /// Accepted relative residual `|b - Ax| / |b|`.
    pub residual_tol: f64,
    /// Condition estimates above this are treated as a singular operator.
    pub max_condition: f64,
}

impl Default for FactorOptions {
    fn default() -> Self {
        Self {
            leaf_size: DEFAULT_LEAF_SIZE,
            pivot_tol: 1e-10,
            refine_steps: 3,
            residual_tol: 1e-8,
            max_condition: 1e12,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FactorDiagnostics {
    pub dofs: usize,
    pub matrix_nnz: usize,
    pub factor_nnz: usize,
    pub fronts: usize,
    pub max_front: usize,
    pub perturbed_pivots: usize,
    pub pivot_ratio: f64,
    pub factor_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct FrontFactor {
    start: usize,
    p: usize,
    /// positions of the non-pivot rows, ascending
    boundary: Vec<usize>,
    /// `(p + u) x p`, column major, unit lower part holds L
    l: Vec<C>,
}

impl FrontFactor {
    fn nrows(&self) -> usize {
        self.p + self.boundary.len()
    }
}

#[derive(Debug, Clone)]
pub struct LdltFactor {
    n: usize,
    ordering: Ordering,
    fronts: Vec<FrontFactor>,
    d: Vec<C>,
    pub diagnostics: FactorDiagnostics,
}

fn symbolic(a: &CsrMatrix, ord: &Ordering) -> Vec<Vec<usize>> {
    let mut mark = vec![usize::MAX; a.n()];
    let mut bnd: Vec<Vec<usize>> = Vec::with_capacity(ord.nodes.len());
    for (id, node) in ord.nodes.iter().enumerate() {
        let mut rows = Vec::new();
        for &c in &node.children {
            for &r in &bnd[c] {
                if r >= node.end && mark[r] != id {
                    mark[r] = id;
                    rows.push(r);
                }
            }
        }
        for pos in node.start..node.end {
            for &w in a.pattern.row(ord.perm[pos]) {
                let q = ord.iperm[w];
                if q >= node.end && mark[q] != id {
                    mark[q] = id;
                    rows.push(q);
                }
            }
        }
        rows.sort_unstable();
        bnd.push(rows);
    }
    bnd
}

/// Partial factorization of the leading `p` columns of the lower triangle of
/// the `n x n` front `f`. Returns the pivots.
fn partial_ldlt(f: &mut [C], n: usize, p: usize, tol: f64, perturbed: &mut usize) -> Vec<C> {
    let mut d = Vec::with_capacity(p);
    let mut w = vec![ZERO; n * PANEL.min(p.max(1))];
    let mut kb = 0;
    while kb < p {
        let bs = PANEL.min(p - kb);
        for j in kb..kb + bs {
            let mut dj = f[j + j * n];
            if !(dj.norm() >= tol) {
                dj = if dj.norm() > 0.0 { dj / dj.norm() * tol } else { C::new(tol, 0.0) };
                f[j + j * n] = dj;
                *perturbed += 1;
            }
            d.push(dj);
            let wc = (j - kb) * n;
            w[wc + j + 1..wc + n].copy_from_slice(&f[j * n + j + 1..j * n + n]);
            let inv = dj.inv();
            f[j * n + j + 1..j * n + n].iter_mut().for_each(|v| *v *= inv);
            for c in j + 1..kb + bs {
                let s = w[wc + c];
                if s == ZERO {
                    continue;
                }
                let (head, tail) = f.split_at_mut(c * n);
                let lcol = &head[j * n..j * n + n];
                for r in c..n {
                    tail[r] -= lcol[r] * s;
                }
            }
        }
        let t0 = kb + bs;
        let m = n - t0;
        if m > 0 {
            let full = MatMut::from_column_major_slice_mut(f, n, n);
            let (left, right) = full.split_at_col_mut(t0);
            let dst = right.submatrix_mut(t0, 0, m, m);
            let lhs = left.rb().submatrix(t0, kb, m, bs);
            let wv = MatRef::from_column_major_slice(&w[..n * bs], n, bs).submatrix(t0, 0, m, bs);
            tri_matmul(
                dst,
                BlockStructure::TriangularLower,
                Accum::Add,
                lhs,
                BlockStructure::Rectangular,
                wv.transpose(),
                BlockStructure::Rectangular,
                C::new(-1.0, 0.0),
                Par::Seq,
            );
        }
        kb += bs;
    }
    d
}

impl LdltFactor {
    /// Orders with nested dissection on `coords` (one point per dof) and
    /// factors.
    pub fn factor(a: &CsrMatrix, coords: &[[f64; 3]], opts: &FactorOptions) -> Result<Self> {
        let ordering = Ordering::nested_dissection(&a.pattern, coords, opts.leaf_size);
        Self::factor_with_ordering(a, ordering, opts)
    }

    pub fn factor_with_ordering(a: &CsrMatrix, ordering: Ordering, opts: &FactorOptions) -> Result<Self> {
        let t = Instant::now();
        let n = a.n();
        let bnd = symbolic(a, &ordering);
        let anorm = a.max_abs();
        if !(anorm.is_finite()) {
            return Err(Error::FactorizationFailure {
                reason: "matrix has non-finite entries".into(),
                condition_estimate: f64::INFINITY,
            });
        }
        let tol = opts.pivot_tol * anorm.max(f64::MIN_POSITIVE);
        let mut d = vec![ZERO; n];
        let mut loc = vec![0usize; n];
        let mut stack: Vec<(Vec<usize>, Vec<C>)> = Vec::new();
        let mut fronts = Vec::with_capacity(ordering.nodes.len());
        let mut diag = FactorDiagnostics {
            dofs: n,
            matrix_nnz: a.nnz(),
            fronts: ordering.nodes.len(),
            ..Default::default()
        };
        for (id, node) in ordering.nodes.iter().enumerate() {
            let p = node.end - node.start;
            let boundary = bnd[id].clone();
            let u = boundary.len();
            let nf = p + u;
            diag.max_front = diag.max_front.max(nf);
            for (i, pos) in (node.start..node.end).chain(boundary.iter().copied()).enumerate() {
                loc[pos] = i;
            }
            let mut f = vec![ZERO; nf * nf];
            for c in 0..p {
                let pos = node.start + c;
                for (w, v) in a.row(ordering.perm[pos]) {
                    let q = ordering.iperm[w];
                    if q >= pos {
                        f[loc[q] + c * nf] += v;
                    }
                }
            }
            let updates = stack.split_off(stack.len() - node.children.len());
            for (rows, upd) in updates {
                let uc = rows.len();
                for (ca, &ra) in rows.iter().enumerate() {
                    let col = loc[ra] * nf;
                    for rb in ca..uc {
                        f[loc[rows[rb]] + col] += upd[rb + ca * uc];
                    }
                }
            }
            let piv = partial_ldlt(&mut f, nf, p, tol, &mut diag.perturbed_pivots);
            d[node.start..node.end].copy_from_slice(&piv);
            let mut upd = vec![ZERO; u * u];
            for c in 0..u {
                upd[c * u + c..c * u + u].copy_from_slice(&f[(p + c) * nf + p + c..(p + c) * nf + nf]);
            }
            f.truncate(nf * p);
            f.shrink_to_fit();
            diag.factor_nnz += nf * p - p * (p + 1) / 2;
            stack.push((boundary.clone(), upd));
            fronts.push(FrontFactor {
                start: node.start,
                p,
                boundary,
                l: f,
            });
        }
        let (dmin, dmax) = d
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v.norm()), hi.max(v.norm())));
        if !d.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::FactorizationFailure {
                reason: "non-finite pivot".into(),
                condition_estimate: f64::INFINITY,
            });
        }
        diag.pivot_ratio = if n == 0 { 1.0 } else { dmin / dmax };
        diag.factor_seconds = t.elapsed().as_secs_f64();
        Ok(Self {
            n,
            ordering,
            fronts,
            d,
            diagnostics: diag,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves `A X = B` for `nrhs` right-hand sides stored column-major in
    /// `b`, overwriting it with `X`.
    pub fn solve_in_place(&self, b: &mut [C], nrhs: usize) {
        let n = self.n;
        assert_eq!(b.len(), n * nrhs);
        let perm = &self.ordering.perm;
        let mut y = vec![ZERO; n * nrhs];
        for k in 0..nrhs {
            for pos in 0..n {
                y[pos + k * n] = b[perm[pos] + k * n];
            }
        }
        let mut buf = Vec::new();
        for fr in &self.fronts {
            self.gather(fr, &y, n, nrhs, &mut buf);
            let nf = fr.nrows();
            let (p, u) = (fr.p, fr.boundary.len());
            let l = MatRef::from_column_major_slice(&fr.l, nf, p);
            let mut x = MatMut::from_column_major_slice_mut(&mut buf, nf, nrhs);
            let (mut top, mut bot) = x.rb_mut().split_at_row_mut(p);
            solve_unit_lower_triangular_in_place(l.submatrix(0, 0, p, p), top.rb_mut(), Par::Seq);
            if u > 0 && p > 0 {
                matmul(bot.rb_mut(), Accum::Add, l.submatrix(p, 0, u, p), top.rb(), C::new(-1.0, 0.0), Par::Seq);
            }
            self.scatter(fr, &buf, &mut y, n, nrhs);
        }
        for k in 0..nrhs {
            for pos in 0..n {
                y[pos + k * n] /= self.d[pos];
            }
        }
        for fr in self.fronts.iter().rev() {
            self.gather(fr, &y, n, nrhs, &mut buf);
            let nf = fr.nrows();
            let (p, u) = (fr.p, fr.boundary.len());
            let l = MatRef::from_column_major_slice(&fr.l, nf, p);
            let mut x = MatMut::from_column_major_slice_mut(&mut buf, nf, nrhs);
            let (mut top, bot) = x.rb_mut().split_at_row_mut(p);
            if u > 0 && p > 0 {
                matmul(
                    top.rb_mut(),
                    Accum::Add,
                    l.submatrix(p, 0, u, p).transpose(),
                    bot.rb(),
                    C::new(-1.0, 0.0),
                    Par::Seq,
                );
            }
            solve_unit_upper_triangular_in_place(l.submatrix(0, 0, p, p).transpose(), top.rb_mut(), Par::Seq);
            self.scatter(fr, &buf, &mut y, n, nrhs);
        }
        for k in 0..nrhs {
            for pos in 0..n {
                b[perm[pos] + k * n] = y[pos + k * n];
            }
        }
    }

    fn gather(&self, fr: &FrontFactor, y: &[C], n: usize, nrhs: usize, buf: &mut Vec<C>) {
        let nf = fr.nrows();
        buf.clear();
        buf.resize(nf * nrhs, ZERO);
        for k in 0..nrhs {
            let col = &mut buf[k * nf..(k + 1) * nf];
            col[..fr.p].copy_from_slice(&y[k * n + fr.start..k * n + fr.start + fr.p]);
            for (i, &r) in fr.boundary.iter().enumerate() {
                col[fr.p + i] = y[k * n + r];
            }
        }
    }

    fn scatter(&self, fr: &FrontFactor, buf: &[C], y: &mut [C], n: usize, nrhs: usize) {
        let nf = fr.nrows();
        for k in 0..nrhs {
            let col = &buf[k * nf..(k + 1) * nf];
            y[k * n + fr.start..k * n + fr.start + fr.p].copy_from_slice(&col[..fr.p]);
            for (i, &r) in fr.boundary.iter().enumerate() {
                y[k * n + r] = col[fr.p + i];
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub relative_residual: f64,
    pub refinement_steps: usize,
    /// Lower bound `|A| |x| / |b|` on the condition number, combined with the
    /// pivot spread.
    pub condition_estimate: f64,
}

fn norm2(v: &[C]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Sparse direct solver: a matrix together with its factorization.
#[derive(Debug, Clone)]
pub struct DirectSolver {
    pub matrix: CsrMatrix,
    pub factor: LdltFactor,
    pub options: FactorOptions,
}

impl DirectSolver {
    pub fn new(matrix: CsrMatrix, coords: &[[f64; 3]], options: FactorOptions) -> Result<Self> {
        let factor = LdltFactor::factor(&matrix, coords, &options)?;
        Ok(Self {
            matrix,
            factor,
            options,
        })
    }

    pub fn diagnostics(&self) -> &FactorDiagnostics {
        &self.factor.diagnostics
    }

    /// Solves for several right-hand sides (column-major), refining each until
    /// the residual meets the tolerance.
    pub fn solve_many(&self, b: &[C], nrhs: usize) -> Result<(Vec<C>, SolveReport)> {
        let n = self.factor.n();
        let mut x = b.to_vec();
        self.factor.solve_in_place(&mut x, nrhs);
        let anorm = self.matrix.norm_inf();
        let mut report = SolveReport::default();
        let pivot_spread = if self.factor.diagnostics.pivot_ratio > 0.0 {
            1.0 / self.factor.diagnostics.pivot_ratio
        } else {
            f64::INFINITY
        };
        for k in 0..nrhs {
            let bk = &b[k * n..(k + 1) * n];
            let bnorm = norm2(bk);
            if bnorm == 0.0 {
                x[k * n..(k + 1) * n].iter_mut().for_each(|v| *v = ZERO);
                continue;
            }
            let mut steps = 0;
            let mut rel;
            loop {
                let xk = &x[k * n..(k + 1) * n];
                let ax = self.matrix.matvec(xk);
                let mut r: Vec<C> = bk.iter().zip(&ax).map(|(b, a)| b - a).collect();
                rel = norm2(&r) / bnorm;
                if rel <= self.options.residual_tol || steps >= self.options.refine_steps || !rel.is_finite() {
                    break;
                }
                self.factor.solve_in_place(&mut r, 1);
                x[k * n..(k + 1) * n].iter_mut().zip(&r).for_each(|(a, d)| *a += d);
                steps += 1;
            }
            let xinf = x[k * n..(k + 1) * n].iter().map(|v| v.norm()).fold(0.0, f64::max);
            let binf = bk.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let cond = (anorm * xinf / binf).max(pivot_spread);
            report.condition_estimate = report.condition_estimate.max(cond);
            report.relative_residual = report.relative_residual.max(rel);
            report.refinement_steps = report.refinement_steps.max(steps);
        }
        if !(report.relative_residual <= self.options.residual_tol) {
            return Err(Error::FactorizationFailure {
                reason: format!("relative residual {:.3e} after refinement", report.relative_residual),
                condition_estimate: report.condition_estimate,
            });
        }
        if report.condition_estimate > self.options.max_condition {
            return Err(Error::FactorizationFailure {
                reason: "operator is numerically singular".into(),
                condition_estimate: report.condition_estimate,
            });
        }
        Ok((x, report))
    }

    pub fn solve(&self, b: &[C]) -> Result<(Vec<C>, SolveReport)> {
        self.solve_many(b, 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::prelude::*;
    use faer::sparse::{SparseColMat, Triplet};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Shifted 2D Laplacian-like complex symmetric matrix with random
    /// complex weights on a structured grid.
    fn test_matrix(nx: usize, ny: usize, seed: u64) -> (CsrMatrix, Vec<[f64; 3]>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let id = |i: usize, j: usize| j * nx + i;
        let mut t = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let a = id(i, j);
                t.push((a, a, C::new(4.0 - 3.5 * rng.random::<f64>(), 0.3 * rng.random::<f64>())));
                let mut link = |b: usize, rng: &mut ChaCha8Rng| {
                    let v = C::new(-1.0 + 0.2 * rng.random::<f64>(), 0.1 * rng.random::<f64>());
                    t.push((a, b, v));
                    t.push((b, a, v));
                };
                if i + 1 < nx {
                    link(id(i + 1, j), &mut rng);
                }
                if j + 1 < ny {
                    link(id(i, j + 1), &mut rng);
                }
                if i + 1 < nx && j + 1 < ny {
                    link(id(i + 1, j + 1), &mut rng);
                }
            }
        }
        let coords = (0..ny)
            .flat_map(|j| (0..nx).map(move |i| [i as f64, j as f64, 0.0]))
            .collect();
        (CsrMatrix::from_triplets(nx * ny, &t), coords)
    }

    fn rhs(n: usize, seed: u64) -> Vec<C> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
    }

    #[test]
    fn agrees_with_sparse_lu() {
        let (a, coords) = test_matrix(37, 23, 1);
        let n = a.n();
        let b = rhs(n, 2);
        let opts = FactorOptions {
            leaf_size: 40,
            ..Default::default()
        };
        let solver = DirectSolver::new(a.clone(), &coords, opts).unwrap();
        let (x, rep) = solver.solve(&b).unwrap();
        assert!(rep.relative_residual < 1e-10);

        let trip: Vec<Triplet<usize, usize, C>> = (0..n)
            .flat_map(|r| a.row(r).map(move |(c, v)| Triplet::new(r, c, v)).collect::<Vec<_>>())
            .collect();
        let sp = SparseColMat::<usize, C>::try_new_from_triplets(n, n, &trip).unwrap();
        let lu = sp.sp_lu().unwrap();
        let mut xm = faer::Mat::<C>::from_fn(n, 1, |i, _| b[i]);
        lu.solve_in_place(xm.as_mut());
        let diff: f64 = (0..n).map(|i| (xm[(i, 0)] - x[i]).norm_sqr()).sum::<f64>().sqrt();
        assert!(diff / norm2(&x) < 1e-10, "{diff}");
    }

    #[test]
    fn multiple_rhs_match_single() {
        let (a, coords) = test_matrix(20, 20, 3);
        let n = a.n();
        let f = LdltFactor::factor(&a, &coords, &FactorOptions { leaf_size: 16, ..Default::default() }).unwrap();
        let b1 = rhs(n, 4);
        let b2 = rhs(n, 5);
        let mut both: Vec<C> = b1.iter().chain(&b2).copied().collect();
        f.solve_in_place(&mut both, 2);
        let mut x1 = b1.clone();
        f.solve_in_place(&mut x1, 1);
        let mut x2 = b2.clone();
        f.solve_in_place(&mut x2, 1);
        for i in 0..n {
            assert!((both[i] - x1[i]).norm() < 1e-12);
            assert!((both[n + i] - x2[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let (a, coords) = test_matrix(9, 9, 6);
        let s = DirectSolver::new(a, &coords, FactorOptions::default()).unwrap();
        let (x, _) = s.solve(&vec![ZERO; 81]).unwrap();
        assert!(x.iter().all(|v| *v == ZERO));
    }

    #[test]
    fn singular_matrix_reported() {
        // rank-one-deficient: a graph Laplacian has the constant null vector
        let n = 30;
        let mut t = Vec::new();
        for i in 0..n - 1 {
            t.push((i, i, C::new(1.0, 0.0)));
            t.push((i + 1, i + 1, C::new(1.0, 0.0)));
            t.push((i, i + 1, C::new(-1.0, 0.0)));
            t.push((i + 1, i, C::new(-1.0, 0.0)));
        }
        let a = CsrMatrix::from_triplets(n, &t);
        let coords: Vec<[f64; 3]> = (0..n).map(|i| [i as f64, 0.0, 0.0]).collect();
        let s = DirectSolver::new(a, &coords, FactorOptions { leaf_size: 4, ..Default::default() }).unwrap();
        let b = rhs(n, 7);
        assert!(matches!(s.solve(&b), Err(Error::FactorizationFailure { .. })));
    }
}
