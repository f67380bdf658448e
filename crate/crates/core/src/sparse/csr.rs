use std::sync::Arc;

use num_complex::Complex64;

/// Sorted compressed-row sparsity pattern, shared between matrices built on
/// the same mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
}

impl Pattern {
    /// Pattern of a finite-element matrix: every pair of dofs sharing an
    /// element is coupled.
    pub fn from_elements<'a>(n: usize, elements: impl Iterator<Item = &'a [usize]>) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for dofs in elements {
            for &r in dofs {
                rows[r].extend_from_slice(dofs);
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
            *row = Vec::new();
        }
        Self { n, row_ptr, col_idx }
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, r: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]]
    }

    pub fn find(&self, r: usize, c: usize) -> Option<usize> {
        let start = self.row_ptr[r];
        self.row(r).binary_search(&c).ok().map(|off| start + off)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub pattern: Arc<Pattern>,
    pub values: Vec<Complex64>,
}

impl CsrMatrix {
    pub fn zeros(pattern: Arc<Pattern>) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); pattern.nnz()];
        Self { pattern, values }
    }

    /// Builds from triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, Complex64)]) -> Self {
        let mut sorted: Vec<(usize, usize, Complex64)> = triplets.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::new();
        let mut values: Vec<Complex64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            pattern: Arc::new(Pattern { n, row_ptr, col_idx }),
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.pattern.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.pattern
            .find(r, c)
            .map_or(Complex64::new(0.0, 0.0), |i| self.values[i])
    }

    /// Adds `v` at `(r, c)`; the entry must exist in the pattern.
    pub fn add(&mut self, r: usize, c: usize, v: Complex64) {
        let i = self
            .pattern
            .find(r, c)
            .unwrap_or_else(|| panic!("entry ({r}, {c}) not in pattern"));
        self.values[i] += v;
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let range = self.pattern.row_ptr[r]..self.pattern.row_ptr[r + 1];
        self.pattern.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n())
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Infinity norm.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n())
            .map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `max |A - A^T| / max |A|`, zero for an exactly symmetric matrix.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for r in 0..self.n() {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r)).norm());
            }
        }
        worst / scale
    }

    /// `self + alpha * other` on a shared pattern.
    pub fn axpy(&self, alpha: Complex64, other: &CsrMatrix) -> CsrMatrix {
        assert!(Arc::ptr_eq(&self.pattern, &other.pattern) || self.pattern == other.pattern);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + alpha * b)
            .collect();
        CsrMatrix {
            pattern: Arc::clone(&self.pattern),
            values,
        }
    }

    pub fn scale(&self, alpha: Complex64) -> CsrMatrix {
        CsrMatrix {
            pattern: Arc::clone(&self.pattern),
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn duplicates_sum() {
        let a = CsrMatrix::from_triplets(2, &[(0, 0, c(1.0)), (1, 0, c(2.0)), (0, 0, c(3.0))]);
        assert_eq!(a.get(0, 0), c(4.0));
        assert_eq!(a.get(1, 0), c(2.0));
        assert_eq!(a.get(0, 1), c(0.0));
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn element_pattern_is_symmetric() {
        let elems = [vec![0usize, 1, 2], vec![2, 3]];
        let p = Pattern::from_elements(4, elems.iter().map(|e| e.as_slice()));
        for r in 0..4 {
            for &cc in p.row(r) {
                assert!(p.find(cc, r).is_some());
            }
        }
        assert!(p.find(0, 3).is_none());
        assert_eq!(p.nnz(), 9 + 4 - 1);
    }

    #[test]
    fn matvec_and_defect() {
        let a = CsrMatrix::from_triplets(2, &[(0, 0, c(2.0)), (0, 1, c(1.0)), (1, 0, c(1.0))]);
        assert_eq!(a.matvec(&[c(1.0), c(1.0)]), vec![c(3.0), c(1.0)]);
        assert_eq!(a.symmetry_defect(), 0.0);
        let b = CsrMatrix::from_triplets(2, &[(0, 1, c(1.0))]);
        assert_eq!(b.symmetry_defect(), 1.0);
    }
}
