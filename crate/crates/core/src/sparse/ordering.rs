//! Geometric nested dissection.
//!
//! Each subdomain is split at the median coordinate along its longest
//! extent. The separator is the set of vertices on the smaller side that have
//! a neighbour across the cut, so the two remaining parts are decoupled in
//! the graph regardless of how the coordinates were produced (periodic
//! seams, merged nodes).

use super::csr::Pattern;

pub const DEFAULT_LEAF_SIZE: usize = 192;

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    /// Elimination positions `[start, end)` of this node's pivots.
    pub start: usize,
    pub end: usize,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
}

/// Postordered separator tree plus the permutation it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct Ordering {
    /// `perm[pos] = dof`
    pub perm: Vec<usize>,
    /// `iperm[dof] = pos`
    pub iperm: Vec<usize>,
    pub nodes: Vec<TreeNode>,
}

struct Builder<'a> {
    pattern: &'a Pattern,
    coords: &'a [[f64; 3]],
    leaf: usize,
    side: Vec<u8>,
    perm: Vec<usize>,
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    fn push(&mut self, pivots: &[usize], children: Vec<usize>) -> usize {
        let start = self.perm.len();
        self.perm.extend_from_slice(pivots);
        let id = self.nodes.len();
        for &c in &children {
            self.nodes[c].parent = Some(id);
        }
        self.nodes.push(TreeNode {
            start,
            end: self.perm.len(),
            children,
            parent: None,
        });
        id
    }

    fn split(&self, set: &[usize]) -> Option<(Vec<usize>, Vec<usize>)> {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &v in set {
            for a in 0..3 {
                lo[a] = lo[a].min(self.coords[v][a]);
                hi[a] = hi[a].max(self.coords[v][a]);
            }
        }
        let mut axes = [0usize, 1, 2];
        axes.sort_by(|&a, &b| (hi[b] - lo[b]).total_cmp(&(hi[a] - lo[a])));
        for axis in axes {
            if hi[axis] <= lo[axis] {
                continue;
            }
            let mut vals: Vec<f64> = set.iter().map(|&v| self.coords[v][axis]).collect();
            let mid = vals.len() / 2;
            let (_, &mut median, _) = vals.select_nth_unstable_by(mid, f64::total_cmp);
            let (a, b): (Vec<usize>, Vec<usize>) = set.iter().partition(|&&v| self.coords[v][axis] < median);
            if !a.is_empty() && !b.is_empty() {
                return Some((a, b));
            }
            // everything at or above the median: split strictly above instead
            let (a, b): (Vec<usize>, Vec<usize>) = set.iter().partition(|&&v| self.coords[v][axis] <= median);
            if !a.is_empty() && !b.is_empty() {
                return Some((a, b));
            }
        }
        None
    }

    fn dissect(&mut self, set: Vec<usize>) -> Option<usize> {
        if set.is_empty() {
            return None;
        }
        if set.len() <= self.leaf {
            return Some(self.push(&set, Vec::new()));
        }
        let Some((a, b)) = self.split(&set) else {
            return Some(self.push(&set, Vec::new()));
        };
        for &v in &a {
            self.side[v] = 1;
        }
        for &v in &b {
            self.side[v] = 2;
        }
        let touches = |v: usize, other: u8, side: &[u8]| self.pattern.row(v).iter().any(|&w| side[w] == other);
        let sep_a: Vec<usize> = a.iter().copied().filter(|&v| touches(v, 2, &self.side)).collect();
        let sep_b: Vec<usize> = b.iter().copied().filter(|&v| touches(v, 1, &self.side)).collect();
        for &v in &set {
            self.side[v] = 0;
        }
        let sep = if sep_a.len() <= sep_b.len() { sep_a } else { sep_b };
        for &v in &sep {
            self.side[v] = 3;
        }
        let rest_a: Vec<usize> = a.into_iter().filter(|&v| self.side[v] != 3).collect();
        let rest_b: Vec<usize> = b.into_iter().filter(|&v| self.side[v] != 3).collect();
        for &v in &sep {
            self.side[v] = 0;
        }
        let children: Vec<usize> = [rest_a, rest_b].into_iter().filter_map(|s| self.dissect(s)).collect();
        Some(self.push(&sep, children))
    }
}

impl Ordering {
    pub fn nested_dissection(pattern: &Pattern, coords: &[[f64; 3]], leaf: usize) -> Self {
        let n = pattern.n;
        assert_eq!(coords.len(), n, "one coordinate per dof");
        let mut b = Builder {
            pattern,
            coords,
            leaf: leaf.max(1),
            side: vec![0; n],
            perm: Vec::with_capacity(n),
            nodes: Vec::new(),
        };
        b.dissect((0..n).collect());
        let mut iperm = vec![0; n];
        for (pos, &dof) in b.perm.iter().enumerate() {
            iperm[dof] = pos;
        }
        Ordering {
            perm: b.perm,
            iperm,
            nodes: b.nodes,
        }
    }
}
