use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::p2;
use super::DomainSpec;
use crate::error::{Error, Result};
use crate::weld::CrackSpec;

pub const DEFAULT_NODE_CAP: usize = 2_000_000;

/// Uniform background cells; every triangle belongs to exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseGrid {
    pub origin: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
}

impl BaseGrid {
    fn vertex(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    fn cell_of(&self, p: [f64; 2]) -> Option<usize> {
        let fx = (p[0] - self.origin[0]) / self.hx;
        let fy = (p[1] - self.origin[1]) / self.hy;
        let eps = 1e-9;
        if fx < -eps || fy < -eps || fx > self.nx as f64 + eps || fy > self.ny as f64 + eps {
            return None;
        }
        let i = (fx.floor().max(0.0) as usize).min(self.nx - 1);
        let j = (fy.floor().max(0.0) as usize).min(self.ny - 1);
        Some(j * self.nx + i)
    }
}

/// Quadratic triangle mesh. Local node order per triangle is
/// `v0, v1, v2, m01, m12, m20`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh2D {
    pub nodes: Vec<[f64; 2]>,
    pub vertex_count: usize,
    pub triangles: Vec<[usize; 6]>,
    /// unknown index of each node; paired periodic nodes share one
    pub dof_of: Vec<usize>,
    pub n_dofs: usize,
    pub periodic: bool,
    pub base: BaseGrid,
    /// background cell of each triangle
    pub cell_of_triangle: Vec<usize>,
    cell_start: Vec<usize>,
    cell_tris: Vec<usize>,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    d1 * d2 <= 0.0 && d3 * d4 <= 0.0
}

fn point_in_triangle(p: [f64; 2], t: [[f64; 2]; 3]) -> bool {
    let c0 = cross(t[0], t[1], p);
    let c1 = cross(t[1], t[2], p);
    let c2 = cross(t[2], t[0], p);
    (c0 >= 0.0 && c1 >= 0.0 && c2 >= 0.0) || (c0 <= 0.0 && c1 <= 0.0 && c2 <= 0.0)
}

/// Distance between a triangle and a polyline.
fn triangle_polyline_distance(t: [[f64; 2]; 3], line: &[[f64; 2]]) -> f64 {
    let mut best = f64::INFINITY;
    for w in line.windows(2) {
        if point_in_triangle(w[0], t) || point_in_triangle(w[1], t) {
            return 0.0;
        }
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            if segments_intersect(a, b, w[0], w[1]) {
                return 0.0;
            }
            best = best
                .min(seg_dist(w[0], a, b))
                .min(seg_dist(w[1], a, b))
                .min(seg_dist(a, w[0], w[1]))
                .min(seg_dist(b, w[0], w[1]));
        }
    }
    best
}

fn seg_dist(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    crate::weld::segment_distance(p, a, b)
}

impl Mesh2D {
    /// Structured mesh of `domain` with spacing `2 pi / (epw k_max)` and one
    /// level of red-green refinement in a band of width `4 w_c` around the
    /// crack.
    pub fn build(domain: &DomainSpec, k_max: f64, crack: Option<&CrackSpec>, node_cap: usize) -> Result<Self> {
        if !(k_max > 0.0 && k_max.is_finite()) {
            return Err(Error::InvalidInput(format!("k_max must be positive, got {k_max}")));
        }
        let h = 2.0 * std::f64::consts::PI / (domain.elements_per_wavelength as f64 * k_max);
        let b = domain.bounds();
        let nx = ((b[1] - b[0]) / h).ceil() as usize;
        let ny = ((b[3] - b[2]) / h).ceil() as usize;
        let estimate = (2 * nx + 1) * (2 * ny + 1);
        if estimate > node_cap {
            return Err(Error::MeshTooLarge {
                nodes: estimate,
                cap: node_cap,
            });
        }
        let base = BaseGrid {
            origin: [b[0], b[2]],
            nx,
            ny,
            hx: (b[1] - b[0]) / nx as f64,
            hy: (b[3] - b[2]) / ny as f64,
        };
        let periodic = domain.is_periodic();

        let mut verts: Vec<[f64; 2]> = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                verts.push([
                    base.origin[0] + i as f64 * base.hx,
                    base.origin[1] + j as f64 * base.hy,
                ]);
            }
        }
        if periodic {
            // exact seam coordinates so pairing is unambiguous
            for j in 0..=ny {
                verts[base.vertex(nx, j)][0] = b[1];
            }
        }
        let mut tris: Vec<[usize; 3]> = Vec::with_capacity(2 * nx * ny);
        let mut tri_cell: Vec<usize> = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let v00 = base.vertex(i, j);
                let v10 = base.vertex(i + 1, j);
                let v01 = base.vertex(i, j + 1);
                let v11 = base.vertex(i + 1, j + 1);
                tris.push([v00, v10, v11]);
                tris.push([v00, v11, v01]);
                tri_cell.extend([j * nx + i; 2]);
            }
        }

        let (tris, tri_cell) = match crack.filter(|c| c.present && c.path.len() >= 2) {
            Some(c) => refine(&base, &mut verts, tris, tri_cell, c, periodic),
            None => (tris, tri_cell),
        };

        let vertex_count = verts.len();
        let mut nodes = verts;
        let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut triangles = Vec::with_capacity(tris.len());
        for t in &tris {
            let mut full = [t[0], t[1], t[2], 0, 0, 0];
            for e in 0..3 {
                let (a, bb) = (t[e], t[(e + 1) % 3]);
                full[3 + e] = *mids.entry(edge_key(a, bb)).or_insert_with(|| {
                    let pa = nodes[a];
                    let pb = nodes[bb];
                    nodes.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                    nodes.len() - 1
                });
            }
            triangles.push(full);
        }
        if nodes.len() > node_cap {
            return Err(Error::MeshTooLarge {
                nodes: nodes.len(),
                cap: node_cap,
            });
        }

        let (dof_of, n_dofs) = if periodic {
            periodic_dofs(&nodes, b[0], b[1], base.hy)
        } else {
            ((0..nodes.len()).collect(), nodes.len())
        };

        let ncell = nx * ny;
        let mut counts = vec![0usize; ncell + 1];
        for &c in &tri_cell {
            counts[c + 1] += 1;
        }
        for c in 0..ncell {
            counts[c + 1] += counts[c];
        }
        let mut fill = counts.clone();
        let mut cell_tris = vec![0usize; tri_cell.len()];
        for (t, &c) in tri_cell.iter().enumerate() {
            cell_tris[fill[c]] = t;
            fill[c] += 1;
        }

        Ok(Self {
            nodes,
            vertex_count,
            triangles,
            dof_of,
            n_dofs,
            periodic,
            base,
            cell_of_triangle: tri_cell,
            cell_start: counts,
            cell_tris,
        })
    }

    pub fn corners(&self, t: usize) -> [[f64; 2]; 3] {
        let tri = &self.triangles[t];
        [self.nodes[tri[0]], self.nodes[tri[1]], self.nodes[tri[2]]]
    }

    /// Bounding-box extent of a triangle.
    pub fn element_size(&self, t: usize) -> f64 {
        let c = self.corners(t);
        let ext = |a: usize| {
            let (lo, hi) = c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[a]), hi.max(p[a])));
            hi - lo
        };
        ext(0).max(ext(1))
    }

    /// `4 sqrt(3) A / sum(l^2)`, 1 for an equilateral triangle.
    pub fn quality(&self, t: usize) -> f64 {
        let c = self.corners(t);
        let area = 0.5 * cross(c[0], c[1], c[2]).abs();
        let l2: f64 = (0..3)
            .map(|e| {
                let (a, b) = (c[e], c[(e + 1) % 3]);
                (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
            })
            .sum();
        4.0 * 3f64.sqrt() * area / l2
    }

    /// Triangle containing `p` and the barycentric coordinates there.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let cell = self.base.cell_of(p)?;
        let mut best: Option<(f64, usize, [f64; 3])> = None;
        for &t in &self.cell_tris[self.cell_start[cell]..self.cell_start[cell + 1]] {
            let l = p2::barycentric(self.corners(t), p);
            let worst = l[0].min(l[1]).min(l[2]);
            if best.as_ref().is_none_or(|(w, _, _)| worst > *w) {
                best = Some((worst, t, l));
            }
        }
        best.filter(|(w, _, _)| *w > -1e-9).map(|(_, t, l)| (t, l))
    }

    /// Coordinates of one representative node per unknown, for ordering.
    pub fn dof_coords(&self) -> Vec<[f64; 3]> {
        let mut out = vec![[f64::NAN; 3]; self.n_dofs];
        for (n, &d) in self.dof_of.iter().enumerate() {
            if out[d][0].is_nan() {
                out[d] = [self.nodes[n][0], self.nodes[n][1], 0.0];
            }
        }
        out
    }

    pub fn element_dofs(&self, t: usize) -> [usize; 6] {
        self.triangles[t].map(|n| self.dof_of[n])
    }
}

/// Nodes on `x = xmax` take the unknown of the node at `x = xmin` with the
/// same `y`.
fn periodic_dofs(nodes: &[[f64; 2]], xmin: f64, xmax: f64, hy: f64) -> (Vec<usize>, usize) {
    let tol = 1e-9 * (xmax - xmin);
    let q = |y: f64| (y / (1e-6 * hy)).round() as i64;
    let mut masters: HashMap<i64, usize> = HashMap::new();
    for (n, p) in nodes.iter().enumerate() {
        if (p[0] - xmin).abs() <= tol {
            masters.insert(q(p[1]), n);
        }
    }
    let mut dof_of = vec![usize::MAX; nodes.len()];
    let mut next = 0;
    for (n, p) in nodes.iter().enumerate() {
        if (p[0] - xmax).abs() <= tol && masters.contains_key(&q(p[1])) {
            continue;
        }
        dof_of[n] = next;
        next += 1;
    }
    for (n, p) in nodes.iter().enumerate() {
        if dof_of[n] == usize::MAX {
            dof_of[n] = dof_of[masters[&q(p[1])]];
        }
    }
    (dof_of, next)
}

/// Single-level red-green refinement of the triangles within `2 w_c` of the
/// crack.
fn refine(
    base: &BaseGrid,
    verts: &mut Vec<[f64; 2]>,
    tris: Vec<[usize; 3]>,
    tri_cell: Vec<usize>,
    crack: &CrackSpec,
    periodic: bool,
) -> (Vec<[usize; 3]>, Vec<usize>) {
    let band = 2.0 * crack.width;
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &crack.path {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let near = |c: [[f64; 2]; 3]| {
        let outside = (0..2).any(|a| {
            c.iter().all(|p| p[a] < lo[a] - band) || c.iter().all(|p| p[a] > hi[a] + band)
        });
        !outside && triangle_polyline_distance(c, &crack.path) <= band
    };
    let corners = |t: &[usize; 3], v: &Vec<[f64; 2]>| [v[t[0]], v[t[1]], v[t[2]]];
    let mut red: Vec<bool> = tris.iter().map(|t| near(corners(t, verts))).collect();
    let mut split: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();
    let seam_partner = |v: usize| -> Option<usize> {
        let (i, j) = (v % (base.nx + 1), v / (base.nx + 1));
        if v >= (base.nx + 1) * (base.ny + 1) {
            None
        } else if i == base.nx {
            Some(base.vertex(0, j))
        } else if i == 0 {
            Some(base.vertex(base.nx, j))
        } else {
            None
        }
    };
    loop {
        let mut changed = false;
        for (t, tri) in tris.iter().enumerate() {
            if red[t] {
                for e in 0..3 {
                    changed |= split.insert(edge_key(tri[e], tri[(e + 1) % 3]));
                }
            }
        }
        if periodic {
            let mirrored: Vec<(usize, usize)> = split
                .iter()
                .filter_map(|&(a, b)| Some(edge_key(seam_partner(a)?, seam_partner(b)?)))
                .collect();
            for e in mirrored {
                changed |= split.insert(e);
            }
        }
        for (t, tri) in tris.iter().enumerate() {
            if !red[t] {
                let n = (0..3).filter(|&e| split.contains(&edge_key(tri[e], tri[(e + 1) % 3]))).count();
                if n >= 2 {
                    red[t] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
    let mut out = Vec::with_capacity(tris.len() + 3 * split.len());
    let mut out_cell = Vec::with_capacity(out.capacity());
    for (t, tri) in tris.iter().enumerate() {
        let mut m = [usize::MAX; 3];
        for e in 0..3 {
            let key = edge_key(tri[e], tri[(e + 1) % 3]);
            if split.contains(&key) {
                m[e] = *mid.entry(key).or_insert_with(|| {
                    let (pa, pb) = (verts[key.0], verts[key.1]);
                    verts.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                    verts.len() - 1
                });
            }
        }
        let [v0, v1, v2] = *tri;
        let cell = tri_cell[t];
        let kids: Vec<[usize; 3]> = if red[t] {
            vec![[v0, m[0], m[2]], [m[0], v1, m[1]], [m[2], m[1], v2], [m[0], m[1], m[2]]]
        } else if let Some(e) = (0..3).find(|&e| m[e] != usize::MAX) {
            let (a, b, c) = (tri[e], tri[(e + 1) % 3], tri[(e + 2) % 3]);
            vec![[a, m[e], c], [m[e], b, c]]
        } else {
            vec![*tri]
        };
        out_cell.extend(std::iter::repeat_n(cell, kids.len()));
        out.extend(kids);
    }
    (out, out_cell)
}
