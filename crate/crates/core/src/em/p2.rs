//! Quadratic Lagrange basis on triangles and the 7-point Dunavant rule.

/// `(L1, L2, L3, weight)` with weights summing to one.
pub const QUADRATURE: [(f64, f64, f64, f64); 7] = {
    const A1: f64 = 0.059_715_871_789_770;
    const B1: f64 = 0.470_142_064_105_115;
    const W1: f64 = 0.132_394_152_788_506;
    const A2: f64 = 0.797_426_985_353_087;
    const B2: f64 = 0.101_286_507_323_456;
    const W2: f64 = 0.125_939_180_544_827;
    const T: f64 = 1.0 / 3.0;
    [
        (T, T, T, 0.225),
        (A1, B1, B1, W1),
        (B1, A1, B1, W1),
        (B1, B1, A1, W1),
        (A2, B2, B2, W2),
        (B2, A2, B2, W2),
        (B2, B2, A2, W2),
    ]
};

pub fn barycentric(c: [[f64; 2]; 3], p: [f64; 2]) -> [f64; 3] {
    let det = (c[1][0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (c[1][1] - c[0][1]);
    let l2 = ((p[0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (p[1] - c[0][1])) / det;
    let l3 = ((c[1][0] - c[0][0]) * (p[1] - c[0][1]) - (p[0] - c[0][0]) * (c[1][1] - c[0][1])) / det;
    [1.0 - l2 - l3, l2, l3]
}

pub fn values(l: [f64; 3]) -> [f64; 6] {
    let [a, b, c] = l;
    [
        a * (2.0 * a - 1.0),
        b * (2.0 * b - 1.0),
        c * (2.0 * c - 1.0),
        4.0 * a * b,
        4.0 * b * c,
        4.0 * c * a,
    ]
}

/// Affine map data of a straight-sided triangle.
#[derive(Debug, Clone, Copy)]
pub struct Affine {
    /// gradients of the barycentric coordinates
    pub grad_l: [[f64; 2]; 3],
    pub area: f64,
}

impl Affine {
    pub fn new(c: [[f64; 2]; 3]) -> Self {
        let det = (c[1][0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (c[1][1] - c[0][1]);
        let g2 = [(c[2][1] - c[0][1]) / det, -(c[2][0] - c[0][0]) / det];
        let g3 = [-(c[1][1] - c[0][1]) / det, (c[1][0] - c[0][0]) / det];
        let g1 = [-g2[0] - g3[0], -g2[1] - g3[1]];
        Self {
            grad_l: [g1, g2, g3],
            area: 0.5 * det.abs(),
        }
    }

    pub fn point(c: [[f64; 2]; 3], l: [f64; 3]) -> [f64; 2] {
        [
            l[0] * c[0][0] + l[1] * c[1][0] + l[2] * c[2][0],
            l[0] * c[0][1] + l[1] * c[1][1] + l[2] * c[2][1],
        ]
    }

    pub fn gradients(&self, l: [f64; 3]) -> [[f64; 2]; 6] {
        let g = &self.grad_l;
        let v = |i: usize| [(4.0 * l[i] - 1.0) * g[i][0], (4.0 * l[i] - 1.0) * g[i][1]];
        let e = |i: usize, j: usize| {
            [
                4.0 * (l[i] * g[j][0] + l[j] * g[i][0]),
                4.0 * (l[i] * g[j][1] + l[j] * g[i][1]),
            ]
        };
        [v(0), v(1), v(2), e(0, 1), e(1, 2), e(2, 0)]
    }
}
