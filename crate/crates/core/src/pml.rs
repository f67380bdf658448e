//! Perfectly matched layers by complex coordinate stretching.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub const PML_EXPONENT: f64 = 2.0;
/// Round-trip attenuation the default damping strength is sized for.
pub const PML_ROUND_TRIP_DB: f64 = 60.0;

/// Layers of widths `width[0]` (x) and `width[1]` (y) outside the rectangle
/// `inner = [xmin, xmax, ymin, ymax]`. A zero width disables that direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmlProfile {
    pub p_max: f64,
    pub exponent: f64,
    pub inner: [f64; 4],
    pub width: [f64; 2],
}

/// Damping strength giving `db` decibels of round-trip attenuation for a
/// wave of phase speed `c` through a layer of width `w` with the default
/// quadratic profile.
pub fn p_max_for(c: f64, w: f64, db: f64) -> f64 {
    // one-way amplitude decay exp(-P_max w / ((n + 1) c))
    let ln_ratio = db / 20.0 * std::f64::consts::LN_10;
    (PML_EXPONENT + 1.0) * c * ln_ratio / (2.0 * w)
}

impl PmlProfile {
    pub fn none() -> Self {
        Self {
            p_max: 0.0,
            exponent: PML_EXPONENT,
            inner: [f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY],
            width: [0.0, 0.0],
        }
    }

    pub fn new(inner: [f64; 4], width: [f64; 2], c_max: f64) -> Self {
        let w = width[0].max(width[1]);
        Self {
            p_max: if w > 0.0 { p_max_for(c_max, w, PML_ROUND_TRIP_DB) } else { 0.0 },
            exponent: PML_EXPONENT,
            inner,
            width,
        }
    }

    /// Depth of `v` into the layer on `axis` (0 inside the physical region).
    pub fn depth(&self, axis: usize, v: f64) -> f64 {
        let (lo, hi) = (self.inner[2 * axis], self.inner[2 * axis + 1]);
        (lo - v).max(v - hi).max(0.0)
    }

    pub fn damping(&self, axis: usize, v: f64) -> f64 {
        let w = self.width[axis];
        if w <= 0.0 {
            return 0.0;
        }
        let d = self.depth(axis, v).min(w);
        self.p_max * (d / w).powf(self.exponent)
    }

    /// `xi = 1 + i P / omega`
    pub fn stretch(&self, axis: usize, v: f64, omega: f64) -> Complex64 {
        Complex64::new(1.0, self.damping(axis, v) / omega)
    }

    pub fn stretches(&self, p: [f64; 2], omega: f64) -> (Complex64, Complex64) {
        (self.stretch(0, p[0], omega), self.stretch(1, p[1], omega))
    }
}
