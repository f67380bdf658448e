use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::em::BcClass;

pub const INCH: f64 = 0.0254;

/// Physical plate dimensions of a problem class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassGeometry {
    pub lx: f64,
    pub ly: f64,
    pub thickness: f64,
}

impl ClassGeometry {
    pub fn for_class(bc: BcClass) -> Self {
        let lx = match bc {
            BcClass::FreeFree => 4.0 * INCH,
            BcClass::Scattering | BcClass::Periodic => 8.0 * INCH,
        };
        Self {
            lx,
            ly: 8.0 * INCH,
            thickness: 0.25 * INCH,
        }
    }

    /// Reference length of the crack-length distribution.
    pub fn crack_reference(&self) -> f64 {
        self.lx.min(self.ly)
    }
}

/// Parameters of the distributions that the design table leaves open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamDistributions {
    pub crack_probability: f64,
    pub w0_mean: f64,
    pub w0_std: f64,
    pub eps_v_mean: f64,
    pub eps_v_std: f64,
}

impl Default for ParamDistributions {
    fn default() -> Self {
        Self {
            crack_probability: 0.5,
            w0_mean: 0.3,
            w0_std: 0.05,
            eps_v_mean: 0.05,
            eps_v_std: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleParams {
    pub bc: BcClass,
    pub seed: u64,
    pub index: u64,
    pub geometry: ClassGeometry,
    pub cracked: bool,
    /// `L_c` (m)
    pub crack_length: f64,
    /// `d_c` (m)
    pub crack_depth: f64,
    /// weld angle to the x axis (rad)
    pub weld_angle: f64,
    /// `d_w` (m)
    pub weld_depth: f64,
    /// force location (m)
    pub force_location: [f64; 2],
    /// `W0`
    pub nominal_reduction: f64,
    /// `eps_V`
    pub variation_amplitude: f64,
}

impl SampleParams {
    pub fn depth_ratio(&self) -> f64 {
        self.crack_depth / self.geometry.thickness
    }
}

/// Rejection sampling of a normal restricted to `(lo, hi)`.
fn truncated_normal<R: Rng + ?Sized>(mean: f64, std: f64, lo: f64, hi: f64, rng: &mut R) -> f64 {
    let n = Normal::new(mean, std).expect("finite normal parameters");
    (0..1000)
        .map(|_| n.sample(rng))
        .find(|v| *v > lo && *v < hi)
        .unwrap_or(mean.clamp(lo, hi))
}

/// One draw of every design variable, in a fixed order. `margin` keeps the
/// force location away from the physical boundary.
pub fn sample_params<R: Rng + ?Sized>(
    bc: BcClass,
    geometry: ClassGeometry,
    dist: &ParamDistributions,
    margin: f64,
    rng: &mut R,
) -> SampleParams {
    let ClassGeometry { lx, ly, thickness: h } = geometry;
    let l = geometry.crack_reference();
    let cracked = Bernoulli::new(dist.crack_probability)
        .expect("probability in [0, 1]")
        .sample(rng);
    let crack_length = Uniform::new_inclusive(l / 50.0, l / 2.0).expect("valid range").sample(rng);
    let crack_depth = Uniform::new_inclusive(h / 10.0, h).expect("valid range").sample(rng);
    let angle = Normal::new(0.0, FRAC_PI_4).expect("valid normal").sample(rng);
    let weld_angle = match bc {
        BcClass::Periodic => 0.0,
        _ => angle.clamp(-FRAC_PI_2 + 1e-9, FRAC_PI_2 - 1e-9),
    };
    let weld_depth = Normal::new(h / 5.0, h / 20.0)
        .expect("valid normal")
        .sample(rng)
        .clamp(1e-6 * h, h / 2.0);
    let fx = Normal::new(lx / 2.0, lx / 4.0).expect("valid normal").sample(rng);
    let fy = Normal::new(ly / 4.0, ly / 6.0).expect("valid normal").sample(rng);
    let m = margin.min(0.25 * lx).min(0.25 * ly);
    let force_location = [fx.clamp(m, lx - m), fy.clamp(m, ly - m)];
    let nominal_reduction = truncated_normal(dist.w0_mean, dist.w0_std, 0.0, 1.0, rng);
    let variation_amplitude = truncated_normal(dist.eps_v_mean, dist.eps_v_std, 0.0, f64::INFINITY, rng);
    SampleParams {
        bc,
        seed: 0,
        index: 0,
        geometry,
        cracked,
        crack_length,
        crack_depth,
        weld_angle,
        weld_depth,
        force_location,
        nominal_reduction,
        variation_amplitude,
    }
}
