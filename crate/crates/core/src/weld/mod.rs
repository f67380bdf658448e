//! Weld stiffness fields, cracks, and per-mode impedance modulation.

mod crack;
mod modulation;
mod path;
mod profile;

pub(crate) use crack::segment_distance;
pub use crack::{crack_mask, crack_walk, CrackSpec, WalkParams};
pub use modulation::{impedance_modulation, ModeScaling, ModulationField, ScalingTable};
pub use path::{Projection, WeldPath};
pub use profile::{boundary_reduction, nominal_profile, variation_field, BeadTrain};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarGrid};

pub const STIFFNESS_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeadSpec {
    /// nominal bump height `a`
    pub height: f64,
    /// mean spacing `s0` (m)
    pub spacing: f64,
    /// bump half-width `sigma_b` (m)
    pub half_width: f64,
    pub exponent: f64,
    /// relative spacing jitter `beta`
    pub jitter: f64,
    /// bound of the uniform relative height perturbation
    pub height_jitter: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeldSpec {
    pub radius: f64,
    pub fillet_ratio: f64,
    /// weld cap depth `d_w` (m)
    pub depth: f64,
    pub nominal_reduction: f64,
    pub variation_amplitude: f64,
    /// standard deviation of the variation smoothing kernel (m)
    pub variation_bandwidth: f64,
    /// `r0` of the boundary taper (m)
    pub boundary_radius: f64,
    /// `w` of the boundary taper (m)
    pub boundary_width: f64,
    pub bead: BeadSpec,
}

impl WeldSpec {
    pub const DEFAULT_RADIUS: f64 = 6.35e-3;
    pub const DEFAULT_FILLET_RATIO: f64 = 0.2;

    /// Default weld of radius `r` with all derived lengths scaled to it.
    pub fn with_radius(r: f64) -> Self {
        Self {
            radius: r,
            fillet_ratio: Self::DEFAULT_FILLET_RATIO,
            depth: 0.0,
            nominal_reduction: 0.3,
            variation_amplitude: 0.05,
            variation_bandwidth: 0.5 * r,
            boundary_radius: r,
            boundary_width: 0.25 * r,
            bead: BeadSpec {
                height: 0.1,
                spacing: r,
                half_width: 0.5 * r,
                exponent: 2.0,
                jitter: 0.3,
                height_jitter: 0.2,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.bead;
        let checks = [
            (self.radius > 0.0, "radius must be positive"),
            (self.fillet_ratio > 0.0 && self.fillet_ratio < 1.0, "fillet ratio must lie in (0, 1)"),
            ((0.0..1.0).contains(&self.nominal_reduction), "nominal reduction must lie in [0, 1)"),
            (self.variation_amplitude >= 0.0, "variation amplitude must be nonnegative"),
            (self.variation_bandwidth > 0.0, "variation bandwidth must be positive"),
            (
                self.boundary_radius > self.boundary_width && self.boundary_width > 0.0,
                "boundary taper needs r0 > w > 0",
            ),
            (b.half_width > 0.0 && b.exponent > 0.0, "bead half-width and exponent must be positive"),
            (b.spacing > 0.0 && (0.0..1.0).contains(&b.jitter), "bead spacing must be positive, jitter in [0, 1)"),
            (self.depth >= 0.0, "weld depth must be nonnegative"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::InvalidInput((*msg).into())),
            None => Ok(()),
        }
    }

    pub fn profile(&self, d_perp: f64) -> f64 {
        nominal_profile(d_perp, self.radius, self.fillet_ratio)
    }

    /// Upper clamp of the relative stiffness.
    pub fn stiffness_ceiling(&self) -> f64 {
        1.0 + 5.0 * self.variation_amplitude
    }
}

/// Random draws that enter the stiffness field besides the geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct WeldRealization {
    pub beads: BeadTrain,
    pub variation: ScalarGrid,
}

impl WeldRealization {
    /// Beads are drawn first, then the variation field.
    pub fn draw<R: Rng + ?Sized>(grid: GridSpec, path: &WeldPath, weld: &WeldSpec, rng: &mut R) -> Self {
        let beads = BeadTrain::generate(&weld.bead, 0.0, path.length(), rng);
        let variation = variation_field(grid, weld.variation_amplitude, weld.variation_bandwidth, rng);
        Self { beads, variation }
    }
}

/// Relative stiffness `E/E0 = W B V` on `grid`.
pub fn compose_stiffness<R: Rng + ?Sized>(
    grid: GridSpec,
    path: &WeldPath,
    weld: &WeldSpec,
    rng: &mut R,
) -> Result<ScalarGrid> {
    weld.validate()?;
    let b = grid.bounds();
    if 2.0 * weld.radius >= (b[1] - b[0]).min(b[3] - b[2]) {
        return Err(Error::DomainTooSmall(format!(
            "weld support 2R = {:.4} m does not fit in a {:.4} x {:.4} m grid",
            2.0 * weld.radius,
            b[1] - b[0],
            b[3] - b[2]
        )));
    }
    let real = WeldRealization::draw(grid, path, weld, rng);
    Ok(stiffness_from(grid, path, weld, &real))
}

pub fn stiffness_from(grid: GridSpec, path: &WeldPath, weld: &WeldSpec, real: &WeldRealization) -> ScalarGrid {
    let ceiling = weld.stiffness_ceiling();
    let values = grid
        .points()
        .zip(&real.variation.values)
        .map(|(p, &var)| {
            let q = path.project(p);
            let f = weld.profile(q.d_perp);
            if f == 0.0 {
                return 1.0;
            }
            let fb = boundary_reduction(q.d_perp.abs(), weld.boundary_radius, weld.boundary_width);
            let w = 1.0 - weld.nominal_reduction * f * fb;
            let bead = 1.0 - real.beads.value(q.s) * f;
            let v = 1.0 + f * var;
            (w * bead * v).clamp(STIFFNESS_FLOOR, ceiling)
        })
        .collect();
    ScalarGrid { spec: grid, values }
}

/// Plate thickness `h0 + d_w f(d_perp)`.
pub fn thickness_field(grid: GridSpec, path: &WeldPath, weld: &WeldSpec, h0: f64) -> ScalarGrid {
    ScalarGrid::from_fn(grid, |p| h0 + weld.depth * weld.profile(path.project(p).d_perp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (GridSpec, WeldPath) {
        let g = GridSpec::cell_centred([0.0, 0.0], 0.1, 0.1, 101, 101);
        let p = WeldPath::straight([0.05, 0.05], 0.3, 0.3).unwrap();
        (g, p)
    }

    #[test]
    fn neutral_weld_is_identity() {
        let (g, p) = setup();
        let mut w = WeldSpec::with_radius(0.01);
        w.nominal_reduction = 0.0;
        w.variation_amplitude = 0.0;
        w.bead.height = 0.0;
        let e = compose_stiffness(g, &p, &w, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(e.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn centreline_reduction() {
        let g = GridSpec::cell_centred([0.0, 0.0], 0.1, 0.1, 100, 101);
        // horizontal path through the centre row of cell centres
        let p = WeldPath::straight([0.0505, g.point(0, 50)[1]], 0.0, 0.3).unwrap();
        let mut w = WeldSpec::with_radius(0.01);
        w.variation_amplitude = 0.0;
        w.bead.height = 0.0;
        let e = compose_stiffness(g, &p, &w, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!((e.at(40, 50) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn outside_support_exact() {
        let (g, p) = setup();
        let w = WeldSpec::with_radius(0.01);
        let e = compose_stiffness(g, &p, &w, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        for (pt, v) in g.points().zip(&e.values) {
            if p.project(pt).d_perp.abs() > w.radius {
                assert_eq!(*v, 1.0);
            }
            assert!(*v >= STIFFNESS_FLOOR && *v <= w.stiffness_ceiling());
        }
    }

    #[test]
    fn too_small_domain() {
        let g = GridSpec::cell_centred([0.0, 0.0], 0.01, 0.1, 10, 10);
        let p = WeldPath::straight([0.005, 0.05], 1.5, 0.3).unwrap();
        let w = WeldSpec::with_radius(0.01);
        assert!(matches!(
            compose_stiffness(g, &p, &w, &mut ChaCha8Rng::seed_from_u64(1)),
            Err(Error::DomainTooSmall(_))
        ));
    }

    #[test]
    fn thickness_raised_on_centreline() {
        let (g, p) = setup();
        let mut w = WeldSpec::with_radius(0.01);
        w.depth = 1e-3;
        let h = thickness_field(g, &p, &w, 6e-3);
        assert!(h.max() <= 7e-3 + 1e-15 && h.max() > 6.9e-3);
        assert_eq!(h.min(), 6e-3);
    }
}
