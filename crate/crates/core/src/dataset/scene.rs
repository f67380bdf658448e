use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::params::SampleParams;
use crate::dispersion::{DispersionTable, DEFAULT_MAX_ORDER};
use crate::em::{DomainSpec, MIN_ELEMENTS_PER_WAVELENGTH, PML_WAVELENGTHS};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarGrid};
use crate::material::Material;
use crate::wavefield::Target;
use crate::weld::{compose_stiffness, crack_mask, crack_walk, thickness_field, CrackSpec, WalkParams, WeldPath, WeldSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub weld_radius: f64,
    pub crack_width: f64,
    pub walk_step: f64,
    pub heading_std: f64,
    /// crack-mask smoothing in material-grid cells
    pub mask_sigma_cells: f64,
    /// upper bound on the material-grid spacing (m)
    pub material_spacing: f64,
    pub elements_per_wavelength: usize,
    pub pml_wavelengths: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            weld_radius: WeldSpec::DEFAULT_RADIUS,
            crack_width: 2.54e-4,
            walk_step: 5e-4,
            heading_std: 0.35,
            mask_sigma_cells: 2.0,
            material_spacing: 5e-4,
            elements_per_wavelength: MIN_ELEMENTS_PER_WAVELENGTH,
            pml_wavelengths: PML_WAVELENGTHS,
        }
    }
}

/// Geometry and material fields shared by both solvers and the labels.
#[derive(Debug, Clone)]
pub struct Scene {
    pub domain: DomainSpec,
    pub lambda_min: f64,
    pub grid: GridSpec,
    pub path: WeldPath,
    pub weld: WeldSpec,
    pub stiffness: ScalarGrid,
    pub thickness: ScalarGrid,
    pub crack: CrackSpec,
    pub mask: ScalarGrid,
}

/// Half-length of the chord of `path`'s line through the centre of
/// `[0, lx] x [0, ly]`.
fn chord_half(lx: f64, ly: f64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let tx = if c.abs() > 1e-12 { 0.5 * lx / c.abs() } else { f64::INFINITY };
    let ty = if s.abs() > 1e-12 { 0.5 * ly / s.abs() } else { f64::INFINITY };
    tx.min(ty)
}

/// Builds the weld (from `weld_rng`) and the crack (from `crack_rng`).
pub fn build_scene<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    params: &SampleParams,
    freq_hz: f64,
    material: &Material,
    cfg: &SceneConfig,
    weld_rng: &mut R1,
    crack_rng: &mut R2,
) -> Result<Scene> {
    let g = params.geometry;
    let omega = 2.0 * PI * freq_hz;
    let table = DispersionTable::compute(material, omega, 0.5 * g.thickness, DEFAULT_MAX_ORDER)?;
    let k_max = table.modes.iter().map(|m| m.k).fold(0.0, f64::max);
    if k_max == 0.0 {
        return Err(Error::InvalidInput("no propagating modes".into()));
    }
    let lambda_min = 2.0 * PI / k_max;
    let domain = DomainSpec::new(
        params.bc,
        g.lx,
        g.ly,
        g.thickness,
        cfg.pml_wavelengths * lambda_min,
        cfg.elements_per_wavelength,
    )?;
    let b = domain.bounds();
    let h = cfg
        .material_spacing
        .min(lambda_min / (4.0 * cfg.elements_per_wavelength as f64));
    let grid = GridSpec::covering([b[0], b[2]], b[1] - b[0], b[3] - b[2], h);

    let centre = [0.5 * g.lx, 0.5 * g.ly];
    let span = 2.0 * (b[1] - b[0]).hypot(b[3] - b[2]);
    let path = WeldPath::straight(centre, params.weld_angle, span)?;
    let mut weld = WeldSpec::with_radius(cfg.weld_radius);
    weld.nominal_reduction = params.nominal_reduction;
    weld.variation_amplitude = params.variation_amplitude;
    weld.depth = params.weld_depth;
    let stiffness = compose_stiffness(grid, &path, &weld, weld_rng)?;
    let thickness = thickness_field(grid, &path, &weld, g.thickness);

    // the start draws happen for every sample so streams stay aligned
    let half = 0.8 * chord_half(g.lx, g.ly, params.weld_angle);
    let s = Uniform::new_inclusive(-half, half).expect("valid range").sample(crack_rng) + 0.5 * span;
    let d = Uniform::new_inclusive(-weld.radius, weld.radius)
        .expect("valid range")
        .sample(crack_rng);
    let crack = if params.cracked {
        let seed = CrackSpec {
            present: true,
            start: path.to_plane(s, d),
            length: params.crack_length,
            depth_ratio: params.depth_ratio(),
            width: cfg.crack_width,
            path: Vec::new(),
        };
        let walk = WalkParams {
            step: cfg.walk_step,
            heading_std: cfg.heading_std,
            corridor: weld.radius,
        };
        crack_walk(&seed, &walk, &path, crack_rng)?
    } else {
        CrackSpec::absent()
    };
    let mask = crack_mask(grid, &crack, cfg.mask_sigma_cells * h);
    Ok(Scene {
        domain,
        lambda_min,
        grid,
        path,
        weld,
        stiffness,
        thickness,
        crack,
        mask,
    })
}

/// How the crack label threshold is derived from the mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelThreshold {
    /// halfway between 1 and the smallest mask value
    #[default]
    HalfContrast,
    /// `1 - c_d^2 / 2`
    Value,
}

pub fn crack_threshold(mask: &ScalarGrid, crack: &CrackSpec, mode: LabelThreshold) -> Option<f64> {
    if !crack.present {
        return None;
    }
    let tau = match mode {
        LabelThreshold::HalfContrast => 1.0 - 0.5 * (1.0 - mask.min()),
        LabelThreshold::Value => 1.0 - 0.5 * crack.depth_ratio * crack.depth_ratio,
    };
    (tau < 1.0).then_some(tau)
}

/// 1 on pixels whose footprint holds a material sample below `tau`.
pub fn crack_label(mask: &ScalarGrid, tau: Option<f64>, target: &Target) -> Vec<u8> {
    let mut out = vec![0u8; target.nx * target.ny];
    let Some(tau) = tau else {
        return out;
    };
    let (dx, dy) = target.spacing();
    let [x0, _, y0, _] = target.region;
    for (p, &v) in mask.spec.points().zip(&mask.values) {
        if v >= tau {
            continue;
        }
        let fi = ((p[0] - x0) / dx).floor();
        let fj = ((p[1] - y0) / dy).floor();
        if fi >= 0.0 && fj >= 0.0 && (fi as usize) < target.nx && (fj as usize) < target.ny {
            out[fj as usize * target.nx + fi as usize] = 1;
        }
    }
    out
}

/// Relative stiffness at the pixel centres.
pub fn stiffness_label(stiffness: &ScalarGrid, target: &Target) -> Vec<f32> {
    let (dx, dy) = target.spacing();
    let o = target.origin();
    (0..target.ny)
        .flat_map(|j| (0..target.nx).map(move |i| [o[0] + i as f64 * dx, o[1] + j as f64 * dy]))
        .map(|p| stiffness.sample(p[0], p[1]) as f32)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::params::{sample_params, ClassGeometry, ParamDistributions};
    use super::*;
    use crate::em::BcClass;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scene_and_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut p = sample_params(
            BcClass::FreeFree,
            ClassGeometry::for_class(BcClass::FreeFree),
            &ParamDistributions::default(),
            0.01,
            &mut rng,
        );
        p.cracked = true;
        p.crack_depth = 0.6 * p.geometry.thickness;
        let cfg = SceneConfig {
            material_spacing: 1e-3,
            ..Default::default()
        };
        let s = build_scene(&p, 225e3, &Material::steel_like(), &cfg, &mut rng.clone(), &mut rng).unwrap();
        assert!(s.crack.present && s.mask.min() < 1.0);
        let target = Target {
            region: s.domain.physical(),
            nx: 32,
            ny: 64,
        };
        let tau = crack_threshold(&s.mask, &s.crack, LabelThreshold::HalfContrast);
        let lab = crack_label(&s.mask, tau, &target);
        assert!(lab.contains(&1));
        assert!(crack_label(&s.mask, None, &target).iter().all(|&v| v == 0));
        let st = stiffness_label(&s.stiffness, &target);
        assert_eq!(st.len(), 32 * 64);
        assert!(st.iter().any(|&v| v < 1.0));
    }
}
