//! Rayleigh-Lamb dispersion for a traction-free isotropic plate.
//!
//! The characteristic functions are evaluated in a cleared, real-valued form
//! so that no branch of `p` or `q` needs complex arithmetic and no poles
//! appear:
//!
//! * symmetric: `(q^2-k^2)^2 cos(ph) sin(qh)/q + 4k^2 p sin(ph) cos(qh)`
//! * antisymmetric: `4k^2 q sin(qh) cos(ph) + (q^2-k^2)^2 sin(ph)/p cos(qh)`
//!
//! with `p^2 = w^2/cL^2 - k^2` and `q^2 = w^2/cT^2 - k^2`. When a square is
//! negative the trigonometric factors turn into their hyperbolic
//! counterparts. The value is divided by the larger of the two terms.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::material::Material;

pub const SCAN_SAMPLES: usize = 4096;
pub const RESIDUAL_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ORDER: usize = 5;
const BRACKET_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Symmetry {
    S,
    A,
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Symmetry::S => "S",
            Symmetry::A => "A",
        })
    }
}

/// Mode label such as `A0` or `S1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeId {
    pub symmetry: Symmetry,
    pub order: usize,
}

impl ModeId {
    pub const A0: ModeId = ModeId {
        symmetry: Symmetry::A,
        order: 0,
    };
    pub const S0: ModeId = ModeId {
        symmetry: Symmetry::S,
        order: 0,
    };
    pub const A1: ModeId = ModeId {
        symmetry: Symmetry::A,
        order: 1,
    };

    pub fn new(symmetry: Symmetry, order: usize) -> Self {
        Self { symmetry, order }
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.symmetry, self.order)
    }
}

impl std::str::FromStr for ModeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidInput(format!("mode label {s:?} (expected e.g. A0, S1)"));
        let mut chars = s.chars();
        let symmetry = match chars.next().map(|c| c.to_ascii_uppercase()) {
            Some('A') => Symmetry::A,
            Some('S') => Symmetry::S,
            _ => return Err(bad()),
        };
        let order = chars.as_str().parse().map_err(|_| bad())?;
        Ok(ModeId { symmetry, order })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambMode {
    pub symmetry: Symmetry,
    pub order: usize,
    pub omega: f64,
    pub half_thickness: f64,
    pub k: f64,
    pub vp: f64,
    pub vg: f64,
}

impl LambMode {
    pub fn id(&self) -> ModeId {
        ModeId::new(self.symmetry, self.order)
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * PI / self.k
    }
}

// x cos-type factor for a possibly negative square x2
fn cos_b(x2: f64, h: f64) -> f64 {
    if x2 >= 0.0 {
        (x2.sqrt() * h).cos()
    } else {
        ((-x2).sqrt() * h).cosh()
    }
}

// x sin(xh)
fn xsin_b(x2: f64, h: f64) -> f64 {
    if x2 >= 0.0 {
        let x = x2.sqrt();
        x * (x * h).sin()
    } else {
        let a = (-x2).sqrt();
        -a * (a * h).sinh()
    }
}

// sin(xh)/x
fn sinc_b(x2: f64, h: f64) -> f64 {
    if x2 > 0.0 {
        let x = x2.sqrt();
        (x * h).sin() / x
    } else if x2 < 0.0 {
        let a = (-x2).sqrt();
        (a * h).sinh() / a
    } else {
        h
    }
}

fn terms(material: &Material, symmetry: Symmetry, omega: f64, h: f64, k: f64) -> (f64, f64) {
    let k2 = k * k;
    let p2 = (omega / material.cl()).powi(2) - k2;
    let q2 = (omega / material.ct()).powi(2) - k2;
    let r = (q2 - k2) * (q2 - k2);
    match symmetry {
        Symmetry::S => (
            r * cos_b(p2, h) * sinc_b(q2, h),
            4.0 * k2 * xsin_b(p2, h) * cos_b(q2, h),
        ),
        Symmetry::A => (
            4.0 * k2 * xsin_b(q2, h) * cos_b(p2, h),
            r * sinc_b(p2, h) * cos_b(q2, h),
        ),
    }
}

/// Normalized characteristic function. Zero exactly on a dispersion branch,
/// bounded by 2 in magnitude.
pub fn characteristic(material: &Material, symmetry: Symmetry, omega: f64, h: f64, k: f64) -> f64 {
    let (t1, t2) = terms(material, symmetry, omega, h, k);
    let scale = t1.abs().max(t2.abs());
    if scale == 0.0 || !scale.is_finite() {
        return if scale == 0.0 { 0.0 } else { f64::NAN };
    }
    (t1 + t2) / scale
}

/// Flexural wavenumber of a thin Kirchhoff plate.
pub fn kirchhoff_wavenumber(material: &Material, omega: f64, h: f64) -> f64 {
    let nu = material.poisson_ratio;
    let thickness = 2.0 * h;
    let d = material.youngs_modulus * thickness.powi(3) / (12.0 * (1.0 - nu * nu));
    (omega * omega * material.density * thickness / d).powf(0.25)
}

/// Upper end of the wavenumber scan. Every real root lies below it: all modes
/// other than A0 and the high-frequency S0 have `vp > cT`, and A0 is bounded
/// by either its thin-plate or its Rayleigh limit.
pub fn scan_upper(material: &Material, omega: f64, h: f64) -> f64 {
    let rayleigh = omega / material.rayleigh_estimate();
    (1.3 * rayleigh).max(2.0 * kirchhoff_wavenumber(material, omega, h))
}

fn check_omega(omega: f64) -> Result<()> {
    if omega.is_finite() && omega > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidFrequency(omega))
    }
}

fn check_h(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("half thickness must be positive, got {h}")))
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        // steep branches keep bisecting down to adjacent floats
        if mid <= lo || mid >= hi || (hi - lo <= BRACKET_REL_TOL * hi && flo.abs().min(f(hi).abs()) < RESIDUAL_TOL) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let (fl, fh) = (f(lo).abs(), f(hi).abs());
    let (k, r) = if fl <= fh { (lo, fl) } else { (hi, fh) };
    if r < RESIDUAL_TOL {
        Ok(k)
    } else {
        Err(Error::ConvergenceFailure {
            lo,
            hi,
            residual: r,
        })
    }
}

/// Real roots of one symmetry class, in descending k, at most `limit`.
pub fn roots(
    material: &Material,
    symmetry: Symmetry,
    omega: f64,
    h: f64,
    limit: usize,
) -> Result<Vec<f64>> {
    check_omega(omega)?;
    check_h(h)?;
    let f = |k: f64| characteristic(material, symmetry, omega, h, k);
    let k_max = scan_upper(material, omega, h);
    let dk = k_max / SCAN_SAMPLES as f64;
    let mut found = Vec::new();
    // scan from the top so that the lowest orders come first
    let mut k_hi = k_max;
    let mut f_hi = f(k_hi);
    for i in (1..SCAN_SAMPLES).rev() {
        let k_lo = i as f64 * dk;
        let f_lo = f(k_lo);
        if f_lo == 0.0 {
            found.push(k_lo);
        } else if f_hi != 0.0 && (f_lo > 0.0) != (f_hi > 0.0) {
            found.push(bisect(f, k_lo, k_hi)?);
        }
        if found.len() >= limit {
            break;
        }
        k_hi = k_lo;
        f_hi = f_lo;
    }
    Ok(found)
}

fn mode_k(
    material: &Material,
    symmetry: Symmetry,
    order: usize,
    omega: f64,
    h: f64,
) -> Result<f64> {
    roots(material, symmetry, omega, h, order + 1)?
        .get(order)
        .copied()
        .ok_or_else(|| Error::ModeCutoff {
            mode: ModeId::new(symmetry, order).to_string(),
            omega,
        })
}

/// Central-difference group velocity `2 dw / (k(w+dw) - k(w-dw))`.
pub fn group_velocity(
    material: &Material,
    symmetry: Symmetry,
    order: usize,
    omega: f64,
    h: f64,
    delta_omega: f64,
) -> Result<f64> {
    check_omega(omega)?;
    if !(delta_omega > 0.0 && delta_omega < omega) {
        return Err(Error::InvalidInput(format!(
            "delta_omega must lie in (0, omega), got {delta_omega}"
        )));
    }
    let kp = mode_k(material, symmetry, order, omega + delta_omega, h)?;
    let km = mode_k(material, symmetry, order, omega - delta_omega, h)?;
    Ok(2.0 * delta_omega / (kp - km))
}

/// All propagating modes with order `<= max_order`, sorted by descending k.
pub fn find_modes(material: &Material, omega: f64, h: f64, max_order: usize) -> Result<Vec<LambMode>> {
    check_omega(omega)?;
    check_h(h)?;
    let dw = 1e-4 * omega;
    let mut modes = Vec::new();
    for symmetry in [Symmetry::A, Symmetry::S] {
        let ks = roots(material, symmetry, omega, h, max_order + 1)?;
        if ks.is_empty() {
            continue;
        }
        let up = roots(material, symmetry, omega + dw, h, max_order + 1)?;
        let down = roots(material, symmetry, omega - dw, h, max_order + 1)?;
        for (order, &k) in ks.iter().enumerate() {
            let vg = match (up.get(order), down.get(order)) {
                (Some(kp), Some(km)) => 2.0 * dw / (kp - km),
                // just above cut-on the lower frequency misses the branch
                (Some(kp), None) => dw / (kp - k),
                (None, Some(km)) => dw / (k - km),
                (None, None) => omega / k,
            };
            modes.push(LambMode {
                symmetry,
                order,
                omega,
                half_thickness: h,
                k,
                vp: omega / k,
                vg,
            });
        }
    }
    modes.sort_by(|a, b| b.k.total_cmp(&a.k));
    Ok(modes)
}

/// Through-thickness displacement profile, peak-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeShape {
    pub z: Vec<f64>,
    pub ux: Vec<Complex64>,
    pub uz: Vec<Complex64>,
}

/// Potential amplitudes `(A, B)` for the mode, picked from whichever
/// traction condition gives the better conditioned pair.
fn potential_amplitudes(material: &Material, mode: &LambMode) -> (Complex64, Complex64, Complex64, Complex64) {
    let i = Complex64::i();
    let k = mode.k;
    let h = mode.half_thickness;
    let k2 = k * k;
    let p = Complex64::new((mode.omega / material.cl()).powi(2) - k2, 0.0).sqrt();
    let q = Complex64::new((mode.omega / material.ct()).powi(2) - k2, 0.0).sqrt();
    let kq = Complex64::from(k2) - q * q;
    let (first, second) = match mode.symmetry {
        Symmetry::S => (
            (kq * (q * h).sin(), 2.0 * i * k * p * (p * h).sin()),
            (2.0 * i * k * q * (q * h).cos(), kq * (p * h).cos()),
        ),
        Symmetry::A => (
            (kq * (q * h).cos(), -2.0 * i * k * p * (p * h).cos()),
            (2.0 * i * k * q * (q * h).sin(), -kq * (p * h).sin()),
        ),
    };
    let norm = |(a, b): (Complex64, Complex64)| a.norm_sqr() + b.norm_sqr();
    let (a, b) = if norm(first) >= norm(second) { first } else { second };
    (a, b, p, q)
}

/// Unnormalized displacement `(ux, uz)` at height z.
fn displacement(mode: &LambMode, a: Complex64, b: Complex64, p: Complex64, q: Complex64, z: f64) -> (Complex64, Complex64) {
    let ik = Complex64::new(0.0, mode.k);
    match mode.symmetry {
        Symmetry::S => (
            ik * a * (p * z).cos() + q * b * (q * z).cos(),
            -p * a * (p * z).sin() - ik * b * (q * z).sin(),
        ),
        Symmetry::A => (
            ik * a * (p * z).sin() - q * b * (q * z).sin(),
            p * a * (p * z).cos() - ik * b * (q * z).cos(),
        ),
    }
}

pub fn mode_shape(material: &Material, mode: &LambMode, nz: usize) -> Result<ModeShape> {
    if nz < 3 {
        return Err(Error::InvalidInput(format!("nz must be at least 3, got {nz}")));
    }
    let h = mode.half_thickness;
    let (a, b, p, q) = potential_amplitudes(material, mode);
    let z: Vec<f64> = (0..nz)
        .map(|j| -h + 2.0 * h * j as f64 / (nz - 1) as f64)
        .collect();
    let (mut ux, mut uz): (Vec<_>, Vec<_>) = z.iter().map(|&zz| displacement(mode, a, b, p, q, zz)).unzip();
    // the peak of |u| over a plate is always at a surface for these modes,
    // but take the sampled maximum so the normalization is exact
    let peak = ux
        .iter()
        .zip(&uz)
        .map(|(x, y)| (x.norm_sqr() + y.norm_sqr()).sqrt())
        .fold(0.0, f64::max);
    if peak > 0.0 {
        ux.iter_mut().chain(uz.iter_mut()).for_each(|v| *v /= peak);
    }
    Ok(ModeShape { z, ux, uz })
}

/// z-directed surface load sampled at points in the plate's top face.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceForce {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl SurfaceForce {
    pub fn point() -> Self {
        Self {
            points: vec![[0.0, 0.0]],
            weights: vec![1.0],
        }
    }

    /// Isotropic Gaussian with unit integral, truncated at four standard
    /// deviations and sampled on a square grid.
    pub fn gaussian(sigma: f64, samples_per_sigma: usize) -> Self {
        let n = 4 * samples_per_sigma.max(1) as i64;
        let d = sigma / samples_per_sigma.max(1) as f64;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for j in -n..=n {
            for i in -n..=n {
                let (x, y) = (i as f64 * d, j as f64 * d);
                points.push([x, y]);
                weights.push((-(x * x + y * y) / (2.0 * sigma * sigma)).exp() * d * d / (2.0 * PI * sigma * sigma));
            }
        }
        Self { points, weights }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            points: self.points.clone(),
            weights: self.weights.iter().map(|w| w * c).collect(),
        }
    }

    /// `|sum_j w_j exp(i k x_j)|` for a wave travelling along +x.
    pub fn projection(&self, k: f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(pt, &w)| Complex64::from_polar(w, k * pt[0]))
            .sum::<Complex64>()
            .norm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionTable {
    pub material: Material,
    pub omega: f64,
    pub half_thickness: f64,
    pub modes: Vec<LambMode>,
    pub amplitudes: Option<Vec<f64>>,
}

impl DispersionTable {
    pub fn compute(material: &Material, omega: f64, h: f64, max_order: usize) -> Result<Self> {
        Ok(Self {
            material: *material,
            omega,
            half_thickness: h,
            modes: find_modes(material, omega, h, max_order)?,
            amplitudes: None,
        })
    }

    pub fn get(&self, id: ModeId) -> Option<&LambMode> {
        self.modes.iter().find(|m| m.id() == id)
    }

    pub fn amplitude(&self, id: ModeId) -> Option<f64> {
        let idx = self.modes.iter().position(|m| m.id() == id)?;
        self.amplitudes.as_ref().map(|a| a[idx])
    }

    /// Keep only the listed modes, in table order.
    pub fn restricted(&self, ids: &[ModeId]) -> Self {
        let keep: Vec<usize> = (0..self.modes.len()).filter(|&i| ids.contains(&self.modes[i].id())).collect();
        Self {
            material: self.material,
            omega: self.omega,
            half_thickness: self.half_thickness,
            modes: keep.iter().map(|&i| self.modes[i]).collect(),
            amplitudes: self.amplitudes.as_ref().map(|a| keep.iter().map(|&i| a[i]).collect()),
        }
    }
}

pub const POLARITY_SAMPLES: usize = 201;

fn simpson(values: &[f64], dz: f64) -> f64 {
    // composite Simpson needs an odd sample count
    let n = values.len();
    debug_assert!(n % 2 == 1 && n >= 3);
    let inner: f64 = values[1..n - 1]
        .iter()
        .enumerate()
        .map(|(j, v)| if j % 2 == 0 { 4.0 * v } else { 2.0 * v })
        .sum();
    dz / 3.0 * (values[0] + inner + values[n - 1])
}

/// Fraction of the through-thickness displacement magnitude carried by u_z.
pub fn z_polarity(shape: &ModeShape) -> f64 {
    let dz = shape.z[1] - shape.z[0];
    let uz: Vec<f64> = shape.uz.iter().map(|v| v.norm()).collect();
    let u: Vec<f64> = shape
        .ux
        .iter()
        .zip(&shape.uz)
        .map(|(a, b)| (a.norm_sqr() + b.norm_sqr()).sqrt())
        .collect();
    simpson(&uz, dz) / simpson(&u, dz)
}

/// Unscaled prominence of each mode under a z-directed surface load:
/// surface projection of the load onto the mode times its z-polarity.
pub fn raw_prominence(table: &DispersionTable, force: &SurfaceForce) -> Result<Vec<f64>> {
    table
        .modes
        .iter()
        .map(|mode| {
            let shape = mode_shape(&table.material, mode, POLARITY_SAMPLES)?;
            let top = shape.uz[POLARITY_SAMPLES - 1].norm();
            Ok(top * force.projection(mode.k) * z_polarity(&shape))
        })
        .collect()
}

pub fn amplitude_projection(table: &DispersionTable, force: &SurfaceForce) -> Result<DispersionTable> {
    if table.modes.is_empty() {
        return Err(Error::InvalidInput("dispersion table has no modes".into()));
    }
    let raw = raw_prominence(table, force)?;
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::DegenerateForce);
    }
    let mut out = table.clone();
    out.amplitudes = Some(raw.iter().map(|a| a / total).collect());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const H: f64 = 0.25 * 0.0254 / 2.0;

    fn omega(khz: f64) -> f64 {
        2.0 * PI * khz * 1e3
    }

    #[test]
    fn two_modes_at_225khz() {
        let m = Material::steel_like();
        let modes = find_modes(&m, omega(225.0), H, DEFAULT_MAX_ORDER).unwrap();
        let ids: Vec<_> = modes.iter().map(LambMode::id).collect();
        assert_eq!(ids, vec![ModeId::A0, ModeId::S0]);
        for md in &modes {
            assert!(characteristic(&m, md.symmetry, md.omega, H, md.k).abs() < RESIDUAL_TOL);
            assert_eq!(md.vp, md.omega / md.k);
            assert!(md.vg > 0.0 && md.vg <= m.cl());
        }
        assert!((modes[0].k - 562.29).abs() < 0.05);
        assert!((modes[1].k - 275.91).abs() < 0.05);
    }

    #[test]
    fn zero_frequency_rejected() {
        let m = Material::steel_like();
        assert!(matches!(find_modes(&m, 0.0, H, 5), Err(Error::InvalidFrequency(_))));
    }

    #[test]
    fn s0_low_frequency_is_plate_speed() {
        let m = Material::steel_like();
        // fd = 0.05 MHz mm on a 1 mm plate
        let h = 0.5e-3;
        let w = 2.0 * PI * 50e3;
        let vg = group_velocity(&m, Symmetry::S, 0, w, h, 1e-3 * w).unwrap();
        let vp = find_modes(&m, w, h, 0).unwrap().into_iter().find(|x| x.symmetry == Symmetry::S).unwrap().vp;
        assert!((vg - vp).abs() / vp < 0.01);
        assert!((vp - m.plate_speed()).abs() / m.plate_speed() < 0.01);
    }

    #[test]
    fn missing_branch_is_cutoff() {
        let m = Material::steel_like();
        let err = group_velocity(&m, Symmetry::A, 1, omega(225.0), H, 1.0).unwrap_err();
        assert!(matches!(err, Error::ModeCutoff { .. }));
    }

    #[test]
    fn mode_labels_parse() {
        assert_eq!("A0".parse::<ModeId>().unwrap(), ModeId::A0);
        assert_eq!("s1".parse::<ModeId>().unwrap(), ModeId::new(Symmetry::S, 1));
        assert!("X0".parse::<ModeId>().is_err());
    }

    #[test]
    fn shape_symmetry_and_peak() {
        let m = Material::steel_like();
        let modes = find_modes(&m, omega(225.0), H, 5).unwrap();
        for md in &modes {
            let s = mode_shape(&m, md, 41).unwrap();
            let peak = s.ux.iter().zip(&s.uz).map(|(a, b)| (a.norm_sqr() + b.norm_sqr()).sqrt()).fold(0.0, f64::max);
            assert!((peak - 1.0).abs() < 1e-12);
            for j in 0..41 {
                let r = 40 - j;
                let (even, odd) = match md.symmetry {
                    Symmetry::S => (&s.ux, &s.uz),
                    Symmetry::A => (&s.uz, &s.ux),
                };
                assert!((even[j] - even[r]).norm() < 1e-10);
                assert!((odd[j] + odd[r]).norm() < 1e-10);
            }
            if md.symmetry == Symmetry::S {
                assert_eq!(s.uz[20], Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn a0_is_flexural_at_midplane() {
        let m = Material::steel_like();
        let md = find_modes(&m, omega(50.0), H, 0).unwrap().into_iter().find(|x| x.symmetry == Symmetry::A).unwrap();
        let s = mode_shape(&m, &md, 21).unwrap();
        assert!(s.uz[10].norm() > s.ux[10].norm());
    }

    #[test]
    fn single_mode_amplitude_is_one() {
        let m = Material::steel_like();
        let t = DispersionTable::compute(&m, omega(225.0), H, 5).unwrap().restricted(&[ModeId::S0]);
        let t = amplitude_projection(&t, &SurfaceForce::point()).unwrap();
        assert_eq!(t.amplitudes.unwrap(), vec![1.0]);
    }

    #[test]
    fn a0_dominates_point_load() {
        let m = Material::steel_like();
        let t = DispersionTable::compute(&m, omega(225.0), H, 5).unwrap();
        let t = amplitude_projection(&t, &SurfaceForce::point()).unwrap();
        assert!(t.amplitude(ModeId::A0).unwrap() > t.amplitude(ModeId::S0).unwrap());
    }

    #[test]
    fn zero_force_is_degenerate() {
        let m = Material::steel_like();
        let t = DispersionTable::compute(&m, omega(225.0), H, 5).unwrap();
        let f = SurfaceForce::point().scaled(0.0);
        assert!(matches!(amplitude_projection(&t, &f), Err(Error::DegenerateForce)));
    }
}
