//! Isotropic linear-elastic plate material.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MATERIAL_FORMAT_VERSION: u32 = 1;

/// Isotropic material. Wave speeds are derived on demand from the Lame
/// parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub density: f64,
}

impl Material {
    pub fn new(youngs_modulus: f64, poisson_ratio: f64, density: f64) -> Result<Self> {
        let ok = youngs_modulus.is_finite()
            && youngs_modulus > 0.0
            && density.is_finite()
            && density > 0.0
            && poisson_ratio > 0.0
            && poisson_ratio < 0.5;
        if !ok {
            return Err(Error::InvalidInput(format!(
                "material needs E > 0, rho > 0, 0 < nu < 0.5 (E = {youngs_modulus}, nu = {poisson_ratio}, rho = {density})"
            )));
        }
        Ok(Self {
            youngs_modulus,
            poisson_ratio,
            density,
        })
    }

    /// Default structural steel used throughout the toolkit.
    pub fn steel_like() -> Self {
        Self {
            youngs_modulus: 200e9,
            poisson_ratio: 0.29,
            density: 7850.0,
        }
    }

    /// (lambda, mu)
    pub fn lame(&self) -> (f64, f64) {
        lame(self.youngs_modulus, self.poisson_ratio)
    }

    pub fn cl(&self) -> f64 {
        let (l, m) = self.lame();
        ((l + 2.0 * m) / self.density).sqrt()
    }

    pub fn ct(&self) -> f64 {
        let (_, m) = self.lame();
        (m / self.density).sqrt()
    }

    /// Viktorov's approximation to the Rayleigh speed.
    pub fn rayleigh_estimate(&self) -> f64 {
        let nu = self.poisson_ratio;
        self.ct() * (0.87 + 1.12 * nu) / (1.0 + nu)
    }

    /// Low-frequency extensional plate speed.
    pub fn plate_speed(&self) -> f64 {
        let nu = self.poisson_ratio;
        (self.youngs_modulus / (self.density * (1.0 - nu * nu))).sqrt()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        MaterialFile::from_json(&text)?.material()
    }

    pub fn save(&self, name: &str, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = MaterialFile::from_material(name, self);
        let text = serde_json::to_string_pretty(&file)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

pub fn lame(youngs_modulus: f64, poisson_ratio: f64) -> (f64, f64) {
    let nu = poisson_ratio;
    let lambda = youngs_modulus * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = youngs_modulus / (2.0 * (1.0 + nu));
    (lambda, mu)
}

/// On-disk material description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialFile {
    pub format_version: u32,
    pub name: String,
    pub youngs_modulus_pa: f64,
    pub poisson_ratio: f64,
    pub density_kg_m3: f64,
}

impl MaterialFile {
    pub fn from_material(name: &str, m: &Material) -> Self {
        Self {
            format_version: MATERIAL_FORMAT_VERSION,
            name: name.to_owned(),
            youngs_modulus_pa: m.youngs_modulus,
            poisson_ratio: m.poisson_ratio,
            density_kg_m3: m.density,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MaterialFile = serde_json::from_str(text)?;
        if file.format_version != MATERIAL_FORMAT_VERSION {
            return Err(Error::InvalidInput(format!(
                "material format version {} (expected {MATERIAL_FORMAT_VERSION})",
                file.format_version
            )));
        }
        Ok(file)
    }

    pub fn material(&self) -> Result<Material> {
        Material::new(self.youngs_modulus_pa, self.poisson_ratio, self.density_kg_m3)
    }
}
