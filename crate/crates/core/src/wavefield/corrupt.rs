use num_complex::Complex64;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::WavefieldGrid;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarGrid};

type C = Complex64;

/// How the base noise scale is derived from `|phi|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaRule {
    #[default]
    Std,
    Variance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskMode {
    #[default]
    Random,
    Always,
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    pub noise_mean: f64,
    pub noise_std: f64,
    /// `sigma_phi = fraction * std(|phi|)` (or variance)
    pub sigma_fraction: f64,
    pub sigma_rule: SigmaRule,
    /// speckle correlation length in pixels
    pub speckle_pixels: f64,
    pub drop_fraction: f64,
    pub mask_probability: f64,
    pub mask: MaskMode,
}

impl Default for CorruptionSpec {
    fn default() -> Self {
        Self {
            noise_mean: 1.0,
            noise_std: 0.5,
            sigma_fraction: 0.5,
            sigma_rule: SigmaRule::Std,
            speckle_pixels: 3.0,
            drop_fraction: 0.25,
            mask_probability: 0.5,
            mask: MaskMode::Random,
        }
    }
}

impl CorruptionSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..=1.0).contains(&self.drop_fraction)
            && (0.0..=1.0).contains(&self.mask_probability)
            && self.noise_std >= 0.0
            && self.sigma_fraction >= 0.0
            && self.speckle_pixels > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid corruption spec {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionRecord {
    pub epsilon: f64,
    pub sigma_phi: f64,
    pub mask_applied: bool,
    pub dropped: usize,
}

fn magnitude_spread(grid: &WavefieldGrid, rule: SigmaRule) -> f64 {
    let n = grid.values.len() as f64;
    let mean = grid.values.iter().map(|v| v.norm()).sum::<f64>() / n;
    let var = grid.values.iter().map(|v| (v.norm() - mean).powi(2)).sum::<f64>() / n;
    match rule {
        SigmaRule::Std => var.sqrt(),
        SigmaRule::Variance => var,
    }
}

/// Unit-variance, zero-mean squared smooth field.
fn speckle<R: Rng + ?Sized>(nx: usize, ny: usize, pixels: f64, rng: &mut R) -> Vec<f64> {
    let spec = GridSpec::cell_centred([0.0, 0.0], nx as f64, ny as f64, nx, ny);
    let white = ScalarGrid {
        spec,
        values: (0..nx * ny).map(|_| rng.sample::<f64, _>(StandardNormal)).collect(),
    };
    let sq: Vec<f64> = white.gaussian_smooth(pixels, pixels).values.iter().map(|v| v * v).collect();
    let n = sq.len() as f64;
    let mean = sq.iter().sum::<f64>() / n;
    let std = (sq.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    if std > 0.0 {
        sq.iter().map(|v| (v - mean) / std).collect()
    } else {
        vec![0.0; sq.len()]
    }
}

/// `phi + N(0, eps sigma) + eps sigma S`, then the pixel-drop mask. Draw
/// order: `eps`, pixel noise (re, im), speckle, mask coin, dropped pixels.
pub fn synth_corrupt<R: Rng + ?Sized>(
    grid: &WavefieldGrid,
    spec: &CorruptionSpec,
    rng: &mut R,
) -> Result<(WavefieldGrid, CorruptionRecord)> {
    spec.validate()?;
    let eps = Normal::new(spec.noise_mean, spec.noise_std)
        .map_err(|e| Error::InvalidInput(e.to_string()))?
        .sample(rng)
        .max(0.0);
    let sigma_phi = spec.sigma_fraction * magnitude_spread(grid, spec.sigma_rule);
    let s = eps * sigma_phi;
    let n = grid.values.len();
    let noise: Vec<C> = (0..n)
        .map(|_| C::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)))
        .collect();
    let sp = speckle(grid.nx, grid.ny, spec.speckle_pixels, rng);
    let mut values: Vec<C> = grid
        .values
        .iter()
        .zip(&noise)
        .zip(&sp)
        .map(|((v, z), p)| v + z * s + s * p)
        .collect();

    let coin = rng.random::<f64>() < spec.mask_probability;
    let mask_applied = match spec.mask {
        MaskMode::Random => coin,
        MaskMode::Always => true,
        MaskMode::Never => false,
    };
    let mut dropped = 0;
    if mask_applied {
        dropped = (spec.drop_fraction * n as f64).floor() as usize;
        for i in index::sample(rng, n, dropped) {
            values[i] = C::new(0.0, 0.0);
        }
    }
    Ok((
        grid.with_values(values),
        CorruptionRecord {
            epsilon: eps,
            sigma_phi,
            mask_applied,
            dropped,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::super::Provenance;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn field() -> WavefieldGrid {
        let v = (0..32 * 24).map(|i| C::from_polar(1.0 + (i % 7) as f64, i as f64 * 0.2)).collect();
        WavefieldGrid::new(32, 24, 1e-3, 1e-3, [0.0; 2], 1.0, Provenance::Em, v).unwrap()
    }

    #[test]
    fn identity_without_noise_or_mask() {
        let g = field();
        let spec = CorruptionSpec {
            sigma_fraction: 0.0,
            mask: MaskMode::Never,
            ..Default::default()
        };
        let (out, rec) = synth_corrupt(&g, &spec, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(out, g);
        assert_eq!(rec.sigma_phi, 0.0);
    }

    #[test]
    fn forced_mask_drops_exact_count() {
        let g = field();
        let spec = CorruptionSpec {
            sigma_fraction: 0.0,
            mask: MaskMode::Always,
            ..Default::default()
        };
        let (out, rec) = synth_corrupt(&g, &spec, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let zeros = out.values.iter().filter(|v| v.norm() == 0.0).count();
        assert_eq!(zeros, (0.25 * (32.0 * 24.0)) as usize);
        assert_eq!(rec.dropped, zeros);
    }

    #[test]
    fn deterministic_and_pure() {
        let g = field();
        let before = g.clone();
        let spec = CorruptionSpec::default();
        let a = synth_corrupt(&g, &spec, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let b = synth_corrupt(&g, &spec, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(a, b);
        assert_eq!(g, before);
        assert!(a.1.epsilon >= 0.0);
    }
}
