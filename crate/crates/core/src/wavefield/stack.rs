use serde::{Deserialize, Serialize};

use super::{mode_filter, WavefieldGrid};
use crate::dispersion::{DispersionTable, ModeId};
use crate::error::{Error, Result};

pub const CHANNELS: usize = 9;

pub const CHANNEL_NAMES: [&str; CHANNELS] = [
    "re", "im", "abs", "re_a0", "im_a0", "abs_a0", "re_s0", "im_s0", "abs_s0",
];

/// Nine real channels: the full field and its A0 and S0 components, each
/// split into real, imaginary and magnitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStack {
    pub nx: usize,
    pub ny: usize,
    pub channels: Vec<Vec<f32>>,
    /// `max |phi|` divided out before splitting; 0 for an all-zero field
    pub scale: f64,
}

impl ChannelStack {
    pub fn channel(&self, c: usize) -> &[f32] {
        &self.channels[c]
    }

    pub fn from_channels(nx: usize, ny: usize, channels: Vec<Vec<f32>>, scale: f64) -> Result<Self> {
        if channels.len() != CHANNELS || channels.iter().any(|c| c.len() != nx * ny) {
            return Err(Error::ShapeMismatch {
                expected: format!("{CHANNELS} channels of {}", nx * ny),
                found: format!("{} channels", channels.len()),
            });
        }
        Ok(Self { nx, ny, channels, scale })
    }
}

fn split(values: &[num_complex::Complex64], out: &mut [Vec<f32>]) {
    for v in values {
        let (re, im) = (v.re as f32, v.im as f32);
        out[0].push(re);
        out[1].push(im);
        out[2].push(re.hypot(im));
    }
}

pub fn build_channel_stack(grid: &WavefieldGrid, table: &DispersionTable) -> Result<ChannelStack> {
    let k_of = |id: ModeId| {
        table
            .get(id)
            .map(|m| m.k)
            .ok_or_else(|| Error::MissingMode(id.to_string()))
    };
    let (ka, ks) = (k_of(ModeId::A0)?, k_of(ModeId::S0)?);
    let others = |id: ModeId| -> Vec<f64> { table.modes.iter().filter(|m| m.id() != id).map(|m| m.k).collect() };

    let scale = grid.max_abs();
    let normalized = if scale > 0.0 {
        grid.with_values(grid.values.iter().map(|v| v / scale).collect())
    } else {
        grid.clone()
    };
    let a0 = mode_filter(&normalized, ka, &others(ModeId::A0))?;
    let s0 = mode_filter(&normalized, ks, &others(ModeId::S0))?;

    let n = grid.nx * grid.ny;
    let mut channels: Vec<Vec<f32>> = (0..CHANNELS).map(|_| Vec::with_capacity(n)).collect();
    split(&normalized.values, &mut channels[0..3]);
    split(&a0.values, &mut channels[3..6]);
    split(&s0.values, &mut channels[6..9]);
    Ok(ChannelStack {
        nx: grid.nx,
        ny: grid.ny,
        channels,
        scale,
    })
}

#[cfg(test)]
mod tests {
    use super::super::Provenance;
    use super::*;
    use crate::material::Material;
    use num_complex::Complex64 as C;

    fn table() -> DispersionTable {
        DispersionTable::compute(&Material::steel_like(), 2.0 * std::f64::consts::PI * 225e3, 3.175e-3, 5).unwrap()
    }

    #[test]
    fn zero_field_and_magnitudes() {
        let z = WavefieldGrid::new(16, 16, 1e-3, 1e-3, [0.0; 2], 1.0, Provenance::Em, vec![C::new(0.0, 0.0); 256]).unwrap();
        let s = build_channel_stack(&z, &table()).unwrap();
        assert_eq!(s.scale, 0.0);
        assert!(s.channels.iter().all(|c| c.iter().all(|&v| v == 0.0)));

        let v = (0..256).map(|i| C::new((i as f64).sin() * 3.0, (i as f64 * 0.3).cos())).collect();
        let g = z.with_values(v);
        let s = build_channel_stack(&g, &table()).unwrap();
        assert_eq!(s.channels.len(), CHANNELS);
        for t in 0..3 {
            for p in 0..256 {
                let (re, im, ab) = (s.channels[3 * t][p], s.channels[3 * t + 1][p], s.channels[3 * t + 2][p]);
                assert_eq!(ab, re.hypot(im));
            }
        }
        assert!((s.channels[2].iter().fold(0.0f32, |a, &b| a.max(b)) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn missing_mode() {
        let z = WavefieldGrid::new(8, 8, 1e-3, 1e-3, [0.0; 2], 1.0, Provenance::Em, vec![C::new(1.0, 0.0); 64]).unwrap();
        let t = table().restricted(&[ModeId::A0]);
        assert!(matches!(build_channel_stack(&z, &t), Err(Error::MissingMode(_))));
    }
}
