use std::f64::consts::PI;

use super::fft::{fft2, ifft2, wavenumbers};
use super::WavefieldGrid;
use crate::error::{Error, Result};

/// Gaussian width giving half power midway to the nearest neighbour.
pub fn filter_sigma(k_center: f64, neighbors: &[f64]) -> Result<f64> {
    let gap = neighbors
        .iter()
        .map(|k| (k - k_center).abs())
        .fold(f64::INFINITY, f64::min);
    if !(gap.is_finite() && gap > 0.0) {
        return Err(Error::InvalidInput(
            "mode filter needs at least one neighbour wavenumber distinct from the centre".into(),
        ));
    }
    Ok(0.5 * gap / std::f64::consts::LN_2.sqrt())
}

pub fn mode_filter_gain(k: f64, k_center: f64, sigma: f64) -> f64 {
    (-(k - k_center).powi(2) / (2.0 * sigma * sigma)).exp()
}

/// Radial Gaussian band-pass around `k_center` in the wavenumber domain.
pub fn mode_filter(grid: &WavefieldGrid, k_center: f64, neighbors: &[f64]) -> Result<WavefieldGrid> {
    let nyquist = PI / grid.dx.max(grid.dy);
    if !(k_center >= 0.0 && k_center < nyquist) {
        return Err(Error::Unresolvable { k: k_center, nyquist });
    }
    let sigma = filter_sigma(k_center, neighbors)?;
    let (nx, ny) = (grid.nx, grid.ny);
    let kx = wavenumbers(nx, grid.dx);
    let ky = wavenumbers(ny, grid.dy);
    let mut spec = fft2(&grid.values, nx, ny);
    for (j, &y) in ky.iter().enumerate() {
        for (i, &x) in kx.iter().enumerate() {
            spec[j * nx + i] *= mode_filter_gain(x.hypot(y), k_center, sigma);
        }
    }
    Ok(grid.with_values(ifft2(&spec, nx, ny)))
}

#[cfg(test)]
mod tests {
    use super::super::Provenance;
    use super::*;
    use num_complex::Complex64 as C;

    fn plane(n: usize, d: f64, m: usize) -> WavefieldGrid {
        let k = 2.0 * PI * m as f64 / (n as f64 * d);
        let v = (0..n * n).map(|idx| C::from_polar(1.0, k * (idx % n) as f64 * d)).collect();
        WavefieldGrid::new(n, n, d, d, [0.0, 0.0], 1.0, Provenance::Generated, v).unwrap()
    }

    #[test]
    fn unit_gain_and_linearity() {
        let (n, d) = (64, 1e-3);
        let dk = 2.0 * PI / (n as f64 * d);
        let g = plane(n, d, 10);
        let out = mode_filter(&g, 10.0 * dk, &[4.0 * dk]).unwrap();
        let err = out.values.iter().zip(&g.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10);

        let h = plane(n, d, 5);
        let (a, b) = (C::new(0.3, -1.2), C::new(2.0, 0.5));
        let mix = g.with_values(g.values.iter().zip(&h.values).map(|(x, y)| a * x + b * y).collect());
        let f = |w: &WavefieldGrid| mode_filter(w, 9.0 * dk, &[3.0 * dk]).unwrap();
        let (fg, fh, fm) = (f(&g), f(&h), f(&mix));
        for i in 0..fm.values.len() {
            assert!((fm.values[i] - (a * fg.values[i] + b * fh.values[i])).norm() < 1e-10);
        }
    }

    #[test]
    fn errors() {
        let g = plane(16, 1e-3, 1);
        assert!(matches!(mode_filter(&g, 4000.0, &[100.0]), Err(Error::Unresolvable { .. })));
        assert!(mode_filter(&g, 100.0, &[]).is_err());
    }
}
