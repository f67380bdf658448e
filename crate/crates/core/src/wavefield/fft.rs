use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::WavefieldGrid;

type C = Complex64;

fn transform(values: &[C], nx: usize, ny: usize, inverse: bool) -> Vec<C> {
    let mut planner = FftPlanner::new();
    let (fx, fy) = if inverse {
        (planner.plan_fft_inverse(nx), planner.plan_fft_inverse(ny))
    } else {
        (planner.plan_fft_forward(nx), planner.plan_fft_forward(ny))
    };
    let mut data = values.to_vec();
    data.chunks_exact_mut(nx).for_each(|row| fx.process(row));
    let mut col = vec![C::new(0.0, 0.0); ny];
    for i in 0..nx {
        col.iter_mut().enumerate().for_each(|(j, c)| *c = data[j * nx + i]);
        fy.process(&mut col);
        col.iter().enumerate().for_each(|(j, c)| data[j * nx + i] = *c);
    }
    if inverse {
        let s = 1.0 / (nx * ny) as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }
    data
}

/// Unnormalized forward transform, row-major `ny x nx`.
pub fn fft2(values: &[C], nx: usize, ny: usize) -> Vec<C> {
    transform(values, nx, ny, false)
}

/// Inverse transform carrying `1/(nx ny)`.
pub fn ifft2(values: &[C], nx: usize, ny: usize) -> Vec<C> {
    transform(values, nx, ny, true)
}

/// Angular wavenumbers (rad/m) of the FFT bins along one axis.
pub fn wavenumbers(n: usize, d: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let m = if i <= (n - 1) / 2 { i as f64 } else { i as f64 - n as f64 };
            2.0 * PI * m / (n as f64 * d)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialSpectrum {
    /// bin width (rad/m)
    pub dk: f64,
    /// bin centres
    pub k: Vec<f64>,
    /// summed `|U|^2` in each ring
    pub energy: Vec<f64>,
}

impl RadialSpectrum {
    pub fn bin_of(&self, k: f64) -> usize {
        (k / self.dk).round() as usize
    }

    /// Local maxima ordered by energy, strongest first.
    pub fn peaks(&self) -> Vec<usize> {
        let e = &self.energy;
        let mut p: Vec<usize> = (1..e.len().saturating_sub(1))
            .filter(|&i| e[i] >= e[i - 1] && e[i] > e[i + 1])
            .collect();
        p.sort_by(|&a, &b| e[b].total_cmp(&e[a]));
        p
    }
}

/// Ring-summed power spectrum with bin width `2 pi / max(Lx, Ly)`. With
/// `hann` a separable Hann taper is applied first.
pub fn radial_spectrum(grid: &WavefieldGrid, hann: bool) -> RadialSpectrum {
    let (nx, ny) = (grid.nx, grid.ny);
    let taper = |i: usize, n: usize| {
        if hann {
            0.5 - 0.5 * (2.0 * PI * (i as f64 + 0.5) / n as f64).cos()
        } else {
            1.0
        }
    };
    let values: Vec<C> = grid
        .values
        .iter()
        .enumerate()
        .map(|(idx, v)| v * (taper(idx % nx, nx) * taper(idx / nx, ny)))
        .collect();
    let spec = fft2(&values, nx, ny);
    let kx = wavenumbers(nx, grid.dx);
    let ky = wavenumbers(ny, grid.dy);
    let dk = 2.0 * PI / (nx as f64 * grid.dx).max(ny as f64 * grid.dy);
    let kmax = kx.iter().chain(&ky).fold(0.0f64, |a, &b| a.max(b.abs()));
    let nbins = (kmax * std::f64::consts::SQRT_2 / dk).ceil() as usize + 2;
    let mut energy = vec![0.0; nbins];
    for (j, &y) in ky.iter().enumerate() {
        for (i, &x) in kx.iter().enumerate() {
            let b = (x.hypot(y) / dk).round() as usize;
            energy[b] += spec[j * nx + i].norm_sqr();
        }
    }
    RadialSpectrum {
        dk,
        k: (0..nbins).map(|b| b as f64 * dk).collect(),
        energy,
    }
}
