use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Provenance, WavefieldGrid};
use crate::error::{Error, Result};

type C = Complex64;

/// JSON sidecar of a scan. Spacings are given in `units`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    pub dx: f64,
    pub dy: f64,
    pub freq_hz: f64,
    #[serde(default = "default_units")]
    pub units: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<[f64; 2]>,
}

fn default_units() -> String {
    "m".into()
}

impl ScanMeta {
    fn metres(&self) -> Result<f64> {
        match self.units.as_str() {
            "m" => Ok(1.0),
            "mm" => Ok(1e-3),
            "in" | "inch" => Ok(0.0254),
            other => Err(Error::InvalidInput(format!("unknown length unit {other:?}"))),
        }
    }
}

/// `A exp(i theta)` on a uniform grid with provenance Scan.
pub fn import_scan(amplitude: &[f32], phase: &[f32], nx: usize, ny: usize, meta: &ScanMeta) -> Result<WavefieldGrid> {
    if amplitude.len() != phase.len() || amplitude.len() != nx * ny {
        return Err(Error::ShapeMismatch {
            expected: format!("{nx}x{ny} = {} samples in both grids", nx * ny),
            found: format!("amplitude {}, phase {}", amplitude.len(), phase.len()),
        });
    }
    let u = meta.metres()?;
    let values = amplitude
        .iter()
        .zip(phase)
        .map(|(&a, &t)| C::from_polar(f64::from(a), f64::from(t)))
        .collect();
    let o = meta.origin.unwrap_or([0.0, 0.0]);
    WavefieldGrid::new(
        nx,
        ny,
        meta.dx * u,
        meta.dy * u,
        [o[0] * u, o[1] * u],
        2.0 * std::f64::consts::PI * meta.freq_hz,
        Provenance::Scan,
        values,
    )
}

fn read_f32(path: &Path) -> Result<(Vec<f32>, Option<(usize, usize)>)> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rows: Vec<Vec<f32>> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(|t| {
                        t.parse::<f32>()
                            .map_err(|e| Error::InvalidInput(format!("{}: {t:?}: {e}", path.display())))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let nx = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != nx) {
            return Err(Error::ShapeMismatch {
                expected: format!("rows of {nx} values"),
                found: "ragged CSV rows".into(),
            });
        }
        let ny = rows.len();
        Ok((rows.into_iter().flatten().collect(), Some((nx, ny))))
    } else {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() % 4 != 0 {
            return Err(Error::ShapeMismatch {
                expected: "a multiple of 4 bytes".into(),
                found: format!("{} bytes", bytes.len()),
            });
        }
        let v = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok((v, None))
    }
}

/// Reads amplitude and phase grids (CSV or raw little-endian f32) and the
/// JSON sidecar.
pub fn read_scan(amp: &Path, phase: &Path, meta: &Path) -> Result<WavefieldGrid> {
    let text = fs::read_to_string(meta).map_err(|e| Error::io(meta, e))?;
    let m: ScanMeta = serde_json::from_str(&text)?;
    let (a, sa) = read_f32(amp)?;
    let (p, sp) = read_f32(phase)?;
    let (nx, ny) = match (m.nx, m.ny, sa.or(sp)) {
        (Some(nx), Some(ny), _) => (nx, ny),
        (_, _, Some(s)) => s,
        _ => {
            return Err(Error::InvalidInput(
                "raw scan grids need nx and ny in the metadata".into(),
            ))
        }
    };
    if let (Some(x), Some(y)) = (sa, sp) {
        if x != y {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", x.0, x.1),
                found: format!("{}x{}", y.0, y.1),
            });
        }
    }
    import_scan(&a, &p, nx, ny, &m)
}

/// Writes raw f32 amplitude and phase plus a metre-based sidecar.
pub fn export_scan(grid: &WavefieldGrid, amp: &Path, phase: &Path, meta: &Path) -> Result<()> {
    let bytes = |f: fn(&C) -> f64| -> Vec<u8> { grid.values.iter().flat_map(|v| (f(v) as f32).to_le_bytes()).collect() };
    fs::write(amp, bytes(|v| v.norm())).map_err(|e| Error::io(amp, e))?;
    fs::write(phase, bytes(|v| v.arg())).map_err(|e| Error::io(phase, e))?;
    let m = ScanMeta {
        nx: Some(grid.nx),
        ny: Some(grid.ny),
        dx: grid.dx,
        dy: grid.dy,
        freq_hz: grid.omega / (2.0 * std::f64::consts::PI),
        units: default_units(),
        origin: Some(grid.origin),
    };
    fs::write(meta, serde_json::to_vec_pretty(&m)?).map_err(|e| Error::io(meta, e))
}

/// Whole-pixel crop of a `width x height` region centred on `center` (the
/// grid centre when `None`).
pub fn crop_centered(grid: &WavefieldGrid, width: f64, height: f64, center: Option<[f64; 2]>) -> Result<WavefieldGrid> {
    let nx = (width / grid.dx).round() as usize;
    let ny = (height / grid.dy).round() as usize;
    let c = center.unwrap_or([
        grid.origin[0] + 0.5 * (grid.nx - 1) as f64 * grid.dx,
        grid.origin[1] + 0.5 * (grid.ny - 1) as f64 * grid.dy,
    ]);
    let start = |c: f64, o: f64, d: f64, n: usize| ((c - o) / d - 0.5 * (n as f64 - 1.0)).round();
    let i0 = start(c[0], grid.origin[0], grid.dx, nx);
    let j0 = start(c[1], grid.origin[1], grid.dy, ny);
    if i0 < 0.0 || j0 < 0.0 || i0 as usize + nx > grid.nx || j0 as usize + ny > grid.ny {
        return Err(Error::OutOfBounds { x: c[0], y: c[1] });
    }
    let (i0, j0) = (i0 as usize, j0 as usize);
    let values = (j0..j0 + ny)
        .flat_map(|j| grid.values[j * grid.nx + i0..j * grid.nx + i0 + nx].iter().copied())
        .collect();
    WavefieldGrid::new(
        nx,
        ny,
        grid.dx,
        grid.dy,
        grid.point(i0, j0),
        grid.omega,
        grid.provenance,
        values,
    )
}
