use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use weldwave::dataset::{
    self, generate_dataset, generate_sample_with_diagnostics, read_manifest, sha256_hex, stream_rng, substream,
    verify_manifest, DatasetConfig, Model, SampleParams, WfsRecord, INCH,
};
use weldwave::dispersion::{amplitude_projection, DispersionTable, ModeId, SurfaceForce, DEFAULT_MAX_ORDER};
use weldwave::em::BcClass;
use weldwave::material::Material;
use weldwave::wavefield::{crop_centered, mode_filter, read_scan, synth_corrupt, CorruptionSpec, CHANNEL_NAMES};

#[derive(Parser)]
#[command(name = "weldwave", version, about = "Guided-wave weld inspection datasets and solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagating Lamb modes as CSV
    Dispersion {
        /// material JSON; steel-like when omitted
        #[arg(long)]
        material: Option<PathBuf>,
        #[arg(long)]
        freq_khz: f64,
        #[arg(long, default_value_t = 0.25)]
        thickness_in: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ORDER)]
        max_order: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One effective-medium sample
    SimulateEm {
        #[command(flatten)]
        sim: SimArgs,
    },
    /// One elastodynamic sample
    SimulateNl {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        dof_cap: Option<usize>,
    },
    /// Keep one Lamb mode of a stored field
    Filter {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        mode: ModeId,
        #[arg(long, default_value_t = 0.25)]
        thickness_in: f64,
        #[arg(long)]
        material: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthetic noise, speckle and pixel dropout
    Corrupt {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Amplitude and phase grids plus a JSON sidecar to WFS
    ImportScan {
        #[arg(long)]
        amp: PathBuf,
        #[arg(long)]
        phase: PathBuf,
        #[arg(long)]
        meta: PathBuf,
        /// centred crop, inches
        #[arg(long, num_args = 2, value_names = ["W", "H"])]
        crop_in: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Seeded batch of samples with a manifest
    GenDataset {
        #[arg(long, default_value = "coupon")]
        class: BcClass,
        #[arg(long, default_value = "em")]
        model: Model,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = dataset::DEFAULT_GRID)]
        grid: usize,
        #[arg(long, default_value_t = dataset::DEFAULT_FREQ_HZ / 1e3)]
        freq_khz: f64,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        dof_cap: Option<usize>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Header, metadata and hash of a WFS file, or a dataset check
    Info { path: PathBuf },
    /// One channel or label as a binary PGM
    ExportPlot {
        file: PathBuf,
        /// channel index or name; `stiffness` and `crack` select labels
        #[arg(long, default_value = "0")]
        channel: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
struct SimArgs {
    #[arg(long, default_value = "coupon")]
    class: BcClass,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = dataset::DEFAULT_FREQ_HZ / 1e3)]
    freq_khz: f64,
    #[arg(long, default_value_t = dataset::DEFAULT_GRID)]
    grid: usize,
    /// sampled parameters as JSON instead of a draw from `--seed`
    #[arg(long)]
    params: Option<PathBuf>,
    /// write solver diagnostics as JSON (`-` for stdout)
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn load_material(path: Option<&Path>) -> Result<Material> {
    Ok(match path {
        Some(p) => Material::load(p)?,
        None => Material::steel_like(),
    })
}

fn write_text(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) if p != Path::new("-") => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        _ => Ok(std::io::stdout().write_all(text.as_bytes())?),
    }
}

fn dispersion_csv(material: &Material, freq_khz: f64, thickness_in: f64, max_order: usize) -> Result<String> {
    let omega = 2.0 * std::f64::consts::PI * freq_khz * 1e3;
    let table = DispersionTable::compute(material, omega, 0.5 * thickness_in * INCH, max_order)?;
    let k_max = table.modes.iter().map(|m| m.k).fold(0.0, f64::max);
    let table = if k_max > 0.0 {
        amplitude_projection(&table, &SurfaceForce::gaussian(0.25 * 2.0 * std::f64::consts::PI / k_max, 4))?
    } else {
        table
    };
    let mut csv = String::from("symmetry,order,k_rad_per_m,vp_m_per_s,vg_m_per_s,amplitude\n");
    for m in &table.modes {
        let a = table.amplitude(m.id()).map_or(String::new(), |a| format!("{a:.12e}"));
        csv += &format!("{},{},{:.12e},{:.12e},{:.12e},{a}\n", m.symmetry, m.order, m.k, m.vp, m.vg);
    }
    Ok(csv)
}

fn simulate(sim: &SimArgs, model: Model, dof_cap: Option<usize>) -> Result<()> {
    let mut cfg = DatasetConfig::new(sim.class, model, 1, sim.seed);
    cfg.freq_hz = sim.freq_khz * 1e3;
    cfg.generation.grid = sim.grid;
    if let Some(cap) = dof_cap {
        cfg.generation.nl.dof_cap = cap;
    }
    let params: SampleParams = match &sim.params {
        Some(p) => serde_json::from_slice(&fs::read(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => cfg.params_for(0, cfg.margin()?),
    };
    let (record, diag) = generate_sample_with_diagnostics(&params, model, cfg.freq_hz, &cfg.generation)?;
    dataset::write_sample(&sim.out, &record)?;
    if let Some(d) = &sim.diagnostics {
        write_text(Some(d), &(serde_json::to_string_pretty(&diag)? + "\n"))?;
    }
    eprintln!(
        "{}: {} sample, {} dofs, crack {}",
        sim.out.display(),
        model,
        record.meta.dofs,
        if record.meta.crack.present { "present" } else { "absent" }
    );
    Ok(())
}

fn filter(input: &Path, mode: ModeId, thickness_in: f64, material: Option<&Path>, out: &Path) -> Result<()> {
    let rec = WfsRecord::read(input)?;
    let grid = rec.to_field()?;
    let table = DispersionTable::compute(&load_material(material)?, grid.omega, 0.5 * thickness_in * INCH, DEFAULT_MAX_ORDER)?;
    let centre = table.get(mode).with_context(|| format!("{mode} does not propagate at this frequency"))?.k;
    let neighbors: Vec<f64> = table.modes.iter().filter(|m| m.id() != mode).map(|m| m.k).collect();
    let filtered = mode_filter(&grid, centre, &neighbors)?;
    let meta = json!({ "source": input.display().to_string(), "filtered_mode": mode.to_string(), "k_center": centre });
    WfsRecord::from_field(&filtered, meta).write(out)?;
    Ok(())
}

fn corrupt(input: &Path, seed: u64, out: &Path) -> Result<()> {
    let grid = WfsRecord::read(input)?.to_field()?;
    let mut rng = stream_rng(seed, 0, substream::CORRUPT);
    let spec = CorruptionSpec::default();
    let (noisy, record) = synth_corrupt(&grid, &spec, &mut rng)?;
    let meta = json!({ "source": input.display().to_string(), "seed": seed, "corruption": spec, "record": record });
    WfsRecord::from_field(&noisy, meta).write(out)?;
    Ok(())
}

fn import(amp: &Path, phase: &Path, meta: &Path, crop: Option<&[f64]>, out: &Path) -> Result<()> {
    let mut grid = read_scan(amp, phase, meta)?;
    if let Some(c) = crop {
        grid = crop_centered(&grid, c[0] * INCH, c[1] * INCH, None)?;
    }
    let sidecar: serde_json::Value = serde_json::from_slice(&fs::read(meta)?)?;
    WfsRecord::from_field(&grid, json!({ "scan": sidecar })).write(out)?;
    Ok(())
}

fn info(path: &Path) -> Result<()> {
    if path.is_dir() {
        let manifest = read_manifest(path)?;
        verify_manifest(path, &manifest)?;
        println!(
            "{} samples verified ({} train, {} test, {} failed)",
            manifest.entries.len(),
            manifest.train,
            manifest.test,
            manifest.failures.len()
        );
        return Ok(());
    }
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let rec = WfsRecord::from_bytes(&bytes)?;
    let crc = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into()?);
    let summary = json!({
        "file": path.display().to_string(),
        "bytes": bytes.len(),
        "sha256": sha256_hex(&bytes),
        "crc32": format!("{crc:08x}"),
        "format_version": dataset::FORMAT_VERSION,
        "nx": rec.nx,
        "ny": rec.ny,
        "dx": rec.dx,
        "dy": rec.dy,
        "freq_hz": rec.freq_hz,
        "channel_count": rec.channels.len(),
        "provenance": format!("{:?}", rec.provenance),
        "labelled": rec.labels.is_some(),
        "meta": rec.meta,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

/// Binary PGM, min-max scaled, top row at the largest y. NaN maps to 0.
fn pgm(values: &[f32], nx: usize, ny: usize) -> Vec<u8> {
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f32::INFINITY, f32::min);
    let hi = finite.fold(f32::NEG_INFINITY, f32::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    for j in (0..ny).rev() {
        out.extend(values[j * nx..(j + 1) * nx].iter().map(|&v| {
            if v.is_finite() {
                (255.0 * (v - lo) / span).round() as u8
            } else {
                0
            }
        }));
    }
    out
}

fn export_plot(file: &Path, channel: &str, out: &Path) -> Result<()> {
    let rec = WfsRecord::read(file)?;
    let values: Vec<f32> = match channel {
        "stiffness" | "crack" => {
            let Some(l) = &rec.labels else {
                bail!("{} carries no labels", file.display());
            };
            if channel == "crack" {
                l.crack.iter().map(|&c| f32::from(c)).collect()
            } else {
                l.stiffness.clone()
            }
        }
        name => {
            let idx = match name.parse::<usize>() {
                Ok(i) => i,
                Err(_) => CHANNEL_NAMES
                    .iter()
                    .position(|n| *n == name)
                    .with_context(|| format!("unknown channel {name:?}"))?,
            };
            rec.channels
                .get(idx)
                .with_context(|| format!("channel {idx} out of range ({} channels)", rec.channels.len()))?
                .clone()
        }
    };
    fs::write(out, pgm(&values, rec.nx, rec.ny)).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Dispersion {
            material,
            freq_khz,
            thickness_in,
            max_order,
            out,
        } => {
            let csv = dispersion_csv(&load_material(material.as_deref())?, freq_khz, thickness_in, max_order)?;
            write_text(out.as_deref(), &csv)
        }
        Command::SimulateEm { sim } => simulate(&sim, Model::Em, None),
        Command::SimulateNl { sim, dof_cap } => simulate(&sim, Model::Nl, dof_cap),
        Command::Filter {
            input,
            mode,
            thickness_in,
            material,
            out,
        } => filter(&input, mode, thickness_in, material.as_deref(), &out),
        Command::Corrupt { input, seed, out } => corrupt(&input, seed, &out),
        Command::ImportScan {
            amp,
            phase,
            meta,
            crop_in,
            out,
        } => import(&amp, &phase, &meta, crop_in.as_deref(), &out),
        Command::GenDataset {
            class,
            model,
            count,
            seed,
            grid,
            freq_khz,
            workers,
            dof_cap,
            out_dir,
        } => {
            let mut cfg = DatasetConfig::new(class, model, count, seed);
            cfg.freq_hz = freq_khz * 1e3;
            cfg.workers = workers;
            cfg.generation.grid = grid;
            if let Some(cap) = dof_cap {
                cfg.generation.nl.dof_cap = cap;
            }
            let m = generate_dataset(&cfg, &out_dir)?;
            for f in &m.failures {
                eprintln!("sample {} failed: {}", f.index, f.error);
            }
            println!(
                "{} samples written to {} ({} train, {} test, {} failed)",
                m.entries.len(),
                out_dir.display(),
                m.train,
                m.test,
                m.failures.len()
            );
            Ok(())
        }
        Command::Info { path } => info(&path),
        Command::ExportPlot { file, channel, out } => export_plot(&file, &channel, &out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_layout() {
        let img = pgm(&[0.0, 1.0, 2.0, f32::NAN], 2, 2);
        let header = b"P5\n2 2\n255\n";
        assert_eq!(&img[..header.len()], header);
        // top row is j = 1
        assert_eq!(&img[header.len()..], &[255, 0, 0, 128]);
    }
}
