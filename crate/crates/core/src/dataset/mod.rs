//! Parameter sampling, sample generation, WFS persistence and manifests.

mod format;
mod params;
mod scene;

pub use format::{Labels, WfsRecord, FORMAT_VERSION, WFS_MAGIC};
pub use params::{sample_params, ClassGeometry, ParamDistributions, SampleParams, INCH};
pub use scene::{build_scene, crack_label, crack_threshold, stiffness_label, LabelThreshold, Scene, SceneConfig};

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dispersion::{DispersionTable, ModeId, DEFAULT_MAX_ORDER};
use crate::em::{simulate_em, BcClass, EmConfig, EmProblem, SolveDiagnostics};
use crate::error::{Error, Result};
use crate::material::Material;
use crate::nl::{simulate_nl, NlConfig, NlProblem};
use crate::wavefield::{build_channel_stack, regrid, resample_to_grid, ChannelStack, Provenance, Target, CHANNEL_NAMES};
use crate::weld::{CrackSpec, WeldSpec};

pub const GENERATOR: &str = concat!("weldwave ", env!("CARGO_PKG_VERSION"));
pub const DEFAULT_FREQ_HZ: f64 = 225e3;
pub const DEFAULT_GRID: usize = 128;
pub const TRAIN_FRACTION: f64 = 0.8;

/// Per-sample substreams.
pub mod substream {
    pub const PARAMS: u64 = 0;
    pub const WELD: u64 = 1;
    pub const CRACK: u64 = 2;
    pub const CORRUPT: u64 = 3;
}

const SPLIT_INDEX: u64 = u64::MAX >> 8;

/// Independent stream for `(seed, index, sub)`.
pub fn stream_rng(seed: u64, index: u64, sub: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((index << 8) | (sub & 0xff));
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Em,
    Nl,
}

impl Model {
    pub fn provenance(self) -> Provenance {
        match self {
            Model::Em => Provenance::Em,
            Model::Nl => Provenance::Nl,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Em => "em",
            Model::Nl => "nl",
        })
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "em" => Ok(Model::Em),
            "nl" => Ok(Model::Nl),
            other => Err(Error::InvalidInput(format!("unknown model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub grid: usize,
    pub material: Material,
    pub scene: SceneConfig,
    pub threshold: LabelThreshold,
    pub em: EmConfig,
    pub nl: NlConfig,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            grid: DEFAULT_GRID,
            material: Material::steel_like(),
            scene: SceneConfig::default(),
            threshold: LabelThreshold::default(),
            em: EmConfig::default(),
            nl: NlConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub id: ModeId,
    pub k: f64,
    pub vp: f64,
    pub amplitude: Option<f64>,
}

/// Everything about a sample besides its arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub generator: String,
    pub model: Model,
    pub params: SampleParams,
    pub weld: WeldSpec,
    pub crack: CrackSpec,
    /// physical region covered by the grid `[xmin, xmax, ymin, ymax]`
    pub region: [f64; 4],
    pub origin: [f64; 2],
    pub channel_names: Vec<String>,
    pub channel_scale: f64,
    pub label_threshold: LabelThreshold,
    pub tau: Option<f64>,
    pub source_sigma: f64,
    pub modes: Vec<ModeSummary>,
    pub dofs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub format_version: u32,
    pub provenance: Provenance,
    pub freq_hz: f64,
    pub dx: f64,
    pub dy: f64,
    pub stack: ChannelStack,
    pub label_stiffness: Vec<f32>,
    pub label_crack: Vec<u8>,
    pub meta: SampleMeta,
}

impl SampleRecord {
    pub fn to_wfs(&self) -> Result<WfsRecord> {
        Ok(WfsRecord {
            nx: self.stack.nx,
            ny: self.stack.ny,
            dx: self.dx,
            dy: self.dy,
            freq_hz: self.freq_hz,
            provenance: self.provenance,
            meta: serde_json::to_value(&self.meta)?,
            channels: self.stack.channels.clone(),
            labels: Some(Labels {
                stiffness: self.label_stiffness.clone(),
                crack: self.label_crack.clone(),
            }),
        })
    }

    pub fn from_wfs(rec: WfsRecord) -> Result<Self> {
        let labels = rec
            .labels
            .ok_or_else(|| Error::CorruptFile("sample file carries no labels".into()))?;
        let meta: SampleMeta = serde_json::from_value(rec.meta)
            .map_err(|e| Error::CorruptFile(format!("sample metadata: {e}")))?;
        let stack = ChannelStack::from_channels(rec.nx, rec.ny, rec.channels, meta.channel_scale)?;
        Ok(Self {
            format_version: FORMAT_VERSION,
            provenance: rec.provenance,
            freq_hz: rec.freq_hz,
            dx: rec.dx,
            dy: rec.dy,
            stack,
            label_stiffness: labels.stiffness,
            label_crack: labels.crack,
            meta,
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.to_wfs()?.to_bytes()
    }
}

pub fn write_sample(path: &Path, record: &SampleRecord) -> Result<()> {
    record.to_wfs()?.write(path)
}

pub fn read_sample(path: &Path) -> Result<SampleRecord> {
    SampleRecord::from_wfs(WfsRecord::read(path)?)
}

fn summaries(table: &DispersionTable) -> Vec<ModeSummary> {
    table
        .modes
        .iter()
        .map(|m| ModeSummary {
            id: m.id(),
            k: m.k,
            vp: m.vp,
            amplitude: table.amplitude(m.id()),
        })
        .collect()
}

/// Builds the scene, runs the solver, and assembles inputs and labels. The
/// weld and crack draw from the `(seed, index)` substreams of `params`.
pub fn generate_sample(params: &SampleParams, model: Model, freq_hz: f64, cfg: &GenConfig) -> Result<SampleRecord> {
    generate_sample_with_diagnostics(params, model, freq_hz, cfg).map(|(r, _)| r)
}

/// [`generate_sample`] plus the per-solve diagnostics, which hold timings and
/// therefore stay out of the record.
pub fn generate_sample_with_diagnostics(
    params: &SampleParams,
    model: Model,
    freq_hz: f64,
    cfg: &GenConfig,
) -> Result<(SampleRecord, Vec<SolveDiagnostics>)> {
    let mut weld_rng = stream_rng(params.seed, params.index, substream::WELD);
    let mut crack_rng = stream_rng(params.seed, params.index, substream::CRACK);
    let scene = build_scene(params, freq_hz, &cfg.material, &cfg.scene, &mut weld_rng, &mut crack_rng)?;
    let target = Target {
        region: scene.domain.physical(),
        nx: cfg.grid,
        ny: cfg.grid,
    };
    let crack = scene.crack.present.then_some(&scene.crack);
    let (field, table, source_sigma, diagnostics) = match model {
        Model::Em => {
            let problem = EmProblem {
                domain: &scene.domain,
                material: &cfg.material,
                freq_hz,
                source: params.force_location,
                stiffness: &scene.stiffness,
                thickness: &scene.thickness,
                mask: &scene.mask,
                crack,
            };
            let sol = simulate_em(&problem, &cfg.em)?;
            let diag = sol.modes.iter().map(|m| m.diagnostics.clone()).collect();
            (resample_to_grid(&sol.total, &target)?, sol.table, sol.source_sigma, diag)
        }
        Model::Nl => {
            let problem = NlProblem {
                domain: &scene.domain,
                material: &cfg.material,
                freq_hz,
                source: params.force_location,
                stiffness: Some(&scene.stiffness),
                crack,
            };
            let sol = simulate_nl(&problem, &cfg.nl)?;
            let surface = sol.field.physical_surface()?;
            (regrid(&surface, &target)?, sol.table, sol.source_sigma, vec![sol.diagnostics])
        }
    };
    let stack = build_channel_stack(&field, &table)?;
    let tau = crack_threshold(&scene.mask, &scene.crack, cfg.threshold);
    let label_crack = crack_label(&scene.mask, tau, &target);
    let label_stiffness = stiffness_label(&scene.stiffness, &target);
    let meta = SampleMeta {
        generator: GENERATOR.into(),
        model,
        params: params.clone(),
        weld: scene.weld,
        crack: scene.crack.clone(),
        region: target.region,
        origin: field.origin,
        channel_names: CHANNEL_NAMES.iter().map(|s| s.to_string()).collect(),
        channel_scale: stack.scale,
        label_threshold: cfg.threshold,
        tau,
        source_sigma,
        modes: summaries(&table),
        dofs: diagnostics.first().map_or(0, |d: &SolveDiagnostics| d.dofs),
    };
    let record = SampleRecord {
        format_version: FORMAT_VERSION,
        provenance: model.provenance(),
        freq_hz,
        dx: field.dx,
        dy: field.dy,
        stack,
        label_stiffness,
        label_crack,
        meta,
    };
    Ok((record, diagnostics))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub class: BcClass,
    pub model: Model,
    pub count: usize,
    pub seed: u64,
    pub freq_hz: f64,
    /// worker threads; the rayon default when `None`
    #[serde(skip)]
    pub workers: Option<usize>,
    pub distributions: ParamDistributions,
    pub generation: GenConfig,
}

impl DatasetConfig {
    pub fn new(class: BcClass, model: Model, count: usize, seed: u64) -> Self {
        Self {
            class,
            model,
            count,
            seed,
            freq_hz: DEFAULT_FREQ_HZ,
            workers: None,
            distributions: ParamDistributions::default(),
            generation: GenConfig::default(),
        }
    }

    /// Force-location margin: one wavelength of the shortest mode.
    pub fn margin(&self) -> Result<f64> {
        let g = ClassGeometry::for_class(self.class);
        let omega = 2.0 * std::f64::consts::PI * self.freq_hz;
        let table = DispersionTable::compute(&self.generation.material, omega, 0.5 * g.thickness, DEFAULT_MAX_ORDER)?;
        let k = table.modes.iter().map(|m| m.k).fold(0.0, f64::max);
        Ok(if k > 0.0 { 2.0 * std::f64::consts::PI / k } else { 0.0 })
    }

    pub fn params_for(&self, index: u64, margin: f64) -> SampleParams {
        let mut rng = stream_rng(self.seed, index, substream::PARAMS);
        let mut p = sample_params(
            self.class,
            ClassGeometry::for_class(self.class),
            &self.distributions,
            margin,
            &mut rng,
        );
        p.seed = self.seed;
        p.index = index;
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Seeded permutation; the first `round(0.8 n)` indices train.
pub fn split_assignment(seed: u64, count: usize) -> Vec<Split> {
    let mut order: Vec<usize> = (0..count).collect();
    order.shuffle(&mut stream_rng(seed, SPLIT_INDEX, 0));
    let train = (TRAIN_FRACTION * count as f64).round() as usize;
    let mut out = vec![Split::Test; count];
    order.iter().take(train).for_each(|&i| out[i] = Split::Train);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub index: u64,
    pub file: String,
    pub sha256: String,
    pub split: Split,
    pub cracked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub index: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub generator: String,
    pub format_version: u32,
    pub config: DatasetConfig,
    pub counts: BTreeMap<String, usize>,
    pub train: usize,
    pub test: usize,
    pub entries: Vec<ManifestEntry>,
    pub failures: Vec<FailureRecord>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sample_file_name(index: u64) -> String {
    format!("sample_{index:05}.wfs")
}

/// Generates `count` samples into `out_dir` and writes the manifest. Failed
/// samples are listed in the manifest instead of aborting the batch.
pub fn generate_dataset(cfg: &DatasetConfig, out_dir: &Path) -> Result<DatasetManifest> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let margin = cfg.margin()?;
    let run = || -> Vec<std::result::Result<ManifestEntry, FailureRecord>> {
        (0..cfg.count as u64)
            .into_par_iter()
            .map(|index| {
                let p = cfg.params_for(index, margin);
                let attempt = || -> Result<ManifestEntry> {
                    let rec = generate_sample(&p, cfg.model, cfg.freq_hz, &cfg.generation)?;
                    let bytes = rec.to_bytes()?;
                    let file = sample_file_name(index);
                    let path = out_dir.join(&file);
                    fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
                    Ok(ManifestEntry {
                        index,
                        file,
                        sha256: sha256_hex(&bytes),
                        split: Split::Train,
                        cracked: rec.meta.crack.present,
                    })
                };
                attempt().map_err(|e| FailureRecord {
                    index,
                    error: e.to_string(),
                })
            })
            .collect()
    };
    let results = match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    let split = split_assignment(cfg.seed, cfg.count);
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(mut e) => {
                e.split = split[e.index as usize];
                entries.push(e);
            }
            Err(f) => failures.push(f),
        }
    }
    let mut counts = BTreeMap::new();
    counts.insert(cfg.model.to_string(), entries.len());
    counts.insert(cfg.class.to_string(), entries.len());
    let train = entries.iter().filter(|e| e.split == Split::Train).count();
    let manifest = DatasetManifest {
        generator: GENERATOR.into(),
        format_version: FORMAT_VERSION,
        config: cfg.clone(),
        counts,
        train,
        test: entries.len() - train,
        entries,
        failures,
    };
    let path = out_dir.join(MANIFEST_FILE);
    fs::write(&path, serde_json::to_vec_pretty(&manifest)?).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<DatasetManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_slice(&text)?)
}

/// Re-hashes every listed file.
pub fn verify_manifest(dir: &Path, manifest: &DatasetManifest) -> Result<()> {
    for e in &manifest.entries {
        let path = dir.join(&e.file);
        let bytes = fs::read(&path).map_err(|err| Error::io(&path, err))?;
        let h = sha256_hex(&bytes);
        if h != e.sha256 {
            return Err(Error::CorruptFile(format!("{}: hash {h} does not match manifest {}", e.file, e.sha256)));
        }
        WfsRecord::from_bytes(&bytes)?;
    }
    Ok(())
}

/// One-sample Kolmogorov-Smirnov distance between `samples` and `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic critical value of the one-sample statistic at `alpha = 0.01`.
pub fn ks_critical_01(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}
