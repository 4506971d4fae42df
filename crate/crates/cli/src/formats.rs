//! On-disk formats: dataset CSV with JSON meta sidecar, label and score
//! files, spectrum dumps, affinity exports, sweep tables and run manifests.
//!
//! Every writer is deterministic: fixed field order, shortest-roundtrip
//! float formatting, and content hashes over the exact bytes written.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use gestalt_core::eval::{CellSummary, ErrorBreakdown, RepRecord, SweepConfig};
use gestalt_core::pipeline::{AffinityMode, PipelineConfig};
use gestalt_core::space::{Extent, FeaturePoint, GridSpec, Manifold};
use gestalt_core::spectral::{ClusterLabels, ClusterParams, EigenSystem};
use gestalt_core::stimuli::{ArcSpec, LabeledDataset, StimulusSpec};

pub type CliResult<T> = Result<T, String>;

pub fn io_err<E: std::fmt::Display>(context: &str, e: E) -> String {
    format!("{context}: {e}")
}

/// FNV-1a over raw bytes; used for content addressing and integrity checks.
pub fn fnv64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}

pub fn hex64(v: u64) -> String {
    format!("{v:016x}")
}

// ---------------------------------------------------------------------------
// DTOs

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridDto {
    pub manifold: String,
    pub dx: f64,
    pub dy: f64,
    pub dt: f64,
    pub n_theta: u32,
    pub dv: f64,
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub t: Option<[f64; 2]>,
    pub v: Option<[f64; 2]>,
}

impl GridDto {
    pub fn from_core(g: &GridSpec) -> Self {
        GridDto {
            manifold: g.manifold.name().to_string(),
            dx: g.dx,
            dy: g.dy,
            dt: g.dt,
            n_theta: g.n_theta,
            dv: g.dv,
            x: [g.x.lo, g.x.hi],
            y: [g.y.lo, g.y.hi],
            t: g.t.map(|e| [e.lo, e.hi]),
            v: g.v.map(|e| [e.lo, e.hi]),
        }
    }

    pub fn to_core(&self) -> CliResult<GridSpec> {
        let manifold = match self.manifold.as_str() {
            "M3" => Manifold::M3,
            "M0" => Manifold::M0,
            "MT" => Manifold::MT,
            other => return Err(format!("unknown manifold {other}")),
        };
        let ext = |b: [f64; 2]| Extent::new(b[0], b[1]).map_err(|e| e.to_string());
        GridSpec::new(
            manifold,
            self.dx,
            self.dy,
            self.dt,
            self.n_theta,
            self.dv,
            ext(self.x)?,
            ext(self.y)?,
            self.t.map(ext).transpose()?,
            self.v.map(ext).transpose()?,
        )
        .map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArcDto {
    pub curvature: f64,
    pub arc_len: f64,
    pub start: (f64, f64),
    pub start_tangent: f64,
    pub samples: u32,
    /// Dash-group sampling: `(points per dash, within-dash spacing)`.
    #[serde(default)]
    pub dashes: Option<(u32, f64)>,
}

impl ArcDto {
    fn from_core(a: &ArcSpec) -> Self {
        ArcDto {
            curvature: a.curvature,
            arc_len: a.arc_len,
            start: a.start,
            start_tangent: a.start_tangent,
            samples: a.samples,
            dashes: a.dashes.map(|d| (d.per_dash, d.intra_spacing)),
        }
    }

    fn to_core(&self) -> CliResult<ArcSpec> {
        let arc = ArcSpec::new(self.curvature, self.arc_len, self.start, self.start_tangent, self.samples)
            .map_err(|e| e.to_string())?;
        match self.dashes {
            Some((per_dash, intra)) => arc.with_dashes(per_dash, intra).map_err(|e| e.to_string()),
            None => Ok(arc),
        }
    }
}

/// Stimulus configuration; `two_contours` and `s_k_r` are presets that
/// expand into segment fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StimulusDto {
    GaussianClouds {
        counts: Vec<u32>,
        centers: Vec<(f64, f64)>,
        spread: f64,
        noise: u32,
        width: f64,
        height: f64,
        #[serde(default)]
        seed: u64,
    },
    SegmentField {
        units: Vec<ArcDto>,
        background: u32,
        width: f64,
        height: f64,
        #[serde(default)]
        seed: u64,
    },
    Lemniscate {
        scale: f64,
        samples: u32,
        background: u32,
        width: f64,
        height: f64,
        #[serde(default)]
        seed: u64,
    },
    SinusoidalVelocity {
        base: Box<StimulusDto>,
        v_peak: f64,
        #[serde(default)]
        seed: u64,
    },
    MovingScene {
        background: u32,
        frames: u32,
        #[serde(default)]
        seed: u64,
    },
    TwoContours {
        background: u32,
        #[serde(default)]
        seed: u64,
    },
    #[serde(rename = "s_k_r")]
    Skr {
        curvature: f64,
        background: u32,
        #[serde(default)]
        seed: u64,
    },
}

impl StimulusDto {
    pub fn from_core(s: &StimulusSpec) -> Self {
        match s {
            StimulusSpec::GaussianClouds { counts, centers, spread, noise, width, height, seed } => {
                StimulusDto::GaussianClouds {
                    counts: counts.clone(),
                    centers: centers.clone(),
                    spread: *spread,
                    noise: *noise,
                    width: *width,
                    height: *height,
                    seed: *seed,
                }
            }
            StimulusSpec::SegmentField { units, background, width, height, seed } => StimulusDto::SegmentField {
                units: units.iter().map(ArcDto::from_core).collect(),
                background: *background,
                width: *width,
                height: *height,
                seed: *seed,
            },
            StimulusSpec::Lemniscate { scale, samples, background, width, height, seed } => {
                StimulusDto::Lemniscate {
                    scale: *scale,
                    samples: *samples,
                    background: *background,
                    width: *width,
                    height: *height,
                    seed: *seed,
                }
            }
            StimulusSpec::SinusoidalVelocity { base, v_peak, seed } => StimulusDto::SinusoidalVelocity {
                base: Box::new(StimulusDto::from_core(base)),
                v_peak: *v_peak,
                seed: *seed,
            },
            StimulusSpec::MovingScene { background, frames, seed } => {
                StimulusDto::MovingScene { background: *background, frames: *frames, seed: *seed }
            }
        }
    }

    pub fn to_core(&self) -> CliResult<StimulusSpec> {
        Ok(match self {
            StimulusDto::GaussianClouds { counts, centers, spread, noise, width, height, seed } => {
                StimulusSpec::GaussianClouds {
                    counts: counts.clone(),
                    centers: centers.clone(),
                    spread: *spread,
                    noise: *noise,
                    width: *width,
                    height: *height,
                    seed: *seed,
                }
            }
            StimulusDto::SegmentField { units, background, width, height, seed } => StimulusSpec::SegmentField {
                units: units.iter().map(ArcDto::to_core).collect::<CliResult<_>>()?,
                background: *background,
                width: *width,
                height: *height,
                seed: *seed,
            },
            StimulusDto::Lemniscate { scale, samples, background, width, height, seed } => {
                StimulusSpec::Lemniscate {
                    scale: *scale,
                    samples: *samples,
                    background: *background,
                    width: *width,
                    height: *height,
                    seed: *seed,
                }
            }
            StimulusDto::SinusoidalVelocity { base, v_peak, seed } => StimulusSpec::SinusoidalVelocity {
                base: Box::new(base.to_core()?),
                v_peak: *v_peak,
                seed: *seed,
            },
            StimulusDto::MovingScene { background, frames, seed } => {
                StimulusSpec::MovingScene { background: *background, frames: *frames, seed: *seed }
            }
            StimulusDto::TwoContours { background, seed } => gestalt_core::stimuli::two_contours(*background, *seed),
            StimulusDto::Skr { curvature, background, seed } => {
                gestalt_core::stimuli::s_k_r(*curvature, *background, *seed)
            }
        })
    }

    /// Apply one sweep-axis value to the stimulus template.
    pub fn apply_axis(&mut self, param: &str, value: f64) -> CliResult<bool> {
        match (self, param) {
            (StimulusDto::Skr { curvature, .. }, "curvature") => {
                *curvature = value;
                Ok(true)
            }
            (StimulusDto::Skr { background, .. }, "background")
            | (StimulusDto::TwoContours { background, .. }, "background")
            | (StimulusDto::SegmentField { background, .. }, "background")
            | (StimulusDto::Lemniscate { background, .. }, "background")
            | (StimulusDto::MovingScene { background, .. }, "background") => {
                *background = value as u32;
                Ok(true)
            }
            (StimulusDto::GaussianClouds { noise, .. }, "background") => {
                *noise = value as u32;
                Ok(true)
            }
            (StimulusDto::SinusoidalVelocity { base, v_peak, .. }, p) => {
                if p == "v_peak" {
                    *v_peak = value;
                    return Ok(true);
                }
                base.apply_axis(p, value)
            }
            _ => Ok(false),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AffinityDto {
    Gaussian { sigma: f64 },
    M3,
    M0 { alpha: f64 },
    MtCombined { alpha0: f64, alpha_t: f64 },
}

impl AffinityDto {
    pub fn to_core(&self) -> AffinityMode {
        match *self {
            AffinityDto::Gaussian { sigma } => AffinityMode::Gaussian { sigma },
            AffinityDto::M3 => AffinityMode::M3,
            AffinityDto::M0 { alpha } => AffinityMode::M0 { alpha },
            AffinityDto::MtCombined { alpha0, alpha_t } => AffinityMode::MtCombined { alpha0, alpha_t },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterDto {
    pub epsilon: f64,
    pub tau: u32,
    pub min_size: u32,
}

impl ClusterDto {
    pub fn to_core(&self) -> CliResult<ClusterParams> {
        ClusterParams::new(self.epsilon, self.tau, self.min_size).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineDto {
    pub affinity: AffinityDto,
    pub kappa: f64,
    pub horizon: u32,
    pub paths: u32,
    #[serde(default = "default_v_max")]
    pub v_max: f64,
    #[serde(default = "default_n_theta")]
    pub n_theta: u32,
    pub cluster: ClusterDto,
}

fn default_n_theta() -> u32 {
    gestalt_core::space::DEFAULT_N_THETA
}

fn default_v_max() -> f64 {
    gestalt_core::space::DEFAULT_V_MAX
}

impl PipelineDto {
    pub fn to_core(&self, kernel_seed: u64) -> CliResult<PipelineConfig> {
        Ok(PipelineConfig {
            affinity: self.affinity.to_core(),
            kappa: self.kappa,
            horizon: self.horizon,
            paths: self.paths,
            kernel_seed,
            v_max: self.v_max,
            n_theta: self.n_theta,
            cluster: self.cluster.to_core()?,
        })
    }

    pub fn apply_axis(&mut self, param: &str, value: f64) -> bool {
        match param {
            "kappa" => self.kappa = value,
            "horizon" => self.horizon = value as u32,
            "paths" => self.paths = value as u32,
            "epsilon" => self.cluster.epsilon = value,
            "tau" => self.cluster.tau = value as u32,
            "n_theta" => self.n_theta = value as u32,
            "min_size" => self.cluster.min_size = value as u32,
            "sigma" => {
                if let AffinityDto::Gaussian { sigma } = &mut self.affinity {
                    *sigma = value;
                } else {
                    return false;
                }
            }
            "alpha" => match &mut self.affinity {
                AffinityDto::M0 { alpha } => *alpha = value,
                AffinityDto::MtCombined { alpha0, alpha_t } => {
                    *alpha0 = value;
                    *alpha_t = value;
                }
                _ => return false,
            },
            "alpha0" => {
                if let AffinityDto::MtCombined { alpha0, .. } = &mut self.affinity {
                    *alpha0 = value;
                } else {
                    return false;
                }
            }
            "alpha_t" => {
                if let AffinityDto::MtCombined { alpha_t, .. } = &mut self.affinity {
                    *alpha_t = value;
                } else {
                    return false;
                }
            }
            _ => return false,
        }
        true
    }
}

// ---------------------------------------------------------------------------
// Dataset files

#[derive(Debug, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub schema: String,
    pub spec: StimulusDto,
    pub grid: GridDto,
    pub n: usize,
    pub dropped: u32,
    pub csv_fnv64: String,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

pub fn dataset_csv(ds: &LabeledDataset) -> String {
    let mut out = String::from("index,x,y,t,theta,v,truth\n");
    for (i, (p, &t)) in ds.points.iter().zip(&ds.truth).enumerate() {
        let _ = writeln!(out, "{i},{},{},{},{},{},{t}", p.x, p.y, fmt_opt(p.t), p.theta, fmt_opt(p.v));
    }
    out
}

/// Write `dataset.csv` and `dataset.meta.json`; returns both paths.
pub fn write_dataset(dir: &Path, ds: &LabeledDataset) -> CliResult<Vec<PathBuf>> {
    let csv = dataset_csv(ds);
    let csv_path = dir.join("dataset.csv");
    fs::write(&csv_path, &csv).map_err(|e| io_err("writing dataset.csv", e))?;
    let meta = DatasetMeta {
        schema: "gestalt-dataset/1".into(),
        spec: StimulusDto::from_core(&ds.spec),
        grid: GridDto::from_core(&ds.grid),
        n: ds.n(),
        dropped: ds.dropped,
        csv_fnv64: hex64(fnv64(csv.as_bytes())),
    };
    let meta_path = dir.join("dataset.meta.json");
    let body = serde_json::to_string_pretty(&meta).map_err(|e| io_err("encoding meta", e))?;
    fs::write(&meta_path, body).map_err(|e| io_err("writing dataset.meta.json", e))?;
    Ok(vec![csv_path, meta_path])
}

#[derive(Debug)]
pub struct LoadedDataset {
    pub points: Vec<FeaturePoint>,
    pub truth: Vec<u32>,
    pub grid: GridSpec,
    pub meta: DatasetMeta,
}

/// Read a dataset CSV with its sidecar, verifying the recorded hash.
pub fn read_dataset(csv_path: &Path) -> CliResult<LoadedDataset> {
    let csv = fs::read_to_string(csv_path).map_err(|e| io_err("reading dataset csv", e))?;
    let meta_path = csv_path.with_extension("meta.json");
    let meta: DatasetMeta = serde_json::from_str(
        &fs::read_to_string(&meta_path).map_err(|e| io_err("reading dataset meta", e))?,
    )
    .map_err(|e| io_err("parsing dataset meta", e))?;
    let hash = hex64(fnv64(csv.as_bytes()));
    if hash != meta.csv_fnv64 {
        return Err(format!(
            "dataset hash mismatch: csv is {hash}, meta records {} (regenerate or fix the sidecar)",
            meta.csv_fnv64
        ));
    }
    let mut points = Vec::new();
    let mut truth = Vec::new();
    for (ln, line) in csv.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(format!("dataset csv line {}: expected 7 fields", ln + 1));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| format!("line {}: {e}", ln + 1));
        let opt = |s: &str| -> CliResult<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                num(s).map(Some)
            }
        };
        let (x, y) = (num(fields[1])?, num(fields[2])?);
        let t = opt(fields[3])?;
        let theta = num(fields[4])?;
        let v = opt(fields[5])?;
        let p = match (t, v) {
            (Some(t), Some(v)) => FeaturePoint::mt(x, y, t, theta, v),
            (None, Some(v)) => FeaturePoint::m0(x, y, theta, v),
            (None, None) => FeaturePoint::m3(x, y, theta),
            (Some(_), None) => return Err(format!("line {}: time without speed", ln + 1)),
        }
        .map_err(|e| e.to_string())?;
        points.push(p);
        truth.push(fields[6].parse::<u32>().map_err(|e| format!("line {}: {e}", ln + 1))?);
    }
    let grid = meta.grid.to_core()?;
    Ok(LoadedDataset { points, truth, grid, meta })
}

// ---------------------------------------------------------------------------
// Labels, scores, spectra

pub fn labels_csv(labels: &ClusterLabels) -> String {
    let mut out = String::from("index,label\n");
    for (i, l) in labels.labels().iter().enumerate() {
        let _ = writeln!(out, "{i},{l}");
    }
    out
}

pub fn read_labels(path: &Path) -> CliResult<ClusterLabels> {
    let body = fs::read_to_string(path).map_err(|e| io_err("reading labels", e))?;
    let mut labels = Vec::new();
    for line in body.lines().skip(1) {
        if line.is_empty() {
            continue;
        }
        let l = line.split(',').nth(1).ok_or("labels csv: missing label field")?;
        labels.push(l.parse::<u32>().map_err(|e| format!("labels csv: {e}"))?);
    }
    ClusterLabels::from_labels(labels).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScoreDto {
    pub n: u32,
    pub e1: u32,
    pub e2: u32,
    pub e3: u32,
    pub e: f64,
    pub clusters: u32,
}

impl ScoreDto {
    pub fn new(e: &ErrorBreakdown, clusters: u32) -> Self {
        ScoreDto { n: e.n, e1: e.e1, e2: e.e2, e3: e.e3, e: e.fraction(), clusters }
    }
}

pub fn spectrum_csv(eigs: &EigenSystem) -> String {
    let mut out = String::from("rank,lambda_re,lambda_im,lambda_abs,residual\n");
    for (i, p) in eigs.pairs.iter().enumerate() {
        let _ = writeln!(out, "{i},{},{},{},{:e}", p.value.re, p.value.im, p.value.abs(), p.residual);
    }
    out
}

/// Per-point u+ values of the `q` leading eigenvectors.
pub fn uplus_csv(eigs: &EigenSystem, q: usize) -> String {
    let n = eigs.pairs.first().map(|p| p.vec_re.len()).unwrap_or(0);
    let mut out = String::from("index");
    for j in 0..q {
        let _ = write!(out, ",u{j}");
    }
    out.push('\n');
    let cols: Vec<Vec<f64>> = eigs.pairs[..q].iter().map(|p| p.uplus()).collect();
    for i in 0..n {
        let _ = write!(out, "{i}");
        for col in &cols {
            let _ = write!(out, ",{}", col[i]);
        }
        out.push('\n');
    }
    out
}

pub fn affinity_csv(mat: &gestalt_core::linalg::Mat) -> String {
    let mut out = String::new();
    for i in 0..mat.n_rows() {
        let row = mat.row(i);
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            let _ = write!(out, "{v}");
            first = false;
        }
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Sweep tables

pub fn sweep_records_csv(cfg: &SweepConfig, records: &[RepRecord]) -> String {
    let axis_names: Vec<String> =
        cfg.cells.first().map(|c| c.axes.iter().map(|(n, _)| n.clone()).collect()).unwrap_or_default();
    let mut out = String::from("cell");
    for name in &axis_names {
        let _ = write!(out, ",{name}");
    }
    out.push_str(",rep,seed,n,e1,e2,e3,e,error\n");
    let mut ordered: Vec<&RepRecord> = records.iter().collect();
    ordered.sort_by_key(|r| (r.cell, r.rep));
    for r in ordered {
        let _ = write!(out, "{}", r.cell);
        for (_, v) in &cfg.cells[r.cell].axes {
            let _ = write!(out, ",{v}");
        }
        let _ = write!(out, ",{},{:016x}", r.rep, r.seed);
        match &r.outcome {
            Ok(e) => {
                let _ = writeln!(out, ",{},{},{},{},{},", e.n, e.e1, e.e2, e.e3, e.fraction());
            }
            Err(msg) => {
                let _ = writeln!(out, ",,,,,,{}", msg.replace(',', ";"));
            }
        }
    }
    out
}

pub fn sweep_summary_csv(cfg: &SweepConfig, summaries: &[CellSummary]) -> String {
    let axis_names: Vec<String> =
        cfg.cells.first().map(|c| c.axes.iter().map(|(n, _)| n.clone()).collect()).unwrap_or_default();
    let mut out = String::from("cell");
    for name in &axis_names {
        let _ = write!(out, ",{name}");
    }
    out.push_str(",reps_ok,reps_failed,mean_e,sd_e,mean_e1,mean_e2,mean_e3\n");
    for s in summaries {
        let _ = write!(out, "{}", s.cell);
        for (_, v) in &cfg.cells[s.cell].axes {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(
            out,
            ",{},{},{},{},{},{},{}",
            s.reps_ok, s.reps_failed, s.mean_e, s.sd_e, s.mean_e1, s.mean_e2, s.mean_e3
        );
    }
    out
}

// ---------------------------------------------------------------------------
// Manifests

#[derive(Debug, Serialize, Deserialize)]
pub struct OutputEntry {
    pub file: String,
    pub fnv64: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub command: String,
    pub seed: u64,
    pub params: serde_json::Value,
    pub outputs: Vec<OutputEntry>,
}

/// Write `manifest.json` listing every output with its content hash. The
/// worker count is deliberately not recorded: it never affects outputs.
pub fn write_manifest(
    dir: &Path,
    command: &str,
    seed: u64,
    params: serde_json::Value,
    outputs: &[PathBuf],
) -> CliResult<()> {
    let mut entries = Vec::new();
    for path in outputs {
        let bytes = fs::read(path).map_err(|e| io_err("hashing output", e))?;
        let name = path
            .file_name()
            .ok_or("output without file name")?
            .to_string_lossy()
            .into_owned();
        entries.push(OutputEntry { file: name, fnv64: hex64(fnv64(&bytes)) });
    }
    entries.sort_by(|a, b| a.file.cmp(&b.file));
    let manifest = Manifest {
        schema: "gestalt-run/1".into(),
        command: command.into(),
        seed,
        params,
        outputs: entries,
    };
    let body = serde_json::to_string_pretty(&manifest).map_err(|e| io_err("encoding manifest", e))?;
    fs::write(dir.join("manifest.json"), body).map_err(|e| io_err("writing manifest", e))
}

/// Machine-readable failure record next to whatever outputs exist.
pub fn write_error_record(dir: &Path, command: &str, message: &str) {
    let record = serde_json::json!({
        "schema": "gestalt-error/1",
        "command": command,
        "error": message,
    });
    if fs::create_dir_all(dir).is_ok() {
        let _ = fs::write(dir.join("error.json"), serde_json::to_string_pretty(&record).unwrap());
    }
}
