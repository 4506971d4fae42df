//! Batch command-line entry point wiring kernels, stimuli, affinities and
//! spectral grouping into reproducible experiments.
//!
//! All randomness flows from the single global `--seed`; per-purpose
//! sub-seeds are derived by stable hashing, and every output is
//! byte-identical for a given configuration at any `--jobs` value.

mod cache;
mod formats;
mod jobs;

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use gestalt_core::eval::{aggregate, run_rep, SweepCell, SweepConfig};
use gestalt_core::kernel::ProcessKind;
use gestalt_core::pipeline::{build_affinity, KernelConfig, PipelineConfig};
use gestalt_core::rng::derive_key;
use gestalt_core::spectral::{cluster_with_eigs, eigendecompose, select_q, SpectrumMode};

use cache::DiskKernelCache;
use formats::{
    affinity_csv, hex64, io_err, labels_csv, read_dataset, read_labels, spectrum_csv, sweep_records_csv,
    sweep_summary_csv, uplus_csv, write_dataset, write_error_record, write_manifest, AffinityDto, CliResult,
    ClusterDto, PipelineDto, ScoreDto, StimulusDto,
};
use jobs::par_map;

const PURPOSE_KERNEL: u64 = 0x636c6b72;
const PURPOSE_STIMULUS: u64 = 0x636c7374;
const PURPOSE_SWEEP: u64 = 0x636c7377;

#[derive(Parser)]
#[command(name = "gestalt", version, about = "Connectivity-kernel spectral grouping experiments")]
struct Cli {
    /// Root seed; every random stream derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all available). Outputs do not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Output directory.
    #[arg(long, global = true, default_value = "gestalt-out")]
    out: PathBuf,
    /// Content-addressed kernel cache directory.
    #[arg(long, global = true, default_value = "gestalt-cache")]
    cache_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a connectivity kernel and cache it.
    Kernel(KernelArgs),
    /// Generate a synthetic stimulus dataset.
    Generate(GenerateArgs),
    /// Cluster a dataset with a chosen affinity.
    Cluster(ClusterArgs),
    /// Run a repetition sweep over parameter axes.
    Sweep(SweepArgs),
    /// Score a label file against dataset ground truth.
    Score(ScoreArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ProcessArg {
    Se2,
    Contour,
    Trajectory,
}

#[derive(Clone, Copy, ValueEnum)]
enum MarginalArg {
    Xy,
    Xyt,
    Xytheta,
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct KernelParamsDto {
    /// Stochastic process generating the kernel.
    #[arg(long, value_enum, default_value = "se2")]
    #[serde(default = "default_process")]
    process: ProcessArg,
    /// Angular diffusion coefficient.
    #[arg(long, default_value_t = 0.014)]
    kappa: f64,
    /// Speed diffusion coefficient (speed-fibered kernels).
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Evolution scale H (steps per path).
    #[arg(long, default_value_t = 40)]
    horizon: u32,
    /// Stochastic paths per table slice.
    #[arg(long, default_value_t = 100_000)]
    paths: u32,
    /// Upper bound of the reflecting speed domain.
    #[arg(long, default_value_t = 10.0)]
    v_max: f64,
    /// Angular bins of the covering grid.
    #[arg(long, default_value_t = 36)]
    #[serde(default = "default_n_theta_dto")]
    n_theta: u32,
}

fn default_n_theta_dto() -> u32 {
    36
}

fn default_process() -> ProcessArg {
    ProcessArg::Se2
}

#[derive(Args)]
struct KernelArgs {
    #[command(flatten)]
    params: KernelParamsDto,
    /// Emit a summed spatial projection of the kernel as CSV.
    #[arg(long, value_enum)]
    marginal: Option<MarginalArg>,
    /// Also write the full table as JSON.
    #[arg(long)]
    export_json: bool,
    /// JSON file overriding the parameter flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StimulusArg {
    Clouds,
    TwoContours,
    #[value(name = "s-k-r")]
    Skr,
    Lemniscate,
    MovingScene,
}

#[derive(Args)]
struct GenerateArgs {
    /// Stimulus family.
    #[arg(long, value_enum, default_value = "two-contours")]
    stimulus: StimulusArg,
    /// Arc curvature for the s-k-r stimulus.
    #[arg(long, default_value_t = 0.056)]
    curvature: f64,
    /// Background element count.
    #[arg(long, default_value_t = 120)]
    background: u32,
    /// Frame count for the moving scene.
    #[arg(long, default_value_t = 32)]
    frames: u32,
    /// Lift the stimulus with a sinusoidal speed field.
    #[arg(long)]
    velocity: bool,
    /// Peak speed of the sinusoidal field.
    #[arg(long, default_value_t = 5.0)]
    v_peak: f64,
    /// JSON stimulus spec overriding the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AffinityArg {
    Gaussian,
    M3,
    M0,
    MtCombined,
}

#[derive(Args)]
struct ClusterArgs {
    /// Dataset CSV (with its .meta.json sidecar).
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value = "m3")]
    affinity: AffinityArg,
    /// Gaussian affinity scale.
    #[arg(long, default_value_t = 8.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0.014)]
    kappa: f64,
    #[arg(long, default_value_t = 40)]
    horizon: u32,
    #[arg(long, default_value_t = 100_000)]
    paths: u32,
    /// Speed diffusion for the m0 affinity.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Contour-kernel speed diffusion for mt-combined.
    #[arg(long, default_value_t = 0.5)]
    alpha0: f64,
    /// Trajectory-kernel speed diffusion for mt-combined.
    #[arg(long, default_value_t = 1.0)]
    alpha_t: f64,
    #[arg(long, default_value_t = 10.0)]
    v_max: f64,
    /// Angular bins of the covering grid.
    #[arg(long, default_value_t = 36)]
    n_theta: u32,
    /// Spectrum significance threshold.
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    /// Diffusion exponent tau.
    #[arg(long, default_value_t = 150)]
    tau: u32,
    /// Minimum cluster size M.
    #[arg(long, default_value_t = 3)]
    min_size: u32,
    /// Fail on kernel cache misses instead of estimating.
    #[arg(long)]
    no_auto_kernel: bool,
    /// Dump the eigenvalue spectrum and u+ columns.
    #[arg(long)]
    dump_spectrum: bool,
    /// Dump the normalized affinity matrix.
    #[arg(long)]
    dump_affinity: bool,
    /// JSON pipeline config overriding the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep configuration JSON.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured repetition count.
    #[arg(long)]
    reps: Option<u32>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
struct AxisDto {
    param: String,
    values: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SweepDto {
    stimulus: StimulusDto,
    pipeline: PipelineDto,
    #[serde(default)]
    axes: Vec<AxisDto>,
    #[serde(default = "default_reps")]
    reps: u32,
    #[serde(default)]
    reestimate_kernels: bool,
}

fn default_reps() -> u32 {
    100
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = if cli.jobs == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        cli.jobs
    };
    let command_name = match &cli.command {
        Command::Kernel(_) => "kernel",
        Command::Generate(_) => "generate",
        Command::Cluster(_) => "cluster",
        Command::Sweep(_) => "sweep",
        Command::Score(_) => "score",
    };
    let result = (|| -> CliResult<()> {
        fs::create_dir_all(&cli.out).map_err(|e| io_err("creating output dir", e))?;
        match &cli.command {
            Command::Kernel(args) => cmd_kernel(&cli, jobs, args),
            Command::Generate(args) => cmd_generate(&cli, args),
            Command::Cluster(args) => cmd_cluster(&cli, jobs, args),
            Command::Sweep(args) => cmd_sweep(&cli, jobs, args),
            Command::Score(args) => cmd_score(&cli, args),
        }
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            write_error_record(&cli.out, command_name, &message);
            ExitCode::FAILURE
        }
    }
}

fn kernel_seed(cli: &Cli) -> u64 {
    derive_key(&[cli.seed, PURPOSE_KERNEL])
}

fn load_config<T: for<'de> Deserialize<'de>>(path: &PathBuf) -> CliResult<T> {
    let body = fs::read_to_string(path).map_err(|e| io_err("reading config", e))?;
    serde_json::from_str(&body).map_err(|e| io_err("parsing config", e))
}

fn cmd_kernel(cli: &Cli, jobs: usize, args: &KernelArgs) -> CliResult<()> {
    let params = match &args.config {
        Some(path) => load_config::<KernelParamsDto>(path)?,
        None => args.params.clone(),
    };
    let kind = match params.process {
        ProcessArg::Se2 => ProcessKind::Se2,
        ProcessArg::Contour => ProcessKind::Contour,
        ProcessArg::Trajectory => ProcessKind::Trajectory,
    };
    let cfg = KernelConfig {
        kind,
        kappa: params.kappa,
        alpha: params.alpha,
        horizon: params.horizon,
        paths: params.paths,
        seed: kernel_seed(cli),
        v_max: params.v_max,
        n_theta: params.n_theta,
    };
    let cache = DiskKernelCache::new(cli.cache_dir.clone(), jobs, true);
    let (kernel, built) = cache.fetch(&cfg).map_err(|e| e.to_string())?;
    let cache_path = cache.path_for(&cfg).map_err(|e| e.to_string())?;

    let mut outputs = Vec::new();
    let summary = serde_json::json!({
        "schema": "gestalt-kernel-summary/1",
        "fingerprint": hex64(kernel.fingerprint()),
        "cache_file": cache_path.file_name().unwrap_or_default().to_string_lossy(),
        "kind": kind.name(),
        "kappa": kernel.process.kappa,
        "alpha": kernel.process.alpha,
        "horizon": kernel.params.horizon,
        "paths": kernel.params.paths,
        "slices": kernel.slices().iter().map(|s| serde_json::json!({
            "v_bin": s.base_v_bin,
            "cells": s.len(),
            "mass": kernel.mass(s),
            "spilled": s.spilled(),
        })).collect::<Vec<_>>(),
    });
    let summary_path = cli.out.join("kernel.json");
    fs::write(&summary_path, serde_json::to_string_pretty(&summary).unwrap())
        .map_err(|e| io_err("writing kernel.json", e))?;
    outputs.push(summary_path);

    if let Some(marginal) = args.marginal {
        let (name, body) = marginal_table(&kernel, marginal);
        let path = cli.out.join(name);
        fs::write(&path, body).map_err(|e| io_err("writing marginal", e))?;
        outputs.push(path);
    }
    if args.export_json {
        let path = cli.out.join("kernel_table.json");
        fs::write(&path, cache::kernel_json(&kernel)?).map_err(|e| io_err("writing kernel table", e))?;
        outputs.push(path);
    }
    outputs.sort();
    let params_json = serde_json::to_value(&params).map_err(|e| io_err("params", e))?;
    write_manifest(&cli.out, "kernel", cli.seed, params_json, &outputs)?;
    println!(
        "kernel {} ({} slices, {}) -> {}",
        hex64(kernel.fingerprint()),
        kernel.slices().len(),
        if built { "estimated" } else { "cached" },
        cache_path.display()
    );
    Ok(())
}

fn marginal_table(kernel: &gestalt_core::kernel::DiscreteKernel, which: MarginalArg) -> (&'static str, String) {
    use std::fmt::Write as _;
    let mut acc: BTreeMap<(i32, i32, i64), u64> = BTreeMap::new();
    for slice in kernel.slices() {
        for (cell, count) in slice.entries() {
            let extra = match which {
                MarginalArg::Xy => 0,
                MarginalArg::Xyt => cell.it.unwrap_or(0) as i64,
                MarginalArg::Xytheta => cell.itheta as i64,
            };
            *acc.entry((cell.ix, cell.iy, extra)).or_insert(0) += count as u64;
        }
    }
    let (name, header) = match which {
        MarginalArg::Xy => ("marginal_xy.csv", "ix,iy,weight\n"),
        MarginalArg::Xyt => ("marginal_xyt.csv", "ix,iy,it,weight\n"),
        MarginalArg::Xytheta => ("marginal_xytheta.csv", "ix,iy,itheta,weight\n"),
    };
    let mut out = String::from(header);
    let scale = kernel.weight_scale();
    for ((ix, iy, extra), count) in acc {
        match which {
            MarginalArg::Xy => {
                let _ = writeln!(out, "{ix},{iy},{}", count as f64 * scale);
            }
            _ => {
                let _ = writeln!(out, "{ix},{iy},{extra},{}", count as f64 * scale);
            }
        }
    }
    (name, out)
}

fn cmd_generate(cli: &Cli, args: &GenerateArgs) -> CliResult<()> {
    let dto = match &args.config {
        Some(path) => load_config::<StimulusDto>(path)?,
        None => {
            let base = match args.stimulus {
                StimulusArg::Clouds => StimulusDto::GaussianClouds {
                    counts: vec![30, 30, 30],
                    centers: vec![(50.0, 50.0), (150.0, 50.0), (100.0, 150.0)],
                    spread: 8.0,
                    noise: args.background,
                    width: 200.0,
                    height: 200.0,
                    seed: 0,
                },
                StimulusArg::TwoContours => StimulusDto::TwoContours { background: args.background, seed: 0 },
                StimulusArg::Skr => {
                    StimulusDto::Skr { curvature: args.curvature, background: args.background, seed: 0 }
                }
                StimulusArg::Lemniscate => {
                    let spec = gestalt_core::stimuli::lemniscate(args.background, 0);
                    StimulusDto::from_core(&spec)
                }
                StimulusArg::MovingScene => {
                    StimulusDto::MovingScene { background: args.background, frames: args.frames, seed: 0 }
                }
            };
            if args.velocity {
                StimulusDto::SinusoidalVelocity { base: Box::new(base), v_peak: args.v_peak, seed: 0 }
            } else {
                base
            }
        }
    };
    let spec = dto.to_core()?.with_seed(derive_key(&[cli.seed, PURPOSE_STIMULUS]));
    let ds = spec.generate().map_err(|e| e.to_string())?;
    let mut outputs = write_dataset(&cli.out, &ds)?;
    outputs.sort();
    let params = serde_json::to_value(StimulusDto::from_core(&ds.spec)).map_err(|e| io_err("params", e))?;
    write_manifest(&cli.out, "generate", cli.seed, params, &outputs)?;
    println!("dataset: {} points ({} units, {} dropped)", ds.n(), ds.n_units(), ds.dropped);
    Ok(())
}

fn pipeline_dto_from_flags(args: &ClusterArgs) -> PipelineDto {
    let affinity = match args.affinity {
        AffinityArg::Gaussian => AffinityDto::Gaussian { sigma: args.sigma },
        AffinityArg::M3 => AffinityDto::M3,
        AffinityArg::M0 => AffinityDto::M0 { alpha: args.alpha },
        AffinityArg::MtCombined => AffinityDto::MtCombined { alpha0: args.alpha0, alpha_t: args.alpha_t },
    };
    PipelineDto {
        affinity,
        kappa: args.kappa,
        horizon: args.horizon,
        paths: args.paths,
        v_max: args.v_max,
        n_theta: args.n_theta,
        cluster: ClusterDto { epsilon: args.eps, tau: args.tau, min_size: args.min_size },
    }
}

fn cmd_cluster(cli: &Cli, jobs: usize, args: &ClusterArgs) -> CliResult<()> {
    let dto = match &args.config {
        Some(path) => load_config::<PipelineDto>(path)?,
        None => pipeline_dto_from_flags(args),
    };
    let loaded = read_dataset(&args.dataset)?;
    let n = loaded.truth.len();
    let ds = gestalt_core::stimuli::LabeledDataset {
        points: loaded.points,
        truth: loaded.truth,
        arc: vec![None; n],
        grid: loaded.grid,
        spec: loaded.meta.spec.to_core()?,
        dropped: loaded.meta.dropped,
    };
    let cfg: PipelineConfig = dto.to_core(kernel_seed(cli))?;
    let cache = DiskKernelCache::new(cli.cache_dir.clone(), jobs, !args.no_auto_kernel);
    let (p, directed) = build_affinity(&ds, &cfg, &cache).map_err(|e| e.to_string())?;
    let eigs = eigendecompose(&p).map_err(|e| e.to_string())?;
    let mode = if directed { SpectrumMode::ModulusSquared } else { SpectrumMode::Real };
    let q = select_q(&eigs, cfg.cluster.epsilon, cfg.cluster.tau, mode);
    let labels = cluster_with_eigs(&eigs, p.n(), &cfg.cluster, directed).map_err(|e| e.to_string())?;
    let score = gestalt_core::eval::score(&labels, &ds.truth).map_err(|e| e.to_string())?;

    let mut outputs = Vec::new();
    let labels_path = cli.out.join("labels.csv");
    fs::write(&labels_path, labels_csv(&labels)).map_err(|e| io_err("writing labels", e))?;
    outputs.push(labels_path);
    let score_path = cli.out.join("score.json");
    let score_dto = ScoreDto::new(&score, labels.k());
    fs::write(&score_path, serde_json::to_string_pretty(&score_dto).unwrap())
        .map_err(|e| io_err("writing score", e))?;
    outputs.push(score_path);
    if args.dump_spectrum {
        let spath = cli.out.join("spectrum.csv");
        fs::write(&spath, spectrum_csv(&eigs)).map_err(|e| io_err("writing spectrum", e))?;
        outputs.push(spath);
        if q > 0 {
            let upath = cli.out.join("uplus.csv");
            fs::write(&upath, uplus_csv(&eigs, q)).map_err(|e| io_err("writing uplus", e))?;
            outputs.push(upath);
        }
    }
    if args.dump_affinity {
        let apath = cli.out.join("affinity.csv");
        fs::write(&apath, affinity_csv(p.mat())).map_err(|e| io_err("writing affinity", e))?;
        outputs.push(apath);
        let kernel_keys: Vec<String> = cfg
            .kernel_requirements()
            .iter()
            .map(|k| k.fingerprint().map(hex64).map_err(|e| e.to_string()))
            .collect::<CliResult<_>>()?;
        let desc = serde_json::json!({
            "schema": "gestalt-affinity/1",
            "n": p.n(),
            "directed": directed,
            "dataset_fnv64": loaded.meta.csv_fnv64,
            "kernel_keys": kernel_keys,
        });
        let dpath = cli.out.join("affinity.json");
        fs::write(&dpath, serde_json::to_string_pretty(&desc).unwrap())
            .map_err(|e| io_err("writing affinity descriptor", e))?;
        outputs.push(dpath);
    }
    outputs.sort();
    let params = serde_json::to_value(&dto).map_err(|e| io_err("params", e))?;
    write_manifest(&cli.out, "cluster", cli.seed, params, &outputs)?;
    println!(
        "clusters: {} (q = {q}), E = {:.4} (E1 {} E2 {} E3 {} of {})",
        labels.k(),
        score.fraction(),
        score.e1,
        score.e2,
        score.e3,
        score.n
    );
    Ok(())
}

/// Expand a sweep config into concrete cells (cartesian product of axes,
/// first axis outermost).
fn expand_sweep(dto: &SweepDto, base_seed: u64, reps: u32) -> CliResult<SweepConfig> {
    let mut cells = Vec::new();
    let mut index = vec![0usize; dto.axes.len()];
    loop {
        let mut stimulus = dto.stimulus.clone();
        let mut pipeline = dto.pipeline.clone();
        let mut axes = Vec::new();
        for (a, axis) in dto.axes.iter().enumerate() {
            let value = axis.values[index[a]];
            axes.push((axis.param.clone(), value));
            let on_pipeline = pipeline.apply_axis(&axis.param, value);
            let on_stimulus = stimulus.apply_axis(&axis.param, value)?;
            if !(on_pipeline || on_stimulus) {
                return Err(format!("axis parameter {} applies to nothing", axis.param));
            }
        }
        cells.push(SweepCell {
            axes,
            stimulus: stimulus.to_core()?,
            pipeline: pipeline.to_core(base_seed)?,
        });
        // Advance the mixed-radix counter.
        let mut a = dto.axes.len();
        loop {
            if a == 0 {
                return Ok(SweepConfig { cells, reps, base_seed, reestimate_kernels: dto.reestimate_kernels });
            }
            a -= 1;
            index[a] += 1;
            if index[a] < dto.axes[a].values.len() {
                break;
            }
            index[a] = 0;
        }
    }
}

fn cmd_sweep(cli: &Cli, jobs: usize, args: &SweepArgs) -> CliResult<()> {
    let dto: SweepDto = load_config(&args.config)?;
    let reps = args.reps.unwrap_or(dto.reps);
    let base_seed = derive_key(&[cli.seed, PURPOSE_SWEEP]);
    let mut cfg = expand_sweep(&dto, base_seed, reps)?;
    let kseed = kernel_seed(cli);
    for cell in &mut cfg.cells {
        cell.pipeline.kernel_seed = kseed;
    }
    let cache = DiskKernelCache::new(cli.cache_dir.clone(), jobs, true);
    // Estimate every kernel once up front; repetitions then only read.
    for kcfg in cfg.kernel_plan() {
        cache.fetch(&kcfg).map_err(|e| e.to_string())?;
    }
    let jobs_list: Vec<(usize, u32)> =
        (0..cfg.cells.len()).flat_map(|c| (0..cfg.reps).map(move |r| (c, r))).collect();
    let records = par_map(&jobs_list, jobs, |&(cell, rep)| run_rep(&cfg, cell, rep, &cache));
    let summaries = aggregate(&cfg, &records);

    let mut outputs = Vec::new();
    let records_path = cli.out.join("sweep_records.csv");
    fs::write(&records_path, sweep_records_csv(&cfg, &records)).map_err(|e| io_err("writing records", e))?;
    outputs.push(records_path);
    let summary_path = cli.out.join("sweep_summary.csv");
    fs::write(&summary_path, sweep_summary_csv(&cfg, &summaries)).map_err(|e| io_err("writing summary", e))?;
    outputs.push(summary_path);
    outputs.sort();
    let mut params = serde_json::to_value(&dto).map_err(|e| io_err("params", e))?;
    params["reps"] = serde_json::json!(reps);
    write_manifest(&cli.out, "sweep", cli.seed, params, &outputs)?;
    let failed: u32 = summaries.iter().map(|s| s.reps_failed).sum();
    println!("sweep: {} cells x {} reps, {} failed repetitions", cfg.cells.len(), reps, failed);
    if failed > 0 {
        return Err(format!("{failed} repetitions failed; see sweep_records.csv"));
    }
    Ok(())
}

fn cmd_score(cli: &Cli, args: &ScoreArgs) -> CliResult<()> {
    let labels = read_labels(&args.labels)?;
    let loaded = read_dataset(&args.dataset)?;
    let score = gestalt_core::eval::score(&labels, &loaded.truth).map_err(|e| e.to_string())?;
    let dto = ScoreDto::new(&score, labels.k());
    let body = serde_json::to_string_pretty(&dto).unwrap();
    let path = cli.out.join("score.json");
    fs::write(&path, &body).map_err(|e| io_err("writing score", e))?;
    let params = serde_json::json!({
        "labels": args.labels.to_string_lossy(),
        "dataset": args.dataset.to_string_lossy(),
    });
    write_manifest(&cli.out, "score", cli.seed, params, &[path])?;
    println!("{body}");
    Ok(())
}
