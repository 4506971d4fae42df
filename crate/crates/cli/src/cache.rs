//! Kernel cache files and the disk-backed kernel provider.
//!
//! Cache files are content-addressed by the fingerprint of the estimation
//! inputs. The container is a JSON header (self-describing: process,
//! parameters, grid, base, per-slice entry counts) followed by packed
//! little-endian `(cell key, count)` records per slice. A JSON export of
//! the same content is available for external tooling.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::sync::Arc;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use gestalt_core::kernel::{
    accumulate_paths, table_bins, DiscreteKernel, KernelParams, KernelSlice, ProcessKind, ProcessSpec,
};
use gestalt_core::pipeline::{KernelConfig, KernelProvider};
use gestalt_core::space::CellIndex;
use gestalt_core::{Error, Result};

use crate::formats::{hex64, io_err, CliResult, GridDto};
use crate::jobs::par_map;

const MAGIC: &[u8; 6] = b"GKRN1\n";

#[derive(Debug, Serialize, Deserialize)]
struct SliceHeader {
    v_bin: Option<u32>,
    entries: u64,
    spilled: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheHeader {
    schema: String,
    kind: String,
    kappa: f64,
    alpha: f64,
    horizon: u32,
    paths: u32,
    seed: u64,
    step: f64,
    spill_tolerance: f64,
    grid: GridDto,
    base_theta: f64,
    fingerprint: String,
    slices: Vec<SliceHeader>,
}

fn kind_name(kind: ProcessKind) -> &'static str {
    kind.name()
}

fn kind_from_name(name: &str) -> CliResult<ProcessKind> {
    match name {
        "se2" => Ok(ProcessKind::Se2),
        "contour" => Ok(ProcessKind::Contour),
        "trajectory" => Ok(ProcessKind::Trajectory),
        other => Err(format!("unknown process kind {other}")),
    }
}

/// Serialize a kernel into the binary cache container.
pub fn encode_kernel(kernel: &DiscreteKernel) -> CliResult<Vec<u8>> {
    let header = CacheHeader {
        schema: "gestalt-kernel/1".into(),
        kind: kind_name(kernel.process.kind).into(),
        kappa: kernel.process.kappa,
        alpha: kernel.process.alpha,
        horizon: kernel.params.horizon,
        paths: kernel.params.paths,
        seed: kernel.params.seed,
        step: gestalt_core::kernel::EVOLUTION_STEP,
        spill_tolerance: kernel.params.spill_tolerance,
        grid: GridDto::from_core(&kernel.params.grid),
        base_theta: 0.0,
        fingerprint: hex64(kernel.fingerprint()),
        slices: kernel
            .slices()
            .iter()
            .map(|s| SliceHeader { v_bin: s.base_v_bin, entries: s.len() as u64, spilled: s.spilled() })
            .collect(),
    };
    let header_json = serde_json::to_vec(&header).map_err(|e| io_err("encoding kernel header", e))?;
    let mut out = Vec::with_capacity(header_json.len() + 16);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    out.extend_from_slice(&header_json);
    for slice in kernel.slices() {
        for (cell, count) in slice.entries() {
            out.extend_from_slice(&cell.pack().to_le_bytes());
            out.extend_from_slice(&count.to_le_bytes());
        }
    }
    Ok(out)
}

/// Parse a binary cache container back into a kernel.
pub fn decode_kernel(bytes: &[u8]) -> CliResult<DiscreteKernel> {
    if bytes.len() < MAGIC.len() + 4 || &bytes[..MAGIC.len()] != MAGIC {
        return Err("not a kernel cache file".into());
    }
    let mut pos = MAGIC.len();
    let header_len = u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
    pos += 4;
    let header: CacheHeader = serde_json::from_slice(
        bytes.get(pos..pos + header_len).ok_or("truncated kernel header")?,
    )
    .map_err(|e| io_err("parsing kernel header", e))?;
    pos += header_len;
    let kind = kind_from_name(&header.kind)?;
    let process = ProcessSpec::new(kind, header.kappa, header.alpha).map_err(|e| e.to_string())?;
    let grid = header.grid.to_core()?;
    let mut params =
        KernelParams::new(header.horizon, header.paths, header.seed, grid).map_err(|e| e.to_string())?;
    params.spill_tolerance = header.spill_tolerance;
    let mut slices = Vec::with_capacity(header.slices.len());
    for sh in &header.slices {
        let mut entries = Vec::with_capacity(sh.entries as usize);
        for _ in 0..sh.entries {
            let key = u64::from_le_bytes(
                bytes.get(pos..pos + 8).ok_or("truncated kernel body")?.try_into().unwrap(),
            );
            let count = u32::from_le_bytes(
                bytes.get(pos + 8..pos + 12).ok_or("truncated kernel body")?.try_into().unwrap(),
            );
            pos += 12;
            entries.push((key, count));
        }
        slices.push(KernelSlice::from_entries(sh.v_bin, entries, sh.spilled));
    }
    if pos != bytes.len() {
        return Err("trailing bytes in kernel cache file".into());
    }
    let kernel = DiscreteKernel::from_slices(process, params, slices);
    let fp = hex64(kernel.fingerprint());
    if fp != header.fingerprint {
        return Err(format!("kernel cache fingerprint mismatch: {} vs {}", fp, header.fingerprint));
    }
    Ok(kernel)
}

/// JSON export of a kernel table: header fields plus explicit cell records.
pub fn kernel_json(kernel: &DiscreteKernel) -> CliResult<String> {
    let cell_record = |cell: &CellIndex, count: u32| {
        serde_json::json!({
            "ix": cell.ix,
            "iy": cell.iy,
            "it": cell.it,
            "itheta": cell.itheta,
            "iv": cell.iv,
            "count": count,
            "weight": count as f64 * kernel.weight_scale(),
        })
    };
    let slices: Vec<serde_json::Value> = kernel
        .slices()
        .iter()
        .map(|s| {
            serde_json::json!({
                "v_bin": s.base_v_bin,
                "spilled": s.spilled(),
                "total_visits": s.total_visits(),
                "mass": kernel.mass(s),
                "cells": s.entries().map(|(c, n)| cell_record(&c, n)).collect::<Vec<_>>(),
            })
        })
        .collect();
    let doc = serde_json::json!({
        "schema": "gestalt-kernel/1",
        "kind": kind_name(kernel.process.kind),
        "kappa": kernel.process.kappa,
        "alpha": kernel.process.alpha,
        "horizon": kernel.params.horizon,
        "paths": kernel.params.paths,
        "seed": kernel.params.seed,
        "step": gestalt_core::kernel::EVOLUTION_STEP,
        "grid": GridDto::from_core(&kernel.params.grid),
        "fingerprint": hex64(kernel.fingerprint()),
        "slices": slices,
    });
    serde_json::to_string_pretty(&doc).map_err(|e| io_err("encoding kernel json", e))
}

/// Estimate a kernel table with paths sharded across workers. Counts are
/// integers, so any shard partition merges to the identical table.
pub fn estimate_parallel(cfg: &KernelConfig, jobs: usize) -> Result<DiscreteKernel> {
    let (spec, params) = cfg.to_spec_params()?;
    let bins = match spec.kind {
        ProcessKind::Se2 => vec![None],
        _ => table_bins(spec.kind, &params.grid),
    };
    let workers = jobs.max(1);
    let chunk = (params.paths as usize).div_ceil(workers).max(1) as u32;
    let mut slices = Vec::with_capacity(bins.len());
    for bin in bins {
        let ranges: Vec<core::ops::Range<u32>> = (0..params.paths)
            .step_by(chunk as usize)
            .map(|lo| lo..(lo + chunk).min(params.paths))
            .collect();
        let partials = par_map(&ranges, workers, |range| {
            accumulate_paths(&spec, &params, bin, range.clone())
        });
        let mut merged: Option<gestalt_core::kernel::SliceAccumulator> = None;
        for partial in partials {
            let partial = partial?;
            match &mut merged {
                None => merged = Some(partial),
                Some(acc) => acc.merge(partial),
            }
        }
        slices.push(merged.expect("at least one shard").finish(&params)?);
    }
    Ok(DiscreteKernel::from_slices(spec, params.clone(), slices))
}

/// Content-addressed kernel store over a cache directory, with an in-memory
/// layer. Missing kernels are estimated on demand unless `auto_build` is
/// off.
pub struct DiskKernelCache {
    dir: PathBuf,
    jobs: usize,
    auto_build: bool,
    mem: Mutex<std::collections::HashMap<u64, Arc<DiscreteKernel>>>,
}

impl DiskKernelCache {
    pub fn new(dir: PathBuf, jobs: usize, auto_build: bool) -> Self {
        DiskKernelCache { dir, jobs, auto_build, mem: Mutex::new(std::collections::HashMap::new()) }
    }

    pub fn path_for(&self, cfg: &KernelConfig) -> Result<PathBuf> {
        Ok(self.dir.join(format!("{}.gkrn", hex64(cfg.fingerprint()?))))
    }

    /// Fetch from memory or disk, estimating and persisting when allowed.
    /// Returns the kernel and whether it was freshly estimated.
    pub fn fetch(&self, cfg: &KernelConfig) -> Result<(Arc<DiscreteKernel>, bool)> {
        let key = cfg.fingerprint()?;
        if let Some(k) = self.mem.lock().unwrap().get(&key) {
            return Ok((k.clone(), false));
        }
        let path = self.path_for(cfg)?;
        if path.exists() {
            let bytes = fs::read(&path).map_err(|e| Error::Io(format!("reading {}: {e}", path.display())))?;
            let kernel = Arc::new(decode_kernel(&bytes).map_err(Error::Io)?);
            self.mem.lock().unwrap().insert(key, kernel.clone());
            return Ok((kernel, false));
        }
        if !self.auto_build {
            return Err(Error::Io(format!(
                "kernel cache miss for {} (auto-build disabled)",
                path.display()
            )));
        }
        let kernel = Arc::new(estimate_parallel(cfg, self.jobs)?);
        fs::create_dir_all(&self.dir).map_err(|e| Error::Io(format!("creating cache dir: {e}")))?;
        let bytes = encode_kernel(&kernel).map_err(Error::Io)?;
        let mut file = fs::File::create(&path).map_err(|e| Error::Io(format!("creating cache file: {e}")))?;
        file.write_all(&bytes).map_err(|e| Error::Io(format!("writing cache file: {e}")))?;
        self.mem.lock().unwrap().insert(key, kernel.clone());
        Ok((kernel, true))
    }
}

impl KernelProvider for DiskKernelCache {
    fn kernel(&self, cfg: &KernelConfig) -> Result<Arc<DiscreteKernel>> {
        self.fetch(cfg).map(|(k, _)| k)
    }
}
