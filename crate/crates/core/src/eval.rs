//! Grouping-quality scoring against ground truth, and seeded repetition
//! sweeps over stimulus and kernel parameters.
//!
//! The error measure splits misclassified points three ways: `E1` counts
//! unit points lost to the background, `E2` background points captured by a
//! unit, and `E3` unit points assigned to a cluster other than their unit's
//! matched cluster (covering both split and merged contours). The overall
//! error is `E = (E1 + E2 + E3) / n`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::pipeline::{run_pipeline, KernelConfig, KernelProvider, PipelineConfig};
use crate::rng::derive_key;
use crate::spectral::ClusterLabels;
use crate::stimuli::StimulusSpec;

const PURPOSE_REP: u64 = 0x73776565;
const PURPOSE_KERNEL_REP: u64 = 0x6b726570;

/// Three-component grouping error record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorBreakdown {
    pub e1: u32,
    pub e2: u32,
    pub e3: u32,
    pub n: u32,
}

impl ErrorBreakdown {
    pub fn fraction(&self) -> f64 {
        (self.e1 + self.e2 + self.e3) as f64 / self.n as f64
    }

    pub fn component_fractions(&self) -> (f64, f64, f64) {
        let n = self.n as f64;
        (self.e1 as f64 / n, self.e2 as f64 / n, self.e3 as f64 / n)
    }
}

/// Optimal one-to-one assignment between truth units and predicted
/// clusters, maximizing total overlap. Exact search (the unit count is
/// small); zero-overlap pairs never match. Entry `u` is the cluster matched
/// to unit `u + 1`.
pub fn match_units(labels: &ClusterLabels, truth: &[u32]) -> Result<Vec<Option<u32>>> {
    let n_units = truth.iter().copied().max().unwrap_or(0) as usize;
    let n_clusters = labels.k() as usize;
    if n_units == 0 || n_clusters == 0 {
        return Ok(vec![None; n_units]);
    }
    if n_units > 16 {
        return Err(Error::InvalidParameter { name: "truth", reason: "more than 16 units".into() });
    }
    let mut overlap = vec![vec![0u32; n_clusters + 1]; n_units + 1];
    for (&t, &l) in truth.iter().zip(labels.labels()) {
        if t >= 1 && l >= 1 {
            overlap[t as usize][l as usize] += 1;
        }
    }
    // dp[c][mask]: best overlap using clusters 1..=c with `mask` of units
    // already matched.
    let full = 1usize << n_units;
    let neg = i64::MIN;
    let mut values = vec![vec![neg; full]; n_clusters + 1];
    values[0][0] = 0;
    for c in 1..=n_clusters {
        for mask in 0..full {
            values[c][mask] = values[c - 1][mask];
            for u in 0..n_units {
                if mask & (1 << u) == 0 {
                    continue;
                }
                let gain = overlap[u + 1][c] as i64;
                if gain == 0 {
                    continue;
                }
                let prev = values[c - 1][mask ^ (1 << u)];
                if prev != neg && prev + gain > values[c][mask] {
                    values[c][mask] = prev + gain;
                }
            }
        }
    }
    // Walk back from the best final mask. Ties prefer leaving a cluster
    // unmatched, then the lowest unit id, so the assignment is
    // deterministic.
    let mut mask = (0..full).fold(0usize, |best, m| {
        if values[n_clusters][m] > values[n_clusters][best] {
            m
        } else {
            best
        }
    });
    let mut assignment = vec![None; n_units];
    for c in (1..=n_clusters).rev() {
        if values[c][mask] == values[c - 1][mask] {
            continue;
        }
        for u in 0..n_units {
            if mask & (1 << u) == 0 {
                continue;
            }
            let gain = overlap[u + 1][c] as i64;
            if gain == 0 {
                continue;
            }
            let prev = values[c - 1][mask ^ (1 << u)];
            if prev != neg && prev + gain == values[c][mask] {
                assignment[u] = Some(c as u32);
                mask ^= 1 << u;
                break;
            }
        }
    }
    Ok(assignment)
}

/// Score a predicted partition against ground truth.
pub fn score(labels: &ClusterLabels, truth: &[u32]) -> Result<ErrorBreakdown> {
    if labels.n() != truth.len() {
        return Err(Error::DimensionMismatch(labels.n(), truth.len()));
    }
    let matched = match_units(labels, truth)?;
    let (mut e1, mut e2, mut e3) = (0, 0, 0);
    for (&t, &l) in truth.iter().zip(labels.labels()) {
        match (t, l) {
            (0, 0) => {}
            (0, _) => e2 += 1,
            (_, 0) => e1 += 1,
            (t, l) => {
                if matched[t as usize - 1] != Some(l) {
                    e3 += 1;
                }
            }
        }
    }
    Ok(ErrorBreakdown { e1, e2, e3, n: truth.len() as u32 })
}

/// One sweep cell: a stimulus template plus the pipeline configuration to
/// run on it, with the axis values that produced it (for reporting).
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub axes: Vec<(String, f64)>,
    pub stimulus: StimulusSpec,
    pub pipeline: PipelineConfig,
}

/// Repetition sweep over a list of cells.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub cells: Vec<SweepCell>,
    pub reps: u32,
    pub base_seed: u64,
    /// Re-estimate kernels with a repetition-derived seed instead of
    /// reusing one table per configuration.
    pub reestimate_kernels: bool,
}

impl SweepConfig {
    /// Deterministic per-repetition seed.
    pub fn rep_seed(&self, cell: usize, rep: u32) -> u64 {
        derive_key(&[self.base_seed, PURPOSE_REP, cell as u64, rep as u64])
    }

    /// Distinct kernel configurations the sweep will request, in first-use
    /// order. With per-repetition re-estimation this enumerates every
    /// `(cell, rep)` kernel.
    pub fn kernel_plan(&self) -> Vec<KernelConfig> {
        let mut seen = alloc::collections::BTreeSet::new();
        let mut plan = Vec::new();
        for (ci, cell) in self.cells.iter().enumerate() {
            let reps: Vec<u32> = if self.reestimate_kernels { (0..self.reps).collect() } else { vec![0] };
            for rep in reps {
                for cfg in self.rep_pipeline(ci, cell, rep).kernel_requirements() {
                    if let Ok(key) = cfg.fingerprint() {
                        if seen.insert(key) {
                            plan.push(cfg);
                        }
                    }
                }
            }
        }
        plan
    }

    fn rep_pipeline(&self, cell_index: usize, cell: &SweepCell, rep: u32) -> PipelineConfig {
        let mut cfg = cell.pipeline.clone();
        if self.reestimate_kernels {
            cfg.kernel_seed = derive_key(&[self.rep_seed(cell_index, rep), PURPOSE_KERNEL_REP]);
        }
        cfg
    }
}

/// One repetition's outcome.
#[derive(Debug, Clone)]
pub struct RepRecord {
    pub cell: usize,
    pub rep: u32,
    pub seed: u64,
    pub outcome: core::result::Result<ErrorBreakdown, String>,
}

/// Aggregated cell statistics over its successful repetitions.
#[derive(Debug, Clone)]
pub struct CellSummary {
    pub cell: usize,
    pub reps_ok: u32,
    pub reps_failed: u32,
    pub mean_e: f64,
    pub sd_e: f64,
    pub mean_e1: f64,
    pub mean_e2: f64,
    pub mean_e3: f64,
}

/// Run one `(cell, rep)` job; pure function of the configuration.
pub fn run_rep(cfg: &SweepConfig, cell_index: usize, rep: u32, kernels: &dyn KernelProvider) -> RepRecord {
    let cell = &cfg.cells[cell_index];
    let seed = cfg.rep_seed(cell_index, rep);
    let pipeline = cfg.rep_pipeline(cell_index, cell, rep);
    let outcome = (|| -> Result<ErrorBreakdown> {
        let ds = cell.stimulus.with_seed(seed).generate()?;
        let out = run_pipeline(&ds, &pipeline, kernels)?;
        score(&out.labels, &ds.truth)
    })()
    .map_err(|e| alloc::format!("{e}"));
    RepRecord { cell: cell_index, rep, seed, outcome }
}

/// Aggregate records (any order) into per-cell summaries; the reduction
/// itself runs in fixed `(cell, rep)` order so means are bit-stable.
pub fn aggregate(cfg: &SweepConfig, records: &[RepRecord]) -> Vec<CellSummary> {
    let mut ordered: Vec<&RepRecord> = records.iter().collect();
    ordered.sort_by_key(|r| (r.cell, r.rep));
    let mut summaries = Vec::with_capacity(cfg.cells.len());
    for cell in 0..cfg.cells.len() {
        let cell_records: Vec<&&RepRecord> = ordered.iter().filter(|r| r.cell == cell).collect();
        let ok: Vec<&ErrorBreakdown> = cell_records.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
        let reps_failed = (cell_records.len() - ok.len()) as u32;
        let count = ok.len() as f64;
        let (mut mean_e, mut mean_e1, mut mean_e2, mut mean_e3) = (0.0, 0.0, 0.0, 0.0);
        for e in &ok {
            let (f1, f2, f3) = e.component_fractions();
            mean_e += e.fraction();
            mean_e1 += f1;
            mean_e2 += f2;
            mean_e3 += f3;
        }
        if count > 0.0 {
            mean_e /= count;
            mean_e1 /= count;
            mean_e2 /= count;
            mean_e3 /= count;
        }
        let mut var = 0.0;
        for e in &ok {
            let d = e.fraction() - mean_e;
            var += d * d;
        }
        let sd_e = if ok.len() > 1 { libm::sqrt(var / (count - 1.0)) } else { 0.0 };
        summaries.push(CellSummary {
            cell,
            reps_ok: ok.len() as u32,
            reps_failed,
            mean_e,
            sd_e,
            mean_e1,
            mean_e2,
            mean_e3,
        });
    }
    summaries
}

/// Serial sweep runner: every `(cell, rep)` job in order, then aggregation.
pub fn run_sweep(cfg: &SweepConfig, kernels: &dyn KernelProvider) -> (Vec<RepRecord>, Vec<CellSummary>) {
    let mut records = Vec::with_capacity(cfg.cells.len() * cfg.reps as usize);
    for cell in 0..cfg.cells.len() {
        for rep in 0..cfg.reps {
            records.push(run_rep(cfg, cell, rep, kernels));
        }
    }
    let summaries = aggregate(cfg, &records);
    (records, summaries)
}
