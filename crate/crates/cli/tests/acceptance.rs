//! Acceptance suite: one test per headline result, each printing a
//! pass/fail line (run with `--nocapture` to see them all).
//!
//! Every tolerance is pinned here; reference values come from independent
//! oracle routes (polynomial roots, doubled real systems, closed-form arc
//! geometry) where the production path could be wrong in the same way
//! twice.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use gestalt_core::affinity::{row_normalize, AffinityMatrix};
use gestalt_core::eval::{self, ErrorBreakdown, SweepCell, SweepConfig};
use gestalt_core::kernel::{
    estimate_kernel, horizontal_curve, kernel_grid, KernelParams, ProcessKind, ProcessSpec,
};
use gestalt_core::linalg::Mat;
use gestalt_core::oracle;
use gestalt_core::pipeline::{AffinityMode, PipelineConfig, PrebuiltKernels};
use gestalt_core::rng::{derive_key, Stream};
use gestalt_core::spectral::{cluster, eigendecompose, ClusterLabels, ClusterParams, Complex64};
use gestalt_core::stimuli::{self, StimulusSpec};

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    println!("ACCEPTANCE {id:02} [{name}]: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id:02} [{name}] failed: {detail}");
}

/// Fraction of a truth unit's points inside its matched cluster.
fn unit_coverage(labels: &ClusterLabels, truth: &[u32], unit: u32) -> f64 {
    let matched = eval::match_units(labels, truth).unwrap();
    let target = matched[unit as usize - 1];
    let total = truth.iter().filter(|&&t| t == unit).count();
    match target {
        None => 0.0,
        Some(c) => {
            let hit =
                truth.iter().zip(labels.labels()).filter(|(&t, &l)| t == unit && l == c).count();
            hit as f64 / total as f64
        }
    }
}

fn cluster_params(eps: f64, tau: u32, m: u32) -> ClusterParams {
    ClusterParams::new(eps, tau, m).unwrap()
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_01_ideal_block_diagonal_recovery() {
    let mut stream = Stream::new(101);
    let mut all_ok = true;
    let mut detail = String::new();
    for (b, sizes) in [(2, vec![5usize, 9]), (3, vec![4, 7, 3]), (4, vec![6, 3, 5, 4]), (5, vec![3, 4, 5, 6, 7])] {
        let n: usize = sizes.iter().sum();
        let mut a = Mat::zeros(n, n);
        let mut start = 0;
        for &len in &sizes {
            for i in start..start + len {
                for j in start..start + len {
                    a[(i, j)] = stream.uniform(0.2, 1.0);
                }
            }
            start += len;
        }
        let p = row_normalize(&AffinityMatrix::from_mat(a, false));
        let eigs = eigendecompose(&p).unwrap();
        let ones = eigs.pairs.iter().filter(|pr| (pr.value.re - 1.0).abs() <= 1e-10 && pr.value.im == 0.0).count();
        let labels = cluster(&p, &cluster_params(0.05, 150, 3), false).unwrap();
        // Exact recovery: every block is one cluster and K = B.
        let mut exact = labels.k() as usize == b;
        let mut pos = 0;
        for &len in &sizes {
            let block = &labels.labels()[pos..pos + len];
            exact &= block.iter().all(|&l| l == block[0] && l >= 1);
            pos += len;
        }
        if ones != b || !exact {
            all_ok = false;
        }
        detail.push_str(&format!("B={b}: unit eigenvalues {ones}, exact {exact}; "));
    }
    report(1, "ideal block-diagonal recovery", all_ok, detail.trim_end_matches("; "));
}

#[test]
fn criterion_02_kernel_mass_and_zero_noise_support() {
    let mut all_ok = true;
    let mut detail = String::new();
    let configs = [
        (ProcessKind::Se2, 0.0, 0.0, 40u32, 100_000u32),
        (ProcessKind::Contour, 0.0, 0.0, 40, 20_000),
        (ProcessKind::Trajectory, 0.0, 0.0, 20, 20_000),
    ];
    for (kind, kappa, alpha, horizon, paths) in configs {
        let spec = ProcessSpec::new(kind, kappa, alpha).unwrap();
        let grid = kernel_grid(kind, horizon, 10.0, 36).unwrap();
        let params = KernelParams::new(horizon, paths, 7, grid.clone()).unwrap();
        let base_bin = if kind == ProcessKind::Se2 { None } else { Some(6) };
        let kernel = estimate_kernel(&spec, &params, base_bin).unwrap();
        let slice = &kernel.slices()[0];
        // Exact counting identity: every path occupies one cell per step.
        let mass_exact = slice.total_visits() == paths as u64 * (horizon as u64 + 1);
        // Zero-noise kernel support is exactly the zero-control curve cells.
        let start = gestalt_core::kernel::base_state(kind, &grid, base_bin).unwrap();
        let curve = horizontal_curve(&spec, &start, (0.0, 0.0), horizon, 10.0).unwrap();
        let expected: std::collections::BTreeSet<u64> =
            curve.iter().map(|p| grid.quantize(p).unwrap().pack()).collect();
        let got: std::collections::BTreeSet<u64> = slice.entries().map(|(c, _)| c.pack()).collect();
        let support_exact = expected == got;
        if !(mass_exact && support_exact) {
            all_ok = false;
        }
        detail.push_str(&format!("{}: mass {mass_exact}, support {support_exact}; ", kind.name()));
    }
    // Mass identity also holds with noise on.
    let spec = ProcessSpec::se2(0.014).unwrap();
    let grid = kernel_grid(ProcessKind::Se2, 40, 0.0, 36).unwrap();
    let params = KernelParams::new(40, 100_000, 11, grid).unwrap();
    let kernel = estimate_kernel(&spec, &params, None).unwrap();
    let noisy_ok = kernel.slices()[0].total_visits() == 100_000 * 41;
    if !noisy_ok {
        all_ok = false;
    }
    detail.push_str(&format!("noisy se2 mass {noisy_ok}"));
    report(2, "kernel mass and zero-noise degeneration", all_ok, &detail);
}

#[test]
fn criterion_03_horizontal_curve_concentration() {
    let kappa = 0.014;
    let horizon = 40u32;
    let spec = ProcessSpec::se2(kappa).unwrap();
    let grid = kernel_grid(ProcessKind::Se2, horizon, 0.0, 36).unwrap();
    let params = KernelParams::new(horizon, 100_000, 5, grid.clone()).unwrap();
    let kernel = estimate_kernel(&spec, &params, None).unwrap();
    let slice = &kernel.slices()[0];
    let c_max = 3.0 * kappa;
    // Half-cell slack on the arc length accounts for in-cell rounding.
    let s_max = horizon as f64 + 0.75;
    let (mut inside, mut total) = (0u64, 0u64);
    for (cell, count) in slice.entries() {
        let center = grid.cell_center(&cell);
        total += count as u64;
        // A cell counts as inside when any of its corners or its center
        // meets the envelope (the fan has sub-cell width near the origin).
        let hit = [(0.0, 0.0), (0.5, 0.5), (-0.5, 0.5), (0.5, -0.5), (-0.5, -0.5)]
            .iter()
            .any(|(dx, dy)| oracle::fan_envelope_contains(center.x + dx, center.y + dy, c_max, s_max));
        if hit {
            inside += count as u64;
        }
    }
    let fraction = inside as f64 / total as f64;
    report(
        3,
        "kernel mass concentrates on the horizontal-curve fan",
        fraction >= 0.85,
        &format!("fraction inside |turn| <= 3 kappa envelope: {fraction:.4}"),
    );
}

fn mean_error(cfg: &SweepConfig, kernels: &PrebuiltKernels) -> (f64, Vec<ErrorBreakdown>) {
    let (records, summaries) = eval::run_sweep(cfg, kernels);
    let breakdowns: Vec<ErrorBreakdown> =
        records.iter().map(|r| *r.outcome.as_ref().expect("repetition failed")).collect();
    (summaries[0].mean_e, breakdowns)
}

#[test]
fn criterion_04_gaussian_cloud_grouping() {
    // Spread / inter-center distance = 3 / 130 (bound: 1/5); noise fraction
    // 30 / 120 = 25% (bound: 40%).
    let stimulus = StimulusSpec::GaussianClouds {
        counts: vec![30, 30, 30],
        centers: vec![(35.0, 35.0), (165.0, 35.0), (100.0, 165.0)],
        spread: 3.0,
        noise: 30,
        width: 200.0,
        height: 200.0,
        seed: 0,
    };
    let pipeline = PipelineConfig {
        affinity: AffinityMode::Gaussian { sigma: 3.0 },
        kappa: 0.0,
        horizon: 1,
        paths: 1,
        kernel_seed: 0,
        v_max: 0.0,
        n_theta: 36,
        cluster: cluster_params(0.05, 150, 3),
    };
    let cfg = SweepConfig {
        cells: vec![SweepCell { axes: vec![], stimulus, pipeline }],
        reps: 20,
        base_seed: 4,
        reestimate_kernels: false,
    };
    let (mean_e, _) = mean_error(&cfg, &PrebuiltKernels::default());
    report(4, "gaussian clouds with sigma = spread", mean_e <= 0.05, &format!("mean E over 20 seeds: {mean_e:.4}"));
}

#[test]
fn criterion_05_contour_grouping_and_overpartition_contrast() {
    let base = |kappa: f64| PipelineConfig {
        affinity: AffinityMode::M3,
        kappa,
        horizon: 40,
        paths: 30_000,
        kernel_seed: derive_key(&[5, 0x6b]),
        v_max: 0.0,
        n_theta: 72,
        cluster: cluster_params(0.05, 150, 3),
    };
    let kernels = PrebuiltKernels::estimate_all(
        &[base(0.014).kernel_requirements(), base(0.0035).kernel_requirements()].concat(),
    )
    .unwrap();
    let mut good = 0;
    let mut overpartitioned = 0;
    for seed_idx in 0..20u64 {
        let seed = derive_key(&[55, seed_idx]);
        let ds = stimuli::two_contours(120, seed).generate().unwrap();
        // Matched kernel scale: both units recovered with low error.
        let out = gestalt_core::pipeline::run_pipeline(&ds, &base(0.014), &kernels).unwrap();
        let score = eval::score(&out.labels, &ds.truth).unwrap();
        let recovered = unit_coverage(&out.labels, &ds.truth, 1) >= 0.9
            && unit_coverage(&out.labels, &ds.truth, 2) >= 0.9;
        if score.fraction() <= 0.05 && recovered {
            good += 1;
        }
        // Too-narrow diffusion: the curved unit fragments.
        let out = gestalt_core::pipeline::run_pipeline(&ds, &base(0.0035), &kernels).unwrap();
        let score = eval::score(&out.labels, &ds.truth).unwrap();
        if score.e3 > 0 {
            overpartitioned += 1;
        }
    }
    report(
        5,
        "contour grouping and over-partition contrast",
        good >= 16 && overpartitioned >= 12,
        &format!("kappa 0.014: E <= 0.05 and both units in {good}/20; kappa 0.0035: E3 > 0 in {overpartitioned}/20"),
    );
}

#[test]
fn criterion_06_lemniscate_single_unit() {
    let pipeline = PipelineConfig {
        affinity: AffinityMode::M3,
        kappa: 0.112,
        horizon: 20,
        paths: 30_000,
        kernel_seed: derive_key(&[6, 0x6b]),
        v_max: 0.0,
        n_theta: 36,
        cluster: cluster_params(0.05, 150, 3),
    };
    let kernels = PrebuiltKernels::estimate_all(&pipeline.kernel_requirements()).unwrap();
    let mut single = 0;
    for seed_idx in 0..20u64 {
        let seed = derive_key(&[66, seed_idx]);
        let ds = stimuli::lemniscate(80, seed).generate().unwrap();
        let out = gestalt_core::pipeline::run_pipeline(&ds, &pipeline, &kernels).unwrap();
        let score = eval::score(&out.labels, &ds.truth).unwrap();
        // No split at the crossing: every clustered lemniscate point sits in
        // the one matched cluster, and at most a couple drop to background.
        if score.e3 == 0 && score.e1 <= 4 {
            single += 1;
        }
    }
    report(6, "lemniscate grouped as one unit", single >= 16, &format!("single unit in {single}/20 seeds"));
}

#[test]
fn criterion_07_optimal_parameter_location() {
    let kappas = [0.014, 0.028, 0.056, 0.112];
    let horizons = [20u32, 40, 70, 100];
    let mut cells = Vec::new();
    for &kappa in &kappas {
        for &horizon in &horizons {
            cells.push(SweepCell {
                axes: vec![("kappa".into(), kappa), ("horizon".into(), horizon as f64)],
                stimulus: stimuli::s_k_r(0.056, 120, 0),
                pipeline: PipelineConfig {
                    affinity: AffinityMode::M3,
                    kappa,
                    horizon,
                    paths: 100_000,
                    kernel_seed: derive_key(&[7, 0x6b]),
                    v_max: 0.0,
                    n_theta: 36,
                    cluster: cluster_params(0.05, 150, 3),
                },
            });
        }
    }
    let cfg = SweepConfig { cells, reps: 20, base_seed: 9, reestimate_kernels: false };
    let kernels = PrebuiltKernels::estimate_all(&cfg.kernel_plan()).unwrap();
    let (_, summaries) = eval::run_sweep(&cfg, &kernels);
    let best = summaries.iter().min_by(|a, b| a.mean_e.partial_cmp(&b.mean_e).unwrap()).unwrap();
    let (bi, bj) = (best.cell / horizons.len(), best.cell % horizons.len());
    // Target (0.056, 20) sits at grid coordinates (2, 0).
    let adjacent = (bi as i64 - 2).abs() <= 1 && (bj as i64).abs() <= 1;
    report(
        7,
        "minimal mean error at matched curvature and short paths",
        adjacent,
        &format!("best cell kappa = {}, H = {} (mean E = {:.4})", kappas[bi], horizons[bj], best.mean_e),
    );
}

#[test]
fn criterion_08_velocity_fiber_reduces_e2_and_e3() {
    let arc_len = stimuli::unit_arc_len(0.056);
    let alpha = std::f64::consts::PI * 5.0 / arc_len;
    let make_cells = |mode: AffinityMode| -> Vec<SweepCell> {
        let mut cells = Vec::new();
        for &k in &[0.028, 0.056] {
            for &r in &[60u32, 120] {
                cells.push(SweepCell {
                    axes: vec![("k".into(), k), ("r".into(), r as f64)],
                    stimulus: StimulusSpec::SinusoidalVelocity {
                        base: Box::new(stimuli::s_k_r(k, r, 0)),
                        v_peak: 5.0,
                        seed: 0,
                    },
                    pipeline: PipelineConfig {
                        affinity: mode,
                        kappa: 0.112,
                        horizon: 40,
                        paths: 30_000,
                        kernel_seed: derive_key(&[8, 0x6b]),
                        v_max: 10.0,
                        n_theta: 36,
                        cluster: cluster_params(0.05, 150, 3),
                    },
                });
            }
        }
        cells
    };
    let run = |mode: AffinityMode| -> (Vec<f64>, Vec<f64>) {
        let cfg = SweepConfig { cells: make_cells(mode), reps: 20, base_seed: 9, reestimate_kernels: false };
        let kernels = PrebuiltKernels::estimate_all(&cfg.kernel_plan()).unwrap();
        let (records, _) = eval::run_sweep(&cfg, &kernels);
        let mut e2 = Vec::new();
        let mut e3 = Vec::new();
        for r in records {
            let e = r.outcome.expect("repetition failed");
            let (_, f2, f3) = e.component_fractions();
            e2.push(f2);
            e3.push(f3);
        }
        (e2, e3)
    };
    let (e2_m3, e3_m3) = run(AffinityMode::M3);
    let (e2_m0, e3_m0) = run(AffinityMode::M0 { alpha });
    let stats = |xs: &[f64]| {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    };
    let (m2a, s2a) = stats(&e2_m3);
    let (m2b, s2b) = stats(&e2_m0);
    let (m3a, s3a) = stats(&e3_m3);
    let (m3b, s3b) = stats(&e3_m0);
    let margin2 = (m2a - m2b) / (s2a * s2a + s2b * s2b).sqrt();
    let margin3 = (m3a - m3b) / (s3a * s3a + s3b * s3b).sqrt();
    report(
        8,
        "speed fiber lowers background capture and partition errors",
        margin2 > 1.0 && margin3 > 1.0,
        &format!(
            "E2 {:.4} -> {:.4} ({margin2:.1} pooled SE); E3 {:.4} -> {:.4} ({margin3:.1} pooled SE)",
            m2a, m2b, m3a, m3b
        ),
    );
}

#[test]
fn criterion_09_spatio_temporal_scene() {
    let pipeline = PipelineConfig {
        affinity: AffinityMode::MtCombined { alpha0: 0.5, alpha_t: 1.0 },
        kappa: 0.014,
        horizon: 40,
        paths: 30_000,
        kernel_seed: derive_key(&[9, 0x6b]),
        v_max: 10.0,
        n_theta: 36,
        cluster: cluster_params(0.01, 150, 3),
    };
    let kernels = PrebuiltKernels::estimate_all(&pipeline.kernel_requirements()).unwrap();
    let frames = 8; // reduced clip length; same per-frame structure and parameters
    let mut low_noise_ok = 0;
    let mut bars_ok = 0;
    for seed_idx in 0..20u64 {
        let seed = derive_key(&[99, seed_idx]);
        // ~47% noise: all three units recovered with low error.
        let ds = StimulusSpec::MovingScene { background: 50, frames, seed }.generate().unwrap();
        let out = gestalt_core::pipeline::run_pipeline(&ds, &pipeline, &kernels).unwrap();
        let score = eval::score(&out.labels, &ds.truth).unwrap();
        let all_units = (1..=3).all(|u| unit_coverage(&out.labels, &ds.truth, u) >= 0.8);
        if score.fraction() <= 0.10 && all_units {
            low_noise_ok += 1;
        }
        // ~64% noise: the bars must still come out; the circle may fail.
        let ds = StimulusSpec::MovingScene { background: 100, frames, seed }.generate().unwrap();
        let out = gestalt_core::pipeline::run_pipeline(&ds, &pipeline, &kernels).unwrap();
        let bars = (2..=3).all(|u| unit_coverage(&out.labels, &ds.truth, u) >= 0.8);
        if bars {
            bars_ok += 1;
        }
    }
    report(
        9,
        "moving circle and bars grouped through time",
        low_noise_ok >= 14 && bars_ok >= 14,
        &format!("47% noise: all units in {low_noise_ok}/20; 64% noise: bars in {bars_ok}/20"),
    );
}

#[test]
fn criterion_10_directed_spectrum_equivalence() {
    let mut stream = Stream::new(1010);
    let mut worst_eig = 0.0f64;
    let mut mismatches = 0;
    for trial in 0..100 {
        let n = 3 + trial % 3;
        let mut data = Vec::with_capacity(n * n);
        for _ in 0..n {
            let row: Vec<f64> = (0..n).map(|_| stream.uniform(0.05, 1.0)).collect();
            let sum: f64 = row.iter().sum();
            data.extend(row.into_iter().map(|x| x / sum));
        }
        let p = gestalt_core::affinity::NormalizedAffinity::from_stochastic(Mat::from_rows(n, n, data), None)
            .unwrap();
        // Eigenvalues against the characteristic-polynomial oracle.
        let eigs = eigendecompose(&p).unwrap();
        let computed: Vec<Complex64> = eigs.pairs.iter().map(|pr| pr.value).collect();
        let roots = oracle::eigenvalues_by_char_poly(p.mat());
        worst_eig = worst_eig.max(oracle::multiset_distance(&computed, &roots));
        // Clustering through (u+, |lambda|^2) against the doubled real system.
        for (eps, tau, m) in [(0.9, 1, 1), (0.5, 2, 1), (0.05, 150, 2)] {
            let params = cluster_params(eps, tau, m);
            let ours = cluster(&p, &params, true).unwrap();
            let reference = oracle::doubled_system_cluster(&p, &params);
            if ours != reference {
                mismatches += 1;
            }
        }
    }
    report(
        10,
        "directed clustering equals the doubled real system",
        worst_eig <= 1e-8 && mismatches == 0,
        &format!("max eigenvalue deviation {worst_eig:.2e}; {mismatches} partition mismatches over 300 runs"),
    );
}

// ---------------------------------------------------------------------------

fn run_cli(args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_gestalt"))
        .args(args)
        .output()
        .expect("spawning the binary");
    assert!(
        status.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&status.stderr)
    );
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_file() {
            out.insert(path.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&path).unwrap());
        }
    }
    out
}

#[test]
fn criterion_11_outputs_are_byte_identical_at_any_worker_count() {
    let root = std::env::temp_dir().join(format!("gestalt-acceptance-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&root);
    std::fs::create_dir_all(&root).unwrap();
    let dir = |name: &str| -> PathBuf { root.join(name) };
    let s = |p: &PathBuf| p.to_str().unwrap().to_string();

    let mut all_ok = true;
    let mut detail = String::new();
    for jobs in ["1", "4"] {
        let out = dir(&format!("out-j{jobs}"));
        let cache = dir(&format!("cache-j{jobs}"));
        run_cli(&["--seed", "7", "--jobs", jobs, "--out", &s(&out), "--cache-dir", &s(&cache),
                  "generate", "--stimulus", "s-k-r", "--curvature", "0.056", "--background", "60",
                  "--velocity", "--v-peak", "5"]);
        let dataset = out.join("dataset.csv");
        run_cli(&["--seed", "7", "--jobs", jobs, "--out", &s(&out), "--cache-dir", &s(&cache),
                  "cluster", "--dataset", dataset.to_str().unwrap(), "--affinity", "m0",
                  "--kappa", "0.056", "--horizon", "20", "--paths", "4000", "--alpha", "0.26",
                  "--dump-spectrum", "--dump-affinity"]);
        let sweep_cfg = dir(&format!("sweep-{jobs}.json"));
        std::fs::write(
            &sweep_cfg,
            r#"{"stimulus": {"type": "s_k_r", "curvature": 0.056, "background": 40},
                "pipeline": {"affinity": {"mode": "m3"}, "kappa": 0.056, "horizon": 20, "paths": 4000,
                             "cluster": {"epsilon": 0.05, "tau": 150, "min_size": 3}},
                "axes": [{"param": "kappa", "values": [0.028, 0.056]}], "reps": 3}"#,
        )
        .unwrap();
        let sweep_out = dir(&format!("sweep-out-j{jobs}"));
        run_cli(&["--seed", "7", "--jobs", jobs, "--out", &s(&sweep_out), "--cache-dir", &s(&cache),
                  "sweep", "--config", sweep_cfg.to_str().unwrap()]);
        run_cli(&["--seed", "7", "--jobs", jobs, "--out", &s(&out), "--cache-dir", &s(&cache),
                  "kernel", "--process", "trajectory", "--kappa", "0.05", "--alpha", "0.5",
                  "--horizon", "8", "--paths", "3000", "--marginal", "xyt", "--export-json"]);
    }
    for pair in [("out-j1", "out-j4"), ("sweep-out-j1", "sweep-out-j4"), ("cache-j1", "cache-j4")] {
        let a = dir_contents(&dir(pair.0));
        let b = dir_contents(&dir(pair.1));
        let same = a == b;
        if !same {
            all_ok = false;
            let names_a: Vec<&String> = a.keys().collect();
            detail.push_str(&format!("{} differs (files {:?}); ", pair.0, names_a));
        }
    }
    if all_ok {
        detail = "generate/cluster/sweep/kernel outputs and caches identical for --jobs 1 vs 4".into();
    }
    let _ = std::fs::remove_dir_all(&root);
    report(11, "byte-identical outputs at any worker count", all_ok, &detail);
}
