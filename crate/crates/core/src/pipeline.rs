//! End-to-end grouping pipeline: dataset -> affinity -> normalized walk ->
//! spectral clustering.
//!
//! Kernels are expensive and reusable, so the pipeline pulls them from a
//! [`KernelProvider`] keyed by the full estimation configuration. The
//! bundled [`PrebuiltKernels`] provider estimates everything up front and is
//! immutable afterwards; IO-backed caches implement the same trait.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::affinity::{
    combine, cortical_affinity_directed, cortical_affinity_symmetric, gaussian_affinity, restrict_same_frame,
    row_normalize, NormalizedAffinity,
};
use crate::error::{Error, Result};
use crate::kernel::{estimate_kernel, fingerprint, kernel_grid, DiscreteKernel, KernelParams, ProcessKind, ProcessSpec};
use crate::space::Manifold;
use crate::spectral::{cluster_with_eigs, eigendecompose, select_q, ClusterLabels, ClusterParams, SpectrumMode};
use crate::stimuli::LabeledDataset;

/// Everything that determines one kernel table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    pub kind: ProcessKind,
    pub kappa: f64,
    pub alpha: f64,
    pub horizon: u32,
    pub paths: u32,
    pub seed: u64,
    pub v_max: f64,
    /// Angular bins of the covering grid.
    pub n_theta: u32,
}

impl KernelConfig {
    pub fn to_spec_params(&self) -> Result<(ProcessSpec, KernelParams)> {
        let spec = ProcessSpec::new(self.kind, self.kappa, self.alpha)?;
        let grid = kernel_grid(self.kind, self.horizon, self.v_max, self.n_theta)?;
        let params = KernelParams::new(self.horizon, self.paths, self.seed, grid)?;
        Ok((spec, params))
    }

    pub fn fingerprint(&self) -> Result<u64> {
        let (spec, params) = self.to_spec_params()?;
        Ok(fingerprint(&spec, &params))
    }

    /// Estimate the full table for this configuration (all base speed bins
    /// for speed-fibered kernels).
    pub fn estimate(&self) -> Result<DiscreteKernel> {
        let (spec, params) = self.to_spec_params()?;
        estimate_kernel(&spec, &params, None)
    }
}

/// Source of kernel tables for pipeline runs.
pub trait KernelProvider {
    fn kernel(&self, cfg: &KernelConfig) -> Result<Arc<DiscreteKernel>>;
}

/// In-memory provider holding tables estimated ahead of time.
#[derive(Default)]
pub struct PrebuiltKernels {
    map: alloc::collections::BTreeMap<u64, Arc<DiscreteKernel>>,
}

impl PrebuiltKernels {
    pub fn estimate_all(configs: &[KernelConfig]) -> Result<Self> {
        let mut cache = PrebuiltKernels::default();
        for cfg in configs {
            let key = cfg.fingerprint()?;
            if let alloc::collections::btree_map::Entry::Vacant(slot) = cache.map.entry(key) {
                slot.insert(Arc::new(cfg.estimate()?));
            }
        }
        Ok(cache)
    }

    pub fn insert(&mut self, cfg: &KernelConfig, kernel: Arc<DiscreteKernel>) -> Result<()> {
        self.map.insert(cfg.fingerprint()?, kernel);
        Ok(())
    }
}

impl KernelProvider for PrebuiltKernels {
    fn kernel(&self, cfg: &KernelConfig) -> Result<Arc<DiscreteKernel>> {
        self.map
            .get(&cfg.fingerprint()?)
            .cloned()
            .ok_or_else(|| Error::InvalidParameter { name: "kernel", reason: "not prebuilt for this configuration".into() })
    }
}

/// Which affinity construction the pipeline runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AffinityMode {
    /// Isotropic Gaussian baseline on positions.
    Gaussian { sigma: f64 },
    /// Symmetrized position-orientation connectivity.
    M3,
    /// Symmetrized position-orientation-speed connectivity.
    M0 { alpha: f64 },
    /// Combined space-time walk `(P0 + PT) / 2`: per-frame contour affinity
    /// plus the directed trajectory affinity; clustered in directed mode.
    MtCombined { alpha0: f64, alpha_t: f64 },
}

impl AffinityMode {
    pub fn directed(&self) -> bool {
        matches!(self, AffinityMode::MtCombined { .. })
    }
}

/// Full pipeline configuration independent of the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub affinity: AffinityMode,
    /// Angular diffusion coefficient of the kernels.
    pub kappa: f64,
    pub horizon: u32,
    /// Monte Carlo paths per kernel slice.
    pub paths: u32,
    pub kernel_seed: u64,
    pub v_max: f64,
    /// Angular bins of the covering grid (kernel and dataset alike).
    pub n_theta: u32,
    pub cluster: ClusterParams,
}

impl PipelineConfig {
    /// Kernel tables this configuration needs.
    pub fn kernel_requirements(&self) -> Vec<KernelConfig> {
        let base = |kind: ProcessKind, alpha: f64| KernelConfig {
            kind,
            kappa: self.kappa,
            alpha,
            horizon: self.horizon,
            paths: self.paths,
            seed: self.kernel_seed,
            v_max: self.v_max,
            n_theta: self.n_theta,
        };
        match self.affinity {
            AffinityMode::Gaussian { .. } => Vec::new(),
            AffinityMode::M3 => alloc::vec![base(ProcessKind::Se2, 0.0)],
            AffinityMode::M0 { alpha } => alloc::vec![base(ProcessKind::Contour, alpha)],
            AffinityMode::MtCombined { alpha0, alpha_t } => {
                alloc::vec![base(ProcessKind::Contour, alpha0), base(ProcessKind::Trajectory, alpha_t)]
            }
        }
    }
}

/// Assemble the normalized affinity for a dataset under a pipeline
/// configuration. Returns the matrix and whether it must be clustered in
/// directed mode.
pub fn build_affinity(
    ds: &LabeledDataset,
    cfg: &PipelineConfig,
    kernels: &dyn KernelProvider,
) -> Result<(NormalizedAffinity, bool)> {
    let reqs = cfg.kernel_requirements();
    // The covering-grid discretization is an analysis parameter: re-bin the
    // dataset domain with the configured angular resolution.
    let mut grid = ds.grid.clone();
    grid.n_theta = cfg.n_theta;
    match cfg.affinity {
        AffinityMode::Gaussian { sigma } => {
            let a = gaussian_affinity(&ds.points, sigma)?;
            Ok((row_normalize(&a), false))
        }
        AffinityMode::M3 => {
            let kernel = kernels.kernel(&reqs[0])?;
            let a = cortical_affinity_symmetric(&ds.points, &kernel, &grid)?;
            Ok((row_normalize(&a), false))
        }
        AffinityMode::M0 { .. } => {
            let kernel = kernels.kernel(&reqs[0])?;
            let mut a = cortical_affinity_symmetric(&ds.points, &kernel, &grid)?;
            if grid.manifold == Manifold::MT {
                a = restrict_same_frame(&a, &ds.points)?;
            }
            Ok((row_normalize(&a), false))
        }
        AffinityMode::MtCombined { .. } => {
            if grid.manifold != Manifold::MT {
                return Err(Error::GridMismatch("combined affinity needs a space-time dataset"));
            }
            let contour = kernels.kernel(&reqs[0])?;
            let trajectory = kernels.kernel(&reqs[1])?;
            let a0 = restrict_same_frame(
                &cortical_affinity_symmetric(&ds.points, &contour, &grid)?,
                &ds.points,
            )?;
            let at = cortical_affinity_directed(&ds.points, &trajectory, &grid)?;
            let p = combine(&row_normalize(&a0), &row_normalize(&at))?;
            Ok((p, true))
        }
    }
}

/// Pipeline result: the partition plus the number of clustering
/// eigenvectors that cleared the threshold.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub labels: ClusterLabels,
    pub q: usize,
}

/// Run the full grouping pipeline on a dataset.
pub fn run_pipeline(
    ds: &LabeledDataset,
    cfg: &PipelineConfig,
    kernels: &dyn KernelProvider,
) -> Result<PipelineOutput> {
    let (p, directed) = build_affinity(ds, cfg, kernels)?;
    let eigs = eigendecompose(&p)?;
    let mode = if directed { SpectrumMode::ModulusSquared } else { SpectrumMode::Real };
    let q = select_q(&eigs, cfg.cluster.epsilon, cfg.cluster.tau, mode);
    let labels = cluster_with_eigs(&eigs, p.n(), &cfg.cluster, directed)?;
    Ok(PipelineOutput { labels, q })
}
