//! Pairwise affinity matrices over feature-space datasets and their
//! row-stochastic normalization.
//!
//! Three constructions are provided: the isotropic Gaussian baseline on
//! positions, the Hermitian-symmetrized cortical affinity for reciprocal
//! connectivities (`M3`/`M0` kernels), and the directed cortical affinity
//! for the causal trajectory kernel (`MT`). Dense storage throughout; the
//! datasets of interest stay small enough that the eigensolver dominates.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernel::DiscreteKernel;
use crate::linalg::Mat;
use crate::space::{FeaturePoint, GridSpec, Manifold};

/// Dense nonnegative pairwise weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    mat: Mat,
    symmetric: bool,
}

impl AffinityMatrix {
    pub fn from_mat(mat: Mat, symmetric: bool) -> Self {
        assert_eq!(mat.n_rows(), mat.n_cols());
        AffinityMatrix { mat, symmetric }
    }

    pub fn n(&self) -> usize {
        self.mat.n_rows()
    }

    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mat[(i, j)]
    }

    pub fn mat(&self) -> &Mat {
        &self.mat
    }
}

/// Row-stochastic normalization of an affinity matrix. When the source
/// affinity was symmetric, the row degrees are kept so spectral code can use
/// the similar symmetric matrix `D^{1/2} P D^{-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAffinity {
    mat: Mat,
    degrees: Option<Vec<f64>>,
}

impl NormalizedAffinity {
    pub fn n(&self) -> usize {
        self.mat.n_rows()
    }

    pub fn mat(&self) -> &Mat {
        &self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mat[(i, j)]
    }

    /// Row degrees of the symmetric source affinity, when applicable.
    pub fn symmetric_degrees(&self) -> Option<&[f64]> {
        self.degrees.as_deref()
    }

    /// Check row sums against 1 and entry nonnegativity.
    pub fn verify_stochastic(&self, tol: f64) -> Result<()> {
        for i in 0..self.n() {
            let row = self.mat.row(i);
            if row.iter().any(|&x| x < 0.0) {
                return Err(Error::InvalidParameter {
                    name: "normalized affinity",
                    reason: alloc::format!("negative entry in row {i}"),
                });
            }
            let sum: f64 = row.iter().sum();
            if libm::fabs(sum - 1.0) > tol {
                return Err(Error::InvalidParameter {
                    name: "normalized affinity",
                    reason: alloc::format!("row {i} sums to {sum}"),
                });
            }
        }
        Ok(())
    }

    /// Construct directly from a row-stochastic matrix.
    pub fn from_stochastic(mat: Mat, degrees: Option<Vec<f64>>) -> Result<Self> {
        let p = NormalizedAffinity { mat, degrees };
        p.verify_stochastic(1e-9)?;
        Ok(p)
    }

    /// Construct without re-verifying row sums (for submatrices of an
    /// already-verified stochastic matrix).
    pub(crate) fn from_parts(mat: Mat, degrees: Option<Vec<f64>>) -> Self {
        NormalizedAffinity { mat, degrees }
    }
}

/// Isotropic Gaussian affinity on spatial positions:
/// `a_ij = exp(-d(x_i, x_j)^2 / (2 sigma^2))`.
pub fn gaussian_affinity(points: &[FeaturePoint], sigma: f64) -> Result<AffinityMatrix> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter {
            name: "sigma",
            reason: alloc::format!("must be positive, got {sigma}"),
        });
    }
    let n = points.len();
    let mut mat = Mat::zeros(n, n);
    let inv = 1.0 / (2.0 * sigma * sigma);
    for i in 0..n {
        mat[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let dx = points[i].x - points[j].x;
            let dy = points[i].y - points[j].y;
            let a = libm::exp(-(dx * dx + dy * dy) * inv);
            mat[(i, j)] = a;
            mat[(j, i)] = a;
        }
    }
    Ok(AffinityMatrix::from_mat(mat, true))
}

/// Check the dataset/grid compatibility condition: every covering-grid cell
/// holds at most one dataset point.
pub fn check_compatibility(points: &[FeaturePoint], grid: &GridSpec) -> Result<()> {
    let mut seen: hashbrown::HashMap<u64, usize> = hashbrown::HashMap::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let cell = grid.quantize(p)?;
        if let Some(&j) = seen.get(&cell.pack()) {
            return Err(Error::CellCollision(j, i));
        }
        seen.insert(cell.pack(), i);
    }
    Ok(())
}

fn check_kernel_grid(kernel: &DiscreteKernel, grid: &GridSpec) -> Result<()> {
    if !kernel.params.grid.same_binning(grid) {
        return Err(Error::GridMismatch("kernel and dataset bin widths differ"));
    }
    Ok(())
}

/// Symmetric cortical affinity: the Hermitian component
/// `a_ij = (G(x_i, x_j) + G(x_j, x_i)) / 2` of a reciprocal connectivity
/// kernel. Points on `MT` are evaluated through their `M0` projection when
/// the kernel lives on `M0` (the per-frame embedding used for space-time
/// scenes).
pub fn cortical_affinity_symmetric(
    points: &[FeaturePoint],
    kernel: &DiscreteKernel,
    grid: &GridSpec,
) -> Result<AffinityMatrix> {
    check_kernel_grid(kernel, grid)?;
    check_compatibility(points, grid)?;
    let kernel_manifold = kernel.process.kind.manifold();
    let project = |p: &FeaturePoint| -> Result<FeaturePoint> {
        match (p.manifold(), kernel_manifold) {
            (a, b) if a == b => Ok(*p),
            (Manifold::M0, Manifold::M3) | (Manifold::MT, Manifold::M3) => Ok(p.project_m3()),
            (Manifold::MT, Manifold::M0) => Ok(p.project_m0()),
            _ => Err(Error::GridMismatch("dataset manifold incompatible with kernel")),
        }
    };
    let proj: Vec<FeaturePoint> = points.iter().map(project).collect::<Result<_>>()?;
    let n = proj.len();
    let mut mat = Mat::zeros(n, n);
    for i in 0..n {
        mat[(i, i)] = kernel.lookup(&proj[i], &proj[i])?;
        for j in (i + 1)..n {
            let forward = kernel.lookup(&proj[i], &proj[j])?;
            let backward = kernel.lookup(&proj[j], &proj[i])?;
            let a = 0.5 * (forward + backward);
            mat[(i, j)] = a;
            mat[(j, i)] = a;
        }
    }
    Ok(AffinityMatrix::from_mat(mat, true))
}

/// Directed cortical affinity `a_ij = G_T(eta_i, eta_j)` on a space-time
/// dataset. No symmetrization: the trajectory kernel's unit time advance
/// zeroes every entry with `t_j < t_i`.
pub fn cortical_affinity_directed(
    points: &[FeaturePoint],
    kernel: &DiscreteKernel,
    grid: &GridSpec,
) -> Result<AffinityMatrix> {
    if kernel.process.kind.manifold() != Manifold::MT {
        return Err(Error::GridMismatch("directed affinity needs a trajectory kernel"));
    }
    check_kernel_grid(kernel, grid)?;
    check_compatibility(points, grid)?;
    let n = points.len();
    let mut mat = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            mat[(i, j)] = kernel.lookup(&points[i], &points[j])?;
        }
    }
    Ok(AffinityMatrix::from_mat(mat, false))
}

/// Zero every affinity entry between points with different temporal
/// coordinates, keeping same-frame structure intact.
pub fn restrict_same_frame(a: &AffinityMatrix, points: &[FeaturePoint]) -> Result<AffinityMatrix> {
    if a.n() != points.len() {
        return Err(Error::DimensionMismatch(a.n(), points.len()));
    }
    let n = a.n();
    let times: Vec<Option<f64>> = points.iter().map(|p| p.t).collect();
    let mut mat = a.mat.clone();
    for i in 0..n {
        for j in 0..n {
            if times[i] != times[j] {
                mat[(i, j)] = 0.0;
            }
        }
    }
    Ok(AffinityMatrix::from_mat(mat, a.symmetric))
}

/// Row-stochastic normalization `P = D^{-1} A`. Rows with zero sum become
/// identity rows (isolated self-loop), keeping `P` stochastic.
pub fn row_normalize(a: &AffinityMatrix) -> NormalizedAffinity {
    let n = a.n();
    let mut mat = Mat::zeros(n, n);
    let mut degrees = vec![0.0; n];
    for i in 0..n {
        let sum: f64 = a.mat.row(i).iter().sum();
        if sum > 0.0 {
            degrees[i] = sum;
            for j in 0..n {
                mat[(i, j)] = a.get(i, j) / sum;
            }
        } else {
            // Self-loop; with symmetric input this is the degree-1 loop of
            // the implicit unit diagonal entry, so similarity is preserved.
            degrees[i] = 1.0;
            mat[(i, i)] = 1.0;
        }
    }
    NormalizedAffinity { mat, degrees: a.symmetric.then_some(degrees) }
}

/// Convex combination `P = (P0 + PT) / 2` of two normalized affinities.
pub fn combine(p0: &NormalizedAffinity, pt: &NormalizedAffinity) -> Result<NormalizedAffinity> {
    if p0.n() != pt.n() {
        return Err(Error::DimensionMismatch(p0.n(), pt.n()));
    }
    let n = p0.n();
    let mut mat = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            mat[(i, j)] = 0.5 * (p0.get(i, j) + pt.get(i, j));
        }
    }
    // The combination mixes a reversible and a causal walk; no symmetric
    // similarity survives.
    Ok(NormalizedAffinity { mat, degrees: None })
}
