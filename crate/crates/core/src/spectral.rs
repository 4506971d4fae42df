//! Spectral clustering of normalized affinities.
//!
//! The pipeline follows a fixed sequence: full eigendecomposition of the
//! row-stochastic matrix, selection of the leading `q` eigenvectors whose
//! exponentiated spectrum clears a threshold, argmax preclustering over the
//! selected (sign-fixed) eigenvector components, and a minimum-size rule
//! that folds small preclusters into a background cluster `0`.
//!
//! Directed affinities produce complex eigenpairs; those are clustered
//! through the real vectors `u+ = Re(u) + Im(u)` with clustering strength
//! `|lambda|^2`, each member of a conjugate pair contributing its own
//! column.

use alloc::vec;
use alloc::vec::Vec;

use crate::affinity::NormalizedAffinity;
use crate::error::{Error, Result};
use crate::linalg::{general_eigen, sym_eigen, Mat};

/// Relative residual bound every returned eigenpair must satisfy.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Imaginary parts below this (relative) size count as real in real-spectrum
/// thresholding.
const IMAG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complex64 {
    pub re: f64,
    pub im: f64,
}

impl Complex64 {
    pub fn new(re: f64, im: f64) -> Self {
        Complex64 { re, im }
    }

    pub fn abs(&self) -> f64 {
        libm::hypot(self.re, self.im)
    }

    pub fn abs_sq(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

/// One eigenpair of a normalized affinity, unit-normalized and in canonical
/// phase: the maximum-modulus component of the eigenvector is real positive
/// (for real eigenvectors, the maximum-absolute component is positive).
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: Complex64,
    pub vec_re: Vec<f64>,
    pub vec_im: Vec<f64>,
    /// `||P u - lambda u||_2` with `||u||_2 = 1`.
    pub residual: f64,
}

impl EigenPair {
    /// The real clustering vector `u+ = Re(u) + Im(u)`.
    pub fn uplus(&self) -> Vec<f64> {
        self.vec_re.iter().zip(&self.vec_im).map(|(r, i)| r + i).collect()
    }

    pub fn is_real(&self) -> bool {
        self.value.im == 0.0
    }
}

/// Full spectrum of a normalized affinity, sorted by descending eigenvalue
/// modulus (ties: descending real part, then descending imaginary part,
/// then reduction order).
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub pairs: Vec<EigenPair>,
    /// Frobenius norm of the decomposed matrix (residual reference scale).
    pub matrix_norm: f64,
}

/// Rotate an eigenvector into canonical phase: the maximum-modulus component
/// (lowest index on ties) becomes real positive.
fn canonical_phase(vec_re: &mut [f64], vec_im: &mut [f64]) {
    let mut best = 0;
    let mut best_mod = -1.0;
    for i in 0..vec_re.len() {
        let m = vec_re[i] * vec_re[i] + vec_im[i] * vec_im[i];
        if m > best_mod {
            best_mod = m;
            best = i;
        }
    }
    if best_mod <= 0.0 {
        return;
    }
    let norm = libm::sqrt(best_mod);
    let (cr, ci) = (vec_re[best] / norm, -vec_im[best] / norm);
    // Multiply by exp(-i arg(u_best)).
    for i in 0..vec_re.len() {
        let (re, im) = (vec_re[i], vec_im[i]);
        vec_re[i] = re * cr - im * ci;
        vec_im[i] = re * ci + im * cr;
    }
    vec_im[best] = 0.0;
}

fn finish_pair(
    p: &Mat,
    value: Complex64,
    mut vec_re: Vec<f64>,
    mut vec_im: Vec<f64>,
    norm: f64,
    index: usize,
) -> Result<EigenPair> {
    let n = vec_re.len();
    let len = libm::sqrt(vec_re.iter().chain(&vec_im).map(|x| x * x).sum());
    if !(len.is_finite() && len > 0.0) {
        return Err(Error::EigenNoConvergence(index));
    }
    for x in vec_re.iter_mut().chain(vec_im.iter_mut()) {
        *x /= len;
    }
    canonical_phase(&mut vec_re, &mut vec_im);
    let mut p_re = vec![0.0; n];
    let mut p_im = vec![0.0; n];
    p.matvec(&vec_re, &mut p_re);
    p.matvec(&vec_im, &mut p_im);
    let mut res = 0.0;
    for i in 0..n {
        let rr = p_re[i] - (value.re * vec_re[i] - value.im * vec_im[i]);
        let ri = p_im[i] - (value.re * vec_im[i] + value.im * vec_re[i]);
        res += rr * rr + ri * ri;
    }
    let residual = libm::sqrt(res);
    let bound = RESIDUAL_TOL * norm.max(1e-300);
    if residual > bound {
        return Err(Error::EigenResidual { index, residual, bound });
    }
    Ok(EigenPair { value, vec_re, vec_im, residual })
}

fn sort_pairs(pairs: &mut [(usize, EigenPair)]) {
    pairs.sort_by(|(ia, a), (ib, b)| {
        b.value
            .abs()
            .partial_cmp(&a.value.abs())
            .unwrap()
            .then(b.value.re.partial_cmp(&a.value.re).unwrap())
            .then(b.value.im.partial_cmp(&a.value.im).unwrap())
            .then(ia.cmp(ib))
    });
}

/// Transition weights below this are beneath the eigensolver's spectral
/// resolution: a bridge this weak shifts eigenvalues by less than roundoff,
/// so the computed basis cannot distinguish it from a disconnection. Such
/// entries are ignored when choosing the component decomposition (the
/// matrix itself is untouched; residuals absorb the cut easily within the
/// verification tolerance).
const COMPONENT_TOL: f64 = 1e-12;

/// Weakly connected components of the resolvable support graph, each
/// sorted, ordered by smallest member.
fn support_components(p: &NormalizedAffinity) -> Vec<Vec<usize>> {
    let n = p.n();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if p.get(i, j) > COMPONENT_TOL || p.get(j, i) > COMPONENT_TOL {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: alloc::collections::BTreeMap<usize, Vec<usize>> = alloc::collections::BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Solve the full eigenvalue problem `P u = lambda u`. Every pair is
/// residual-verified; failures surface as errors rather than truncated
/// spectra. Affinities normalized from a symmetric matrix go through the
/// symmetric solver on the similar matrix `D^{1/2} P D^{-1/2}`.
///
/// Exactly decoupled components (no nonzero entry in either direction) are
/// decomposed separately: the decomposition is identical in exact
/// arithmetic, but the basis of a degenerate eigenvalue shared by several
/// components stays supported on single components instead of mixing them.
pub fn eigendecompose(p: &NormalizedAffinity) -> Result<EigenSystem> {
    let components = support_components(p);
    if components.len() <= 1 {
        return eigendecompose_whole(p);
    }
    let norm = p.mat().frobenius_norm();
    let n = p.n();
    let mut pairs: Vec<(usize, EigenPair)> = Vec::with_capacity(n);
    let mut order_base = 0usize;
    for members in &components {
        let m = members.len();
        let mut sub = Mat::zeros(m, m);
        for (a, &i) in members.iter().enumerate() {
            for (b, &j) in members.iter().enumerate() {
                sub[(a, b)] = p.get(i, j);
            }
        }
        let sub_degrees = p
            .symmetric_degrees()
            .map(|d| members.iter().map(|&i| d[i]).collect::<Vec<f64>>());
        let sub_p = NormalizedAffinity::from_parts(sub, sub_degrees);
        let sub_eigs = eigendecompose_whole(&sub_p)?;
        for (k, pair) in sub_eigs.pairs.into_iter().enumerate() {
            let mut vec_re = vec![0.0; n];
            let mut vec_im = vec![0.0; n];
            for (a, &i) in members.iter().enumerate() {
                vec_re[i] = pair.vec_re[a];
                vec_im[i] = pair.vec_im[a];
            }
            pairs.push((
                order_base + k,
                EigenPair { value: pair.value, vec_re, vec_im, residual: pair.residual },
            ));
        }
        order_base += m;
    }
    sort_pairs(&mut pairs);
    Ok(EigenSystem { pairs: pairs.into_iter().map(|(_, p)| p).collect(), matrix_norm: norm })
}

fn eigendecompose_whole(p: &NormalizedAffinity) -> Result<EigenSystem> {
    match p.symmetric_degrees() {
        Some(degrees) => eigendecompose_symmetric(p, degrees),
        None => eigendecompose_general(p),
    }
}

fn eigendecompose_symmetric(p: &NormalizedAffinity, degrees: &[f64]) -> Result<EigenSystem> {
    let n = p.n();
    let norm = p.mat().frobenius_norm();
    let sqrt_d: Vec<f64> = degrees.iter().map(|&d| libm::sqrt(d)).collect();
    let mut s = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            // Average the two algebraically equal expressions to make the
            // matrix exactly symmetric under rounding.
            let a = p.get(i, j) * sqrt_d[i] / sqrt_d[j];
            let b = p.get(j, i) * sqrt_d[j] / sqrt_d[i];
            let v = 0.5 * (a + b);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    let eig = sym_eigen(&s);
    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let mut vec_re: Vec<f64> = (0..n).map(|i| eig.vectors[(i, k)] / sqrt_d[i]).collect();
        let vec_im = vec![0.0; n];
        let mut dummy_im = vec![0.0; n];
        canonical_phase(&mut vec_re, &mut dummy_im);
        let pair = finish_pair(p.mat(), Complex64::new(eig.values[k], 0.0), vec_re, vec_im, norm, k)?;
        pairs.push((k, pair));
    }
    sort_pairs(&mut pairs);
    Ok(EigenSystem { pairs: pairs.into_iter().map(|(_, p)| p).collect(), matrix_norm: norm })
}

/// General dense nonsymmetric path, available directly so the symmetric
/// shortcut can be cross-checked against it.
pub fn eigendecompose_general(p: &NormalizedAffinity) -> Result<EigenSystem> {
    let n = p.n();
    let norm = p.mat().frobenius_norm();
    let eig = general_eigen(p.mat())?;
    let mut pairs = Vec::with_capacity(n);
    let mut k = 0;
    while k < n {
        if eig.im[k] == 0.0 {
            let vec_re = eig.vectors.column(k);
            let pair = finish_pair(p.mat(), Complex64::new(eig.re[k], 0.0), vec_re, vec![0.0; n], norm, k)?;
            pairs.push((k, pair));
            k += 1;
        } else {
            let vr = eig.vectors.column(k);
            let vi = eig.vectors.column(k + 1);
            let lambda = Complex64::new(eig.re[k], eig.im[k]);
            let pair = finish_pair(p.mat(), lambda, vr.clone(), vi.clone(), norm, k)?;
            pairs.push((k, pair));
            let conj = Complex64::new(eig.re[k], -eig.im[k]);
            let neg: Vec<f64> = vi.iter().map(|x| -x).collect();
            let pair = finish_pair(p.mat(), conj, vr, neg, norm, k + 1)?;
            pairs.push((k + 1, pair));
            k += 2;
        }
    }
    sort_pairs(&mut pairs);
    Ok(EigenSystem { pairs: pairs.into_iter().map(|(_, p)| p).collect(), matrix_norm: norm })
}

/// Which spectrum the selection threshold applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumMode {
    /// Real eigenvalues; negative or residually complex values never pass.
    Real,
    /// Squared moduli, for directed affinities.
    ModulusSquared,
}

/// Count of leading eigenvectors whose exponentiated spectrum clears
/// `1 - epsilon`: the largest `q` such that every `i <= q` passes
/// `lambda_i^tau > 1 - epsilon`. The test runs on `lambda` against the
/// equivalent bound `(1 - epsilon)^(1/tau)` so that negative eigenvalues
/// cannot sneak through even powers.
pub fn select_q(eigs: &EigenSystem, epsilon: f64, tau: u32, mode: SpectrumMode) -> usize {
    let threshold = libm::pow(1.0 - epsilon, 1.0 / tau as f64);
    let mut q = 0;
    for pair in &eigs.pairs {
        let pass = match mode {
            SpectrumMode::Real => {
                let real_enough = libm::fabs(pair.value.im) <= IMAG_TOL * libm::fabs(pair.value.re).max(1.0);
                real_enough && pair.value.re > threshold
            }
            SpectrumMode::ModulusSquared => pair.value.abs_sq() > threshold,
        };
        if pass {
            q += 1;
        } else {
            break;
        }
    }
    q
}

/// Raw argmax partition over the `q` leading clustering vectors. In directed
/// mode each eigenvector contributes its `u+` column; conjugate pairs are
/// kept as separate columns. Returns a precluster id in `0..q` per point.
pub fn precluster(eigs: &EigenSystem, q: usize, directed: bool) -> Vec<usize> {
    assert!(q >= 1, "precluster needs at least one selected eigenvector");
    let n = eigs.pairs[0].vec_re.len();
    let columns: Vec<Vec<f64>> = eigs.pairs[..q]
        .iter()
        .map(|pair| if directed { pair.uplus() } else { pair.vec_re.clone() })
        .collect();
    (0..n)
        .map(|i| {
            let mut best = 0;
            let mut best_val = f64::NEG_INFINITY;
            for (j, col) in columns.iter().enumerate() {
                if col[i] > best_val {
                    best_val = col[i];
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Clustering thresholds: spectrum significance `epsilon`, diffusion
/// exponent `tau` and minimum cluster size `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterParams {
    pub epsilon: f64,
    pub tau: u32,
    pub min_size: u32,
}

impl ClusterParams {
    pub fn new(epsilon: f64, tau: u32, min_size: u32) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: alloc::format!("must lie in (0, 1), got {epsilon}"),
            });
        }
        if tau < 1 {
            return Err(Error::InvalidParameter { name: "tau", reason: "must be >= 1".into() });
        }
        if min_size < 1 {
            return Err(Error::InvalidParameter { name: "min_size", reason: "must be >= 1".into() });
        }
        Ok(ClusterParams { epsilon, tau, min_size })
    }
}

/// Partition of a dataset into background `0` and perceptual units `1..=K`,
/// units ordered by descending size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabels {
    labels: Vec<u32>,
    k: u32,
}

impl ClusterLabels {
    pub fn background(n: usize) -> Self {
        ClusterLabels { labels: vec![0; n], k: 0 }
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn cluster_size(&self, label: u32) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn from_labels(labels: Vec<u32>) -> Result<Self> {
        let k = labels.iter().copied().max().unwrap_or(0);
        for unit in 1..=k {
            if !labels.contains(&unit) {
                return Err(Error::InvalidParameter {
                    name: "labels",
                    reason: alloc::format!("cluster ids not contiguous: {unit} missing"),
                });
            }
        }
        Ok(ClusterLabels { labels, k })
    }
}

/// Fold preclusters smaller than `min_size` into the background cluster and
/// relabel the survivors `1..=K` by descending size (ties: smaller original
/// precluster id first).
pub fn apply_min_size(preclusters: &[usize], min_size: u32) -> ClusterLabels {
    let q = preclusters.iter().copied().max().map(|m| m + 1).unwrap_or(0);
    let mut sizes = vec![0usize; q];
    for &c in preclusters {
        sizes[c] += 1;
    }
    let mut survivors: Vec<usize> = (0..q).filter(|&c| sizes[c] >= min_size as usize).collect();
    survivors.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    let mut relabel = vec![0u32; q];
    for (new_id, &c) in survivors.iter().enumerate() {
        relabel[c] = new_id as u32 + 1;
    }
    let labels = preclusters.iter().map(|&c| relabel[c]).collect();
    ClusterLabels { labels, k: survivors.len() as u32 }
}

/// The full clustering pipeline over a normalized affinity.
pub fn cluster(p: &NormalizedAffinity, params: &ClusterParams, directed: bool) -> Result<ClusterLabels> {
    let eigs = eigendecompose(p)?;
    cluster_with_eigs(&eigs, p.n(), params, directed)
}

/// Clustering from an already-computed eigensystem.
pub fn cluster_with_eigs(
    eigs: &EigenSystem,
    n: usize,
    params: &ClusterParams,
    directed: bool,
) -> Result<ClusterLabels> {
    let mode = if directed { SpectrumMode::ModulusSquared } else { SpectrumMode::Real };
    let q = select_q(eigs, params.epsilon, params.tau, mode);
    if q == 0 {
        return Ok(ClusterLabels::background(n));
    }
    let pre = precluster(eigs, q, directed);
    Ok(apply_min_size(&pre, params.min_size))
}
