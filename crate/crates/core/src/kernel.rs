//! Monte Carlo estimation of connectivity kernels.
//!
//! Three advection-diffusion processes are simulated with unit evolution
//! step: a position-orientation process on `M3`, the same process with a
//! diffusing orthogonal-speed fiber on `M0`, and a space-time trajectory
//! process on `MT` whose spatial advection is the speed fiber itself.
//! Visit counts of `N` discrete paths over a covering grid, accumulated over
//! evolution steps `0..=H` and scaled by `1/(N*H)`, estimate the
//! time-integrated transition density from a canonical base state.
//!
//! Kernels are tabulated once from the base state (spatial origin,
//! `theta = 0`, one table slice per base speed bin) and evaluated between
//! arbitrary point pairs by the rigid transform that carries the source
//! point onto the base. Counts are integers, so estimation is bit-identical
//! for any sharding of the path range.

use alloc::vec::Vec;
use hashbrown::HashMap;

use crate::error::{Error, Result};
use crate::rng::{derive_key, Stream};
use crate::space::{wrap_angle, CellIndex, Extent, FeaturePoint, GridSpec, Manifold};

/// Evolution step of the discrete-time recursion (fixed).
pub const EVOLUTION_STEP: f64 = 1.0;

/// Stream purposes for key derivation.
const PURPOSE_PATH: u64 = 0x6b65726e; // kernel path noise

/// Which stochastic process generates the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProcessKind {
    /// Position-orientation process on `M3`: drift along the contour
    /// tangent, diffusion in `theta`.
    Se2,
    /// Contour process on `M0`: as `Se2` plus an independently diffusing
    /// orthogonal-speed fiber.
    Contour,
    /// Trajectory process on `MT`: spatial drift `v` along the normal, unit
    /// time advance, diffusion in `theta` and `v`.
    Trajectory,
}

impl ProcessKind {
    pub fn manifold(self) -> Manifold {
        match self {
            ProcessKind::Se2 => Manifold::M3,
            ProcessKind::Contour => Manifold::M0,
            ProcessKind::Trajectory => Manifold::MT,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProcessKind::Se2 => "se2",
            ProcessKind::Contour => "contour",
            ProcessKind::Trajectory => "trajectory",
        }
    }
}

/// Process selection with its diffusion coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessSpec {
    pub kind: ProcessKind,
    /// Angular diffusion coefficient (radians per unit step).
    pub kappa: f64,
    /// Speed diffusion coefficient; unused for `Se2`.
    pub alpha: f64,
}

impl ProcessSpec {
    pub fn new(kind: ProcessKind, kappa: f64, alpha: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "kappa",
                reason: alloc::format!("must be finite and >= 0, got {kappa}"),
            });
        }
        if kind != ProcessKind::Se2 && !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: alloc::format!("must be finite and >= 0, got {alpha}"),
            });
        }
        Ok(ProcessSpec { kind, kappa, alpha: if kind == ProcessKind::Se2 { 0.0 } else { alpha } })
    }

    pub fn se2(kappa: f64) -> Result<Self> {
        Self::new(ProcessKind::Se2, kappa, 0.0)
    }

    pub fn contour(kappa: f64, alpha: f64) -> Result<Self> {
        Self::new(ProcessKind::Contour, kappa, alpha)
    }

    pub fn trajectory(kappa: f64, alpha: f64) -> Result<Self> {
        Self::new(ProcessKind::Trajectory, kappa, alpha)
    }
}

/// Estimation parameters: evolution scale, path count, seed and the covering
/// grid the visit statistics are binned on.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    /// Evolution scale `H` (number of unit steps per path).
    pub horizon: u32,
    /// Number of stochastic paths per table slice.
    pub paths: u32,
    pub seed: u64,
    pub grid: GridSpec,
    /// Fraction of path states allowed to fall outside the grid before
    /// estimation errors out.
    pub spill_tolerance: f64,
}

impl KernelParams {
    pub fn new(horizon: u32, paths: u32, seed: u64, grid: GridSpec) -> Result<Self> {
        if horizon < 1 {
            return Err(Error::InvalidParameter { name: "horizon", reason: "H must be >= 1".into() });
        }
        if paths < 1 {
            return Err(Error::InvalidParameter { name: "paths", reason: "N must be >= 1".into() });
        }
        if (paths as u64) * (horizon as u64 + 1) > u32::MAX as u64 {
            return Err(Error::InvalidParameter {
                name: "paths",
                reason: "N * (H + 1) exceeds the visit counter range".into(),
            });
        }
        Ok(KernelParams { horizon, paths, seed, grid, spill_tolerance: 0.0 })
    }
}

/// Covering grid sized to the reachable set of a process: spatial extent
/// `(H+1) * max_advection` plus margin, time `[0, H]`, speed `[0, v_max]`.
pub fn kernel_grid(kind: ProcessKind, horizon: u32, v_max: f64, n_theta: u32) -> Result<GridSpec> {
    let manifold = kind.manifold();
    let max_step = match kind {
        ProcessKind::Se2 | ProcessKind::Contour => 1.0,
        ProcessKind::Trajectory => v_max,
    };
    let reach = (horizon as f64 + 1.0) * max_step + 1.0;
    GridSpec::new(
        manifold,
        1.0,
        1.0,
        1.0,
        n_theta,
        crate::space::DEFAULT_DV,
        Extent::new(-reach, reach)?,
        Extent::new(-reach, reach)?,
        manifold.has_time().then(|| Extent::new(0.0, horizon as f64 + 1.0)).transpose()?,
        manifold.has_velocity().then(|| Extent::new(0.0, v_max)).transpose()?,
    )
}

/// Deterministic advection component of one unit step from `state`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Increment {
    pub dx: f64,
    pub dy: f64,
    pub dt: f64,
    pub dtheta: f64,
    pub dv: f64,
}

pub fn drift(process: &ProcessSpec, state: &FeaturePoint) -> Result<Increment> {
    if state.manifold() != process.kind.manifold() {
        return Err(Error::ManifoldMismatch(0, process.kind.manifold().name()));
    }
    let (sin_t, cos_t) = (libm::sin(state.theta), libm::cos(state.theta));
    let inc = match process.kind {
        ProcessKind::Se2 | ProcessKind::Contour => {
            Increment { dx: -sin_t, dy: cos_t, dt: 0.0, dtheta: 0.0, dv: 0.0 }
        }
        ProcessKind::Trajectory => {
            let v = state.v.unwrap_or(0.0);
            Increment { dx: v * cos_t, dy: v * sin_t, dt: EVOLUTION_STEP, dtheta: 0.0, dv: 0.0 }
        }
    };
    Ok(inc)
}

/// Fold a speed value back into `[0, v_max]` (reflecting boundaries).
fn reflect_speed(v: f64, v_max: f64) -> f64 {
    if v_max <= 0.0 {
        return 0.0;
    }
    let period = 2.0 * v_max;
    let mut m = v % period;
    if m < 0.0 {
        m += period;
    }
    if m > v_max {
        period - m
    } else {
        m
    }
}

fn advance(
    process: &ProcessSpec,
    state: &mut FeaturePoint,
    noise_theta: f64,
    noise_v: f64,
    v_max: f64,
) {
    let (sin_t, cos_t) = (libm::sin(state.theta), libm::cos(state.theta));
    match process.kind {
        ProcessKind::Se2 => {
            state.x -= sin_t;
            state.y += cos_t;
        }
        ProcessKind::Contour => {
            state.x -= sin_t;
            state.y += cos_t;
            state.v = state.v.map(|v| reflect_speed(v + process.alpha * noise_v, v_max));
        }
        ProcessKind::Trajectory => {
            let v = state.v.unwrap_or(0.0);
            state.x += v * cos_t;
            state.y += v * sin_t;
            state.t = state.t.map(|t| t + EVOLUTION_STEP);
            state.v = state.v.map(|v| reflect_speed(v + process.alpha * noise_v, v_max));
        }
    }
    // Wrapping a finite angle cannot fail.
    state.theta = wrap_angle(state.theta + process.kappa * noise_theta).unwrap();
}

/// Draw the per-step noise pair for a process. `theta` noise is drawn first
/// so path streams are stable across processes.
#[inline]
fn draw_noise(process: &ProcessSpec, stream: &mut Stream) -> (f64, f64) {
    let g_theta = stream.next_gaussian();
    let g_v = if process.kind == ProcessKind::Se2 { 0.0 } else { stream.next_gaussian() };
    (g_theta, g_v)
}

/// Simulate one discrete path of `H` steps; returns the `H + 1` visited
/// states. The noise stream is a pure function of `(params.seed, path_id)`.
pub fn simulate_path(
    process: &ProcessSpec,
    start: &FeaturePoint,
    params: &KernelParams,
    path_id: u32,
) -> Result<Vec<FeaturePoint>> {
    if start.manifold() != process.kind.manifold() {
        return Err(Error::ManifoldMismatch(0, process.kind.manifold().name()));
    }
    let v_max = params.grid.v_max();
    let mut stream = Stream::derived(params.seed, PURPOSE_PATH, path_id as u64);
    let mut states = Vec::with_capacity(params.horizon as usize + 1);
    let mut state = *start;
    states.push(state);
    for _ in 0..params.horizon {
        let (g_theta, g_v) = draw_noise(process, &mut stream);
        advance(process, &mut state, g_theta, g_v, v_max);
        states.push(state);
    }
    Ok(states)
}

/// Integral curve of the process with noise replaced by constant controls
/// `(dtheta_per_step, dv_per_step)`. With the `Se2`/`Contour` drift and
/// constant `dtheta = c` the spatial projection lies on a circle of
/// curvature `2 sin(c/2) ~ c`.
pub fn horizontal_curve(
    process: &ProcessSpec,
    start: &FeaturePoint,
    controls: (f64, f64),
    horizon: u32,
    v_max: f64,
) -> Result<Vec<FeaturePoint>> {
    if start.manifold() != process.kind.manifold() {
        return Err(Error::ManifoldMismatch(0, process.kind.manifold().name()));
    }
    // Unit controls: the constants replace kappa * noise and alpha * noise.
    let unit = ProcessSpec { kind: process.kind, kappa: 1.0, alpha: 1.0 };
    let mut states = Vec::with_capacity(horizon as usize + 1);
    let mut state = *start;
    states.push(state);
    for _ in 0..horizon {
        advance(&unit, &mut state, controls.0, controls.1, v_max);
        states.push(state);
    }
    Ok(states)
}

/// Canonical base state for a table slice: spatial origin, `theta = 0`,
/// `t = 0`, speed at the center of `base_v_bin`.
pub fn base_state(kind: ProcessKind, grid: &GridSpec, base_v_bin: Option<u32>) -> Result<FeaturePoint> {
    match kind {
        ProcessKind::Se2 => FeaturePoint::m3(0.0, 0.0, 0.0),
        ProcessKind::Contour => {
            let b = base_v_bin.ok_or(Error::GridMismatch("missing base speed bin"))?;
            FeaturePoint::m0(0.0, 0.0, 0.0, (b as f64 + 0.5) * grid.dv)
        }
        ProcessKind::Trajectory => {
            let b = base_v_bin.ok_or(Error::GridMismatch("missing base speed bin"))?;
            FeaturePoint::mt(0.0, 0.0, 0.0, 0.0, (b as f64 + 0.5) * grid.dv)
        }
    }
}

/// Per-slice seed, so each base speed bin gets an independent path family.
pub fn slice_seed(seed: u64, base_v_bin: Option<u32>) -> u64 {
    match base_v_bin {
        None => seed,
        Some(b) => derive_key(&[seed, 0x736c6963, b as u64]),
    }
}

/// Partial visit statistics for a contiguous range of path ids.
#[derive(Debug, Clone)]
pub struct SliceAccumulator {
    pub base_v_bin: Option<u32>,
    counts: HashMap<u64, u32>,
    spilled: u64,
}

/// Accumulate visit counts for paths `range` of one table slice. Shards with
/// disjoint ranges merge to the same result in any order.
pub fn accumulate_paths(
    process: &ProcessSpec,
    params: &KernelParams,
    base_v_bin: Option<u32>,
    range: core::ops::Range<u32>,
) -> Result<SliceAccumulator> {
    let grid = &params.grid;
    if grid.manifold != process.kind.manifold() {
        return Err(Error::GridMismatch("kernel grid manifold"));
    }
    let start = base_state(process.kind, grid, base_v_bin)?;
    let seed = slice_seed(params.seed, base_v_bin);
    let v_max = grid.v_max();
    let mut counts: HashMap<u64, u32> = HashMap::new();
    let mut spilled = 0u64;
    let mut visit = |counts: &mut HashMap<u64, u32>, state: &FeaturePoint| match grid.quantize(state) {
        Ok(cell) => *counts.entry(cell.pack()).or_insert(0) += 1,
        Err(_) => spilled += 1,
    };
    for path_id in range {
        let mut stream = Stream::derived(seed, PURPOSE_PATH, path_id as u64);
        let mut state = start;
        visit(&mut counts, &state);
        for _ in 0..params.horizon {
            let (g_theta, g_v) = draw_noise(process, &mut stream);
            advance(process, &mut state, g_theta, g_v, v_max);
            visit(&mut counts, &state);
        }
    }
    Ok(SliceAccumulator { base_v_bin, counts, spilled })
}

impl SliceAccumulator {
    pub fn merge(&mut self, other: SliceAccumulator) {
        assert_eq!(self.base_v_bin, other.base_v_bin, "merging slices of different base bins");
        self.spilled += other.spilled;
        for (key, count) in other.counts {
            *self.counts.entry(key).or_insert(0) += count;
        }
    }

    /// Canonicalize into a sorted slice table, enforcing the spill tolerance.
    pub fn finish(self, params: &KernelParams) -> Result<KernelSlice> {
        let total = params.paths as u64 * (params.horizon as u64 + 1);
        if self.spilled as f64 > params.spill_tolerance * total as f64 {
            return Err(Error::GridSpill {
                spilled: self.spilled,
                total,
                tolerance: params.spill_tolerance,
            });
        }
        let mut entries: Vec<(u64, u32)> = self.counts.into_iter().collect();
        entries.sort_unstable_by_key(|&(key, _)| key);
        let (keys, counts) = entries.into_iter().unzip();
        Ok(KernelSlice { base_v_bin: self.base_v_bin, keys, counts, spilled: self.spilled })
    }
}

/// One table slice: sorted visit counts over packed cells for a single base
/// speed bin.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSlice {
    pub base_v_bin: Option<u32>,
    keys: Vec<u64>,
    counts: Vec<u32>,
    spilled: u64,
}

impl KernelSlice {
    pub fn from_entries(base_v_bin: Option<u32>, entries: Vec<(u64, u32)>, spilled: u64) -> Self {
        let mut entries = entries;
        entries.sort_unstable_by_key(|&(key, _)| key);
        let (keys, counts) = entries.into_iter().unzip();
        KernelSlice { base_v_bin, keys, counts, spilled }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn count_at(&self, cell: &CellIndex) -> u32 {
        match self.keys.binary_search(&cell.pack()) {
            Ok(i) => self.counts[i],
            Err(_) => 0,
        }
    }

    pub fn total_visits(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn spilled(&self) -> u64 {
        self.spilled
    }

    pub fn entries(&self) -> impl Iterator<Item = (CellIndex, u32)> + '_ {
        self.keys.iter().zip(&self.counts).map(|(&k, &c)| (CellIndex::unpack(k), c))
    }
}

/// A binned Monte Carlo estimate of one connectivity kernel: visit counts
/// from the canonical base state, one slice per base speed bin.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteKernel {
    pub process: ProcessSpec,
    pub params: KernelParams,
    slices: Vec<KernelSlice>,
}

impl DiscreteKernel {
    pub fn from_slices(process: ProcessSpec, params: KernelParams, mut slices: Vec<KernelSlice>) -> Self {
        slices.sort_by_key(|s| s.base_v_bin);
        DiscreteKernel { process, params, slices }
    }

    pub fn slices(&self) -> &[KernelSlice] {
        &self.slices
    }

    pub fn slice_for_bin(&self, bin: Option<u32>) -> Option<&KernelSlice> {
        self.slices.iter().find(|s| s.base_v_bin == bin)
    }

    /// Normalization: `weight = count / (N * H)`.
    pub fn weight_scale(&self) -> f64 {
        1.0 / (self.params.paths as f64 * self.params.horizon as f64)
    }

    /// Total kernel mass of one slice; exactly `(H + 1) / H` when no state
    /// spilled, because every path occupies one cell per step.
    pub fn mass(&self, slice: &KernelSlice) -> f64 {
        slice.total_visits() as f64 * self.weight_scale()
    }

    /// Stable content fingerprint of the estimation inputs (cache key).
    pub fn fingerprint(&self) -> u64 {
        fingerprint(&self.process, &self.params)
    }

    /// Kernel value between two dataset points: the weight of the cell
    /// containing the image of `to` under the rigid transform carrying
    /// `from` onto the base state, read from the slice of `from`'s speed
    /// bin. Zero outside the table support.
    pub fn lookup(&self, from: &FeaturePoint, to: &FeaturePoint) -> Result<f64> {
        let manifold = self.process.kind.manifold();
        if from.manifold() != manifold {
            return Err(Error::ManifoldMismatch(0, manifold.name()));
        }
        if to.manifold() != manifold {
            return Err(Error::ManifoldMismatch(1, manifold.name()));
        }
        let slice = match self.process.kind {
            ProcessKind::Se2 => &self.slices[0],
            _ => {
                let v_from = from.v.unwrap_or(0.0);
                let v_max = self.params.grid.v_max();
                if !(0.0..=v_max).contains(&v_from) {
                    return Err(Error::OutOfBounds { name: "v", value: v_from, min: 0.0, max: v_max });
                }
                let bin =
                    ((libm::floor(v_from / self.params.grid.dv) as u32).min(self.params.grid.n_v_bins() - 1), );
                self.slice_for_bin(Some(bin.0)).ok_or(Error::GridMismatch("base speed bin not tabulated"))?
            }
        };
        // Rotate the displacement into the frame where `from` sits at the
        // base: translate, rotate by -theta_from, shift theta.
        let (sin_t, cos_t) = (libm::sin(from.theta), libm::cos(from.theta));
        let dx = to.x - from.x;
        let dy = to.y - from.y;
        let rel = FeaturePoint {
            x: cos_t * dx + sin_t * dy,
            y: -sin_t * dx + cos_t * dy,
            t: match (from.t, to.t) {
                (Some(a), Some(b)) => Some(b - a),
                _ => None,
            },
            theta: wrap_angle(to.theta - from.theta)?,
            v: to.v,
        };
        // Negative relative time or any coordinate outside the covering grid
        // means the target is outside the kernel support.
        if rel.t.is_some_and(|t| t < 0.0) {
            return Ok(0.0);
        }
        match self.params.grid.quantize(&rel) {
            Ok(cell) => Ok(slice.count_at(&cell) as f64 * self.weight_scale()),
            Err(Error::OutOfBounds { .. }) => Ok(0.0),
            Err(e) => Err(e),
        }
    }
}

/// Stable fingerprint over all estimation inputs, used as cache key.
pub fn fingerprint(process: &ProcessSpec, params: &KernelParams) -> u64 {
    let mut h = Fnv::new();
    h.write(match process.kind {
        ProcessKind::Se2 => 1,
        ProcessKind::Contour => 2,
        ProcessKind::Trajectory => 3,
    });
    h.write(process.kappa.to_bits());
    h.write(process.alpha.to_bits());
    h.write(params.horizon as u64);
    h.write(params.paths as u64);
    h.write(params.seed);
    h.write(EVOLUTION_STEP.to_bits());
    let g = &params.grid;
    for bits in [g.dx, g.dy, g.dt, g.dv, g.x.lo, g.x.hi, g.y.lo, g.y.hi] {
        h.write(bits.to_bits());
    }
    h.write(g.n_theta as u64);
    for ext in [g.t, g.v] {
        match ext {
            Some(e) => {
                h.write(1);
                h.write(e.lo.to_bits());
                h.write(e.hi.to_bits());
            }
            None => h.write(0),
        }
    }
    h.write(params.spill_tolerance.to_bits());
    h.finish()
}

/// FNV-1a over 64-bit words.
struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    fn write(&mut self, word: u64) {
        for byte in word.to_le_bytes() {
            self.0 ^= byte as u64;
            self.0 = self.0.wrapping_mul(0x1000_0000_01b3);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

/// Base speed bins a kernel table needs: the single canonical base for
/// `Se2`, every grid speed bin otherwise.
pub fn table_bins(kind: ProcessKind, grid: &GridSpec) -> Vec<Option<u32>> {
    match kind {
        ProcessKind::Se2 => alloc::vec![None],
        _ => (0..grid.n_v_bins()).map(Some).collect(),
    }
}

/// Estimate a kernel table serially. `base_v_bin` restricts a speed-fibered
/// kernel to a single slice; `None` tabulates every base bin (and is the
/// only valid choice for `Se2`).
pub fn estimate_kernel(
    process: &ProcessSpec,
    params: &KernelParams,
    base_v_bin: Option<u32>,
) -> Result<DiscreteKernel> {
    let bins = match (process.kind, base_v_bin) {
        (ProcessKind::Se2, Some(_)) => {
            return Err(Error::InvalidParameter {
                name: "base_v_bin",
                reason: "the position-orientation kernel has no speed fiber".into(),
            })
        }
        (ProcessKind::Se2, None) => alloc::vec![None],
        (_, Some(b)) => {
            if b >= params.grid.n_v_bins() {
                return Err(Error::InvalidParameter {
                    name: "base_v_bin",
                    reason: alloc::format!("bin {b} outside grid speed bins"),
                });
            }
            alloc::vec![Some(b)]
        }
        (_, None) => table_bins(process.kind, &params.grid),
    };
    let mut slices = Vec::with_capacity(bins.len());
    for bin in bins {
        let acc = accumulate_paths(process, params, bin, 0..params.paths)?;
        slices.push(acc.finish(params)?);
    }
    Ok(DiscreteKernel::from_slices(*process, params.clone(), slices))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::TAU;
    use alloc::vec;

    fn se2_params(horizon: u32, paths: u32, seed: u64) -> KernelParams {
        KernelParams::new(horizon, paths, seed, kernel_grid(ProcessKind::Se2, horizon, 0.0, 36).unwrap()).unwrap()
    }

    #[test]
    fn drift_examples() {
        let se2 = ProcessSpec::se2(0.1).unwrap();
        let p = FeaturePoint::m3(0.0, 0.0, 0.0).unwrap();
        let inc = drift(&se2, &p).unwrap();
        assert_eq!((inc.dx, inc.dy, inc.dtheta), (0.0, 1.0, 0.0));

        let traj = ProcessSpec::trajectory(0.1, 0.1).unwrap();
        let p = FeaturePoint::mt(0.0, 0.0, 0.0, 0.0, 2.0).unwrap();
        let inc = drift(&traj, &p).unwrap();
        assert_eq!((inc.dx, inc.dy, inc.dt, inc.dtheta, inc.dv), (2.0, 0.0, 1.0, 0.0, 0.0));

        let contour = ProcessSpec::contour(0.1, 0.1).unwrap();
        let p = FeaturePoint::m0(0.0, 0.0, core::f64::consts::FRAC_PI_2, 3.0).unwrap();
        let inc = drift(&contour, &p).unwrap();
        assert!((inc.dx + 1.0).abs() < 1e-15 && inc.dy.abs() < 1e-15);
        assert_eq!((inc.dt, inc.dtheta, inc.dv), (0.0, 0.0, 0.0));
    }

    #[test]
    fn zero_noise_se2_path_is_straight() {
        let spec = ProcessSpec::se2(0.0).unwrap();
        let params = se2_params(10, 1, 1);
        let start = FeaturePoint::m3(0.0, 0.0, 0.0).unwrap();
        let states = simulate_path(&spec, &start, &params, 0).unwrap();
        assert_eq!(states.len(), 11);
        for (h, s) in states.iter().enumerate() {
            assert!(s.x.abs() < 1e-12);
            assert!((s.y - h as f64).abs() < 1e-12);
            assert_eq!(s.theta, 0.0);
        }
    }

    #[test]
    fn zero_noise_trajectory_is_space_time_line() {
        let spec = ProcessSpec::trajectory(0.0, 0.0).unwrap();
        let grid = kernel_grid(ProcessKind::Trajectory, 5, 10.0, 36).unwrap();
        let params = KernelParams::new(5, 1, 1, grid).unwrap();
        let start = FeaturePoint::mt(0.0, 0.0, 0.0, 0.0, 1.0).unwrap();
        let states = simulate_path(&spec, &start, &params, 0).unwrap();
        for (h, s) in states.iter().enumerate() {
            assert!((s.x - h as f64).abs() < 1e-12);
            assert!(s.y.abs() < 1e-12);
            assert!((s.t.unwrap() - h as f64).abs() < 1e-12);
            assert_eq!(s.v.unwrap(), 1.0);
        }
    }

    #[test]
    fn theta_increment_sd_matches_kappa() {
        // Moment-matching oracle on the raw gaussian stream: per-step delta
        // theta has sample sd -> kappa.
        let kappa = 0.05;
        let spec = ProcessSpec::se2(kappa).unwrap();
        let params = se2_params(40, 2_500, 77);
        let start = FeaturePoint::m3(0.0, 0.0, 0.0).unwrap();
        let (mut sum2, mut n) = (0.0, 0u64);
        for path in 0..params.paths {
            let states = simulate_path(&spec, &start, &params, path).unwrap();
            for w in states.windows(2) {
                let mut d = w[1].theta - w[0].theta;
                if d > core::f64::consts::PI {
                    d -= TAU;
                }
                if d < -core::f64::consts::PI {
                    d += TAU;
                }
                sum2 += d * d;
                n += 1;
            }
        }
        let sd = libm::sqrt(sum2 / n as f64);
        assert!((sd - kappa).abs() / kappa < 0.02, "sd {sd} vs kappa {kappa}");
    }

    #[test]
    fn horizontal_curve_zero_control_is_line() {
        let spec = ProcessSpec::se2(0.014).unwrap();
        let start = FeaturePoint::m3(0.0, 0.0, 0.0).unwrap();
        let states = horizontal_curve(&spec, &start, (0.0, 0.0), 20, 0.0).unwrap();
        for (h, s) in states.iter().enumerate() {
            assert!(s.x.abs() < 1e-12 && (s.y - h as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn horizontal_curve_constant_control_is_circular_arc() {
        // Oracle: vertices of the discrete curve lie on one circle whose
        // curvature is 2 sin(c/2), within 0.2% of c = 0.056 (radius ~17.86).
        let c = 0.056;
        let spec = ProcessSpec::se2(0.056).unwrap();
        let start = FeaturePoint::m3(0.0, 0.0, 0.0).unwrap();
        let pts = horizontal_curve(&spec, &start, (c, 0.0), 20, 0.0).unwrap();
        let (x1, y1) = (pts[1].x, pts[1].y);
        let (x2, y2) = (pts[2].x, pts[2].y);
        // Circumcenter of (0,0), p1, p2.
        let d = 2.0 * (x1 * y2 - y1 * x2);
        let r1 = x1 * x1 + y1 * y1;
        let r2 = x2 * x2 + y2 * y2;
        let cx = (y2 * r1 - y1 * r2) / d;
        let cy = (x1 * r2 - x2 * r1) / d;
        let radius = libm::sqrt(cx * cx + cy * cy);
        for p in &pts {
            let r = libm::hypot(p.x - cx, p.y - cy);
            assert!((r - radius).abs() < 1e-9 * radius, "vertex off circle: {r} vs {radius}");
        }
        let curvature = 1.0 / radius;
        assert!((curvature - c).abs() / c < 0.002, "curvature {curvature}");
        assert!((radius - 17.86).abs() < 0.03, "radius {radius}");
    }

    #[test]
    fn horizontal_curve_trajectory_constant_speed() {
        let spec = ProcessSpec::trajectory(0.1, 0.1).unwrap();
        let start = FeaturePoint::mt(0.0, 0.0, 0.0, 0.0, 7.5).unwrap();
        let pts = horizontal_curve(&spec, &start, (0.0, 0.0), 8, 10.0).unwrap();
        for (h, p) in pts.iter().enumerate() {
            assert!((p.x - 7.5 * h as f64).abs() < 1e-12);
            assert!((p.t.unwrap() - h as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn reflecting_speed_boundary() {
        assert!((reflect_speed(-0.3, 10.0) - 0.3).abs() < 1e-12);
        assert!((reflect_speed(10.4, 10.0) - 9.6).abs() < 1e-12);
        assert_eq!(reflect_speed(3.0, 10.0), 3.0);
        assert!((reflect_speed(20.5, 10.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_deterministic_path_kernel() {
        // N = 1, kappa = 0: support is exactly the zero-control horizontal
        // curve, one visit per cell, weight 1/H each, mass (H+1)/H.
        let spec = ProcessSpec::se2(0.0).unwrap();
        let params = se2_params(12, 1, 9);
        let kernel = estimate_kernel(&spec, &params, None).unwrap();
        let slice = &kernel.slices()[0];
        assert_eq!(slice.len(), 13);
        assert_eq!(slice.total_visits(), 13);
        let start = base_state(ProcessKind::Se2, &params.grid, None).unwrap();
        let curve = horizontal_curve(&spec, &start, (0.0, 0.0), 12, 0.0).unwrap();
        for state in &curve {
            let cell = params.grid.quantize(state).unwrap();
            assert_eq!(slice.count_at(&cell), 1);
        }
        assert!((kernel.mass(slice) - 13.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn mass_identity_exact() {
        // Every path occupies exactly one cell per step, so total visits are
        // exactly N * (H + 1) for any parameters.
        let spec = ProcessSpec::contour(0.05, 0.3).unwrap();
        let grid = kernel_grid(ProcessKind::Contour, 15, 10.0, 36).unwrap();
        let params = KernelParams::new(15, 500, 4, grid).unwrap();
        let kernel = estimate_kernel(&spec, &params, Some(3)).unwrap();
        let slice = &kernel.slices()[0];
        assert_eq!(slice.total_visits(), 500 * 16);
        assert!((kernel.mass(slice) - 16.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn estimation_is_deterministic_and_shardable() {
        let spec = ProcessSpec::se2(0.08).unwrap();
        let params = se2_params(10, 600, 21);
        let a = estimate_kernel(&spec, &params, None).unwrap();
        let b = estimate_kernel(&spec, &params, None).unwrap();
        assert_eq!(a, b);
        // Shard merge in a different order gives the same table.
        let mut acc = accumulate_paths(&spec, &params, None, 400..600).unwrap();
        acc.merge(accumulate_paths(&spec, &params, None, 0..400).unwrap());
        let slice = acc.finish(&params).unwrap();
        assert_eq!(&slice, &a.slices()[0]);
    }

    #[test]
    fn spill_tolerance_enforced() {
        let spec = ProcessSpec::se2(0.0).unwrap();
        // Grid covering only 5 cells of a 10-step path.
        let grid = GridSpec::new(
            Manifold::M3,
            1.0,
            1.0,
            1.0,
            36,
            0.5,
            Extent::new(-5.0, 5.0).unwrap(),
            Extent::new(-1.0, 5.0).unwrap(),
            None,
            None,
        )
        .unwrap();
        let params = KernelParams::new(10, 4, 0, grid).unwrap();
        match estimate_kernel(&spec, &params, None) {
            Err(Error::GridSpill { spilled, total, .. }) => {
                assert_eq!(total, 44);
                assert!(spilled > 0);
            }
            other => panic!("expected spill error, got {other:?}"),
        }
    }

    #[test]
    fn lookup_identity_gives_base_weight() {
        let spec = ProcessSpec::se2(0.1).unwrap();
        let params = se2_params(10, 300, 3);
        let kernel = estimate_kernel(&spec, &params, None).unwrap();
        let p = FeaturePoint::m3(40.0, 12.0, 1.3).unwrap();
        let w = kernel.lookup(&p, &p).unwrap();
        let base_cell = params.grid.quantize(&base_state(ProcessKind::Se2, &params.grid, None).unwrap()).unwrap();
        let expected = kernel.slices()[0].count_at(&base_cell) as f64 * kernel.weight_scale();
        assert_eq!(w, expected);
        assert!(w > 0.0);
    }

    #[test]
    fn lookup_is_group_invariant() {
        let spec = ProcessSpec::se2(0.1).unwrap();
        let params = se2_params(20, 500, 5);
        let kernel = estimate_kernel(&spec, &params, None).unwrap();
        let from = FeaturePoint::m3(0.0, 0.0, 0.0).unwrap();
        let to = FeaturePoint::m3(5.0, 5.0, core::f64::consts::FRAC_PI_4).unwrap();
        let w0 = kernel.lookup(&from, &to).unwrap();

        // Apply g = (translate (1,2), rotate pi/2) to both arguments.
        let phi = core::f64::consts::FRAC_PI_2;
        let rot = |x: f64, y: f64| (x * libm::cos(phi) - y * libm::sin(phi), x * libm::sin(phi) + y * libm::cos(phi));
        let (fx, fy) = rot(from.x, from.y);
        let (tx, ty) = rot(to.x, to.y);
        let from2 = FeaturePoint::m3(fx + 1.0, fy + 2.0, from.theta + phi).unwrap();
        let to2 = FeaturePoint::m3(tx + 1.0, ty + 2.0, to.theta + phi).unwrap();
        let w1 = kernel.lookup(&from2, &to2).unwrap();
        assert_eq!(w0, w1);
    }

    #[test]
    fn lookup_beyond_reach_is_zero() {
        let spec = ProcessSpec::se2(0.1).unwrap();
        let params = se2_params(10, 100, 3);
        let kernel = estimate_kernel(&spec, &params, None).unwrap();
        let from = FeaturePoint::m3(0.0, 0.0, 0.0).unwrap();
        let far = FeaturePoint::m3(500.0, 0.0, 0.0).unwrap();
        assert_eq!(kernel.lookup(&from, &far).unwrap(), 0.0);
    }

    #[test]
    fn lookup_respects_causality() {
        let spec = ProcessSpec::trajectory(0.05, 0.3).unwrap();
        let grid = kernel_grid(ProcessKind::Trajectory, 8, 10.0, 36).unwrap();
        let params = KernelParams::new(8, 200, 11, grid).unwrap();
        let kernel = estimate_kernel(&spec, &params, None).unwrap();
        let early = FeaturePoint::mt(10.0, 10.0, 2.0, 0.0, 3.0).unwrap();
        let late = FeaturePoint::mt(13.0, 10.0, 1.0, 0.0, 3.0).unwrap();
        // Target in the past: zero affinity.
        assert_eq!(kernel.lookup(&early, &late).unwrap(), 0.0);
    }

    #[test]
    fn lookup_rejects_speed_out_of_range() {
        let spec = ProcessSpec::contour(0.05, 0.3).unwrap();
        let grid = kernel_grid(ProcessKind::Contour, 5, 10.0, 36).unwrap();
        let params = KernelParams::new(5, 50, 11, grid).unwrap();
        let kernel = estimate_kernel(&spec, &params, None).unwrap();
        let from = FeaturePoint::m0(0.0, 0.0, 0.0, 10.8).unwrap();
        let to = FeaturePoint::m0(0.0, 1.0, 0.0, 3.0).unwrap();
        assert!(kernel.lookup(&from, &to).is_err());
    }

    #[test]
    fn monotone_spatial_spread_in_kappa() {
        // Spatial second moment of the kernel marginal grows with kappa.
        let mut spreads = vec![];
        for kappa in [0.0035, 0.014, 0.056] {
            let spec = ProcessSpec::se2(kappa).unwrap();
            let params = se2_params(20, 4_000, 13);
            let kernel = estimate_kernel(&spec, &params, None).unwrap();
            let slice = &kernel.slices()[0];
            let (mut m, mut mx, mut my) = (0.0, 0.0, 0.0);
            for (cell, count) in slice.entries() {
                let c = params.grid.cell_center(&cell);
                m += count as f64;
                mx += count as f64 * c.x;
                my += count as f64 * c.y;
            }
            let (mx, my) = (mx / m, my / m);
            let mut var = 0.0;
            for (cell, count) in slice.entries() {
                let c = params.grid.cell_center(&cell);
                var += count as f64 * ((c.x - mx) * (c.x - mx) + (c.y - my) * (c.y - my));
            }
            spreads.push(var / m);
        }
        assert!(spreads[0] < spreads[1] && spreads[1] < spreads[2], "{spreads:?}");
    }

    #[test]
    fn fingerprint_distinguishes_params() {
        let spec = ProcessSpec::se2(0.014).unwrap();
        let p1 = se2_params(10, 100, 3);
        let p2 = se2_params(10, 100, 4);
        assert_ne!(fingerprint(&spec, &p1), fingerprint(&spec, &p2));
        assert_eq!(fingerprint(&spec, &p1), fingerprint(&spec, &p1));
    }
}
