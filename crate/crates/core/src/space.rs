//! Feature manifolds, angle conventions and the discrete covering grid.
//!
//! Points live in one of three manifolds:
//!
//! * `M3`  — position and orientation `(x, y, theta)`
//! * `M0`  — adds an orthogonal speed fiber `(x, y, theta, v)` at a fixed frame
//! * `MT`  — adds activation time `(x, y, t, theta, v)`
//!
//! `theta` is the process coordinate: the contour tangent direction is
//! `(-sin theta, cos theta)` and the normal (the direction speed `v` refers
//! to) is `(cos theta, sin theta)`. Angles are always stored wrapped into
//! `[0, 2*pi)`; orientation identification (mod `pi`) is performed downstream
//! by kernel symmetrization, never by the state space itself.

use crate::error::{Error, Result};
use core::f64::consts::PI;

pub const TAU: f64 = 2.0 * PI;

/// Which feature manifold a point or grid lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Manifold {
    /// Position-orientation, `(x, y, theta)`.
    M3,
    /// Position-orientation-speed at a fixed frame, `(x, y, theta, v)`.
    M0,
    /// Position-time-orientation-speed, `(x, y, t, theta, v)`.
    MT,
}

impl Manifold {
    pub fn has_time(self) -> bool {
        matches!(self, Manifold::MT)
    }

    pub fn has_velocity(self) -> bool {
        matches!(self, Manifold::M0 | Manifold::MT)
    }

    pub fn name(self) -> &'static str {
        match self {
            Manifold::M3 => "M3",
            Manifold::M0 => "M0",
            Manifold::MT => "MT",
        }
    }
}

/// A stimulus element in one of the three feature manifolds. The set of
/// present optional fields identifies the manifold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeaturePoint {
    pub x: f64,
    pub y: f64,
    /// Activation time in frames; present only on `MT`.
    pub t: Option<f64>,
    /// Process orientation coordinate, wrapped into `[0, 2*pi)`.
    pub theta: f64,
    /// Orthogonal speed in spatial units per frame; present on `M0` and `MT`.
    pub v: Option<f64>,
}

impl FeaturePoint {
    pub fn m3(x: f64, y: f64, theta: f64) -> Result<Self> {
        Self::build(x, y, None, theta, None)
    }

    pub fn m0(x: f64, y: f64, theta: f64, v: f64) -> Result<Self> {
        Self::build(x, y, None, theta, Some(v))
    }

    pub fn mt(x: f64, y: f64, t: f64, theta: f64, v: f64) -> Result<Self> {
        Self::build(x, y, Some(t), theta, Some(v))
    }

    fn build(x: f64, y: f64, t: Option<f64>, theta: f64, v: Option<f64>) -> Result<Self> {
        for (val, name) in [(Some(x), "x"), (Some(y), "y"), (t, "t"), (Some(theta), "theta"), (v, "v")] {
            if let Some(val) = val {
                if !val.is_finite() {
                    return Err(Error::NonFinite(name));
                }
            }
        }
        if let Some(t) = t {
            if t < 0.0 {
                return Err(Error::OutOfBounds { name: "t", value: t, min: 0.0, max: f64::INFINITY });
            }
        }
        if let Some(v) = v {
            if v < 0.0 {
                return Err(Error::OutOfBounds { name: "v", value: v, min: 0.0, max: f64::INFINITY });
            }
        }
        Ok(FeaturePoint { x, y, t, theta: wrap_angle(theta)?, v })
    }

    pub fn manifold(&self) -> Manifold {
        match (self.t, self.v) {
            (Some(_), Some(_)) => Manifold::MT,
            (None, Some(_)) => Manifold::M0,
            _ => Manifold::M3,
        }
    }

    /// Tangent direction of the contour element represented by this point.
    pub fn tangent(&self) -> (f64, f64) {
        (-libm::sin(self.theta), libm::cos(self.theta))
    }

    /// Normal direction, along which the speed fiber `v` measures motion.
    pub fn normal(&self) -> (f64, f64) {
        (libm::cos(self.theta), libm::sin(self.theta))
    }

    /// Drop the speed fiber, projecting onto `M3`.
    pub fn project_m3(&self) -> FeaturePoint {
        FeaturePoint { x: self.x, y: self.y, t: None, theta: self.theta, v: None }
    }

    /// Drop the time coordinate, projecting `MT` onto `M0`.
    pub fn project_m0(&self) -> FeaturePoint {
        FeaturePoint { x: self.x, y: self.y, t: None, theta: self.theta, v: self.v }
    }
}

/// Wrap an angle into `[0, 2*pi)`.
pub fn wrap_angle(theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(Error::NonFinite("theta"));
    }
    let mut w = theta % TAU;
    if w < 0.0 {
        w += TAU;
    }
    // For tiny negative inputs `w + TAU` rounds back to 2*pi itself.
    if w >= TAU {
        w = 0.0;
    }
    Ok(w)
}

/// Distance metric on the circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleMode {
    /// Angles identified mod `2*pi`; distance in `[0, pi]`.
    Direction,
    /// Angles identified mod `pi` (undirected orientations); distance in `[0, pi/2]`.
    Orientation,
}

/// Distance between two angles under the chosen identification.
pub fn angular_distance(a: f64, b: f64, mode: AngleMode) -> f64 {
    let period = match mode {
        AngleMode::Direction => TAU,
        AngleMode::Orientation => PI,
    };
    let mut d = libm::fabs(a - b) % period;
    if d > period / 2.0 {
        d = period - d;
    }
    d
}

/// Half-open interval `[lo, hi)` bounding one grid dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extent {
    pub lo: f64,
    pub hi: f64,
}

impl Extent {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter {
                name: "extent",
                reason: alloc::format!("invalid interval [{lo}, {hi})"),
            });
        }
        Ok(Extent { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x < self.hi
    }
}

/// Discrete covering grid over a feature manifold: disjoint cells of fixed
/// bin widths covering a bounded domain. Angular bins always tile the full
/// circle (`dtheta = 2*pi / n_theta`).
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub manifold: Manifold,
    pub dx: f64,
    pub dy: f64,
    /// Temporal bin width in frames; meaningful only on `MT`.
    pub dt: f64,
    pub n_theta: u32,
    /// Speed bin width; meaningful on `M0`/`MT`.
    pub dv: f64,
    pub x: Extent,
    pub y: Extent,
    /// Present exactly when the manifold has time.
    pub t: Option<Extent>,
    /// Present exactly when the manifold has a speed fiber.
    pub v: Option<Extent>,
}

pub const DEFAULT_N_THETA: u32 = 36;
pub const DEFAULT_DV: f64 = 0.5;
pub const DEFAULT_V_MAX: f64 = 10.0;

impl GridSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        manifold: Manifold,
        dx: f64,
        dy: f64,
        dt: f64,
        n_theta: u32,
        dv: f64,
        x: Extent,
        y: Extent,
        t: Option<Extent>,
        v: Option<Extent>,
    ) -> Result<Self> {
        for (w, name) in [(dx, "dx"), (dy, "dy"), (dt, "dt"), (dv, "dv")] {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: alloc::format!("bin width must be positive, got {w}"),
                });
            }
        }
        if n_theta < 4 {
            return Err(Error::InvalidParameter {
                name: "n_theta",
                reason: alloc::format!("need at least 4 angular bins, got {n_theta}"),
            });
        }
        if manifold.has_time() != t.is_some() {
            return Err(Error::GridMismatch("time extent presence"));
        }
        if manifold.has_velocity() != v.is_some() {
            return Err(Error::GridMismatch("velocity extent presence"));
        }
        if let Some(v) = &v {
            if v.lo != 0.0 {
                return Err(Error::InvalidParameter {
                    name: "v extent",
                    reason: alloc::format!("speed domain must start at 0, got {}", v.lo),
                });
            }
        }
        Ok(GridSpec { manifold, dx, dy, dt, n_theta, dv, x, y, t, v })
    }

    /// Pixel-resolution grid over a rectangular spatial domain, with the
    /// default angular and speed binning.
    pub fn domain(manifold: Manifold, width: f64, height: f64, n_frames: u32, v_max: f64) -> Result<Self> {
        GridSpec::new(
            manifold,
            1.0,
            1.0,
            1.0,
            DEFAULT_N_THETA,
            DEFAULT_DV,
            Extent::new(0.0, width)?,
            Extent::new(0.0, height)?,
            manifold.has_time().then(|| Extent::new(0.0, n_frames as f64)).transpose()?,
            manifold.has_velocity().then(|| Extent::new(0.0, v_max)).transpose()?,
        )
    }

    pub fn dtheta(&self) -> f64 {
        TAU / self.n_theta as f64
    }

    pub fn v_max(&self) -> f64 {
        self.v.map(|e| e.hi).unwrap_or(0.0)
    }

    pub fn n_v_bins(&self) -> u32 {
        match self.v {
            Some(e) => libm::ceil(e.hi / self.dv) as u32,
            None => 0,
        }
    }

    /// True when both grids bin identically (same widths and angular count),
    /// regardless of their domain extents.
    pub fn same_binning(&self, other: &GridSpec) -> bool {
        self.dx == other.dx
            && self.dy == other.dy
            && self.dt == other.dt
            && self.n_theta == other.n_theta
            && self.dv == other.dv
    }

    /// Cell containing `p`. Errors when `p` lies outside the grid bounds;
    /// the angle is always in range by construction.
    pub fn quantize(&self, p: &FeaturePoint) -> Result<CellIndex> {
        if p.manifold() != self.manifold {
            return Err(Error::GridMismatch("point manifold"));
        }
        if !self.x.contains(p.x) {
            return Err(Error::OutOfBounds { name: "x", value: p.x, min: self.x.lo, max: self.x.hi });
        }
        if !self.y.contains(p.y) {
            return Err(Error::OutOfBounds { name: "y", value: p.y, min: self.y.lo, max: self.y.hi });
        }
        let it = match (p.t, &self.t) {
            (Some(t), Some(ext)) => {
                if !ext.contains(t) {
                    return Err(Error::OutOfBounds { name: "t", value: t, min: ext.lo, max: ext.hi });
                }
                Some(bin(t, self.dt))
            }
            _ => None,
        };
        let iv = match (p.v, &self.v) {
            (Some(v), Some(ext)) => {
                if !(v >= ext.lo && v <= ext.hi) {
                    return Err(Error::OutOfBounds { name: "v", value: v, min: ext.lo, max: ext.hi });
                }
                // v == v_max folds into the last bin so the closed upper
                // boundary of the reflecting speed domain stays in-grid.
                Some((bin(v, self.dv) as u32).min(self.n_v_bins() - 1))
            }
            _ => None,
        };
        let itheta = ((bin(p.theta, self.dtheta())) as u32).min(self.n_theta - 1);
        Ok(CellIndex { ix: bin(p.x, self.dx), iy: bin(p.y, self.dy), it, itheta, iv })
    }

    /// Midpoint of a cell; inverse of `quantize` up to binning.
    pub fn cell_center(&self, c: &CellIndex) -> FeaturePoint {
        FeaturePoint {
            x: (c.ix as f64 + 0.5) * self.dx,
            y: (c.iy as f64 + 0.5) * self.dy,
            t: c.it.map(|i| (i as f64 + 0.5) * self.dt),
            theta: (c.itheta as f64 + 0.5) * self.dtheta(),
            v: c.iv.map(|i| (i as f64 + 0.5) * self.dv),
        }
    }
}

fn bin(value: f64, width: f64) -> i32 {
    libm::floor(value / width) as i32
}

/// Integer index of one covering-grid cell; optional components mirror the
/// manifold's optional coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex {
    pub ix: i32,
    pub iy: i32,
    pub it: Option<i32>,
    pub itheta: u32,
    pub iv: Option<u32>,
}

// Packed layout: |ix+BIAS:15|iy+BIAS:15|it:11|itheta:11|iv:11| = 63 bits.
const SPATIAL_BIAS: i64 = 1 << 14;
const SPATIAL_MAX: i64 = (1 << 15) - 1;
const SMALL_MAX: u64 = (1 << 11) - 1;

impl CellIndex {
    /// Pack into a single sortable `u64` key. Panics if a component exceeds
    /// the packed range (kernel grids are far smaller than the limits).
    pub fn pack(&self) -> u64 {
        let bx = self.ix as i64 + SPATIAL_BIAS;
        let by = self.iy as i64 + SPATIAL_BIAS;
        let bt = self.it.map(|t| t as i64 + 1).unwrap_or(0) as u64;
        let bv = self.iv.map(|v| v as u64 + 1).unwrap_or(0);
        assert!(
            (0..=SPATIAL_MAX).contains(&bx)
                && (0..=SPATIAL_MAX).contains(&by)
                && bt <= SMALL_MAX
                && (self.itheta as u64) <= SMALL_MAX
                && bv <= SMALL_MAX,
            "cell index {self:?} exceeds packed range"
        );
        ((bx as u64) << 48) | ((by as u64) << 33) | (bt << 22) | ((self.itheta as u64) << 11) | bv
    }

    pub fn unpack(key: u64) -> CellIndex {
        let bt = (key >> 22) & SMALL_MAX;
        let bv = key & SMALL_MAX;
        CellIndex {
            ix: (((key >> 48) & 0x7fff) as i64 - SPATIAL_BIAS) as i32,
            iy: (((key >> 33) & 0x7fff) as i64 - SPATIAL_BIAS) as i32,
            it: (bt > 0).then(|| (bt - 1) as i32),
            itheta: ((key >> 11) & SMALL_MAX) as u32,
            iv: (bv > 0).then(|| (bv - 1) as u32),
        }
    }
}
