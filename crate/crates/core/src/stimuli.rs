//! Deterministic, seeded generators for the synthetic datasets used by the
//! grouping experiments, with ground-truth labels.
//!
//! Every generator is a pure function of its spec (parameters + seed): the
//! [`StimulusSpec`] value fully reproduces the dataset. Contour units carry
//! their arc parametrization so speed fields can be assigned along them.
//! Datasets destined for cortical kernels keep the covering-grid
//! compatibility invariant: after bounded resampling of colliding background
//! elements, no two points share a grid cell.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::space::{wrap_angle, FeaturePoint, GridSpec, Manifold, DEFAULT_V_MAX, TAU};

const PI: f64 = core::f64::consts::PI;
const PURPOSE_STIMULUS: u64 = 0x7374696d;
const MAX_RESAMPLE: u32 = 100;

/// Dash-group sampling of an arc: points come in groups of `per_dash`
/// tightly spaced samples with larger gaps between groups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DashSpec {
    pub per_dash: u32,
    pub intra_spacing: f64,
}

/// A circle-arc perceptual unit: curvature (0 = straight segment), arc
/// length, placement (start point and initial tangent direction) and the
/// number of sample points (uniform by default, dash-grouped when `dashes`
/// is set).
#[derive(Debug, Clone, PartialEq)]
pub struct ArcSpec {
    pub curvature: f64,
    pub arc_len: f64,
    pub start: (f64, f64),
    pub start_tangent: f64,
    pub samples: u32,
    pub dashes: Option<DashSpec>,
}

impl ArcSpec {
    pub fn new(curvature: f64, arc_len: f64, start: (f64, f64), start_tangent: f64, samples: u32) -> Result<Self> {
        if samples < 2 {
            return Err(Error::InvalidParameter { name: "samples", reason: "need at least 2".into() });
        }
        if !(arc_len > 0.0 && arc_len.is_finite()) {
            return Err(Error::InvalidParameter { name: "arc_len", reason: "must be positive".into() });
        }
        if libm::fabs(curvature) * arc_len >= TAU {
            return Err(Error::InvalidParameter {
                name: "curvature",
                reason: "arc self-overlaps: |k| * L must stay below 2*pi".into(),
            });
        }
        Ok(ArcSpec { curvature, arc_len, start, start_tangent, samples, dashes: None })
    }

    pub fn with_dashes(mut self, per_dash: u32, intra_spacing: f64) -> Result<Self> {
        if per_dash < 2 || !self.samples.is_multiple_of(per_dash) {
            return Err(Error::InvalidParameter {
                name: "per_dash",
                reason: "must be >= 2 and divide the sample count".into(),
            });
        }
        let n_dash = self.samples / per_dash;
        let span = (per_dash - 1) as f64 * intra_spacing;
        if span >= self.arc_len / n_dash as f64 {
            return Err(Error::InvalidParameter {
                name: "intra_spacing",
                reason: "dash span exceeds the dash period".into(),
            });
        }
        self.dashes = Some(DashSpec { per_dash, intra_spacing });
        Ok(self)
    }

    /// Arc coordinates of the sample points.
    pub fn sample_positions(&self) -> Vec<f64> {
        match self.dashes {
            None => (0..self.samples)
                .map(|j| self.arc_len * j as f64 / (self.samples - 1) as f64)
                .collect(),
            Some(DashSpec { per_dash, intra_spacing }) => {
                let n_dash = self.samples / per_dash;
                let period = self.arc_len / n_dash as f64;
                (0..self.samples)
                    .map(|j| {
                        let dash = j / per_dash;
                        let k = j % per_dash;
                        dash as f64 * period + k as f64 * intra_spacing
                    })
                    .collect()
            }
        }
    }

    /// Position and tangent direction at arc coordinate `phi` in `[0, L]`.
    pub fn point_at(&self, phi: f64) -> (f64, f64, f64) {
        let a0 = self.start_tangent;
        let alpha = a0 + self.curvature * phi;
        if self.curvature == 0.0 {
            (
                self.start.0 + phi * libm::cos(a0),
                self.start.1 + phi * libm::sin(a0),
                alpha,
            )
        } else {
            let k = self.curvature;
            (
                self.start.0 + (libm::sin(alpha) - libm::sin(a0)) / k,
                self.start.1 + (libm::cos(a0) - libm::cos(alpha)) / k,
                alpha,
            )
        }
    }
}

/// Orientation coordinate of a contour element whose tangent direction is
/// `alpha`: the process convention has tangent `(-sin theta, cos theta)`.
pub fn theta_from_tangent(alpha: f64) -> f64 {
    wrap_angle(alpha - PI / 2.0).unwrap()
}

/// Resolve the aperture rule for a contour element with tangent direction
/// `alpha` and true velocity `w`: keep only the normal component of the
/// motion, choosing the theta sign that makes the detected speed
/// nonnegative. Returns `(theta, v)`.
pub fn aperture_speed(alpha: f64, w: (f64, f64)) -> (f64, f64) {
    let theta = theta_from_tangent(alpha);
    let (nx, ny) = (libm::cos(theta), libm::sin(theta));
    let v = w.0 * nx + w.1 * ny;
    if v < 0.0 {
        (wrap_angle(theta + PI).unwrap(), -v)
    } else {
        (theta, v)
    }
}

/// Arc coordinate of a unit point: position along the contour and the
/// contour's total length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcCoord {
    pub pos: f64,
    pub unit_len: f64,
}

/// A generated dataset: feature points, per-point truth labels (0 is
/// background), optional arc coordinates for unit points, the covering grid
/// of the stimulus domain, and the spec that reproduces it all.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub points: Vec<FeaturePoint>,
    pub truth: Vec<u32>,
    pub arc: Vec<Option<ArcCoord>>,
    pub grid: GridSpec,
    pub spec: StimulusSpec,
    /// Background elements dropped after exhausting collision resampling.
    pub dropped: u32,
}

impl LabeledDataset {
    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn n_units(&self) -> u32 {
        self.truth.iter().copied().max().unwrap_or(0)
    }
}

/// Self-describing generator configuration; `generate` is a pure function
/// of this value.
#[derive(Debug, Clone, PartialEq)]
pub enum StimulusSpec {
    /// Gaussian point clouds plus uniform background noise, positions only.
    GaussianClouds {
        counts: Vec<u32>,
        centers: Vec<(f64, f64)>,
        spread: f64,
        noise: u32,
        width: f64,
        height: f64,
        seed: u64,
    },
    /// Circle-arc units among uniformly random oriented segments.
    SegmentField {
        units: Vec<ArcSpec>,
        background: u32,
        width: f64,
        height: f64,
        seed: u64,
    },
    /// A figure-eight contour among random oriented segments; spatially
    /// self-crossing but simple in the lifted space.
    Lemniscate {
        scale: f64,
        samples: u32,
        background: u32,
        width: f64,
        height: f64,
        seed: u64,
    },
    /// Lift a position-orientation dataset to the speed-fibered space:
    /// unit speeds vary sinusoidally along each contour (0 at the ends,
    /// `v_peak` at the middle), background speeds are uniform in
    /// `[0, v_peak]`.
    SinusoidalVelocity { base: Box<StimulusSpec>, v_peak: f64, seed: u64 },
    /// Space-time scene: a circle translating right, two vertical bars
    /// translating left at half its speed, among background segments that
    /// drift uniformly along their own normal for the whole clip. Point
    /// speeds obey the aperture rule.
    MovingScene { background: u32, frames: u32, seed: u64 },
}

impl StimulusSpec {
    pub fn seed(&self) -> u64 {
        match self {
            StimulusSpec::GaussianClouds { seed, .. }
            | StimulusSpec::SegmentField { seed, .. }
            | StimulusSpec::Lemniscate { seed, .. }
            | StimulusSpec::SinusoidalVelocity { seed, .. }
            | StimulusSpec::MovingScene { seed, .. } => *seed,
        }
    }

    /// Replace every seed in the spec tree (repetition reseeding).
    pub fn with_seed(&self, seed: u64) -> StimulusSpec {
        let mut s = self.clone();
        match &mut s {
            StimulusSpec::GaussianClouds { seed: sd, .. }
            | StimulusSpec::SegmentField { seed: sd, .. }
            | StimulusSpec::Lemniscate { seed: sd, .. }
            | StimulusSpec::MovingScene { seed: sd, .. } => *sd = seed,
            StimulusSpec::SinusoidalVelocity { base, seed: sd, .. } => {
                *sd = seed;
                **base = base.with_seed(crate::rng::derive_key(&[seed, 0x62617365]));
            }
        }
        s
    }

    pub fn generate(&self) -> Result<LabeledDataset> {
        match self {
            StimulusSpec::GaussianClouds { counts, centers, spread, noise, width, height, seed } => {
                gen_gaussian_clouds(self, counts, centers, *spread, *noise, *width, *height, *seed)
            }
            StimulusSpec::SegmentField { units, background, width, height, seed } => {
                gen_segment_field(self, units, *background, *width, *height, *seed)
            }
            StimulusSpec::Lemniscate { scale, samples, background, width, height, seed } => {
                gen_lemniscate(self, *scale, *samples, *background, *width, *height, *seed)
            }
            StimulusSpec::SinusoidalVelocity { base, v_peak, seed } => {
                let ds = base.generate()?;
                assign_velocity_sinusoidal(self, ds, *v_peak, *seed)
            }
            StimulusSpec::MovingScene { background, frames, seed } => {
                gen_moving_scene(self, *background, *frames, *seed)
            }
        }
    }
}

/// Euclidean remainder into `[0, period)`.
fn wrap_into(value: f64, period: f64) -> f64 {
    let mut m = value % period;
    if m < 0.0 {
        m += period;
    }
    if m >= period {
        m = 0.0;
    }
    m
}

/// Tracks covering-grid occupancy during generation.
struct Occupancy {
    grid: GridSpec,
    cells: hashbrown::HashSet<u64>,
}

impl Occupancy {
    fn new(grid: GridSpec) -> Self {
        Occupancy { grid, cells: hashbrown::HashSet::new() }
    }

    /// Insert a unit point; a collision here is a spec error.
    fn insert_unit(&mut self, p: &FeaturePoint) -> Result<()> {
        let key = self.grid.quantize(p)?.pack();
        if !self.cells.insert(key) {
            return Err(Error::Stimulus(alloc::format!(
                "unit points collide in one grid cell near ({:.1}, {:.1})",
                p.x,
                p.y
            )));
        }
        Ok(())
    }

    /// Try to insert a background point; false on collision.
    fn try_insert(&mut self, p: &FeaturePoint) -> Result<bool> {
        let key = self.grid.quantize(p)?.pack();
        Ok(self.cells.insert(key))
    }
}

#[allow(clippy::too_many_arguments)]
fn gen_gaussian_clouds(
    spec: &StimulusSpec,
    counts: &[u32],
    centers: &[(f64, f64)],
    spread: f64,
    noise: u32,
    width: f64,
    height: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if counts.len() != centers.len() {
        return Err(Error::DimensionMismatch(counts.len(), centers.len()));
    }
    let grid = GridSpec::domain(Manifold::M3, width, height, 1, 0.0)?;
    let mut stream = Stream::derived(seed, PURPOSE_STIMULUS, 0);
    let mut points = Vec::new();
    let mut truth = Vec::new();
    for (unit, (&count, &(cx, cy))) in counts.iter().zip(centers).enumerate() {
        for _ in 0..count {
            // Redraw the rare sample that leaves the domain.
            let (x, y) = loop {
                let x = cx + spread * stream.next_gaussian();
                let y = cy + spread * stream.next_gaussian();
                if x >= 0.0 && x < width && y >= 0.0 && y < height {
                    break (x, y);
                }
            };
            points.push(FeaturePoint::m3(x, y, 0.0)?);
            truth.push(unit as u32 + 1);
        }
    }
    for _ in 0..noise {
        points.push(FeaturePoint::m3(stream.uniform(0.0, width), stream.uniform(0.0, height), 0.0)?);
        truth.push(0);
    }
    let arc = vec![None; points.len()];
    Ok(LabeledDataset { points, truth, arc, grid, spec: spec.clone(), dropped: 0 })
}

fn sample_arc(unit: &ArcSpec) -> impl Iterator<Item = (f64, FeaturePointParts)> + '_ {
    unit.sample_positions().into_iter().map(move |phi| {
        let (x, y, alpha) = unit.point_at(phi);
        (phi, FeaturePointParts { x, y, theta: theta_from_tangent(alpha) })
    })
}

struct FeaturePointParts {
    x: f64,
    y: f64,
    theta: f64,
}

fn gen_segment_field(
    spec: &StimulusSpec,
    units: &[ArcSpec],
    background: u32,
    width: f64,
    height: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    let grid = GridSpec::domain(Manifold::M3, width, height, 1, 0.0)?;
    let mut occ = Occupancy::new(grid.clone());
    let mut points = Vec::new();
    let mut truth = Vec::new();
    let mut arc = Vec::new();
    for (unit_id, unit) in units.iter().enumerate() {
        for (phi, parts) in sample_arc(unit) {
            let p = FeaturePoint::m3(parts.x, parts.y, parts.theta)?;
            occ.insert_unit(&p)?;
            points.push(p);
            truth.push(unit_id as u32 + 1);
            arc.push(Some(ArcCoord { pos: phi, unit_len: unit.arc_len }));
        }
    }
    let mut stream = Stream::derived(seed, PURPOSE_STIMULUS, 1);
    let mut dropped = 0;
    for _ in 0..background {
        let mut placed = false;
        for _ in 0..MAX_RESAMPLE {
            let p = FeaturePoint::m3(
                stream.uniform(0.0, width),
                stream.uniform(0.0, height),
                stream.uniform(0.0, TAU),
            )?;
            if occ.try_insert(&p)? {
                points.push(p);
                truth.push(0);
                arc.push(None);
                placed = true;
                break;
            }
        }
        if !placed {
            dropped += 1;
        }
    }
    Ok(LabeledDataset { points, truth, arc, grid, spec: spec.clone(), dropped })
}

/// Bernoulli lemniscate position and tangent direction at parameter `phi`.
fn lemniscate_point(scale: f64, phi: f64) -> (f64, f64, f64) {
    let (s, c) = (libm::sin(phi), libm::cos(phi));
    let d = 1.0 + s * s;
    let x = scale * c / d;
    let y = scale * s * c / d;
    // d/dphi of the closed forms above.
    let dx = -scale * s * (3.0 - s * s) / (d * d);
    let dy = scale * (c * c * (1.0 + s * s) - s * s * (3.0 - s * s)) / (d * d);
    (x, y, libm::atan2(dy, dx))
}

fn gen_lemniscate(
    spec: &StimulusSpec,
    scale: f64,
    samples: u32,
    background: u32,
    width: f64,
    height: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    let grid = GridSpec::domain(Manifold::M3, width, height, 1, 0.0)?;
    let mut occ = Occupancy::new(grid.clone());
    let (cx, cy) = (width / 2.0, height / 2.0);
    let mut points = Vec::new();
    let mut truth = Vec::new();
    let mut arc = Vec::new();
    for j in 0..samples {
        let phi = TAU * j as f64 / samples as f64;
        let (x, y, alpha) = lemniscate_point(scale, phi);
        let p = FeaturePoint::m3(cx + x, cy + y, theta_from_tangent(alpha))?;
        occ.insert_unit(&p)?;
        points.push(p);
        truth.push(1);
        arc.push(None);
    }
    let mut stream = Stream::derived(seed, PURPOSE_STIMULUS, 2);
    let mut dropped = 0;
    for _ in 0..background {
        let mut placed = false;
        for _ in 0..MAX_RESAMPLE {
            let p = FeaturePoint::m3(
                stream.uniform(0.0, width),
                stream.uniform(0.0, height),
                stream.uniform(0.0, TAU),
            )?;
            if occ.try_insert(&p)? {
                points.push(p);
                truth.push(0);
                arc.push(None);
                placed = true;
                break;
            }
        }
        if !placed {
            dropped += 1;
        }
    }
    Ok(LabeledDataset { points, truth, arc, grid, spec: spec.clone(), dropped })
}

fn assign_velocity_sinusoidal(
    spec: &StimulusSpec,
    base: LabeledDataset,
    v_peak: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if base.grid.manifold != Manifold::M3 {
        return Err(Error::GridMismatch("speed assignment expects a position-orientation dataset"));
    }
    let grid = GridSpec::domain(
        Manifold::M0,
        base.grid.x.hi,
        base.grid.y.hi,
        1,
        DEFAULT_V_MAX,
    )?;
    let mut stream = Stream::derived(seed, PURPOSE_STIMULUS, 3);
    let mut points = Vec::with_capacity(base.n());
    for (i, p) in base.points.iter().enumerate() {
        let v = if base.truth[i] == 0 {
            stream.uniform(0.0, v_peak)
        } else {
            let coord = base.arc[i].ok_or(Error::Stimulus("unit point lacks arc parametrization".into()))?;
            v_peak * libm::sin(PI * coord.pos / coord.unit_len)
        };
        points.push(FeaturePoint::m0(p.x, p.y, p.theta, v)?);
    }
    Ok(LabeledDataset {
        points,
        truth: base.truth,
        arc: base.arc,
        grid,
        spec: spec.clone(),
        dropped: base.dropped,
    })
}

/// Scene constants: the circle translates along `+x` at 7.5 units/frame,
/// the two vertical bars along `-x` at half that speed.
pub const SCENE_CIRCLE_CURVATURE: f64 = 0.02;
pub const SCENE_CIRCLE_SPEED: f64 = 7.5;
pub const SCENE_BAR_SPEED: f64 = 3.75;
pub const SCENE_CIRCLE_SAMPLES: u32 = 48;
pub const SCENE_BAR_SAMPLES: u32 = 4;
pub const SCENE_BAR_LEN: f64 = 60.0;
pub const SCENE_HEIGHT: f64 = 200.0;

/// Unit points per frame of the moving scene (circle plus two bars).
pub const SCENE_UNIT_POINTS_PER_FRAME: u32 = SCENE_CIRCLE_SAMPLES + 2 * SCENE_BAR_SAMPLES;

/// Scene width: sized for the full 32-frame clip so element density stays
/// the same at shorter clip lengths, growing further only when the travel
/// of a longer clip requires it.
pub fn scene_width(frames: u32) -> f64 {
    let radius = 1.0 / SCENE_CIRCLE_CURVATURE;
    let travel = SCENE_CIRCLE_SPEED * (frames.max(32) - 1) as f64;
    libm::ceil(5.0 + 2.0 * radius + travel + 45.0)
}

fn gen_moving_scene(spec: &StimulusSpec, background: u32, frames: u32, seed: u64) -> Result<LabeledDataset> {
    if frames < 2 {
        return Err(Error::InvalidParameter { name: "frames", reason: "need at least 2".into() });
    }
    let width = scene_width(frames);
    let height = SCENE_HEIGHT;
    let radius = 1.0 / SCENE_CIRCLE_CURVATURE;
    let grid = GridSpec::domain(Manifold::MT, width, height, frames, DEFAULT_V_MAX)?;
    let mut occ = Occupancy::new(grid.clone());
    let mut points = Vec::new();
    let mut truth = Vec::new();

    let circle_start = (radius + 5.0, height / 2.0);
    let bar_xs = [width - 32.0, width - 18.0];
    let bar_y0 = height / 2.0 - SCENE_BAR_LEN / 2.0;
    let bar_dy = SCENE_BAR_LEN / (SCENE_BAR_SAMPLES - 1) as f64;

    for t in 0..frames {
        let tf = t as f64;
        // Circle, sampled at bin-offset angles with the counterclockwise
        // tangent convention (theta stays continuous around the contour);
        // the detected speed is the magnitude of the rigid motion's
        // normal projection.
        let cx = circle_start.0 + SCENE_CIRCLE_SPEED * tf;
        for j in 0..SCENE_CIRCLE_SAMPLES {
            let beta = TAU * (j as f64 + 0.5) / SCENE_CIRCLE_SAMPLES as f64;
            let x = cx + radius * libm::cos(beta);
            let y = circle_start.1 + radius * libm::sin(beta);
            let alpha = beta + PI / 2.0; // counterclockwise tangent
            let theta = theta_from_tangent(alpha);
            let v = libm::fabs(SCENE_CIRCLE_SPEED * libm::cos(beta));
            let p = FeaturePoint::mt(x, y, tf, theta, v)?;
            occ.insert_unit(&p)?;
            points.push(p);
            truth.push(1);
        }
        // Bars: vertical segments, normal along -x, full speed detected.
        for (b, &x0) in bar_xs.iter().enumerate() {
            let x = x0 - SCENE_BAR_SPEED * tf;
            for j in 0..SCENE_BAR_SAMPLES {
                let y = bar_y0 + bar_dy * j as f64;
                let (theta, v) = aperture_speed(PI / 2.0, (-SCENE_BAR_SPEED, 0.0));
                let p = FeaturePoint::mt(x, y, tf, theta, v)?;
                occ.insert_unit(&p)?;
                points.push(p);
                truth.push(b as u32 + 2);
            }
        }
    }

    // Background: persistent elements on straight uniform motion paths,
    // wrapped toroidally. The element's orientation is independent of its
    // travel direction and its tangential slip is kept above one grid cell
    // per frame, so the detected speed is the aperture projection of the
    // true motion and the per-frame instances never line up into
    // trajectory-kernel chains the way unit points do. An element colliding
    // at any frame is resampled whole.
    let mut stream = Stream::derived(seed, PURPOSE_STIMULUS, 4);
    let mut dropped = 0;
    let min_slip = 1.5 * grid.dx.max(grid.dy);
    for _ in 0..background {
        let mut placed = false;
        'attempt: for _ in 0..MAX_RESAMPLE {
            let x0 = stream.uniform(0.0, width);
            let y0 = stream.uniform(0.0, height);
            let tangent = stream.uniform(0.0, TAU);
            let travel_dir = stream.uniform(0.0, TAU);
            let speed = stream.uniform(0.0, DEFAULT_V_MAX);
            let w = (speed * libm::cos(travel_dir), speed * libm::sin(travel_dir));
            let slip = libm::fabs(w.0 * libm::cos(tangent) + w.1 * libm::sin(tangent));
            if slip < min_slip {
                continue 'attempt;
            }
            let (theta, v) = aperture_speed(tangent, w);
            let mut candidate = Vec::with_capacity(frames as usize);
            for t in 0..frames {
                let tf = t as f64;
                let x = wrap_into(x0 + w.0 * tf, width);
                let y = wrap_into(y0 + w.1 * tf, height);
                candidate.push(FeaturePoint::mt(x, y, tf, theta, v)?);
            }
            for p in &candidate {
                if occ.grid.quantize(p).map(|c| occ.cells.contains(&c.pack()))? {
                    continue 'attempt;
                }
            }
            for p in &candidate {
                occ.try_insert(p)?;
                points.push(*p);
                truth.push(0);
            }
            placed = true;
            break;
        }
        if !placed {
            dropped += 1;
        }
    }
    let arc = vec![None; points.len()];
    Ok(LabeledDataset { points, truth, arc, grid, spec: spec.clone(), dropped })
}

/// The classic two-contour stimulus: a straight dashed line and a curved
/// dashed arc of curvature 0.014 in a 200 x 200 field of `background`
/// random segments. The arcs are sampled in dashes of four points, so the
/// curved contour holds together exactly when the kernel's angular
/// diffusion can bridge the inter-dash turn.
pub fn two_contours(background: u32, seed: u64) -> StimulusSpec {
    StimulusSpec::SegmentField {
        units: vec![
            ArcSpec::new(0.0, 100.0, (50.0, 30.0), 0.0, 20).unwrap().with_dashes(4, 3.0).unwrap(),
            ArcSpec::new(0.014, 143.0, (160.0, 80.0), PI / 2.0, 28).unwrap().with_dashes(4, 3.0).unwrap(),
        ],
        background,
        width: 200.0,
        height: 200.0,
        seed,
    }
}

/// Arc length used for the two-unit curvature stimuli: long arcs for gentle
/// curvature, capped below a full turn for strong curvature.
pub fn unit_arc_len(curvature: f64) -> f64 {
    if curvature <= 0.0 {
        60.0
    } else {
        (60.0f64).min(5.6 / curvature)
    }
}

/// The parametric stimulus family: two circle arcs of curvature `k` (20
/// points each) among `r` random segments on a 200 x 200 domain.
pub fn s_k_r(curvature: f64, background: u32, seed: u64) -> StimulusSpec {
    let len = unit_arc_len(curvature);
    StimulusSpec::SegmentField {
        units: vec![
            ArcSpec::new(curvature, len, (30.0, 50.0), 0.0, 20).unwrap(),
            ArcSpec::new(curvature, len, (170.0, 150.0), PI, 20).unwrap(),
        ],
        background,
        width: 200.0,
        height: 200.0,
        seed,
    }
}

/// The lemniscate stimulus on its standard domain.
pub fn lemniscate(background: u32, seed: u64) -> StimulusSpec {
    StimulusSpec::Lemniscate {
        scale: 80.0,
        samples: 40,
        background,
        width: 200.0,
        height: 200.0,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::AngleMode;

    #[test]
    fn clouds_counts_and_labels() {
        let spec = StimulusSpec::GaussianClouds {
            counts: vec![30, 30, 30],
            centers: vec![(50.0, 50.0), (150.0, 50.0), (100.0, 150.0)],
            spread: 8.0,
            noise: 60,
            width: 200.0,
            height: 200.0,
            seed: 5,
        };
        let ds = spec.generate().unwrap();
        assert_eq!(ds.n(), 150);
        let mut hist = [0u32; 4];
        for &t in &ds.truth {
            hist[t as usize] += 1;
        }
        assert_eq!(hist, [60, 30, 30, 30]);
        // Sample means within 3 * spread / sqrt(count) of the centers.
        for unit in 0..3 {
            let pts: Vec<&FeaturePoint> =
                ds.points.iter().zip(&ds.truth).filter(|(_, &t)| t == unit + 1).map(|(p, _)| p).collect();
            let mx: f64 = pts.iter().map(|p| p.x).sum::<f64>() / pts.len() as f64;
            let my: f64 = pts.iter().map(|p| p.y).sum::<f64>() / pts.len() as f64;
            let (cx, cy) = [(50.0, 50.0), (150.0, 50.0), (100.0, 150.0)][unit as usize];
            let bound = 3.0 * 8.0 / libm::sqrt(30.0);
            assert!((mx - cx).abs() < bound && (my - cy).abs() < bound);
        }
    }

    #[test]
    fn clouds_spread_zero_collapses() {
        let spec = StimulusSpec::GaussianClouds {
            counts: vec![5],
            centers: vec![(100.0, 100.0)],
            spread: 0.0,
            noise: 0,
            width: 200.0,
            height: 200.0,
            seed: 1,
        };
        let ds = spec.generate().unwrap();
        for p in &ds.points {
            assert_eq!((p.x, p.y), (100.0, 100.0));
        }
    }

    #[test]
    fn straight_unit_has_constant_theta() {
        let spec = StimulusSpec::SegmentField {
            units: vec![ArcSpec::new(0.0, 100.0, (50.0, 100.0), 0.3, 20).unwrap()],
            background: 0,
            width: 200.0,
            height: 200.0,
            seed: 2,
        };
        let ds = spec.generate().unwrap();
        for p in &ds.points {
            assert!((p.theta - ds.points[0].theta).abs() < 1e-12);
        }
    }

    #[test]
    fn arc_tangent_steps_by_curvature() {
        let unit = ArcSpec::new(0.023, 80.0, (60.0, 60.0), 0.5, 20).unwrap();
        let spec = StimulusSpec::SegmentField {
            units: vec![unit],
            background: 0,
            width: 200.0,
            height: 200.0,
            seed: 2,
        };
        let ds = spec.generate().unwrap();
        let dphi = 80.0 / 19.0;
        for w in ds.points.windows(2) {
            let d = crate::space::angular_distance(w[0].theta, w[1].theta, AngleMode::Direction);
            assert!((d - 0.023 * dphi).abs() < 1e-9, "step {d}");
        }
    }

    #[test]
    fn segment_field_counts_and_injectivity() {
        let spec = s_k_r(0.056, 120, 9);
        let ds = spec.generate().unwrap();
        assert_eq!(ds.n() as u32 + ds.dropped, 160);
        assert_eq!(ds.dropped, 0);
        crate::affinity::check_compatibility(&ds.points, &ds.grid).unwrap();
        // Tangency invariant: unit thetas follow the arc tangents.
        let units = match &ds.spec {
            StimulusSpec::SegmentField { units, .. } => units.clone(),
            _ => unreachable!(),
        };
        for (i, p) in ds.points.iter().enumerate() {
            if ds.truth[i] == 0 {
                continue;
            }
            let unit = &units[(ds.truth[i] - 1) as usize];
            let coord = ds.arc[i].unwrap();
            let (_, _, alpha) = unit.point_at(coord.pos);
            let d = crate::space::angular_distance(p.theta, theta_from_tangent(alpha), AngleMode::Direction);
            assert!(d < 1e-12);
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let spec = s_k_r(0.014, 60, 33);
        let a = spec.generate().unwrap();
        let b = spec.generate().unwrap();
        assert_eq!(a.points, b.points);
        assert_eq!(a.truth, b.truth);
        let other = spec.with_seed(34).generate().unwrap();
        assert_ne!(a.points, other.points);
    }

    #[test]
    fn lemniscate_tangent_matches_finite_differences() {
        for j in 0..40 {
            let phi = TAU * j as f64 / 40.0;
            let (_, _, alpha) = lemniscate_point(80.0, phi);
            let h = 1e-6;
            let (x0, y0, _) = lemniscate_point(80.0, phi - h);
            let (x1, y1, _) = lemniscate_point(80.0, phi + h);
            let fd = libm::atan2(y1 - y0, x1 - x0);
            let d = crate::space::angular_distance(alpha, fd, AngleMode::Direction);
            assert!(d < 1e-6, "phi {phi}: analytic {alpha} fd {fd}");
        }
    }

    #[test]
    fn lemniscate_crossing_is_simple_in_lifted_space() {
        let ds = lemniscate(80, 4).generate().unwrap();
        assert_eq!(ds.n(), 120);
        assert_eq!(ds.dropped, 0);
        crate::affinity::check_compatibility(&ds.points, &ds.grid).unwrap();
        // The two passes through the spatial center carry orientations
        // separated by more than one angular bin.
        let center: Vec<&FeaturePoint> = ds
            .points
            .iter()
            .zip(&ds.truth)
            .filter(|(p, &t)| t == 1 && libm::hypot(p.x - 100.0, p.y - 100.0) < 0.5)
            .map(|(p, _)| p)
            .collect();
        assert_eq!(center.len(), 2);
        let d = crate::space::angular_distance(center[0].theta, center[1].theta, AngleMode::Orientation);
        assert!(d > ds.grid.dtheta(), "crossing separation {d}");
        // Closed curve: the first/last gap is no larger than the widest
        // adjacent-sample gap along the curve.
        let max_step = ds.points[..40]
            .windows(2)
            .map(|w| libm::hypot(w[0].x - w[1].x, w[0].y - w[1].y))
            .fold(0.0, f64::max);
        let first = &ds.points[0];
        let last = &ds.points[39];
        let gap = libm::hypot(first.x - last.x, first.y - last.y);
        assert!(gap <= max_step + 1e-9, "closure gap {gap} vs max step {max_step}");
    }

    #[test]
    fn sinusoidal_velocity_profile() {
        let base = s_k_r(0.028, 50, 8);
        let spec = StimulusSpec::SinusoidalVelocity { base: Box::new(base), v_peak: 5.0, seed: 8 };
        let ds = spec.generate().unwrap();
        assert_eq!(ds.grid.manifold, Manifold::M0);
        let mut max_unit_v = 0.0f64;
        for (i, p) in ds.points.iter().enumerate() {
            let v = p.v.unwrap();
            assert!((0.0..=5.0).contains(&v));
            if ds.truth[i] > 0 {
                let coord = ds.arc[i].unwrap();
                let expected = 5.0 * libm::sin(PI * coord.pos / coord.unit_len);
                assert!((v - expected).abs() < 1e-12);
                max_unit_v = max_unit_v.max(v);
                // Endpoints of the arc carry zero speed.
                if coord.pos == 0.0 || coord.pos == coord.unit_len {
                    assert!(v < 1e-12);
                }
            }
        }
        assert!(max_unit_v > 4.9, "peak speed reached near arc middle");
        // Discrete speed-change rate stays below the continuous bound
        // max |dv/dphi| = pi V / L.
        let units = 2;
        for u in 1..=units {
            let pts: Vec<(f64, f64)> = ds
                .points
                .iter()
                .zip(&ds.truth)
                .zip(&ds.arc)
                .filter(|((_, &t), _)| t == u)
                .map(|((p, _), a)| (a.unwrap().pos, p.v.unwrap()))
                .collect();
            let len = ds.arc.iter().flatten().next().unwrap().unit_len;
            let bound = PI * 5.0 / len;
            for w in pts.windows(2) {
                let rate = (w[1].1 - w[0].1).abs() / (w[1].0 - w[0].0);
                assert!(rate <= bound * (1.0 + 1e-9), "rate {rate} bound {bound}");
            }
        }
    }

    #[test]
    fn aperture_projection_extremes() {
        // Vertical tangent, motion along +x: the full speed is detected.
        let (theta, v) = aperture_speed(PI / 2.0, (7.5, 0.0));
        assert!((v - 7.5).abs() < 1e-12);
        assert!((theta - 0.0).abs() < 1e-12);
        // Horizontal tangent, motion along +x: nothing is detected.
        let (_, v) = aperture_speed(0.0, (7.5, 0.0));
        assert!(v.abs() < 1e-12);
        // Motion against the normal flips theta by pi.
        let (theta, v) = aperture_speed(PI / 2.0, (-3.75, 0.0));
        assert!((v - 3.75).abs() < 1e-12);
        assert!((theta - PI).abs() < 1e-12);
    }

    #[test]
    fn moving_scene_structure() {
        let spec = StimulusSpec::MovingScene { background: 50, frames: 8, seed: 12 };
        let ds = spec.generate().unwrap();
        assert_eq!(ds.dropped, 0);
        assert_eq!(ds.n(), 8 * (SCENE_UNIT_POINTS_PER_FRAME + 50) as usize);
        crate::affinity::check_compatibility(&ds.points, &ds.grid).unwrap();

        // Background fraction per frame ~ 47%.
        let frac = 50.0 / (SCENE_UNIT_POINTS_PER_FRAME + 50) as f64;
        assert!((frac - 0.47).abs() < 0.01, "background fraction {frac}");

        let mut per_frame = hashbrown::HashMap::new();
        let mut circle_thetas = hashbrown::HashSet::new();
        for (i, p) in ds.points.iter().enumerate() {
            let t = p.t.unwrap() as u32;
            *per_frame.entry((t, ds.truth[i])).or_insert(0u32) += 1;
            // Bars carry the full bar speed.
            if ds.truth[i] >= 2 {
                assert!((p.v.unwrap() - SCENE_BAR_SPEED).abs() < 1e-12);
                assert!((p.theta - PI).abs() < 1e-12);
            }
            if ds.truth[i] == 1 {
                assert!(p.v.unwrap() <= SCENE_CIRCLE_SPEED + 1e-12);
                circle_thetas.insert((p.theta / 1e-9) as i64);
            }
        }
        // Counterclockwise tangent convention keeps the circle's lifted
        // contour continuous: all sample angles stay distinct.
        assert_eq!(circle_thetas.len(), SCENE_CIRCLE_SAMPLES as usize);
        // Unit truth ids persist across every frame.
        for t in 0..8 {
            assert_eq!(per_frame[&(t, 1)], SCENE_CIRCLE_SAMPLES);
            assert_eq!(per_frame[&(t, 2)], SCENE_BAR_SAMPLES);
            assert_eq!(per_frame[&(t, 3)], SCENE_BAR_SAMPLES);
            assert_eq!(per_frame[&(t, 0)], 50);
        }
    }

    #[test]
    fn moving_scene_background_persists_on_uniform_path() {
        let spec = StimulusSpec::MovingScene { background: 10, frames: 6, seed: 3 };
        let ds = spec.generate().unwrap();
        let width = scene_width(6);
        let height = SCENE_HEIGHT;
        // Background points come in frame-consecutive runs of the same
        // element; each run is a straight uniform path whose detected speed
        // is the aperture projection of the true motion.
        let bg: Vec<&FeaturePoint> =
            ds.points.iter().zip(&ds.truth).filter(|(_, &t)| t == 0).map(|(p, _)| p).collect();
        assert_eq!(bg.len(), 60);
        for run in bg.chunks(6) {
            let first = run[0];
            assert!(run.iter().all(|p| p.theta == first.theta && p.v == first.v));
            // Per-frame displacement constant up to toroidal wrapping.
            let wx = run[1].x - run[0].x;
            let wy = run[1].y - run[0].y;
            for (t, p) in run.iter().enumerate() {
                let expect_x = wrap_into(first.x + wx * t as f64, width);
                let expect_y = wrap_into(first.y + wy * t as f64, height);
                if (first.x + wx * t as f64) == expect_x && (first.y + wy * t as f64) == expect_y {
                    assert!((p.x - expect_x).abs() < 1e-9 && (p.y - expect_y).abs() < 1e-9);
                }
                assert_eq!(p.t.unwrap(), t as f64);
            }
            // Detected speed <= true speed, consistent with an aperture
            // projection onto the element's normal.
            let speed = libm::hypot(wx, wy);
            let normal_component = libm::fabs(wx * libm::cos(first.theta) + wy * libm::sin(first.theta));
            if run.iter().all(|p| {
                let prev = first;
                libm::fabs(p.x - wrap_into(prev.x + wx * (p.t.unwrap()), width)) < 1e-9
            }) {
                assert!((first.v.unwrap() - normal_component).abs() < 1e-9);
            }
            assert!(first.v.unwrap() <= speed + 1e-9);
        }
    }
}
