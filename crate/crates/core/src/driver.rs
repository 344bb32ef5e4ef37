//! Driving paths: sampled Brownian and compound-Poisson drivers, partitions,
//! discretisation, linear interpolation and quadratic variation.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::Point;

/// How a [`GridPath`] is read between its sample times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interp {
    /// Right-continuous, piecewise constant.
    CadlagStep,
    /// Continuous, piecewise linear.
    Linear,
}

/// A recorded jump `ΔZ` at `times[index]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jump {
    pub index: usize,
    pub size: Point,
}

/// A finite path sampled on a strictly increasing grid starting at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    times: Vec<f64>,
    values: Vec<Point>,
    interp: Interp,
    jumps: Vec<Jump>,
}

impl GridPath {
    pub fn new(times: Vec<f64>, values: Vec<Point>, interp: Interp, mut jumps: Vec<Jump>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "path needs matching nonempty times/values, got {} and {}",
                times.len(),
                values.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidParameter(format!("path must start at t = 0, got {}", times[0])));
        }
        check_increasing(&times)?;
        let dim = values[0].len();
        for v in &values {
            check_dim(dim, v.len())?;
        }
        if interp == Interp::Linear && !jumps.is_empty() {
            return Err(Error::InvalidParameter("linear paths carry no jumps".into()));
        }
        jumps.sort_by_key(|j| j.index);
        for j in &jumps {
            check_dim(dim, j.size.len())?;
            if j.index == 0 || j.index >= times.len() {
                return Err(Error::InvalidParameter(format!("jump index {} out of range", j.index)));
            }
        }
        if jumps.windows(2).any(|w| w[0].index == w[1].index) {
            return Err(Error::InvalidParameter("duplicate jump index".into()));
        }
        Ok(Self { times, values, interp, jumps })
    }

    /// Piecewise-constant path without recorded jumps.
    pub fn step(times: Vec<f64>, values: Vec<Point>) -> Result<Self> {
        Self::new(times, values, Interp::CadlagStep, Vec::new())
    }

    pub fn linear(times: Vec<f64>, values: Vec<Point>) -> Result<Self> {
        Self::new(times, values, Interp::Linear, Vec::new())
    }

    /// Constant path on the given grid.
    pub fn constant(times: Vec<f64>, value: Point) -> Result<Self> {
        let values = vec![value; times.len()];
        Self::step(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Point] {
        &self.values
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn jump_time(&self, j: &Jump) -> f64 {
        self.times[j.index]
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("nonempty")
    }

    /// Last index `i` with `times[i] ≤ t` (0 for `t < 0`).
    pub fn index_at(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }

    /// Value at `t` under the path's interpolation; constant beyond the horizon.
    pub fn eval(&self, t: f64) -> Point {
        let i = self.index_at(t);
        match self.interp {
            Interp::CadlagStep => self.values[i].clone(),
            Interp::Linear => {
                if i + 1 >= self.times.len() || t <= self.times[i] {
                    return self.values[i].clone();
                }
                let (t0, t1) = (self.times[i], self.times[i + 1]);
                let w = (t - t0) / (t1 - t0);
                let a = &self.values[i];
                a + (&self.values[i + 1] - a) * w
            }
        }
    }

    /// Left limit at `t`. Differs from [`GridPath::eval`] only at the sample
    /// times of a step path.
    pub fn eval_left(&self, t: f64) -> Point {
        if self.interp == Interp::CadlagStep {
            let i = self.index_at(t);
            if i > 0 && self.times[i] == t {
                return self.values[i - 1].clone();
            }
        }
        self.eval(t)
    }

    /// Sum of recorded jumps with time `≤ t`.
    pub fn jump_sum_until(&self, t: f64) -> Point {
        let mut acc = Point::zeros(self.dim());
        for j in &self.jumps {
            if self.times[j.index] > t {
                break;
            }
            acc += &j.size;
        }
        acc
    }

    /// Restricts the path to `[0, horizon]`, keeping the sample at `horizon`.
    pub fn truncate(&self, horizon: f64) -> Result<Self> {
        let end = self.index_at(horizon);
        let mut times = self.times[..=end].to_vec();
        let mut values = self.values[..=end].to_vec();
        if times[end] < horizon {
            times.push(horizon);
            values.push(self.eval(horizon));
        }
        let jumps = self.jumps.iter().filter(|j| j.index <= end).cloned().collect();
        Self::new(times, values, self.interp, jumps)
    }
}

fn check_increasing(points: &[f64]) -> Result<()> {
    if points.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("times must be finite".into()));
    }
    if let Some(w) = points.windows(2).find(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter(format!("times must be strictly increasing: {} then {}", w[0], w[1])));
    }
    Ok(())
}

/// Partition `0 = t_0 < t_1 < … < t_m` of a finite horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    points: Vec<f64>,
}

impl Partition {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 || points[0] != 0.0 {
            return Err(Error::InvalidParameter("partition needs at least two points starting at 0".into()));
        }
        check_increasing(&points)?;
        Ok(Self { points })
    }

    /// `cells` equal cells of `[0, horizon]`.
    pub fn uniform(horizon: f64, cells: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) || cells == 0 {
            return Err(Error::InvalidParameter(format!("uniform partition needs horizon > 0 and cells ≥ 1, got {horizon}, {cells}")));
        }
        let n = cells as f64;
        let mut points: Vec<f64> = (0..=cells).map(|k| horizon * (k as f64) / n).collect();
        points[cells] = horizon;
        Self::new(points)
    }

    /// The sample times of a path.
    pub fn of_path(z: &GridPath) -> Result<Self> {
        Self::new(z.times().to_vec())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn horizon(&self) -> f64 {
        *self.points.last().expect("nonempty")
    }

    pub fn cells(&self) -> usize {
        self.points.len() - 1
    }

    pub fn mesh(&self) -> f64 {
        self.points.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Sorted union; points closer than `1e-12 · (1 + horizon)` are merged.
    pub fn union(&self, other: &Partition) -> Partition {
        Partition { points: merge_times(&self.points, &other.points) }
    }
}

pub(crate) fn merge_times(a: &[f64], b: &[f64]) -> Vec<f64> {
    let h = a.last().copied().unwrap_or(0.0).max(b.last().copied().unwrap_or(0.0));
    let eps = 1e-12 * (1.0 + h);
    let mut all: Vec<f64> = a.iter().chain(b).copied().collect();
    all.sort_by(|x, y| x.total_cmp(y));
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for t in all {
        match out.last() {
            Some(&last) if t - last <= eps => {}
            _ => out.push(t),
        }
    }
    out
}

/// Deterministic generator for path `stream` of the experiment seeded by `seed`.
///
/// ChaCha is counter based, so every path owns an independent stream and
/// results do not depend on the order in which paths are generated.
pub fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn check_sizes(horizon: f64, steps: usize, d: usize) -> Result<()> {
    if !(horizon.is_finite() && horizon > 0.0) || steps == 0 || d == 0 {
        return Err(Error::InvalidParameter(format!(
            "need horizon > 0, steps ≥ 1, dimension ≥ 1 (got {horizon}, {steps}, {d})"
        )));
    }
    Ok(())
}

fn normal_vec<R: Rng + ?Sized>(rng: &mut R, d: usize, sd: f64) -> Point {
    Point::from_iterator(d, (0..d).map(|_| sd * rng.sample::<f64, _>(StandardNormal)))
}

/// Standard `d`-dimensional Brownian motion on a uniform grid of `steps` cells.
pub fn sample_brownian(horizon: f64, steps: usize, d: usize, seed: u64) -> Result<GridPath> {
    sample_brownian_with(horizon, steps, d, &mut path_rng(seed, 0))
}

pub fn sample_brownian_with<R: Rng + ?Sized>(horizon: f64, steps: usize, d: usize, rng: &mut R) -> Result<GridPath> {
    check_sizes(horizon, steps, d)?;
    let grid = Partition::uniform(horizon, steps)?;
    let mut values = Vec::with_capacity(steps + 1);
    let mut cur = Point::zeros(d);
    values.push(cur.clone());
    for w in grid.points().windows(2) {
        cur += normal_vec(rng, d, (w[1] - w[0]).sqrt());
        values.push(cur.clone());
    }
    GridPath::linear(grid.points, values)
}

/// Law of the jump sizes of a compound Poisson driver.
#[derive(Debug, Clone, PartialEq)]
pub enum JumpLaw {
    /// Uniform on the closed ball of the given radius.
    UniformBall { radius: f64 },
    FixedVector(Point),
}

/// Brownian part scaled by `diffusion_scale` plus compound Poisson jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpDriverSpec {
    pub horizon: f64,
    pub steps: usize,
    pub dim: usize,
    pub jump_rate: f64,
    pub jump_law: JumpLaw,
    pub diffusion_scale: f64,
}

impl JumpDriverSpec {
    pub fn validate(&self) -> Result<()> {
        check_sizes(self.horizon, self.steps, self.dim)?;
        if !(self.jump_rate.is_finite() && self.jump_rate >= 0.0) {
            return Err(Error::InvalidParameter(format!("jump rate must be ≥ 0, got {}", self.jump_rate)));
        }
        if !self.diffusion_scale.is_finite() {
            return Err(Error::InvalidParameter("diffusion scale must be finite".into()));
        }
        match &self.jump_law {
            JumpLaw::UniformBall { radius } if !(radius.is_finite() && *radius >= 0.0) => {
                Err(Error::InvalidParameter(format!("jump radius must be ≥ 0, got {radius}")))
            }
            JumpLaw::FixedVector(v) => check_dim(self.dim, v.len()),
            _ => Ok(()),
        }
    }
}

fn sample_jump<R: Rng + ?Sized>(law: &JumpLaw, d: usize, rng: &mut R) -> Point {
    match law {
        JumpLaw::FixedVector(v) => v.clone(),
        JumpLaw::UniformBall { radius } => {
            let mut dir = normal_vec(rng, d, 1.0);
            let n = dir.norm();
            if n == 0.0 {
                dir = Point::zeros(d);
                dir[0] = 1.0;
            } else {
                dir /= n;
            }
            let u: f64 = rng.random();
            dir * (radius * u.powf(1.0 / d as f64))
        }
    }
}

pub fn sample_jump_driver(spec: &JumpDriverSpec, seed: u64) -> Result<GridPath> {
    sample_jump_driver_with(spec, &mut path_rng(seed, 0))
}

/// Jump times are inserted into the uniform grid as extra sample points.
pub fn sample_jump_driver_with<R: Rng + ?Sized>(spec: &JumpDriverSpec, rng: &mut R) -> Result<GridPath> {
    spec.validate()?;
    let d = spec.dim;
    let mut events: Vec<(f64, Point)> = Vec::new();
    if spec.jump_rate > 0.0 {
        let exp = Exp::new(spec.jump_rate).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mut t = 0.0;
        loop {
            t += exp.sample(rng);
            if t > spec.horizon {
                break;
            }
            events.push((t, sample_jump(&spec.jump_law, d, rng)));
        }
    }
    let grid = Partition::uniform(spec.horizon, spec.steps)?;
    let times = merge_times(grid.points(), &events.iter().map(|e| e.0).collect::<Vec<_>>());
    let mut values = Vec::with_capacity(times.len());
    let mut jumps = Vec::with_capacity(events.len());
    let mut cur = Point::zeros(d);
    values.push(cur.clone());
    let mut next_event = 0;
    let eps = 1e-12 * (1.0 + spec.horizon);
    for i in 1..times.len() {
        let dt = times[i] - times[i - 1];
        cur += normal_vec(rng, d, spec.diffusion_scale * dt.sqrt());
        let mut jump: Option<Point> = None;
        while next_event < events.len() && events[next_event].0 <= times[i] + eps {
            let size = &events[next_event].1;
            jump = Some(match jump {
                Some(j) => j + size,
                None => size.clone(),
            });
            next_event += 1;
        }
        if let Some(size) = jump {
            cur += &size;
            jumps.push(Jump { index: i, size });
        }
        values.push(cur.clone());
    }
    GridPath::new(times, values, Interp::CadlagStep, jumps)
}

/// Piecewise-constant càdlàg path holding `z` at the partition points.
/// Every nonzero increment is recorded as a jump.
pub fn discretize(z: &GridPath, p: &Partition) -> GridPath {
    let values: Vec<Point> = p.points().iter().map(|&t| z.eval(t)).collect();
    let jumps = (1..values.len())
        .filter_map(|i| {
            let inc = &values[i] - &values[i - 1];
            (inc.iter().any(|v| *v != 0.0)).then_some(Jump { index: i, size: inc })
        })
        .collect();
    GridPath::new(p.points().to_vec(), values, Interp::CadlagStep, jumps).expect("partition grid is valid")
}

/// Continuous piecewise-linear path through the partition samples of `z`.
pub fn linear_interpolate(z: &GridPath, p: &Partition) -> GridPath {
    let values = p.points().iter().map(|&t| z.eval(t)).collect();
    GridPath::linear(p.points().to_vec(), values).expect("partition grid is valid")
}

/// Partition with `τ_k = inf{t > τ_{k−1} : |ΔZ_t| > 1/n} ∧ (τ_{k−1} + 1/n)`,
/// cut at the horizon of `z`.
pub fn jump_adapted_partition(z: &GridPath, n: usize) -> Result<Partition> {
    if n == 0 {
        return Err(Error::InvalidParameter("jump-adapted partition needs n ≥ 1".into()));
    }
    let horizon = z.horizon();
    if horizon <= 0.0 {
        return Err(Error::InvalidParameter("path horizon must be positive".into()));
    }
    let h = 1.0 / n as f64;
    let eps = 1e-12 * (1.0 + horizon);
    let big: Vec<f64> = z.jumps().iter().filter(|j| j.size.norm() > h).map(|j| z.jump_time(j)).collect();
    let mut points = vec![0.0];
    let mut base = 0.0;
    let mut m = 0usize;
    let mut next_big = 0usize;
    loop {
        let last = *points.last().expect("nonempty");
        if last >= horizon {
            break;
        }
        while next_big < big.len() && big[next_big] <= last {
            next_big += 1;
        }
        let regular = base + (m + 1) as f64 * h;
        let mut next = regular.min(horizon);
        let mut at_jump = false;
        if next_big < big.len() && big[next_big] <= next {
            next = big[next_big];
            at_jump = true;
        }
        if horizon - next <= eps {
            next = horizon;
        }
        points.push(next);
        if at_jump {
            base = next;
            m = 0;
        } else {
            m += 1;
        }
    }
    Partition::new(points)
}

/// Discrete quadratic variation of `z` along a partition and its split into
/// continuous and jump parts (all scalar step paths on the partition).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticVariation {
    pub total: GridPath,
    pub continuous: GridPath,
    pub jump: GridPath,
}

/// `total = Σ|ΔZ|²` over the partition, `jump = Σ_{s ≤ t}|ΔZ_s|²` over recorded
/// jumps, `continuous` is the partition quadratic variation of `Z` with its
/// recorded jumps removed.
pub fn quadratic_variation(z: &GridPath, p: &Partition) -> QuadraticVariation {
    let pts = p.points();
    let mut total = Vec::with_capacity(pts.len());
    let mut cont = Vec::with_capacity(pts.len());
    let mut jump = Vec::with_capacity(pts.len());
    let (mut qt, mut qc, mut qj) = (0.0, 0.0, 0.0);
    let mut prev = z.eval(pts[0]);
    let mut prev_c = &prev - z.jump_sum_until(pts[0]);
    let mut ji = z.jumps().iter().peekable();
    while let Some(j) = ji.peek() {
        if z.jump_time(j) > pts[0] {
            break;
        }
        qj += j.size.norm_squared();
        ji.next();
    }
    total.push(Point::from_element(1, qt));
    cont.push(Point::from_element(1, qc));
    jump.push(Point::from_element(1, qj));
    for &t in &pts[1..] {
        let cur = z.eval(t);
        let cur_c = &cur - z.jump_sum_until(t);
        qt += (&cur - &prev).norm_squared();
        qc += (&cur_c - &prev_c).norm_squared();
        while let Some(j) = ji.peek() {
            if z.jump_time(j) > t {
                break;
            }
            qj += j.size.norm_squared();
            ji.next();
        }
        total.push(Point::from_element(1, qt));
        cont.push(Point::from_element(1, qc));
        jump.push(Point::from_element(1, qj));
        prev = cur;
        prev_c = cur_c;
    }
    let mk = |v| GridPath::step(pts.to_vec(), v).expect("partition grid is valid");
    QuadraticVariation { total: mk(total), continuous: mk(cont), jump: mk(jump) }
}

/// Realised covariation `Σ ΔZ^c (ΔZ^c)ᵀ` of the jump-removed path over the
/// sample steps of `z` ending in `(from, to]`.
pub fn continuous_covariation(z: &GridPath, from: f64, to: f64) -> DMatrix<f64> {
    let d = z.dim();
    let mut acc = DMatrix::zeros(d, d);
    let times = z.times();
    let start = times.partition_point(|&s| s <= from).max(1);
    let mut jumps = z.jumps().iter().peekable();
    for i in start..times.len() {
        if times[i] > to {
            break;
        }
        let mut inc = &z.values()[i] - &z.values()[i - 1];
        while let Some(j) = jumps.peek() {
            if j.index < i {
                jumps.next();
            } else {
                if j.index == i {
                    inc -= &j.size;
                }
                break;
            }
        }
        acc += &inc * inc.transpose();
    }
    acc
}

/// Condition on jump sizes: every recorded jump has `|ΔZ| < rho0 / L`.
pub fn check_jump_condition(z: &GridPath, sup_norm: f64, rho0: f64) -> bool {
    if rho0.is_infinite() || sup_norm == 0.0 {
        return true;
    }
    let bound = rho0 / sup_norm;
    z.jumps().iter().all(|j| j.size.norm() < bound)
}
