//! Approximation schemes for the reflected Marcus equation
//! `X = X_0 + ∫ f(X) ∘ dZ + K`.
//!
//! | kind            | step                                                           |
//! |-----------------|----------------------------------------------------------------|
//! | `projection`    | `X_{k+1} = Π(φ(f·ΔZ_k, X_k))`                                  |
//! | `jump-adapted`  | projection step on a partition that isolates jumps `> 1/n`     |
//! | `wz-hat`        | unreflected ODE along the linear interpolation, project at grid |
//! | `wz-bar`        | reflected ODE along the linear interpolation (projected Euler) |
//! | `marcus-euler`  | `Π(X + f ΔZ^c + ½ f′f Δ[Z]^c + Σ(φ(f ΔZ_s, X) − X))`           |
//!
//! Every output carries the internal path `Y` with `X = Y + K` at its sample times.

use serde::{Deserialize, Serialize};

use crate::driver::{continuous_covariation, jump_adapted_partition, merge_times, GridPath, Interp, Partition};
use crate::error::{check_dim, Error, Result};
use crate::flow::{flow_dense, marcus_jump, Coefficient, FlowConfig};
use crate::geometry::Domain;
use crate::skorokhod::reflect;
use crate::Point;

/// Default projected-Euler substeps per cell for `wz-bar`.
pub const DEFAULT_SUBSTEPS_BAR: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Projection,
    JumpAdapted,
    WzHat,
    WzBar,
    MarcusEuler,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Projection => "projection",
            SchemeKind::JumpAdapted => "jump-adapted",
            SchemeKind::WzHat => "wz-hat",
            SchemeKind::WzBar => "wz-bar",
            SchemeKind::MarcusEuler => "marcus-euler",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSpec {
    pub kind: SchemeKind,
    pub partition: Partition,
    pub flow: FlowConfig,
    /// Projected-Euler substeps per cell (`wz-bar` only).
    pub substeps_bar: usize,
    /// Extra output times, merged with the scheme's own sample times.
    pub observation: Vec<f64>,
}

impl SchemeSpec {
    pub fn new(kind: SchemeKind, partition: Partition) -> Self {
        Self { kind, partition, flow: FlowConfig::scheme(), substeps_bar: DEFAULT_SUBSTEPS_BAR, observation: Vec::new() }
    }

    pub fn with_flow(mut self, flow: FlowConfig) -> Self {
        self.flow = flow;
        self
    }

    pub fn with_substeps_bar(mut self, m: usize) -> Self {
        self.substeps_bar = m;
        self
    }

    pub fn with_observation(mut self, times: Vec<f64>) -> Self {
        self.observation = times;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMeta {
    pub scheme: SchemeKind,
    pub mesh: f64,
    pub cells: usize,
    /// Projection steps applied.
    pub projections: usize,
    /// Projection steps that moved the point.
    pub boundary_hits: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeOutput {
    /// Internal unreflected path; `x = y + k` at every sample time.
    pub y: GridPath,
    pub x: GridPath,
    pub k: GridPath,
    /// Running `|K|_t` at the sample times.
    pub k_variation: Vec<f64>,
    /// Partition points of the run.
    pub grid: Vec<f64>,
    pub meta: RunMeta,
}

impl SchemeOutput {
    pub fn k_total(&self) -> f64 {
        *self.k_variation.last().unwrap_or(&0.0)
    }

    /// Values of `x` at the partition points.
    pub fn x_on_grid(&self) -> Vec<Point> {
        self.grid.iter().map(|&t| self.x.eval(t)).collect()
    }
}

fn check_inputs(domain: &Domain, f: &Coefficient, x0: &Point, z: &GridPath, p: &Partition) -> Result<()> {
    check_dim(domain.dim(), f.dim())?;
    check_dim(domain.dim(), x0.len())?;
    check_dim(domain.dim(), z.dim())?;
    if !domain.classify(x0)?.in_closure() {
        return Err(Error::StartOutsideDomain);
    }
    let eps = 1e-12 * (1.0 + z.horizon());
    if p.horizon() > z.horizon() + eps {
        return Err(Error::HorizonMismatch { path_end: z.horizon(), horizon: p.horizon() });
    }
    Ok(())
}

/// Per-step jump condition `|ΔZ| · L < rho0` (finite `rho0` only).
fn check_increment(domain: &Domain, sup_norm: f64, dz: &Point, time: f64) -> Result<()> {
    let rho0 = domain.rho0();
    if rho0.is_infinite() || sup_norm == 0.0 {
        return Ok(());
    }
    let size = dz.norm();
    if size * sup_norm >= rho0 {
        return Err(Error::JumpTooLarge { time, size, bound: rho0 / sup_norm });
    }
    Ok(())
}

struct Accum {
    times: Vec<f64>,
    ys: Vec<Point>,
    xs: Vec<Point>,
    ks: Vec<Point>,
    kvar: Vec<f64>,
    projections: usize,
    hits: usize,
}

impl Accum {
    fn new(x0: &Point) -> Self {
        Self {
            times: vec![0.0],
            ys: vec![x0.clone()],
            xs: vec![x0.clone()],
            ks: vec![Point::zeros(x0.len())],
            kvar: vec![0.0],
            projections: 0,
            hits: 0,
        }
    }

    fn last_x(&self) -> &Point {
        self.xs.last().expect("nonempty")
    }

    /// Records a reflected step from the unreflected target `pre`.
    fn push_reflected(&mut self, t: f64, domain: &Domain, pre: &Point) -> Result<()> {
        let x = reflect(domain, pre)?;
        let dk = &x - pre;
        let push = dk.norm();
        self.projections += 1;
        let k = if push > 0.0 {
            self.hits += 1;
            self.ks.last().expect("nonempty") + &dk
        } else {
            self.ks.last().expect("nonempty").clone()
        };
        let y = self.ys.last().expect("nonempty") + (pre - self.last_x());
        let var = self.kvar.last().expect("nonempty") + push;
        self.times.push(t);
        self.ys.push(y);
        self.xs.push(x);
        self.ks.push(k);
        self.kvar.push(var);
        Ok(())
    }

    /// Records an unreflected sample: `y` moves with `x`, `k` is held.
    fn push_free(&mut self, t: f64, x: Point) {
        let y = self.ys.last().expect("nonempty") + (&x - self.last_x());
        self.times.push(t);
        self.ys.push(y);
        self.xs.push(x);
        self.ks.push(self.ks.last().expect("nonempty").clone());
        self.kvar.push(*self.kvar.last().expect("nonempty"));
    }

    fn finish(self, kind: SchemeKind, p: &Partition, x_interp: Interp, k_interp: Interp, observation: &[f64]) -> Result<SchemeOutput> {
        let kv: Vec<Point> = self.kvar.iter().map(|v| Point::from_element(1, *v)).collect();
        let y = GridPath::new(self.times.clone(), self.ys, x_interp, vec![])?;
        let x = GridPath::new(self.times.clone(), self.xs, x_interp, vec![])?;
        let k = GridPath::new(self.times.clone(), self.ks, k_interp, vec![])?;
        let kvar = GridPath::new(self.times, kv, k_interp, vec![])?;
        let (y, x, k, kvar) = if observation.is_empty() {
            (y, x, k, kvar)
        } else {
            let horizon = p.horizon();
            let obs: Vec<f64> = observation.iter().copied().filter(|t| *t >= 0.0 && *t <= horizon).collect();
            let times = merge_times(x.times(), &obs);
            (resample(&y, &times)?, resample(&x, &times)?, resample(&k, &times)?, resample(&kvar, &times)?)
        };
        Ok(SchemeOutput {
            y,
            x,
            k,
            // running max guards the interpolated samples against round-off
            k_variation: kvar
                .values()
                .iter()
                .scan(0.0f64, |m, v| {
                    *m = m.max(v[0]);
                    Some(*m)
                })
                .collect(),
            grid: p.points().to_vec(),
            meta: RunMeta {
                scheme: kind,
                mesh: p.mesh(),
                cells: p.cells(),
                projections: self.projections,
                boundary_hits: self.hits,
            },
        })
    }
}

fn resample(path: &GridPath, times: &[f64]) -> Result<GridPath> {
    if times == path.times() {
        return Ok(path.clone());
    }
    let values = times.iter().map(|&t| path.eval(t)).collect();
    GridPath::new(times.to_vec(), values, path.interp(), vec![])
}

/// Shared projection loop. Returns the accumulator and the unreflected
/// left limits `φ(f·ΔZ_k, X_k)` at each partition point after the first.
fn projection_core(
    domain: &Domain,
    f: &Coefficient,
    x0: &Point,
    z: &GridPath,
    p: &Partition,
    flow: &FlowConfig,
) -> Result<(Accum, Vec<Point>)> {
    check_inputs(domain, f, x0, z, p)?;
    let sup = f.bounds().sup_norm;
    let pts = p.points();
    let mut acc = Accum::new(x0);
    let mut lefts = Vec::with_capacity(pts.len() - 1);
    let mut z_prev = z.eval(pts[0]);
    for &t in &pts[1..] {
        let z_next = z.eval(t);
        let dz = &z_next - &z_prev;
        check_increment(domain, sup, &dz, t)?;
        let pre = marcus_jump(f, &dz, acc.last_x(), flow)?;
        acc.push_reflected(t, domain, &pre)?;
        lefts.push(pre);
        z_prev = z_next;
    }
    Ok((acc, lefts))
}

/// `X_{k+1} = Π(φ(f·(Z_{t_{k+1}} − Z_{t_k}), X_k))`, piecewise constant between
/// partition points.
pub fn run_projection_scheme(domain: &Domain, f: &Coefficient, x0: &Point, z: &GridPath, spec: &SchemeSpec) -> Result<SchemeOutput> {
    let (acc, _) = projection_core(domain, f, x0, z, &spec.partition, &spec.flow)?;
    acc.finish(SchemeKind::Projection, &spec.partition, Interp::CadlagStep, Interp::CadlagStep, &spec.observation)
}

/// Projection scheme on `jump_adapted_partition(z, n)`; `spec.partition` is ignored.
pub fn run_jump_adapted_scheme(
    domain: &Domain,
    f: &Coefficient,
    x0: &Point,
    z: &GridPath,
    n: usize,
    spec: &SchemeSpec,
) -> Result<SchemeOutput> {
    let p = jump_adapted_partition(z, n)?;
    let (acc, _) = projection_core(domain, f, x0, z, &p, &spec.flow)?;
    acc.finish(SchemeKind::JumpAdapted, &p, Interp::CadlagStep, Interp::CadlagStep, &spec.observation)
}

/// Unreflected ODE `dX/dt = f(X) ΔZ_k / Δt_k` inside each cell, restarted from
/// the projection of the left limit at every partition point.
///
/// Partition values coincide with [`run_projection_scheme`]; observation
/// times inside a cell are filled from the cell ODE. `K` jumps at partition
/// points only.
pub fn run_wz_hat_scheme(domain: &Domain, f: &Coefficient, x0: &Point, z: &GridPath, spec: &SchemeSpec) -> Result<SchemeOutput> {
    let p = &spec.partition;
    let (grid_acc, lefts) = projection_core(domain, f, x0, z, p, &spec.flow)?;
    let obs: Vec<f64> = {
        let mut o: Vec<f64> = spec.observation.iter().copied().filter(|t| *t > 0.0 && *t < p.horizon()).collect();
        o.sort_by(|a, b| a.total_cmp(b));
        o
    };
    if obs.is_empty() {
        return grid_acc.finish(SchemeKind::WzHat, p, Interp::Linear, Interp::CadlagStep, &[]);
    }
    let pts = p.points();
    let eps = 1e-12 * (1.0 + p.horizon());
    let mut acc = Accum::new(x0);
    acc.projections = grid_acc.projections;
    acc.hits = grid_acc.hits;
    let mut oi = 0;
    for (c, w) in pts.windows(2).enumerate() {
        let (t0, t1) = (w[0], w[1]);
        while oi < obs.len() && obs[oi] <= t0 + eps {
            oi += 1;
        }
        let start = oi;
        while oi < obs.len() && obs[oi] < t1 - eps {
            oi += 1;
        }
        let inner = &obs[start..oi];
        let x_start = grid_acc.xs[c].clone();
        if !inner.is_empty() {
            let dz = z.eval(t1) - z.eval(t0);
            let fractions: Vec<f64> = inner.iter().map(|t| (t - t0) / (t1 - t0)).collect();
            let samples = flow_dense(|y: &Point| f.apply(y, &dz), &x_start, &spec.flow, &fractions)?;
            for (t, xs) in inner.iter().zip(samples) {
                acc.push_free(*t, xs);
            }
        }
        // grid point: the left limit is the exact flow value shared with the projection scheme
        acc.push_free(t1, lefts[c].clone());
        let dk = &grid_acc.xs[c + 1] - &lefts[c];
        let last = acc.xs.len() - 1;
        acc.xs[last] = grid_acc.xs[c + 1].clone();
        acc.ks[last] = &acc.ks[last] + &dk;
        acc.kvar[last] = grid_acc.kvar[c + 1];
    }
    acc.finish(SchemeKind::WzHat, p, Interp::Linear, Interp::CadlagStep, &[])
}

/// Reflected ODE `dX = f(X) ΔZ_k / Δt_k dt + dK` inside each cell, solved by
/// `spec.substeps_bar` projected Euler substeps. Output is sampled at every
/// substep and read linearly in between; `K` is continuous.
pub fn run_wz_bar_scheme(domain: &Domain, f: &Coefficient, x0: &Point, z: &GridPath, spec: &SchemeSpec) -> Result<SchemeOutput> {
    let p = &spec.partition;
    check_inputs(domain, f, x0, z, p)?;
    if spec.substeps_bar == 0 {
        return Err(Error::InvalidParameter("substeps_bar must be at least 1".into()));
    }
    let m = spec.substeps_bar;
    let sup = f.bounds().sup_norm;
    let mut acc = Accum::new(x0);
    let pts = p.points();
    let mut z_prev = z.eval(pts[0]);
    for w in pts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let z_next = z.eval(t1);
        let dz = &z_next - &z_prev;
        if dz.iter().all(|v| *v == 0.0) {
            let x = acc.last_x().clone();
            acc.push_free(t1, x);
        } else {
            let sub = &dz / m as f64;
            check_increment(domain, sup, &sub, t1)?;
            for j in 1..=m {
                let t = if j == m { t1 } else { t0 + (t1 - t0) * (j as f64) / (m as f64) };
                let pre = acc.last_x() + f.apply(acc.last_x(), &sub);
                acc.push_reflected(t, domain, &pre)?;
            }
        }
        z_prev = z_next;
    }
    acc.finish(SchemeKind::WzBar, p, Interp::Linear, Interp::Linear, &spec.observation)
}

/// One step per cell: `Π(X + f(X)ΔZ^c + ½ f′f(X) : Δ[Z]^c + Σ_s (φ(f ΔZ_s, X) − X))`,
/// where the sum runs over the recorded jumps of `z` in the cell.
pub fn run_marcus_euler(domain: &Domain, f: &Coefficient, x0: &Point, z: &GridPath, spec: &SchemeSpec) -> Result<SchemeOutput> {
    let p = &spec.partition;
    check_inputs(domain, f, x0, z, p)?;
    let sup = f.bounds().sup_norm;
    let constant = f.is_zero() || matches!(f.kind(), crate::flow::CoefficientKind::Constant(_));
    let mut acc = Accum::new(x0);
    let pts = p.points();
    let jumps = z.jumps();
    let mut ji = 0;
    let mut z_prev = z.eval(pts[0]);
    while ji < jumps.len() && z.jump_time(&jumps[ji]) <= pts[0] {
        ji += 1;
    }
    for &t1 in &pts[1..] {
        let t0 = *acc.times.last().expect("nonempty");
        let z_next = z.eval(t1);
        let dz = &z_next - &z_prev;
        check_increment(domain, sup, &dz, t1)?;
        let x = acc.last_x().clone();
        let mut dzc = dz.clone();
        let mut jump_part = Point::zeros(x.len());
        while ji < jumps.len() && z.jump_time(&jumps[ji]) <= t1 {
            let j = &jumps[ji].size;
            dzc -= j;
            jump_part += marcus_jump(f, j, &x, &spec.flow)? - &x;
            ji += 1;
        }
        let mut pre = &x + f.apply(&x, &dzc) + jump_part;
        if !constant {
            let cov = continuous_covariation(z, t0, t1);
            pre += f.ff_prime_contract(&x, &cov) * 0.5;
        }
        if pre.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        acc.push_reflected(t1, domain, &pre)?;
        z_prev = z_next;
    }
    acc.finish(SchemeKind::MarcusEuler, p, Interp::CadlagStep, Interp::CadlagStep, &spec.observation)
}

/// Dispatches on `spec.kind`. The jump-adapted scheme uses `n = round(1 / mesh)`.
pub fn run_scheme(domain: &Domain, f: &Coefficient, x0: &Point, z: &GridPath, spec: &SchemeSpec) -> Result<SchemeOutput> {
    match spec.kind {
        SchemeKind::Projection => run_projection_scheme(domain, f, x0, z, spec),
        SchemeKind::JumpAdapted => {
            let n = (1.0 / spec.partition.mesh()).round().max(1.0) as usize;
            let z = z.truncate(spec.partition.horizon())?;
            run_jump_adapted_scheme(domain, f, x0, &z, n, spec)
        }
        SchemeKind::WzHat => run_wz_hat_scheme(domain, f, x0, z, spec),
        SchemeKind::WzBar => run_wz_bar_scheme(domain, f, x0, z, spec),
        SchemeKind::MarcusEuler => run_marcus_euler(domain, f, x0, z, spec),
    }
}

/// Ground truth for convergence studies: the jump-adapted projection scheme
/// with `n = refine` on a partition that also contains every sample time of
/// `z`, using the reference flow settings.
///
/// For continuous drivers (linear paths) the output is read linearly between
/// samples, otherwise as a step path.
pub fn build_reference(domain: &Domain, f: &Coefficient, x0: &Point, z: &GridPath, refine: usize) -> Result<SchemeOutput> {
    if refine == 0 {
        return Err(Error::InvalidParameter("refine must be at least 1".into()));
    }
    let p = jump_adapted_partition(z, refine)?.union(&Partition::of_path(z)?);
    let (acc, _) = projection_core(domain, f, x0, z, &p, &FlowConfig::reference())?;
    let interp = if z.interp() == Interp::Linear { Interp::Linear } else { Interp::CadlagStep };
    acc.finish(SchemeKind::JumpAdapted, &p, interp, interp, &[])
}
