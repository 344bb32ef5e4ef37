//! Error metrics, Monte Carlo convergence studies, variation checks and the
//! tangential-jump counterexample for the reflected Wong-Zakai scheme.

use rayon::prelude::*;
use serde::Serialize;

use crate::driver::{path_rng, sample_brownian_with, sample_jump_driver_with, GridPath, Interp, Jump, JumpDriverSpec, Partition};
use crate::error::{Error, Result};
use crate::flow::{Coefficient, CoefficientKind, FlowConfig};
use crate::geometry::Domain;
use crate::schemes::{build_reference, run_projection_scheme, run_scheme, run_wz_bar_scheme, SchemeKind, SchemeOutput, SchemeSpec};
use crate::skorokhod::{variation_rows, Lemma1Row};
use crate::Point;

/// Which times [`sup_error`] compares at.
#[derive(Debug, Clone, PartialEq)]
pub enum ErrorMode {
    /// True supremum over `[0, horizon]`, including left limits.
    Uniform,
    /// The sample times of the first path.
    GridPointsOfA,
    FixedTimes(Vec<f64>),
}

/// `sup |a_t − b_t|` over the selected times in `[0, horizon]`. Each path is
/// read under its own interpolation rule. In uniform mode the union of both
/// sample grids is scanned together with left limits, which is exact for
/// step and piecewise-linear paths.
pub fn sup_error(a: &GridPath, b: &GridPath, horizon: f64, mode: &ErrorMode) -> Result<f64> {
    let eps = 1e-12 * (1.0 + horizon);
    for p in [a, b] {
        if p.horizon() < horizon - eps {
            return Err(Error::HorizonMismatch { path_end: p.horizon(), horizon });
        }
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    let in_range = |t: &f64| *t >= 0.0 && *t <= horizon + eps;
    let dist = |t: f64| (a.eval(t) - b.eval(t)).norm();
    Ok(match mode {
        ErrorMode::Uniform => {
            let mut ts: Vec<f64> = a.times().iter().chain(b.times()).copied().filter(in_range).collect();
            ts.sort_by(|x, y| x.total_cmp(y));
            ts.dedup();
            ts.into_iter()
                .map(|t| dist(t).max((a.eval_left(t) - b.eval_left(t)).norm()))
                .fold(0.0, f64::max)
        }
        ErrorMode::GridPointsOfA => a.times().iter().copied().filter(in_range).map(dist).fold(0.0, f64::max),
        ErrorMode::FixedTimes(ts) => ts.iter().copied().filter(in_range).map(dist).fold(0.0, f64::max),
    })
}

/// Driving noise of an experiment; the horizon comes from the experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum DriverSpec {
    Brownian { steps: usize, dim: usize },
    Jump(JumpDriverSpec),
}

/// Ground truth for a study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    /// [`build_reference`] with `n = refine`.
    Numerical { refine: usize },
    /// `x0 · exp(s Z_t)` for `f = s · diag(x)` without boundary contact.
    StratonovichExponential,
    /// `x0 · exp(s W_t − s² t / 2)`, the Itô counterpart, for Brownian drivers.
    ItoExponential,
}

/// A validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub domain: Domain,
    pub coefficient: Coefficient,
    pub x0: Point,
    pub horizon: f64,
    pub driver: DriverSpec,
    pub scheme: SchemeKind,
    pub flow: FlowConfig,
    pub substeps_bar: usize,
    /// Strictly decreasing meshes; each must divide the horizon.
    pub meshes: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
    pub reference: Reference,
}

impl Experiment {
    pub fn validate(&self) -> Result<()> {
        let d = self.domain.dim();
        if self.coefficient.dim() != d || self.x0.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: self.coefficient.dim().max(self.x0.len()) });
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.meshes.is_empty() || self.meshes.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::InvalidParameter("mesh ladder must be nonempty and positive".into()));
        }
        if self.meshes.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(Error::InvalidParameter("mesh ladder must be strictly decreasing".into()));
        }
        if self.n_paths == 0 || self.substeps_bar == 0 || self.flow.substeps == 0 {
            return Err(Error::InvalidParameter("n_paths, substeps_bar and flow substeps must be positive".into()));
        }
        let driver_dim = match &self.driver {
            DriverSpec::Brownian { dim, steps } => {
                if *steps == 0 {
                    return Err(Error::InvalidParameter("driver steps must be positive".into()));
                }
                *dim
            }
            DriverSpec::Jump(j) => {
                j.validate()?;
                j.dim
            }
        };
        if driver_dim != d {
            return Err(Error::DimensionMismatch { expected: d, got: driver_dim });
        }
        if !self.domain.classify(&self.x0)?.in_closure() {
            return Err(Error::StartOutsideDomain);
        }
        match self.reference {
            Reference::Numerical { refine } => {
                let finest = *self.meshes.last().expect("nonempty");
                if (refine as f64) * finest < 4.0 - 1e-9 {
                    return Err(Error::InvalidParameter(format!(
                        "reference refine {refine} must give a mesh at most a quarter of the finest mesh {finest}"
                    )));
                }
            }
            Reference::StratonovichExponential | Reference::ItoExponential => {
                if !matches!(self.coefficient.kind(), CoefficientKind::LinearDiagonal { .. }) {
                    return Err(Error::InvalidParameter("closed-form references need a linear-diagonal coefficient".into()));
                }
                if self.reference == Reference::ItoExponential && !matches!(self.driver, DriverSpec::Brownian { .. }) {
                    return Err(Error::InvalidParameter("the Itô reference needs a Brownian driver".into()));
                }
            }
        }
        Ok(())
    }

    /// Driver of path `index`, deterministic in `(seed, index)`.
    pub fn sample_driver(&self, index: u64) -> Result<GridPath> {
        let mut rng = path_rng(self.seed, index);
        match &self.driver {
            DriverSpec::Brownian { steps, dim } => sample_brownian_with(self.horizon, *steps, *dim, &mut rng),
            DriverSpec::Jump(j) => {
                let spec = JumpDriverSpec { horizon: self.horizon, ..j.clone() };
                sample_jump_driver_with(&spec, &mut rng)
            }
        }
    }

    /// Scheme settings for one rung of the mesh ladder, observed on the driver grid.
    pub fn scheme_spec(&self, mesh: f64, z: &GridPath) -> Result<SchemeSpec> {
        let cells = (self.horizon / mesh).round().max(1.0) as usize;
        Ok(SchemeSpec::new(self.scheme, Partition::uniform(self.horizon, cells)?)
            .with_flow(self.flow)
            .with_substeps_bar(self.substeps_bar)
            .with_observation(z.times().to_vec()))
    }

    /// Reference `(x, k)` for the driver `z`.
    pub fn reference_paths(&self, z: &GridPath) -> Result<(GridPath, GridPath)> {
        match self.reference {
            Reference::Numerical { refine } => {
                let r = build_reference(&self.domain, &self.coefficient, &self.x0, z, refine)?;
                Ok((r.x, r.k))
            }
            Reference::StratonovichExponential | Reference::ItoExponential => {
                let CoefficientKind::LinearDiagonal { scale } = *self.coefficient.kind() else {
                    unreachable!("validated")
                };
                let ito = self.reference == Reference::ItoExponential;
                let xs: Vec<Point> = z
                    .times()
                    .iter()
                    .zip(z.values())
                    .map(|(&t, zv)| {
                        Point::from_iterator(
                            zv.len(),
                            self.x0.iter().zip(zv.iter()).map(|(x, w)| {
                                let drift = if ito { -0.5 * scale * scale * t } else { 0.0 };
                                x * (scale * w + drift).exp()
                            }),
                        )
                    })
                    .collect();
                let ks = vec![Point::zeros(self.x0.len()); xs.len()];
                let x = GridPath::new(z.times().to_vec(), xs, z.interp(), vec![])?;
                let k = GridPath::new(z.times().to_vec(), ks, z.interp(), vec![])?;
                Ok((x, k))
            }
        }
    }
}

/// Errors of one scheme run against the reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathErrors {
    pub uniform: f64,
    pub grid: f64,
    pub k_uniform: f64,
    pub k_variation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathFailure {
    pub path: u64,
    pub mesh: Option<f64>,
    pub kind: String,
    pub message: String,
}

impl PathFailure {
    fn new(path: u64, mesh: Option<f64>, e: &Error) -> Self {
        Self { path, mesh, kind: e.kind().to_string(), message: e.to_string() }
    }
}

/// Scheme-vs-reference errors of one path at every mesh of the ladder.
pub fn path_errors(exp: &Experiment, index: u64) -> std::result::Result<Vec<std::result::Result<PathErrors, PathFailure>>, PathFailure> {
    let z = exp.sample_driver(index).map_err(|e| PathFailure::new(index, None, &e))?;
    let (rx, rk) = exp.reference_paths(&z).map_err(|e| PathFailure::new(index, None, &e))?;
    Ok(exp
        .meshes
        .iter()
        .map(|&mesh| {
            let run = || -> Result<PathErrors> {
                let spec = exp.scheme_spec(mesh, &z)?;
                let out = run_scheme(&exp.domain, &exp.coefficient, &exp.x0, &z, &spec)?;
                Ok(PathErrors {
                    uniform: sup_error(&out.x, &rx, exp.horizon, &ErrorMode::Uniform)?,
                    grid: sup_error(&out.x, &rx, exp.horizon, &ErrorMode::FixedTimes(out.grid.clone()))?,
                    k_uniform: sup_error(&out.k, &rk, exp.horizon, &ErrorMode::Uniform)?,
                    k_variation: out.k_total(),
                })
            };
            run().map_err(|e| PathFailure::new(index, Some(mesh), &e))
        })
        .collect())
}

/// One rung of the mesh ladder, summarised over paths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub mesh: f64,
    pub err_unif_med: f64,
    pub err_unif_p90: f64,
    pub err_grid_med: f64,
    pub k_err_med: f64,
    pub k_var_med: f64,
    pub k_var_max: f64,
    /// Local log-log slope against the previous row.
    pub slope_partial: Option<f64>,
    pub n_ok: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTable {
    pub scheme: SchemeKind,
    pub n_paths: usize,
    pub seed: u64,
    pub rows: Vec<RateRow>,
    /// Least-squares slope of `log2(err_unif_med)` against `log2(mesh)`.
    pub slope: Option<f64>,
    pub r_squared: Option<f64>,
    pub failures: Vec<PathFailure>,
}

impl RateTable {
    pub const CSV_HEADER: [&'static str; 6] = ["mesh", "err_unif_med", "err_unif_p90", "err_grid_med", "k_err_med", "slope_partial"];

    pub fn uniform_medians(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.err_unif_med).collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let ioerr = |e: csv::Error| Error::Io(std::io::Error::other(e));
        wr.write_record(Self::CSV_HEADER).map_err(ioerr)?;
        for r in &self.rows {
            let slope = r.slope_partial.map(|s| s.to_string()).unwrap_or_default();
            wr.write_record([
                r.mesh.to_string(),
                r.err_unif_med.to_string(),
                r.err_unif_p90.to_string(),
                r.err_grid_med.to_string(),
                r.k_err_med.to_string(),
                slope,
            ])
            .map_err(ioerr)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Median with the two middle values averaged; `NaN` on empty input.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Nearest-rank percentile, `q ∈ (0, 1]`.
pub fn percentile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let rank = (q * v.len() as f64).ceil().max(1.0) as usize;
    v[rank.min(v.len()) - 1]
}

/// Least-squares slope and R² of `log2(err)` against `log2(mesh)` over rows
/// with positive error. `None` with fewer than two usable rows.
pub fn fit_rate(meshes: &[f64], errors: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = meshes
        .iter()
        .zip(errors)
        .filter(|(m, e)| **m > 0.0 && **e > 0.0 && e.is_finite())
        .map(|(m, e)| (m.log2(), e.log2()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some((slope, r2))
}

/// Monte Carlo convergence study on `jobs` worker threads (0 = all cores).
/// The table does not depend on `jobs`.
pub fn convergence_study(exp: &Experiment, jobs: usize) -> Result<RateTable> {
    exp.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let per_path: Vec<_> = pool.install(|| (0..exp.n_paths as u64).into_par_iter().map(|i| path_errors(exp, i)).collect());

    let mut failures = Vec::new();
    let mut cols: Vec<Vec<PathErrors>> = vec![Vec::new(); exp.meshes.len()];
    for r in per_path {
        match r {
            Err(f) => failures.push(f),
            Ok(rows) => {
                for (m, e) in rows.into_iter().enumerate() {
                    match e {
                        Ok(e) => cols[m].push(e),
                        Err(f) => failures.push(f),
                    }
                }
            }
        }
    }
    let mut rows: Vec<RateRow> = exp
        .meshes
        .iter()
        .zip(&cols)
        .map(|(&mesh, c)| {
            let uni: Vec<f64> = c.iter().map(|e| e.uniform).collect();
            let kv: Vec<f64> = c.iter().map(|e| e.k_variation).collect();
            RateRow {
                mesh,
                err_unif_med: median(&uni),
                err_unif_p90: percentile(&uni, 0.9),
                err_grid_med: median(&c.iter().map(|e| e.grid).collect::<Vec<_>>()),
                k_err_med: median(&c.iter().map(|e| e.k_uniform).collect::<Vec<_>>()),
                k_var_med: median(&kv),
                k_var_max: kv.iter().copied().fold(f64::NAN, f64::max),
                slope_partial: None,
                n_ok: c.len(),
            }
        })
        .collect();
    for i in 1..rows.len() {
        let (a, b) = (&rows[i - 1], &rows[i]);
        if a.err_unif_med > 0.0 && b.err_unif_med > 0.0 {
            let s = (b.err_unif_med / a.err_unif_med).log2() / (b.mesh / a.mesh).log2();
            rows[i].slope_partial = s.is_finite().then_some(s);
        }
    }
    let fit = fit_rate(&exp.meshes, &rows.iter().map(|r| r.err_unif_med).collect::<Vec<_>>());
    Ok(RateTable {
        scheme: exp.scheme,
        n_paths: exp.n_paths,
        seed: exp.seed,
        rows,
        slope: fit.map(|f| f.0),
        r_squared: fit.map(|f| f.1),
        failures,
    })
}

/// Integrator tolerance used by the counterexample report.
pub const REMARK4_TOL: f64 = 1e-3;

/// A single jump `Z_t = J · 1{t ≥ jump_time}` acting on a reflected equation.
#[derive(Debug, Clone, PartialEq)]
pub struct Remark4Setup {
    pub domain: Domain,
    pub coefficient: Coefficient,
    pub x0: Point,
    pub jump: Point,
    pub jump_time: f64,
    pub horizon: f64,
}

impl Remark4Setup {
    /// Unit disk, `f = I`, start `(1, 0)`, jump `(0, 1)` at `t = 1`: a push
    /// tangential to the boundary.
    pub fn disk() -> Self {
        Self {
            domain: Domain::ball(&[0.0, 0.0], 1.0).expect("valid"),
            coefficient: Coefficient::identity(2).expect("valid"),
            x0: Point::from_column_slice(&[1.0, 0.0]),
            jump: Point::from_column_slice(&[0.0, 1.0]),
            jump_time: 1.0,
            horizon: 2.0,
        }
    }

    /// `[0, ∞)`, `f ≡ −1`, start `0.5`, unit jump: both limits end at 0.
    pub fn half_line() -> Self {
        Self {
            domain: Domain::half_space(&[1.0], 0.0).expect("valid"),
            coefficient: Coefficient::constant(nalgebra::DMatrix::from_element(1, 1, -1.0)).expect("valid"),
            x0: Point::from_column_slice(&[0.5]),
            jump: Point::from_column_slice(&[1.0]),
            jump_time: 1.0,
            horizon: 2.0,
        }
    }

    pub fn with_jump(mut self, jump: Point) -> Self {
        self.jump = jump;
        self
    }

    pub fn driver(&self) -> Result<GridPath> {
        let d = self.jump.len();
        let jumps = if self.jump.iter().any(|v| *v != 0.0) { vec![Jump { index: 1, size: self.jump.clone() }] } else { vec![] };
        GridPath::new(
            vec![0.0, self.jump_time, self.horizon],
            vec![Point::zeros(d), self.jump.clone(), self.jump.clone()],
            Interp::CadlagStep,
            jumps,
        )
    }
}

/// Closed-form endpoint of the reflected ODE on the unit disk for a constant
/// push of unit speed tangential at the start: the polar angle solves
/// `dθ/ds = cos θ`, so `θ(1) = arctan(sinh 1)`.
pub fn disk_tangential_endpoint() -> Point {
    let theta = 1f64.sinh().atan();
    Point::from_column_slice(&[theta.cos(), theta.sin()])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Remark4Row {
    pub cells_per_unit: usize,
    pub substeps_bar: usize,
    pub bar_endpoint: Vec<f64>,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Remark4Report {
    /// Endpoint of the jump solution `Π(φ(f J, x0))`.
    pub projection_endpoint: Vec<f64>,
    /// Wong-Zakai endpoint at the finest settings.
    pub bar_endpoint: Vec<f64>,
    pub gap: f64,
    /// Mesh ladder at the largest substep count.
    pub mesh_rows: Vec<Remark4Row>,
    /// Substep ladder at the coarsest mesh.
    pub substep_rows: Vec<Remark4Row>,
    /// `max − min` of the gap across the mesh ladder.
    pub gap_spread: f64,
    pub tolerance: f64,
    /// Gap spread below the tolerance.
    pub stable: bool,
    /// Gap above ten times the tolerance.
    pub discrepancy: bool,
}

/// Compares the reflected Wong-Zakai limit with the jump solution after a
/// single jump, over a ladder of meshes (cells per unit time) and substeps.
pub fn remark4_report(setup: &Remark4Setup, substeps_ladder: &[usize], mesh_ladder: &[usize]) -> Result<Remark4Report> {
    if substeps_ladder.is_empty() || mesh_ladder.is_empty() {
        return Err(Error::InvalidParameter("ladders must be nonempty".into()));
    }
    let z = setup.driver()?;
    let row = |n: usize, m: usize| -> Result<(Remark4Row, Point)> {
        let cells = (setup.horizon * n as f64).round() as usize;
        let p = Partition::uniform(setup.horizon, cells)?;
        let bar = run_wz_bar_scheme(
            &setup.domain,
            &setup.coefficient,
            &setup.x0,
            &z,
            &SchemeSpec::new(SchemeKind::WzBar, p.clone()).with_substeps_bar(m),
        )?;
        let proj = run_projection_scheme(
            &setup.domain,
            &setup.coefficient,
            &setup.x0,
            &z,
            &SchemeSpec::new(SchemeKind::Projection, p).with_flow(FlowConfig::reference()),
        )?;
        let b = bar.x.eval(setup.horizon);
        let q = proj.x.eval(setup.horizon);
        let gap = (&b - &q).norm();
        Ok((Remark4Row { cells_per_unit: n, substeps_bar: m, bar_endpoint: b.iter().copied().collect(), gap }, q))
    };
    let m_max = *substeps_ladder.iter().max().expect("nonempty");
    let n_min = *mesh_ladder.iter().min().expect("nonempty");
    let mut mesh_rows = Vec::new();
    let mut proj_end = None;
    for &n in mesh_ladder {
        let (r, q) = row(n, m_max)?;
        proj_end.get_or_insert(q);
        mesh_rows.push(r);
    }
    let substep_rows = substeps_ladder.iter().map(|&m| row(n_min, m).map(|r| r.0)).collect::<Result<Vec<_>>>()?;
    let finest = mesh_rows.last().expect("nonempty").clone();
    let gaps: Vec<f64> = mesh_rows.iter().map(|r| r.gap).collect();
    let spread = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max) - gaps.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Remark4Report {
        projection_endpoint: proj_end.expect("nonempty").iter().copied().collect(),
        bar_endpoint: finest.bar_endpoint.clone(),
        gap: finest.gap,
        mesh_rows,
        substep_rows,
        gap_spread: spread,
        tolerance: REMARK4_TOL,
        stable: spread < REMARK4_TOL,
        discrepancy: finest.gap > 10.0 * REMARK4_TOL,
    })
}

/// Variation inequalities of a scheme run against its internal path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationReport {
    pub rows: Vec<Lemma1Row>,
    pub k_total: f64,
}

impl VariationReport {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(|r| r.k_bounded && r.x_bounded)
    }
}

pub fn variation_report(out: &SchemeOutput, intervals: &[(f64, f64)]) -> Result<VariationReport> {
    Ok(VariationReport { rows: variation_rows(&out.y, &out.x, &out.k, intervals)?, k_total: out.k_total() })
}

/// `|K|_q` across a mesh ladder. A finite-sample stand-in for boundedness in
/// probability: `bounded` only says the maximum stays within twice the
/// coarsest value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationLadder {
    pub meshes: Vec<f64>,
    pub k_totals: Vec<f64>,
    pub max: f64,
    pub coarsest: f64,
    pub bounded: bool,
    pub heuristic: bool,
}

pub fn variation_ladder(outputs: &[SchemeOutput]) -> VariationLadder {
    let meshes: Vec<f64> = outputs.iter().map(|o| o.meta.mesh).collect();
    let k_totals: Vec<f64> = outputs.iter().map(|o| o.k_total()).collect();
    let max = k_totals.iter().copied().fold(0.0, f64::max);
    let coarsest = k_totals.first().copied().unwrap_or(0.0);
    VariationLadder { meshes, max, coarsest, bounded: max <= 2.0 * coarsest, heuristic: true, k_totals }
}
