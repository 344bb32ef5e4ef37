//! Coefficient fields `f : R^d → R^{d×d}` and the unit-time flow `φ(g, x)`
//! of `dy/du = g(y)`, which carries the Marcus action of a jump `Δz`:
//! `x ↦ φ(f·Δz, x)`.

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::Point;

/// Trajectories whose norm exceeds this are reported as [`Error::NonFinite`].
pub const BLOW_UP: f64 = 1e12;
/// Substep cap for adaptive flows.
pub const ADAPTIVE_MAX_SUBSTEPS: usize = 4096;
/// Relative agreement required between step-doubled adaptive solves.
pub const ADAPTIVE_TOL: f64 = 1e-12;

/// Integration settings for [`flow`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FlowConfig {
    /// Uniform RK4 steps over `u ∈ [0, 1]`.
    pub substeps: usize,
    /// Double the step count until two successive solves agree.
    pub adaptive: bool,
}

impl FlowConfig {
    pub const SCHEME_SUBSTEPS: usize = 32;
    pub const REFERENCE_SUBSTEPS: usize = 256;

    pub fn new(substeps: usize) -> Result<Self> {
        if substeps == 0 {
            return Err(Error::InvalidParameter("flow substeps must be at least 1".into()));
        }
        Ok(Self { substeps, adaptive: false })
    }

    /// Default for jumps inside schemes.
    pub fn scheme() -> Self {
        Self { substeps: Self::SCHEME_SUBSTEPS, adaptive: false }
    }

    /// Default for reference and oracle evaluations.
    pub fn reference() -> Self {
        Self { substeps: Self::REFERENCE_SUBSTEPS, adaptive: false }
    }
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self::scheme()
    }
}

fn rk4_step<G: Fn(&Point) -> Point>(g: &G, y: &Point, h: f64) -> Point {
    let k1 = g(y);
    let k2 = g(&(y + &k1 * (0.5 * h)));
    let k3 = g(&(y + &k2 * (0.5 * h)));
    let k4 = g(&(y + &k3 * h));
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

fn guard(y: &Point) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) && y.norm() <= BLOW_UP {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

fn integrate<G: Fn(&Point) -> Point>(g: &G, x: &Point, from: f64, to: f64, steps: usize) -> Result<Point> {
    let h = (to - from) / steps as f64;
    let mut y = x.clone();
    for _ in 0..steps {
        y = rk4_step(g, &y, h);
        guard(&y)?;
    }
    Ok(y)
}

/// `φ(g, x)`: the solution at `u = 1` of `dy/du = g(y)`, `y(0) = x`, by
/// classical RK4 with `cfg.substeps` uniform steps.
pub fn flow<G: Fn(&Point) -> Point>(g: G, x: &Point, cfg: &FlowConfig) -> Result<Point> {
    if cfg.substeps == 0 {
        return Err(Error::InvalidParameter("flow substeps must be at least 1".into()));
    }
    guard(x)?;
    if !cfg.adaptive {
        return integrate(&g, x, 0.0, 1.0, cfg.substeps);
    }
    let mut n = cfg.substeps;
    let mut coarse = integrate(&g, x, 0.0, 1.0, n)?;
    loop {
        let fine = integrate(&g, x, 0.0, 1.0, 2 * n)?;
        let gap = (&fine - &coarse).norm();
        n *= 2;
        if gap <= ADAPTIVE_TOL * (1.0 + fine.norm()) || 2 * n > ADAPTIVE_MAX_SUBSTEPS {
            return Ok(fine);
        }
        coarse = fine;
    }
}

/// Samples the trajectory of `dy/du = g(y)` at the increasing fractions
/// `us ⊂ (0, 1]`. Each gap `[u_{j−1}, u_j]` gets `⌈substeps · gap⌉` RK4 steps.
pub fn flow_dense<G: Fn(&Point) -> Point>(g: G, x: &Point, cfg: &FlowConfig, us: &[f64]) -> Result<Vec<Point>> {
    guard(x)?;
    let mut out = Vec::with_capacity(us.len());
    let mut y = x.clone();
    let mut u0 = 0.0;
    for &u in us {
        if !(u > u0) {
            if u == u0 {
                out.push(y.clone());
                continue;
            }
            return Err(Error::InvalidParameter("flow_dense fractions must be increasing".into()));
        }
        let steps = ((cfg.substeps as f64) * (u - u0)).ceil().max(1.0) as usize;
        y = integrate(&g, &y, u0, u, steps)?;
        out.push(y.clone());
        u0 = u;
    }
    Ok(out)
}

/// Working region on which sup-norm bounds of an unbounded coefficient are taken.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkingRegion {
    pub center: Point,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientKind {
    /// `f(x) = M`.
    Constant(DMatrix<f64>),
    /// `f(x) = scale · diag(x)`; unbounded, needs a working region.
    LinearDiagonal { scale: f64 },
    /// `f_ij(x) = scale · (δ_ij + ½ sin x_i cos x_j)`.
    Trig { scale: f64 },
    /// `f(x) = scale · diag(1 + ½ tanh x_i)`.
    TanhDiagonal { scale: f64 },
}

/// Upper bounds over the working region (all of `R^d` for bounded kinds).
///
/// `sup_norm` bounds the operator norm of `f`; the other entries are
/// Frobenius-norm bounds of `f`, `f′`, `f″` and the contraction
/// `(f′f)_{ijm} = Σ_l ∂_l f_ij f_lm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientBounds {
    pub sup_norm: f64,
    pub sup_frobenius: f64,
    pub sup_derivative: f64,
    pub sup_second_derivative: f64,
    pub sup_ff: f64,
}

impl CoefficientBounds {
    /// `C(|dz|) = sup‖f′f‖ · exp(sup‖f′‖ · |dz|)`, a bound on `|jump_defect| / |dz|²`.
    pub fn defect_constant(&self, dz_norm: f64) -> f64 {
        self.sup_ff * (self.sup_derivative * dz_norm).exp()
    }

    /// Lipschitz constant in `x` of `jump_defect / |dz|²`:
    /// `½ (‖f″‖‖f‖ + ‖f′‖²) · exp(‖f′‖ · |dz|)`.
    pub fn defect_lipschitz_constant(&self, dz_norm: f64) -> f64 {
        let lip_ff = self.sup_second_derivative * self.sup_frobenius + self.sup_derivative.powi(2);
        0.5 * lip_ff * (self.sup_derivative * dz_norm).exp()
    }
}

/// A matrix-valued coefficient `f : R^d → R^{d×d}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    kind: CoefficientKind,
    dim: usize,
    region: Option<WorkingRegion>,
    analytic_derivative: bool,
}

impl Coefficient {
    pub fn constant(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(Error::InvalidParameter("constant coefficient must be a nonempty square matrix".into()));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("constant coefficient must be finite".into()));
        }
        let dim = m.nrows();
        Ok(Self { kind: CoefficientKind::Constant(m), dim, region: None, analytic_derivative: true })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::constant(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::constant(DMatrix::identity(dim, dim))
    }

    pub fn linear_diagonal(dim: usize, scale: f64, region: WorkingRegion) -> Result<Self> {
        check_scale(scale)?;
        check_dim(dim, region.center.len())?;
        if !(region.radius.is_finite() && region.radius > 0.0) {
            return Err(Error::InvalidParameter("working region radius must be finite and positive".into()));
        }
        Ok(Self { kind: CoefficientKind::LinearDiagonal { scale }, dim, region: Some(region), analytic_derivative: true })
    }

    pub fn trig(dim: usize, scale: f64) -> Result<Self> {
        check_scale(scale)?;
        positive(dim)?;
        Ok(Self { kind: CoefficientKind::Trig { scale }, dim, region: None, analytic_derivative: true })
    }

    pub fn tanh_diagonal(dim: usize, scale: f64) -> Result<Self> {
        check_scale(scale)?;
        positive(dim)?;
        Ok(Self { kind: CoefficientKind::TanhDiagonal { scale }, dim, region: None, analytic_derivative: true })
    }

    /// Drops the analytic derivative; `f′f` is then taken by central differences.
    pub fn with_finite_differences(mut self) -> Self {
        self.analytic_derivative = false;
        self
    }

    pub fn kind(&self) -> &CoefficientKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn region(&self) -> Option<&WorkingRegion> {
        self.region.as_ref()
    }

    pub fn is_zero(&self) -> bool {
        matches!(&self.kind, CoefficientKind::Constant(m) if m.iter().all(|v| *v == 0.0))
    }

    pub fn evaluate(&self, x: &Point) -> DMatrix<f64> {
        let d = self.dim;
        match &self.kind {
            CoefficientKind::Constant(m) => m.clone(),
            CoefficientKind::LinearDiagonal { scale } => DMatrix::from_diagonal(&(x * *scale)),
            CoefficientKind::TanhDiagonal { scale } => {
                DMatrix::from_diagonal(&x.map(|v| scale * (1.0 + 0.5 * v.tanh())))
            }
            CoefficientKind::Trig { scale } => DMatrix::from_fn(d, d, |i, j| {
                let delta = if i == j { 1.0 } else { 0.0 };
                scale * (delta + 0.5 * x[i].sin() * x[j].cos())
            }),
        }
    }

    /// `f(x) · dz` without forming the matrix for diagonal kinds.
    pub fn apply(&self, x: &Point, dz: &Point) -> Point {
        match &self.kind {
            CoefficientKind::Constant(m) => m * dz,
            CoefficientKind::LinearDiagonal { scale } => x.component_mul(dz) * *scale,
            CoefficientKind::TanhDiagonal { scale } => {
                Point::from_iterator(self.dim, x.iter().zip(dz.iter()).map(|(v, z)| scale * (1.0 + 0.5 * v.tanh()) * z))
            }
            CoefficientKind::Trig { .. } => self.evaluate(x) * dz,
        }
    }

    /// Analytic partial derivatives `∂f/∂x_l`, one matrix per `l`.
    /// `None` when the coefficient was switched to finite differences.
    pub fn derivative(&self, x: &Point) -> Option<Vec<DMatrix<f64>>> {
        if !self.analytic_derivative {
            return None;
        }
        let d = self.dim;
        Some(match &self.kind {
            CoefficientKind::Constant(_) => vec![DMatrix::zeros(d, d); d],
            CoefficientKind::LinearDiagonal { scale } => (0..d)
                .map(|l| DMatrix::from_fn(d, d, |i, j| if i == l && j == l { *scale } else { 0.0 }))
                .collect(),
            CoefficientKind::TanhDiagonal { scale } => (0..d)
                .map(|l| {
                    let sech2 = 1.0 / x[l].cosh().powi(2);
                    DMatrix::from_fn(d, d, |i, j| if i == l && j == l { 0.5 * scale * sech2 } else { 0.0 })
                })
                .collect(),
            CoefficientKind::Trig { scale } => (0..d)
                .map(|l| {
                    DMatrix::from_fn(d, d, |i, j| {
                        let mut v = 0.0;
                        if i == l {
                            v += x[i].cos() * x[j].cos();
                        }
                        if j == l {
                            v -= x[i].sin() * x[j].sin();
                        }
                        0.5 * scale * v
                    })
                })
                .collect(),
        })
    }

    /// Central differences with step `1e-5 · (1 + |x|)`.
    pub fn finite_difference_derivative(&self, x: &Point) -> Vec<DMatrix<f64>> {
        let h = 1e-5 * (1.0 + x.norm());
        (0..self.dim)
            .map(|l| {
                let mut up = x.clone();
                let mut down = x.clone();
                up[l] += h;
                down[l] -= h;
                (self.evaluate(&up) - self.evaluate(&down)) / (2.0 * h)
            })
            .collect()
    }

    /// `(f′f)(x)` as `d` matrices: entry `[i][(j, m)] = Σ_l ∂_l f_ij(x) f_lm(x)`.
    pub fn ff_prime(&self, x: &Point) -> Vec<DMatrix<f64>> {
        let d = self.dim;
        let df = self.derivative(x).unwrap_or_else(|| self.finite_difference_derivative(x));
        let f = self.evaluate(x);
        (0..d)
            .map(|i| DMatrix::from_fn(d, d, |j, m| (0..d).map(|l| df[l][(i, j)] * f[(l, m)]).sum()))
            .collect()
    }

    /// `Σ_{j,m} (f′f)_{ijm}(x) c_{jm}` for a covariation matrix `c`.
    pub fn ff_prime_contract(&self, x: &Point, c: &DMatrix<f64>) -> Point {
        if matches!(self.kind, CoefficientKind::Constant(_)) {
            return Point::zeros(self.dim);
        }
        let t = self.ff_prime(x);
        Point::from_iterator(self.dim, t.iter().map(|ti| ti.component_mul(c).sum()))
    }

    pub fn bounds(&self) -> CoefficientBounds {
        let d = self.dim as f64;
        match &self.kind {
            CoefficientKind::Constant(m) => CoefficientBounds {
                sup_norm: m.clone().svd(false, false).singular_values.max(),
                sup_frobenius: m.norm(),
                sup_derivative: 0.0,
                sup_second_derivative: 0.0,
                sup_ff: 0.0,
            },
            CoefficientKind::LinearDiagonal { scale } => {
                let region = self.region.as_ref().expect("linear coefficient carries a working region");
                let s = scale.abs();
                let max_coord = region.center.amax() + region.radius;
                let max_norm = region.center.norm() + region.radius;
                CoefficientBounds {
                    sup_norm: s * max_coord,
                    sup_frobenius: s * max_norm,
                    sup_derivative: s * d.sqrt(),
                    sup_second_derivative: 0.0,
                    sup_ff: s * s * max_norm,
                }
            }
            CoefficientKind::TanhDiagonal { scale } => {
                let s = scale.abs();
                CoefficientBounds {
                    sup_norm: 1.5 * s,
                    sup_frobenius: 1.5 * s * d.sqrt(),
                    sup_derivative: 0.5 * s * d.sqrt(),
                    // max |sech² · tanh| = 2/(3√3) < 0.385
                    sup_second_derivative: 0.385 * s * d.sqrt(),
                    sup_ff: 0.75 * s * s * d.sqrt(),
                }
            }
            CoefficientKind::Trig { scale } => {
                let s = scale.abs();
                let frob = s * (d.sqrt() + 0.5 * d);
                CoefficientBounds {
                    sup_norm: frob,
                    sup_frobenius: frob,
                    sup_derivative: s * d,
                    sup_second_derivative: s * (d + 1.0),
                    sup_ff: s * d * frob,
                }
            }
        }
    }
}

fn check_scale(s: f64) -> Result<()> {
    if s.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter("coefficient scale must be finite".into()))
    }
}

fn positive(d: usize) -> Result<()> {
    if d == 0 {
        Err(Error::InvalidParameter("dimension must be positive".into()))
    } else {
        Ok(())
    }
}

/// `φ(f·dz, x)`, the Marcus action of the increment `dz` on `x`.
///
/// Constant coefficients are translated exactly; `dz = 0` is the identity.
pub fn marcus_jump(f: &Coefficient, dz: &Point, x: &Point, cfg: &FlowConfig) -> Result<Point> {
    check_dim(f.dim(), dz.len())?;
    check_dim(f.dim(), x.len())?;
    if dz.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if dz.iter().all(|v| *v == 0.0) {
        return Ok(x.clone());
    }
    if let CoefficientKind::Constant(m) = f.kind() {
        let y = x + m * dz;
        guard(&y)?;
        return Ok(y);
    }
    flow(|y: &Point| f.apply(y, dz), x, cfg)
}

/// `φ(f·dz, x) − x − f(x)·dz`.
pub fn jump_defect(f: &Coefficient, dz: &Point, x: &Point, cfg: &FlowConfig) -> Result<Point> {
    let y = marcus_jump(f, dz, x, cfg)?;
    if matches!(f.kind(), CoefficientKind::Constant(_)) || dz.iter().all(|v| *v == 0.0) {
        return Ok(Point::zeros(f.dim()));
    }
    Ok(y - x - f.apply(x, dz))
}
