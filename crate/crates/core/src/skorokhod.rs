//! Discrete Skorokhod map: `x_{k+1} = Π(x_k + Δy_k)`, `k_{k+1} = k_k + Δx_k − Δy_k`.

use serde::Serialize;

use crate::driver::GridPath;
use crate::error::{check_dim, Error, Result};
use crate::geometry::Domain;
use crate::Point;

/// Pre-projection points must stay below this fraction of `rho0` from `D̄`.
pub const EXCURSION_MARGIN: f64 = 0.99;
/// Relative tolerance of the variation inequalities.
pub const LEMMA1_RTOL: f64 = 1e-9;

/// Projects `pre` onto the domain after checking that it is close enough for
/// the projection to be unique. Returns the projected point.
pub fn reflect(domain: &Domain, pre: &Point) -> Result<Point> {
    let rho0 = domain.rho0();
    if rho0.is_finite() {
        let distance = domain.distance(pre)?;
        if distance >= EXCURSION_MARGIN * rho0 {
            return Err(Error::ProjectionOutOfRange { distance, rho0 });
        }
    }
    domain.project(pre)
}

/// Grid solution `(x, k)` of the Skorokhod problem for the input `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkorokhodSolution {
    /// The input, shifted to start at the initial point: `y0 + (y − y(0))`.
    pub y: GridPath,
    pub x: GridPath,
    pub k: GridPath,
    /// Running total variation `|k|_t` at the grid times.
    pub k_variation: Vec<f64>,
    /// Grid indices at which the pre-projection point was outside `D̄`.
    pub pushes: Vec<usize>,
}

impl SkorokhodSolution {
    pub fn k_variation_path(&self) -> GridPath {
        let v = self.k_variation.iter().map(|s| Point::from_element(1, *s)).collect();
        GridPath::step(self.x.times().to_vec(), v).expect("solution grid is valid")
    }
}

/// Solves the discrete Skorokhod problem on the sample grid of `y`, started
/// from `y0 ∈ D̄` and driven by the increments of `y`.
pub fn solve_skorokhod(domain: &Domain, y: &GridPath, y0: &Point) -> Result<SkorokhodSolution> {
    check_dim(domain.dim(), y.dim())?;
    check_dim(domain.dim(), y0.len())?;
    if !domain.classify(y0)?.in_closure() {
        return Err(Error::StartOutsideDomain);
    }
    let n = y.len();
    let vals = y.values();
    let mut ys = Vec::with_capacity(n);
    let mut xs = Vec::with_capacity(n);
    let mut ks = Vec::with_capacity(n);
    let mut kvar = Vec::with_capacity(n);
    let mut pushes = Vec::new();
    let mut x = y0.clone();
    let mut k = Point::zeros(y0.len());
    let mut var = 0.0;
    ys.push(y0.clone());
    xs.push(x.clone());
    ks.push(k.clone());
    kvar.push(0.0);
    for i in 1..n {
        let dy = &vals[i] - &vals[i - 1];
        let pre = &x + &dy;
        let next = reflect(domain, &pre)?;
        let dk = &next - &pre;
        let push = dk.norm();
        if push > 0.0 {
            pushes.push(i);
            var += push;
            k += &dk;
        }
        x = next;
        ys.push(y0 + (&vals[i] - &vals[0]));
        xs.push(x.clone());
        ks.push(k.clone());
        kvar.push(var);
    }
    let times = y.times().to_vec();
    Ok(SkorokhodSolution {
        y: GridPath::new(times.clone(), ys, y.interp(), y.jumps().to_vec())?,
        x: GridPath::step(times.clone(), xs)?,
        k: GridPath::step(times, ks)?,
        k_variation: kvar,
        pushes,
    })
}

/// Sum of `|Δv|` over the grid increments ending in `(from, to]`.
pub fn total_variation(path: &GridPath, from: f64, to: f64) -> Result<f64> {
    let eps = 1e-12 * (1.0 + path.horizon());
    if !(from <= to) || from < 0.0 || to > path.horizon() + eps {
        return Err(Error::BadInterval { from, to });
    }
    let times = path.times();
    let vals = path.values();
    let start = times.partition_point(|&t| t <= from).max(1);
    let mut acc = 0.0;
    for i in start..times.len() {
        if times[i] > to {
            break;
        }
        acc += (&vals[i] - &vals[i - 1]).norm();
    }
    Ok(acc)
}

/// Variation inequalities on one interval `[from, to]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma1Row {
    pub from: f64,
    pub to: f64,
    pub y_variation: f64,
    pub k_variation: f64,
    pub x_variation: f64,
    /// `|k|_{[t,q]} ≤ |y|_{[t,q]}`
    pub k_bounded: bool,
    /// `|x|_{[t,q]} ≤ 2|y|_{[t,q]}`
    pub x_bounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma1Report {
    /// Every increment of `y` is shorter than `rho0`.
    pub increments_below_rho0: bool,
    pub rows: Vec<Lemma1Row>,
}

impl Lemma1Report {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(|r| r.k_bounded && r.x_bounded)
    }
}

fn within(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs * (1.0 + LEMMA1_RTOL) + f64::MIN_POSITIVE
}

/// Evaluates the variation inequalities for an `x = y + k` decomposition.
pub fn variation_rows(y: &GridPath, x: &GridPath, k: &GridPath, intervals: &[(f64, f64)]) -> Result<Vec<Lemma1Row>> {
    intervals
        .iter()
        .map(|&(from, to)| {
            let yv = total_variation(y, from, to)?;
            let kv = total_variation(k, from, to)?;
            let xv = total_variation(x, from, to)?;
            Ok(Lemma1Row {
                from,
                to,
                y_variation: yv,
                k_variation: kv,
                x_variation: xv,
                k_bounded: within(kv, yv),
                x_bounded: within(xv, 2.0 * yv),
            })
        })
        .collect()
}

/// Checks `|k| ≤ |y|` and `|x| ≤ 2|y|` on each interval, plus `|Δy| < rho0`.
pub fn check_lemma1(domain: &Domain, y: &GridPath, sol: &SkorokhodSolution, intervals: &[(f64, f64)]) -> Result<Lemma1Report> {
    let rho0 = domain.rho0();
    let increments_below_rho0 =
        rho0.is_infinite() || y.values().windows(2).all(|w| (&w[1] - &w[0]).norm() < rho0);
    Ok(Lemma1Report { increments_below_rho0, rows: variation_rows(y, &sol.x, &sol.k, intervals)? })
}
