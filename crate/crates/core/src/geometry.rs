//! Closed domains `D̄ ⊂ R^d` with uniform exterior-sphere and interior-cone
//! regularity: membership, metric projection, inward normals.

use crate::error::{check_dim, Error, Result};
use crate::Point;

/// Iteration cap for Dykstra's alternating projections.
pub const DYKSTRA_MAX_ITER: usize = 10_000;
/// Stopping tolerance on the change of the Dykstra iterate per sweep.
pub const DYKSTRA_TOL: f64 = 1e-12;
/// Stand-in for an infinite interior-cone radius on convex domains.
pub const DELTA_SENTINEL: f64 = 1e300;

/// Boundary band used when no tolerance is given: `1e-10 · (1 + |x|)`.
pub fn default_tol(x: &Point) -> f64 {
    1e-10 * (1.0 + x.norm())
}

/// Regularity constants of a domain.
///
/// `rho0` is the exterior-sphere radius (`+∞` for convex domains); `beta`
/// and `delta` certify the interior-cone condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainConstants {
    pub rho0: f64,
    pub beta: f64,
    pub delta: f64,
}

/// Closed half-space `{x : ⟨n, x⟩ ≥ c}` with unit normal `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    normal: Point,
    offset: f64,
}

impl HalfSpace {
    /// The normal is rescaled to unit length (the offset with it).
    pub fn new(normal: Point, offset: f64) -> Result<Self> {
        let len = normal.norm();
        if !(len.is_finite() && len > 0.0) || !offset.is_finite() {
            return Err(Error::InvalidParameter(
                "half-space needs a finite nonzero normal and finite offset".into(),
            ));
        }
        Ok(Self { normal: normal / len, offset: offset / len })
    }

    pub fn normal(&self) -> &Point {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Positive inside, negative outside; equal to the Euclidean distance to the boundary plane.
    pub fn signed_distance(&self, x: &Point) -> f64 {
        self.normal.dot(x) - self.offset
    }

    pub fn project(&self, x: &Point) -> Point {
        let sd = self.signed_distance(x);
        if sd >= 0.0 {
            x.clone()
        } else {
            x - &self.normal * sd
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    HalfSpace(HalfSpace),
    Ball { center: Point, radius: f64 },
    /// Axis-aligned box; bounds may be infinite.
    Box { lower: Point, upper: Point },
    /// Intersection of finitely many half-spaces.
    Polyhedron(Vec<HalfSpace>),
    /// Complement of an open ball, `{x : |x − c| ≥ R}`.
    ExteriorBall { center: Point, radius: f64 },
}

/// Position of a point relative to `D̄`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Interior,
    Boundary,
    Outside,
}

impl Location {
    pub fn in_closure(self) -> bool {
        !matches!(self, Location::Outside)
    }
}

/// An immutable domain. Construct through the named constructors, which
/// validate the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    kind: DomainKind,
    dim: usize,
}

impl Domain {
    /// `{x : ⟨normal, x⟩ ≥ offset}`.
    pub fn half_space(normal: &[f64], offset: f64) -> Result<Self> {
        let dim = nonzero_dim(normal.len())?;
        let h = HalfSpace::new(Point::from_column_slice(normal), offset)?;
        Ok(Self { kind: DomainKind::HalfSpace(h), dim })
    }

    pub fn ball(center: &[f64], radius: f64) -> Result<Self> {
        let dim = nonzero_dim(center.len())?;
        check_radius(radius)?;
        check_finite(center, "ball center")?;
        Ok(Self { kind: DomainKind::Ball { center: Point::from_column_slice(center), radius }, dim })
    }

    pub fn cuboid(lower: &[f64], upper: &[f64]) -> Result<Self> {
        let dim = nonzero_dim(lower.len())?;
        check_dim(dim, upper.len())?;
        for (l, u) in lower.iter().zip(upper) {
            if l.is_nan() || u.is_nan() || !(l < u) || *l == f64::INFINITY || *u == f64::NEG_INFINITY {
                return Err(Error::InvalidParameter(format!("box bounds need lower < upper, got [{l}, {u}]")));
            }
        }
        Ok(Self {
            kind: DomainKind::Box { lower: Point::from_column_slice(lower), upper: Point::from_column_slice(upper) },
            dim,
        })
    }

    /// Intersection of `{x : ⟨n_i, x⟩ ≥ c_i}`. Fails with [`Error::EmptyDomain`]
    /// when no feasible point is found.
    pub fn polyhedron(faces: &[(Vec<f64>, f64)]) -> Result<Self> {
        let first = faces.first().ok_or_else(|| Error::InvalidParameter("polyhedron needs at least one face".into()))?;
        let dim = nonzero_dim(first.0.len())?;
        let mut hs = Vec::with_capacity(faces.len());
        for (n, c) in faces {
            check_dim(dim, n.len())?;
            hs.push(HalfSpace::new(Point::from_column_slice(n), *c)?);
        }
        let probe = dykstra(&hs, &Point::zeros(dim));
        let worst = hs.iter().map(|h| h.signed_distance(&probe)).fold(f64::INFINITY, f64::min);
        if worst < -1e-8 * (1.0 + probe.norm()) {
            return Err(Error::EmptyDomain(format!("no feasible point found (max violation {})", -worst)));
        }
        Ok(Self { kind: DomainKind::Polyhedron(hs), dim })
    }

    pub fn exterior_ball(center: &[f64], radius: f64) -> Result<Self> {
        let dim = nonzero_dim(center.len())?;
        check_radius(radius)?;
        check_finite(center, "ball center")?;
        Ok(Self { kind: DomainKind::ExteriorBall { center: Point::from_column_slice(center), radius }, dim })
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self.kind, DomainKind::ExteriorBall { .. })
    }

    pub fn constants(&self) -> DomainConstants {
        match &self.kind {
            DomainKind::ExteriorBall { radius, .. } => {
                DomainConstants { rho0: *radius, beta: std::f64::consts::SQRT_2, delta: radius / 2.0 }
            }
            _ => DomainConstants { rho0: f64::INFINITY, beta: 1.0, delta: DELTA_SENTINEL },
        }
    }

    pub fn rho0(&self) -> f64 {
        self.constants().rho0
    }

    /// Distance to the boundary, positive inside and negative outside.
    /// Outside the domain the magnitude is `dist(x, D̄)`.
    pub fn signed_distance(&self, x: &Point) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(match &self.kind {
            DomainKind::HalfSpace(h) => h.signed_distance(x),
            DomainKind::Ball { center, radius } => radius - (x - center).norm(),
            DomainKind::ExteriorBall { center, radius } => (x - center).norm() - radius,
            DomainKind::Box { lower, upper } => {
                let mut inside = f64::INFINITY;
                let mut out_sq = 0.0;
                for i in 0..self.dim {
                    let (l, u, xi) = (lower[i], upper[i], x[i]);
                    inside = inside.min(xi - l).min(u - xi);
                    let excess = if xi < l { l - xi } else if xi > u { xi - u } else { 0.0 };
                    out_sq += excess * excess;
                }
                if out_sq > 0.0 { -out_sq.sqrt() } else { inside }
            }
            DomainKind::Polyhedron(faces) => {
                let inside = faces.iter().map(|h| h.signed_distance(x)).fold(f64::INFINITY, f64::min);
                if inside >= 0.0 {
                    inside
                } else {
                    -(dykstra(faces, x) - x).norm()
                }
            }
        })
    }

    /// `dist(x, D̄)`; zero on the closed domain.
    pub fn distance(&self, x: &Point) -> Result<f64> {
        Ok((-self.signed_distance(x)?).max(0.0))
    }

    /// Classifies `x` with a boundary band of half-width `tol`.
    pub fn contains(&self, x: &Point, tol: f64) -> Result<Location> {
        let sd = self.signed_distance(x)?;
        Ok(if sd > tol {
            Location::Interior
        } else if sd >= -tol {
            Location::Boundary
        } else {
            Location::Outside
        })
    }

    /// [`Domain::contains`] with [`default_tol`].
    pub fn classify(&self, x: &Point) -> Result<Location> {
        self.contains(x, default_tol(x))
    }

    /// Metric projection onto `D̄`. Points already in `D̄` are returned unchanged.
    pub fn project(&self, x: &Point) -> Result<Point> {
        check_dim(self.dim, x.len())?;
        Ok(match &self.kind {
            DomainKind::HalfSpace(h) => h.project(x),
            DomainKind::Ball { center, radius } => {
                let v = x - center;
                let r = v.norm();
                if r <= *radius {
                    x.clone()
                } else {
                    center + v * (radius / r)
                }
            }
            DomainKind::ExteriorBall { center, radius } => {
                let v = x - center;
                let r = v.norm();
                if r >= *radius {
                    return Ok(x.clone());
                }
                let distance = radius - r;
                if distance >= *radius || r == 0.0 {
                    return Err(Error::ProjectionOutOfRange { distance, rho0: *radius });
                }
                center + v * (radius / r)
            }
            DomainKind::Box { lower, upper } => {
                Point::from_iterator(self.dim, (0..self.dim).map(|i| x[i].max(lower[i]).min(upper[i])))
            }
            DomainKind::Polyhedron(faces) => {
                if faces.iter().all(|h| h.signed_distance(x) >= 0.0) {
                    x.clone()
                } else {
                    dykstra(faces, x)
                }
            }
        })
    }

    /// An inward unit normal at a boundary point, using [`default_tol`].
    pub fn normal_cone_vector(&self, x: &Point) -> Result<Point> {
        self.normal_cone_vector_tol(x, default_tol(x))
    }

    /// An inward unit normal at `x`, which must lie within `tol` of `∂D`.
    /// At polyhedral edges and corners the normalised sum of the active face
    /// normals is returned.
    pub fn normal_cone_vector_tol(&self, x: &Point, tol: f64) -> Result<Point> {
        let sd = self.signed_distance(x)?;
        if sd.abs() > tol {
            return Err(Error::NotOnBoundary { signed_distance: sd });
        }
        let n = match &self.kind {
            DomainKind::HalfSpace(h) => h.normal.clone(),
            DomainKind::Ball { center, .. } => center - x,
            DomainKind::ExteriorBall { center, .. } => x - center,
            DomainKind::Box { lower, upper } => {
                let mut n = Point::zeros(self.dim);
                for i in 0..self.dim {
                    if (x[i] - lower[i]).abs() <= tol {
                        n[i] += 1.0;
                    }
                    if (upper[i] - x[i]).abs() <= tol {
                        n[i] -= 1.0;
                    }
                }
                n
            }
            DomainKind::Polyhedron(faces) => faces
                .iter()
                .filter(|h| h.signed_distance(x).abs() <= tol)
                .fold(Point::zeros(self.dim), |acc, h| acc + &h.normal),
        };
        let len = n.norm();
        if len == 0.0 || !len.is_finite() {
            return Err(Error::NotOnBoundary { signed_distance: sd });
        }
        Ok(n / len)
    }

    /// Checks `⟨y − x, n⟩ + |y − x|² / (2r) ≥ −tol` for every sample `y`.
    /// `r = +∞` reduces to the supporting half-space test.
    pub fn verify_normal_inequality(&self, x: &Point, n: &Point, r: f64, samples: &[Point], tol: f64) -> bool {
        if x.len() != self.dim || n.len() != self.dim {
            return false;
        }
        samples.iter().all(|y| {
            if y.len() != self.dim {
                return false;
            }
            let v = y - x;
            let quad = if r.is_infinite() { 0.0 } else { v.norm_squared() / (2.0 * r) };
            v.dot(n) + quad >= -tol
        })
    }
}

fn nonzero_dim(d: usize) -> Result<usize> {
    if d == 0 {
        Err(Error::InvalidParameter("dimension must be positive".into()))
    } else {
        Ok(d)
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("radius must be finite and positive, got {r}")))
    }
}

fn check_finite(xs: &[f64], what: &str) -> Result<()> {
    if xs.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} must be finite")))
    }
}

/// Cyclic Dykstra projection onto an intersection of half-spaces.
fn dykstra(faces: &[HalfSpace], x: &Point) -> Point {
    let mut cur = x.clone();
    let mut corrections = vec![Point::zeros(x.len()); faces.len()];
    for _ in 0..DYKSTRA_MAX_ITER {
        let prev = cur.clone();
        for (h, p) in faces.iter().zip(corrections.iter_mut()) {
            let shifted = &cur + &*p;
            let next = h.project(&shifted);
            *p = shifted - &next;
            cur = next;
        }
        if (&cur - &prev).norm() <= DYKSTRA_TOL * (1.0 + cur.norm()) {
            break;
        }
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point;

    #[test]
    fn contains_examples() {
        let h = Domain::half_space(&[0.0, 1.0], 0.0).unwrap();
        assert_eq!(h.contains(&point(&[1.0, 0.5]), 1e-12).unwrap(), Location::Interior);
        let b = Domain::ball(&[0.0, 0.0], 1.0).unwrap();
        assert_eq!(b.contains(&point(&[1.0, 0.0]), 1e-12).unwrap(), Location::Boundary);
        let e = Domain::exterior_ball(&[0.0, 0.0], 1.0).unwrap();
        assert_eq!(e.contains(&point(&[0.5, 0.0]), 1e-12).unwrap(), Location::Outside);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let b = Domain::ball(&[0.0, 0.0], 1.0).unwrap();
        assert!(matches!(
            b.contains(&point(&[1.0]), 1e-12),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
        assert!(b.project(&point(&[1.0, 2.0, 3.0])).is_err());
    }

    #[test]
    fn projection_examples() {
        let h = Domain::half_space(&[0.0, 1.0], 0.0).unwrap();
        assert_eq!(h.project(&point(&[1.0, -2.0])).unwrap(), point(&[1.0, 0.0]));
        let b = Domain::ball(&[0.0, 0.0], 1.0).unwrap();
        assert_eq!(b.project(&point(&[2.0, 0.0])).unwrap(), point(&[1.0, 0.0]));
        let e = Domain::exterior_ball(&[0.0, 0.0], 1.0).unwrap();
        assert_eq!(e.project(&point(&[0.5, 0.0])).unwrap(), point(&[1.0, 0.0]));
    }

    #[test]
    fn exterior_projection_out_of_range_at_center() {
        let e = Domain::exterior_ball(&[0.0, 0.0], 1.0).unwrap();
        assert!(matches!(e.project(&point(&[0.0, 0.0])), Err(Error::ProjectionOutOfRange { .. })));
    }

    #[test]
    fn normal_examples() {
        let h = Domain::half_space(&[0.0, 1.0], 0.0).unwrap();
        assert_eq!(h.normal_cone_vector(&point(&[3.0, 0.0])).unwrap(), point(&[0.0, 1.0]));
        let b = Domain::ball(&[0.0, 0.0], 1.0).unwrap();
        assert_eq!(b.normal_cone_vector(&point(&[0.0, 1.0])).unwrap(), point(&[0.0, -1.0]));
        let e = Domain::exterior_ball(&[0.0, 0.0], 1.0).unwrap();
        assert_eq!(e.normal_cone_vector(&point(&[1.0, 0.0])).unwrap(), point(&[1.0, 0.0]));
        assert!(matches!(b.normal_cone_vector(&point(&[0.2, 0.0])), Err(Error::NotOnBoundary { .. })));
    }

    #[test]
    fn box_corner_normal_is_average_of_faces() {
        let d = Domain::cuboid(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let n = d.normal_cone_vector(&point(&[0.0, 1.0])).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((n - point(&[s, -s])).norm() < 1e-15);
    }

    #[test]
    fn normal_inequality_examples() {
        let h = Domain::half_space(&[0.0, 1.0], 0.0).unwrap();
        let mut samples = Vec::new();
        for i in 0..=20 {
            for j in 0..=10 {
                samples.push(point(&[-2.0 + 0.2 * i as f64, 0.2 * j as f64]));
            }
        }
        assert!(h.verify_normal_inequality(&point(&[0.0, 0.0]), &point(&[0.0, 1.0]), 1.0, &samples, 1e-12));

        let e = Domain::exterior_ball(&[0.0, 0.0], 1.0).unwrap();
        let x = point(&[1.0, 0.0]);
        let n = point(&[1.0, 0.0]);
        let y = vec![point(&[-1.0, 0.0])];
        assert!(!e.verify_normal_inequality(&x, &n, 2.0, &y, 1e-12));
        assert!(e.verify_normal_inequality(&x, &n, 1.0, &y, 1e-12));
    }

    #[test]
    fn constants_by_kind() {
        assert_eq!(Domain::ball(&[0.0], 1.0).unwrap().rho0(), f64::INFINITY);
        let c = Domain::exterior_ball(&[0.0, 0.0], 2.0).unwrap().constants();
        assert_eq!(c.rho0, 2.0);
        assert_eq!(c.delta, 1.0);
        assert!((c.beta - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn polyhedron_matches_box() {
        let poly = Domain::polyhedron(&[
            (vec![1.0, 0.0], 0.0),
            (vec![-1.0, 0.0], -1.0),
            (vec![0.0, 1.0], 0.0),
            (vec![0.0, -1.0], -1.0),
        ])
        .unwrap();
        let cube = Domain::cuboid(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        for x in [[2.0, 3.0], [-1.0, 0.5], [0.3, -4.0], [0.5, 0.5], [1.5, 0.2]] {
            let x = point(&x);
            let a = poly.project(&x).unwrap();
            let b = cube.project(&x).unwrap();
            assert!((a - b).norm() < 1e-10);
            assert!((poly.signed_distance(&x).unwrap() - cube.signed_distance(&x).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn empty_polyhedron_rejected() {
        let r = Domain::polyhedron(&[(vec![1.0], 1.0), (vec![-1.0], 0.0)]);
        assert!(matches!(r, Err(Error::EmptyDomain(_))));
    }

    #[test]
    fn invalid_constructors() {
        assert!(Domain::ball(&[0.0], 0.0).is_err());
        assert!(Domain::cuboid(&[1.0], &[0.0]).is_err());
        assert!(Domain::half_space(&[0.0, 0.0], 1.0).is_err());
        assert!(Domain::ball(&[], 1.0).is_err());
    }
}
