use nalgebra::DMatrix;
use proptest::prelude::*;
use rsde::flow::{flow, jump_defect, marcus_jump, Coefficient, FlowConfig, WorkingRegion};
use rsde::{point, Point};

fn catalog() -> Vec<Coefficient> {
    let region = WorkingRegion { center: point(&[0.0, 0.0]), radius: 2.0 };
    vec![
        Coefficient::constant(DMatrix::from_row_slice(2, 2, &[1.0, -0.5, 0.3, 2.0])).unwrap(),
        Coefficient::identity(2).unwrap(),
        Coefficient::linear_diagonal(2, 1.0, region.clone()).unwrap(),
        Coefficient::linear_diagonal(2, -0.7, region).unwrap(),
        Coefficient::trig(2, 1.0).unwrap(),
        Coefficient::trig(2, 0.5).unwrap().with_finite_differences(),
        Coefficient::tanh_diagonal(2, 1.5).unwrap(),
    ]
}

/// Random point of the working region (a disk of radius 1 for bounded kinds).
fn in_region(f: &Coefficient, u: f64, a: f64) -> Point {
    let (c, r) = f.region().map(|w| (w.center.clone(), w.radius)).unwrap_or((point(&[0.0, 0.0]), 1.0));
    c + point(&[a.cos(), a.sin()]) * (r * u.sqrt())
}

#[test]
fn rotation_flow() {
    let g = |y: &Point| point(&[-y[1], y[0]]);
    let y = flow(g, &point(&[1.0, 0.0]), &FlowConfig::new(64).unwrap()).unwrap();
    assert!((y - point(&[1f64.cos(), 1f64.sin()])).norm() < 1e-8);
}

#[test]
fn exponential_flow_at_64_steps() {
    let y = flow(|y: &Point| y.clone(), &point(&[1.0]), &FlowConfig::new(64).unwrap()).unwrap();
    assert!((y[0] - std::f64::consts::E).abs() < 1e-8);
}

#[test]
fn constant_field_translates() {
    let c = point(&[0.25, -1.5, 3.0]);
    let y = flow(|_: &Point| c.clone(), &point(&[1.0, 1.0, 1.0]), &FlowConfig::scheme()).unwrap();
    assert!((y - point(&[1.25, -0.5, 4.0])).norm() < 1e-14);
}

#[test]
fn blow_up_is_reported() {
    let r = flow(|y: &Point| y.map(|v| v * v * 1e3), &point(&[10.0]), &FlowConfig::scheme());
    assert!(matches!(r, Err(rsde::Error::NonFinite)));
}

#[test]
fn fourth_order_convergence() {
    let e = |n: usize| (flow(|y: &Point| y.clone(), &point(&[1.0]), &FlowConfig::new(n).unwrap()).unwrap()[0] - 1f64.exp()).abs();
    for n in [4, 8, 16] {
        let ratio = e(n) / e(2 * n);
        assert!((14.0..18.0).contains(&ratio), "n = {n}: ratio {ratio}");
    }
}

#[test]
fn half_flows_compose() {
    let g = |y: &Point| point(&[y[1].sin(), -y[0] + 0.3 * y[1]]);
    let half = |y: &Point| g(y) * 0.5;
    let cfg = FlowConfig::reference();
    let x = point(&[0.4, -0.9]);
    let once = flow(g, &x, &cfg).unwrap();
    let twice = flow(half, &flow(half, &x, &cfg).unwrap(), &cfg).unwrap();
    assert!((once - twice).norm() < 1e-11);
}

#[test]
fn scalar_marcus_jump_is_exponential() {
    let f = Coefficient::linear_diagonal(1, 1.0, WorkingRegion { center: point(&[0.0]), radius: 10.0 }).unwrap();
    for (x, z) in [(2.0, 0.7), (-1.0, -0.4), (0.5, 1.0)] {
        let y = marcus_jump(&f, &point(&[z]), &point(&[x]), &FlowConfig::reference()).unwrap();
        assert!((y[0] - x * f64::exp(z)).abs() < 1e-10);
    }
    let d = jump_defect(&f, &point(&[0.1]), &point(&[1.0]), &FlowConfig::reference()).unwrap();
    assert!((d[0] - 0.005_170_918).abs() < 1e-8);
}

#[test]
fn sampled_norms_within_declared_bounds() {
    for f in catalog() {
        let b = f.bounds();
        for i in 0..50 {
            let x = in_region(&f, (i as f64 + 0.5) / 50.0, i as f64 * 2.4);
            let ff = f.ff_prime(&x);
            let norm = ff.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt();
            assert!(norm <= b.sup_ff * (1.0 + 1e-9) + 1e-12, "{:?}: {norm} > {}", f.kind(), b.sup_ff);
            assert!(f.evaluate(&x).norm() <= b.sup_frobenius * (1.0 + 1e-9) + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn defect_is_quadratic(u in 0.0..1.0f64, a in 0.0..6.3f64, r in 0.0..1.0f64, b in 0.0..6.3f64) {
        let dz = point(&[b.cos(), b.sin()]) * r;
        for f in catalog() {
            let x = in_region(&f, u, a);
            let d = jump_defect(&f, &dz, &x, &FlowConfig::reference()).unwrap();
            let bound = f.bounds().defect_constant(r) * r * r;
            prop_assert!(d.norm() <= bound * (1.0 + 1e-9) + 1e-12, "{:?}: {} > {}", f.kind(), d.norm(), bound);
        }
    }

    #[test]
    fn normalized_defect_is_lipschitz(u in 0.0..1.0f64, a in 0.0..6.3f64, v in 0.0..1.0f64, c in 0.0..6.3f64,
                                      r in 0.05..1.0f64, b in 0.0..6.3f64) {
        let dz = point(&[b.cos(), b.sin()]) * r;
        for f in catalog() {
            let x = in_region(&f, u, a);
            let y = in_region(&f, v, c);
            let cfg = FlowConfig::reference();
            let hx = jump_defect(&f, &dz, &x, &cfg).unwrap() / (r * r);
            let hy = jump_defect(&f, &dz, &y, &cfg).unwrap() / (r * r);
            let lip = f.bounds().defect_lipschitz_constant(r);
            prop_assert!((hx - hy).norm() <= lip * (&x - &y).norm() * (1.0 + 1e-9) + 1e-8, "{:?}", f.kind());
        }
    }
}
