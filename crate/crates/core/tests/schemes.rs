use nalgebra::DMatrix;
use proptest::prelude::*;
use rsde::analysis::{median, sup_error, ErrorMode};
use rsde::driver::{sample_brownian, sample_jump_driver, GridPath, JumpDriverSpec, JumpLaw, Partition};
use rsde::flow::{Coefficient, FlowConfig, WorkingRegion};
use rsde::geometry::{Domain, Location};
use rsde::schemes::{
    build_reference, run_jump_adapted_scheme, run_marcus_euler, run_projection_scheme, run_scheme, run_wz_bar_scheme,
    run_wz_hat_scheme, SchemeKind, SchemeOutput, SchemeSpec,
};
use rsde::{point, Point};

const KINDS: [SchemeKind; 5] =
    [SchemeKind::Projection, SchemeKind::JumpAdapted, SchemeKind::WzHat, SchemeKind::WzBar, SchemeKind::MarcusEuler];

fn big_box(d: usize) -> Domain {
    Domain::cuboid(&vec![-1e3; d], &vec![1e3; d]).unwrap()
}

fn exp_coefficient() -> Coefficient {
    Coefficient::linear_diagonal(1, 1.0, WorkingRegion { center: point(&[0.0]), radius: 1e3 }).unwrap()
}

fn spec(kind: SchemeKind, horizon: f64, cells: usize, z: &GridPath) -> SchemeSpec {
    SchemeSpec::new(kind, Partition::uniform(horizon, cells).unwrap()).with_observation(z.times().to_vec())
}

fn exp_target(z: &GridPath, drift: f64) -> GridPath {
    let xs = z.times().iter().zip(z.values()).map(|(t, w)| point(&[(w[0] - drift * t).exp()])).collect();
    GridPath::new(z.times().to_vec(), xs, z.interp(), vec![]).unwrap()
}

/// wz-hat runs the unreflected cell ODE between grid points, and linear
/// interpolants between nodes can cut through a non-convex hole, so off
/// the partition containment is only checked where it must hold.
fn check_invariants(domain: &Domain, out: &SchemeOutput, kind: SchemeKind) {
    for i in 0..out.x.len() {
        let (x, y, k) = (&out.x.values()[i], &out.y.values()[i], &out.k.values()[i]);
        assert!((x - (y + k)).norm() <= 1e-10 * (1.0 + x.norm()), "decomposition at {i}");
        if kind != SchemeKind::WzHat && domain.is_convex() {
            assert!(domain.classify(x).unwrap().in_closure(), "{kind:?}: containment at {i}: {x}");
        }
    }
    for x in out.x_on_grid() {
        assert!(domain.classify(&x).unwrap().in_closure(), "{kind:?}: containment on the grid: {x}");
    }
    let bad = out.k_variation.windows(2).position(|w| w[1] < w[0]);
    assert!(bad.is_none(), "{kind:?}: k variation decreases at {bad:?}: {:?}", bad.map(|i| (out.x.times()[i], out.x.times()[i + 1], out.k_variation[i], out.k_variation[i + 1])));
}

#[test]
fn marcus_euler_targets_stratonovich() {
    let f = exp_coefficient();
    let x0 = point(&[1.0]);
    let mut last = f64::INFINITY;
    for cells in [16, 64, 256] {
        let (mut es, mut ei) = (Vec::new(), Vec::new());
        for seed in 0..20 {
            let z = sample_brownian(1.0, 1024, 1, seed).unwrap();
            let out = run_marcus_euler(&big_box(1), &f, &x0, &z, &spec(SchemeKind::MarcusEuler, 1.0, cells, &z)).unwrap();
            let grid = ErrorMode::FixedTimes(out.grid.clone());
            es.push(sup_error(&out.x, &exp_target(&z, 0.0), 1.0, &grid).unwrap());
            ei.push(sup_error(&out.x, &exp_target(&z, 0.5), 1.0, &grid).unwrap());
        }
        let (e_s, e_i) = (median(&es), median(&ei));
        assert!(e_s < last && e_s < e_i, "cells {cells}: {e_s} vs itô {e_i}");
        last = e_s;
    }
    assert!(last < 0.1, "{last}");
}

#[test]
fn marcus_euler_with_constant_field_is_projection() {
    let z = sample_jump_driver(
        &JumpDriverSpec {
            horizon: 1.0,
            steps: 256,
            dim: 2,
            jump_rate: 3.0,
            jump_law: JumpLaw::UniformBall { radius: 0.4 },
            diffusion_scale: 0.5,
        },
        4,
    )
    .unwrap();
    let f = Coefficient::constant(DMatrix::from_row_slice(2, 2, &[1.0, 0.2, -0.3, 0.8])).unwrap();
    let d = Domain::ball(&[0.0, 0.0], 1.0).unwrap();
    let x0 = point(&[0.5, 0.0]);
    let a = run_marcus_euler(&d, &f, &x0, &z, &spec(SchemeKind::MarcusEuler, 1.0, 32, &z)).unwrap();
    let b = run_projection_scheme(&d, &f, &x0, &z, &spec(SchemeKind::Projection, 1.0, 32, &z)).unwrap();
    for (p, q) in a.x_on_grid().iter().zip(b.x_on_grid()) {
        assert!((p - q).norm() < 1e-12);
    }
}

#[test]
fn zero_driver_keeps_start() {
    let z = GridPath::constant(vec![0.0, 0.5, 1.0], point(&[0.0, 0.0])).unwrap();
    let f = Coefficient::trig(2, 1.0).unwrap();
    let x0 = point(&[0.3, -0.2]);
    for kind in KINDS {
        let out = run_scheme(&Domain::ball(&[0.0, 0.0], 1.0).unwrap(), &f, &x0, &z, &spec(kind, 1.0, 8, &z)).unwrap();
        assert!(out.x.values().iter().all(|x| (x - &x0).norm() < 1e-15), "{kind:?}");
        assert_eq!(out.k_total(), 0.0);
    }
}

#[test]
fn jump_adapted_on_continuous_driver_is_uniform_projection() {
    let z = sample_brownian(1.0, 512, 2, 8).unwrap();
    let f = Coefficient::tanh_diagonal(2, 0.8).unwrap();
    let d = Domain::cuboid(&[-0.5, -0.5], &[0.5, 0.5]).unwrap();
    let x0 = point(&[0.0, 0.0]);
    let a = run_jump_adapted_scheme(&d, &f, &x0, &z, 16, &spec(SchemeKind::JumpAdapted, 1.0, 16, &z)).unwrap();
    let b = run_projection_scheme(&d, &f, &x0, &z, &spec(SchemeKind::Projection, 1.0, 16, &z)).unwrap();
    assert_eq!(a.grid, b.grid);
    assert_eq!(a.x_on_grid(), b.x_on_grid());
}

#[test]
fn wz_bar_matches_wz_hat_away_from_boundary() {
    let z = sample_brownian(1.0, 256, 2, 21).unwrap();
    let z = GridPath::linear(z.times().to_vec(), z.values().iter().map(|v| v * 0.2).collect()).unwrap();
    let f = Coefficient::trig(2, 1.0).unwrap();
    let x0 = point(&[0.0, 0.0]);
    let d = big_box(2);
    let hat = run_wz_hat_scheme(&d, &f, &x0, &z, &spec(SchemeKind::WzHat, 1.0, 16, &z)).unwrap();
    let bar = run_wz_bar_scheme(&d, &f, &x0, &z, &spec(SchemeKind::WzBar, 1.0, 16, &z).with_substeps_bar(4096)).unwrap();
    assert_eq!(hat.k_total(), 0.0);
    assert_eq!(bar.k_total(), 0.0);
    let err = sup_error(&hat.x, &bar.x, 1.0, &ErrorMode::FixedTimes(hat.grid.clone())).unwrap();
    assert!(err < 1e-3, "{err}");
}

#[test]
fn reference_matches_one_dimensional_oracle() {
    let z = sample_brownian(1.0, 1000, 1, 5).unwrap();
    let d = Domain::half_space(&[1.0], 0.0).unwrap();
    let f = Coefficient::identity(1).unwrap();
    let x0 = 0.2;
    let r = build_reference(&d, &f, &point(&[x0]), &z, 64).unwrap();
    let mut low = 0.0f64;
    for (&t, w) in z.times().iter().zip(z.values()) {
        let y = x0 + w[0];
        low = low.max(-y);
        assert!((r.x.eval(t)[0] - (y + low)).abs() < 1e-12, "t = {t}");
    }
}

#[test]
fn reference_is_self_consistent() {
    let z = sample_brownian(1.0, 1024, 2, 33).unwrap();
    let d = Domain::ball(&[0.0, 0.0], 1.0).unwrap();
    let f = Coefficient::trig(2, 0.6).unwrap();
    let x0 = point(&[0.8, 0.0]);
    let r1 = build_reference(&d, &f, &x0, &z, 128).unwrap();
    let r2 = build_reference(&d, &f, &x0, &z, 256).unwrap();
    let coarse = run_projection_scheme(&d, &f, &x0, &z, &spec(SchemeKind::Projection, 1.0, 8, &z)).unwrap();
    let gap = sup_error(&r1.x, &r2.x, 1.0, &ErrorMode::Uniform).unwrap();
    let err = sup_error(&coarse.x, &r2.x, 1.0, &ErrorMode::Uniform).unwrap();
    assert!(gap < err, "{gap} vs {err}");
}

#[test]
fn projection_error_shrinks_for_continuous_driver() {
    let d = Domain::ball(&[0.0, 0.0], 1.0).unwrap();
    let f = Coefficient::trig(2, 0.5).unwrap();
    let x0 = point(&[0.7, 0.0]);
    let mut meds = Vec::new();
    for cells in [8, 32, 128] {
        let errs: Vec<f64> = (0..20)
            .map(|s| {
                let z = sample_brownian(1.0, 2048, 2, s).unwrap();
                let r = build_reference(&d, &f, &x0, &z, 512).unwrap();
                let out = run_projection_scheme(&d, &f, &x0, &z, &spec(SchemeKind::Projection, 1.0, cells, &z)).unwrap();
                sup_error(&out.x, &r.x, 1.0, &ErrorMode::FixedTimes(out.grid.clone())).unwrap()
                    + sup_error(&out.k, &r.k, 1.0, &ErrorMode::FixedTimes(out.grid.clone())).unwrap()
            })
            .collect();
        meds.push(median(&errs));
    }
    assert!(meds.windows(2).all(|w| w[1] < w[0]), "{meds:?}");
}

#[test]
fn wz_hat_grid_error_shrinks_for_jump_driver() {
    let d = Domain::ball(&[0.0, 0.0], 1.0).unwrap();
    let f = Coefficient::trig(2, 0.8).unwrap();
    let x0 = point(&[0.8, 0.0]);
    let jspec = JumpDriverSpec {
        horizon: 1.0,
        steps: 1024,
        dim: 2,
        jump_rate: 2.0,
        jump_law: JumpLaw::UniformBall { radius: 0.5 },
        diffusion_scale: 0.7,
    };
    let mut meds = Vec::new();
    for cells in [8, 32, 128] {
        let errs: Vec<f64> = (0..20)
            .map(|s| {
                let z = sample_jump_driver(&jspec, s).unwrap();
                let r = build_reference(&d, &f, &x0, &z, 512).unwrap();
                let out = run_wz_hat_scheme(&d, &f, &x0, &z, &spec(SchemeKind::WzHat, 1.0, cells, &z)).unwrap();
                sup_error(&out.x, &r.x, 1.0, &ErrorMode::FixedTimes(out.grid.clone())).unwrap()
            })
            .collect();
        meds.push(median(&errs));
    }
    assert!(meds.windows(2).all(|w| w[1] < w[0]), "{meds:?}");
}

#[test]
fn tangential_push_on_disk() {
    let d = Domain::ball(&[0.0, 0.0], 1.0).unwrap();
    let f = Coefficient::identity(2).unwrap();
    let z = GridPath::linear(vec![0.0, 1.0], vec![point(&[0.0, 0.0]), point(&[0.0, 1.0])]).unwrap();
    let x0 = point(&[1.0, 0.0]);
    let p = Partition::uniform(1.0, 1).unwrap();
    let bar = run_wz_bar_scheme(&d, &f, &x0, &z, &SchemeSpec::new(SchemeKind::WzBar, p.clone()).with_substeps_bar(2048)).unwrap();
    let theta = 1f64.sinh().atan();
    assert!((bar.x.eval(1.0) - point(&[theta.cos(), theta.sin()])).norm() < 1e-3);
    let proj = run_projection_scheme(&d, &f, &x0, &z, &SchemeSpec::new(SchemeKind::Projection, p)).unwrap();
    let s = 0.5f64.sqrt();
    assert!((proj.x.eval(1.0) - point(&[s, s])).norm() < 1e-15);
}

fn domain_for(i: usize) -> Domain {
    match i {
        0 => Domain::half_space(&[0.0, 1.0], -0.3).unwrap(),
        1 => Domain::ball(&[0.0, 0.0], 1.0).unwrap(),
        2 => Domain::cuboid(&[-0.6, -0.6], &[0.6, 0.6]).unwrap(),
        3 => Domain::polyhedron(&[(vec![1.0, 0.0], -0.5), (vec![0.0, 1.0], -0.5), (vec![-1.0, -1.0], -0.8)]).unwrap(),
        _ => Domain::exterior_ball(&[0.0, 0.0], 1.0).unwrap(),
    }
}

fn coefficient_for(i: usize) -> Coefficient {
    match i {
        0 => Coefficient::identity(2).unwrap(),
        1 => Coefficient::trig(2, 0.5).unwrap(),
        _ => Coefficient::tanh_diagonal(2, 0.6).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn outputs_satisfy_solution_invariants(seed in 0u64..10_000, di in 0usize..5, ci in 0usize..3, cells in 2usize..24) {
        let domain = domain_for(di);
        let f = coefficient_for(ci);
        let x0 = if di == 4 { point(&[1.2, 0.0]) } else { Point::zeros(2) };
        prop_assert_eq!(domain.classify(&x0).unwrap() == Location::Outside, false);
        let z = sample_jump_driver(
            &JumpDriverSpec { horizon: 1.0, steps: 128, dim: 2, jump_rate: 2.0, jump_law: JumpLaw::UniformBall { radius: 0.3 }, diffusion_scale: 0.3 },
            seed,
        ).unwrap();
        for kind in KINDS {
            let s = spec(kind, 1.0, cells, &z).with_flow(FlowConfig::scheme()).with_substeps_bar(16);
            let out = run_scheme(&domain, &f, &x0, &z, &s).unwrap();
            check_invariants(&domain, &out, kind);
        }
    }

    #[test]
    fn wz_hat_agrees_with_projection_on_the_grid(seed in 0u64..10_000, di in 0usize..5, ci in 0usize..3, cells in 1usize..24) {
        let domain = domain_for(di);
        let f = coefficient_for(ci);
        let x0 = if di == 4 { point(&[1.2, 0.0]) } else { Point::zeros(2) };
        let z = sample_brownian(1.0, 96, 2, seed).unwrap();
        let z = GridPath::linear(z.times().to_vec(), z.values().iter().map(|v| v * 0.4).collect()).unwrap();
        let hat = run_wz_hat_scheme(&domain, &f, &x0, &z, &spec(SchemeKind::WzHat, 1.0, cells, &z)).unwrap();
        let proj = run_projection_scheme(&domain, &f, &x0, &z, &spec(SchemeKind::Projection, 1.0, cells, &z)).unwrap();
        prop_assert_eq!(hat.x_on_grid(), proj.x_on_grid());
    }
}
