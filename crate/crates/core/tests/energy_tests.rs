use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use circle_at::energy::{dirichlet_energy, ms_lift_value};
use circle_at::examples::{perturbed_vortex, vortex_field};
use circle_at::{
    at_energy, at_energy_lifted, jump_min_lifting, make_domain, mm_energy, ms_circle_value, AngleField, EdgeSet,
    EnergyError, GridDomain, ScalarField, Shape,
};
use proptest::prelude::*;

fn square(res: usize) -> Arc<GridDomain> {
    Arc::new(make_domain(Shape::Square { side: 1.0 }, res).unwrap())
}

fn disk(res: usize) -> Arc<GridDomain> {
    Arc::new(make_domain(Shape::Disk { cx: 0.0, cy: 0.0, r: 1.0 }, res).unwrap())
}

#[test]
fn trivial_totals() {
    let d = square(21);
    let u = AngleField::constant(d.clone(), 0.7);
    assert_eq!(at_energy(&u, &ScalarField::constant(d.clone(), 1.0), 0.3).unwrap().total, 0.0);
    let r = at_energy(&u, &ScalarField::constant(d.clone(), 0.0), 0.25).unwrap();
    assert!((r.total - 1.0).abs() < 1e-12 && r.well == r.total);
    assert_eq!(mm_energy(&ScalarField::constant(d, 1.0), 0.1).unwrap(), 0.0);
}

#[test]
fn out_of_range_v_is_rejected() {
    let d = square(9);
    let u = AngleField::constant(d.clone(), 0.0);
    let v = ScalarField::constant(d.clone(), 1.5);
    assert!(matches!(at_energy(&u, &v, 0.1), Err(EnergyError::VOutOfRange { .. })));
    assert!(matches!(at_energy(&u, &ScalarField::constant(d, 1.0), 0.0), Err(EnergyError::InvalidEps(_))));
}

#[test]
fn annulus_vortex_energy() {
    let d = Arc::new(make_domain(Shape::Annulus { cx: 0.0, cy: 0.0, r_in: 0.2, r_out: 0.9 }, 257).unwrap());
    let u = vortex_field(&d).unwrap();
    let r = at_energy(&u, &ScalarField::constant(d.clone(), 1.0), 0.1).unwrap();
    let expect = TAU * 4.5_f64.ln();
    assert!((r.bulk - expect).abs() <= 0.03 * expect, "{} vs {expect}", r.bulk);
    assert_eq!((r.grad_v, r.well), (0.0, 0.0));
}

#[test]
fn unit_v_total_is_dirichlet() {
    let d = disk(97);
    let pv = perturbed_vortex(&d, 0.4).unwrap();
    let r = at_energy(&pv.u, &ScalarField::constant(d.clone(), 1.0), 0.05).unwrap();
    assert!((r.total - dirichlet_energy(&pv.u, None)).abs() < 1e-9 * r.total);
}

#[test]
fn pure_vertical_jump() {
    let d = Arc::new(make_domain(Shape::Square { side: 1.0 }, 40).unwrap());
    let u = AngleField::from_fn(d.clone(), |p| if p.x < 0.5 { 0.0 } else { PI / 2.0 }).unwrap();
    let mut jumps = EdgeSet::empty(d.clone());
    for e in d.active_edges() {
        let (hi, hj) = e.head();
        if u.theta()[d.idx(e.i, e.j)] != u.theta()[d.idx(hi, hj)] {
            jumps.insert(e).unwrap();
        }
    }
    let m = ms_circle_value(&u, &jumps);
    assert_eq!(m.dirichlet, 0.0);
    assert!((m.jump - 40.0 * d.h()).abs() < 1e-12);
    assert!((m.jump - 1.0).abs() <= d.h() + 1e-12);
}

#[test]
fn perturbed_vortex_limit_values() {
    let d = disk(257);
    let pv = perturbed_vortex(&d, 0.4).unwrap();
    let circle = ms_circle_value(&pv.u, &pv.su);
    assert!((circle.jump - 0.2).abs() <= 2.0 * d.h());
    assert!((circle.dirichlet - dirichlet_energy(&pv.u, Some(&pv.su))).abs() < 1e-12);
    let lift = jump_min_lifting(&pv.u, &pv.su).unwrap();
    let lifted = ms_lift_value(&pv.u, &lift).unwrap();
    assert!((lifted.jump - 0.9).abs() <= 2.0 * d.h() + 0.05 * 0.9);
    assert!(lifted.total >= circle.total);
}

#[test]
fn smooth_degree_zero_has_no_lifting_jump() {
    let d = square(33);
    let u = AngleField::from_fn(d.clone(), |p| (PI * p.x).sin() * (PI * p.y).sin()).unwrap();
    let none = EdgeSet::empty(d.clone());
    let lift = jump_min_lifting(&u, &none).unwrap();
    let a = ms_lift_value(&u, &lift).unwrap();
    let b = ms_circle_value(&u, &none);
    assert_eq!(a.jump, 0.0);
    assert!((a.total - b.total).abs() < 1e-12);
}

#[test]
fn one_dimensional_profile() {
    let eps = 0.05;
    let h = eps / 20.0;
    let len = 40.0 * eps;
    let d = Arc::new(make_domain(Shape::Rect { w: len, h }, (len / h).round() as usize + 1).unwrap());
    let v = ScalarField::from_fn(d.clone(), |p| 1.0 - (-p.x / (2.0 * eps)).exp()).unwrap();
    let per_side = mm_energy(&v, eps).unwrap() / h;
    // independent 1D midpoint quadrature of the same integrand
    let n = (len / h).round() as usize;
    let oracle: f64 = (0..n)
        .map(|i| {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            let (va, vb) = (1.0 - (-a / (2.0 * eps)).exp(), 1.0 - (-b / (2.0 * eps)).exp());
            eps * ((vb - va) / h).powi(2) * h + 0.5 * ((va - 1.0).powi(2) + (vb - 1.0).powi(2)) / (4.0 * eps) * h
        })
        .sum();
    assert!((per_side - oracle).abs() < 1e-9);
    assert!((per_side - 0.5).abs() <= 1e-3, "{per_side}");
}

#[test]
fn tube_profile_across_rectangle() {
    let eps = 0.05;
    let d = Arc::new(make_domain(Shape::Rect { w: 1.0, h: 1.0 }, 101).unwrap());
    assert!((d.h() - eps / 5.0).abs() < 1e-12);
    let seg = circle_at::Segment::new(circle_at::Point::new(0.0, 0.5), circle_at::Point::new(1.0, 0.5));
    let v = circle_at::examples::recovery_profile(&d, &[seg], eps, 0.0);
    let mm = mm_energy(&v, eps).unwrap();
    assert!((mm - 1.0).abs() <= 0.05, "{mm}");
}

#[test]
fn lifted_energy_sees_raw_jumps() {
    let d = square(17);
    let phi = ScalarField::from_fn(d.clone(), |p| if p.x < 0.5 { 0.0 } else { TAU }).unwrap();
    let one = ScalarField::constant(d.clone(), 1.0);
    let raw = at_energy_lifted(&phi, &one, 0.1).unwrap();
    let circ = at_energy(&phi.to_angles(), &one, 0.1).unwrap();
    assert!(raw.bulk > 1.0);
    assert!(circ.bulk < 1e-20);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn energies_are_gauge_invariant(alpha in -PI..PI, k in -3i32..=3, seed in 0u64..500) {
        let d = disk(33);
        let u = AngleField::from_fn(d.clone(), |p| (p.y - 0.05).atan2(p.x - 0.03) + (seed as f64 * 0.01) * p.x).unwrap();
        let v = ScalarField::from_fn(d.clone(), |p| 0.5 + 0.4 * (5.0 * p.x + seed as f64).sin()).unwrap();
        let rep: Vec<f64> = u.theta().iter().enumerate().map(|(i, t)| t + alpha + TAU * ((i as i32 * 7 + k) % 4) as f64).collect();
        let w = AngleField::new(d.clone(), rep).unwrap();
        let (a, b) = (at_energy(&u, &v, 0.1).unwrap(), at_energy(&w, &v, 0.1).unwrap());
        for (x, y) in [(a.bulk, b.bulk), (a.grad_v, b.grad_v), (a.well, b.well), (a.total, b.total)] {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
        let phi = ScalarField::from_fn(d.clone(), |p| 2.0 * p.x + p.y * p.y).unwrap();
        let phi2 = ScalarField::new(d.clone(), phi.values().iter().map(|x| x + TAU * k as f64).collect()).unwrap();
        let (c, e) = (at_energy_lifted(&phi, &v, 0.1).unwrap(), at_energy_lifted(&phi2, &v, 0.1).unwrap());
        prop_assert!((c.total - e.total).abs() <= 1e-12 * c.total.max(1.0));
    }

    #[test]
    fn report_parts_are_consistent(eps in 0.01..1.0f64, c in 0.0..1.0f64) {
        let d = square(17);
        let u = AngleField::from_fn(d.clone(), |p| 3.0 * p.x * p.y).unwrap();
        let v = ScalarField::from_fn(d.clone(), |p| c * p.x).unwrap();
        let r = at_energy(&u, &v, eps).unwrap();
        prop_assert!(r.bulk >= 0.0 && r.grad_v >= 0.0 && r.well >= 0.0);
        prop_assert!((r.total - (r.bulk + r.grad_v + r.well)).abs() <= 1e-12 * r.total.max(1.0));
        prop_assert!((mm_energy(&v, eps).unwrap() - r.surface()).abs() <= 1e-12 * r.total.max(1.0));
    }
}
