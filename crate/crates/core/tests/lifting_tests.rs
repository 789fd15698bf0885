use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use circle_at::examples::{dipole_field, edges_crossing, perturbed_vortex, vortex_field};
use circle_at::lifting::{bounded_lifting, cell_charge, rectangle_loop, threshold_jumps, RESIDUAL_TOL};
use circle_at::{
    classify_jumps, davila_ignat_check, detect_vortices, jump_min_lifting, make_domain, minimal_connection, unwrap,
    winding_of_loop, AngleField, ChargeConfig, EdgeSet, GridDomain, LiftingError, Point, ScalarField, Segment, Shape,
};
use proptest::prelude::*;

const UNIT_DISK: Shape = Shape::Disk { cx: 0.0, cy: 0.0, r: 1.0 };

fn disk(res: usize) -> Arc<GridDomain> {
    Arc::new(make_domain(UNIT_DISK, res).unwrap())
}

fn square(res: usize) -> Arc<GridDomain> {
    Arc::new(make_domain(Shape::Square { side: 1.0 }, res).unwrap())
}

#[test]
fn loop_windings() {
    let d = disk(129);
    let u = vortex_field(&d).unwrap();
    let c = AngleField::constant(d.clone(), 1.0);
    for r in [5, 20, 40] {
        let l = rectangle_loop(&d, 64 - r, 64 - r, 64 + r, 64 + r);
        assert_eq!(winding_of_loop(&u, &l).unwrap(), 1);
        assert_eq!(winding_of_loop(&c, &l).unwrap(), 0);
    }
    assert_eq!(winding_of_loop(&u, &rectangle_loop(&d, 70, 70, 90, 90)).unwrap(), 0);
    assert!(matches!(winding_of_loop(&u, &rectangle_loop(&d, 0, 0, 5, 5)), Err(LiftingError::InvalidLoop)));
}

#[test]
fn vortices_and_orientation() {
    let d = disk(129);
    let u = vortex_field(&d).unwrap();
    let v = detect_vortices(&u);
    assert_eq!(v.charges.len(), 1);
    assert_eq!(v.charges[0].q, 1);
    assert!(v.charges[0].center.norm() < d.h());
    let conj = AngleField::new(d.clone(), u.theta().iter().map(|t| -t).collect()).unwrap();
    let w = detect_vortices(&conj);
    assert_eq!((w.charges.len(), w.charges[0].q), (1, -1));
    let smooth = AngleField::from_fn(d.clone(), |p| 3.0 * p.x * p.y + p.x).unwrap();
    assert!(detect_vortices(&smooth).charges.is_empty());
}

#[test]
fn vortex_unwraps_with_a_ray_cut() {
    let d = disk(129);
    let u = vortex_field(&d).unwrap();
    let pos = edges_crossing(&d, &[Segment::new(Point::new(0.0, 0.0), Point::new(1.0, 0.0))]);
    let r = unwrap(&u, &pos).unwrap();
    assert!(r.max_residual < RESIDUAL_TOL);
    assert!((r.jump_length - 1.0).abs() <= 2.0 * d.h());
    let (s_f, s_i) = classify_jumps(&r, &u).unwrap();
    // only the edges next to the core, where the gradient is not resolved, may look fractional
    assert!(s_f.iter().all(|e| d.edge_midpoint(e).norm() <= 5.0 * d.h()));
    assert_eq!(s_f.len() + s_i.len(), r.jump_edges.len());
    for e in r.jump_edges.iter() {
        let (hi, hj) = e.head();
        let open = r.phi.values()[d.idx(hi, hj)] - r.phi.values()[d.idx(e.i, e.j)] - u.edge_increment(e);
        assert!((open.abs() - TAU).abs() < 1e-9);
    }
    let neg = edges_crossing(&d, &[Segment::new(Point::new(0.0, 0.0), Point::new(-1.0, 0.0))]);
    let s = unwrap(&u, &neg).unwrap();
    assert!((s.jump_length - r.jump_length).abs() <= 2.0 * d.h());
    assert!(matches!(unwrap(&u, &EdgeSet::empty(d.clone())), Err(LiftingError::InconsistentCuts { .. })));
}

#[test]
fn annulus_vortex_is_cut_to_the_outer_circle() {
    let d = Arc::new(make_domain(Shape::Annulus { cx: 0.0, cy: 0.0, r_in: 0.2, r_out: 0.9 }, 129).unwrap());
    let u = vortex_field(&d).unwrap();
    let r = jump_min_lifting(&u, &EdgeSet::empty(d.clone())).unwrap();
    assert!(r.max_residual < RESIDUAL_TOL);
    assert!((r.jump_length - 0.7).abs() <= 3.0 * d.h(), "{}", r.jump_length);
    // a hole without winding needs no cut
    let c = AngleField::from_fn(d.clone(), |p| p.x * p.y).unwrap();
    assert!(jump_min_lifting(&c, &EdgeSet::empty(d.clone())).unwrap().jump_edges.is_empty());
}

#[test]
fn trivial_unwrap() {
    let d = square(17);
    let u = AngleField::constant(d.clone(), 2.5);
    let r = unwrap(&u, &EdgeSet::empty(d.clone())).unwrap();
    assert!(r.jump_edges.is_empty());
    let (lo, hi) = r.phi.min_max();
    assert!((lo - 2.5).abs() < 1e-12 && (hi - 2.5).abs() < 1e-12);
}

#[test]
fn dipole_minimal_lifting() {
    let d = disk(257);
    let u = dipole_field(&d, &[Point::new(0.3, 0.0)], &[Point::new(-0.3, 0.0)]).unwrap();
    let r = jump_min_lifting(&u, &EdgeSet::empty(d.clone())).unwrap();
    assert!((r.jump_length - 0.6).abs() <= 2.0 * d.h() + 0.05 * 0.6);
    assert!(r.max_residual < RESIDUAL_TOL);
    assert_eq!(r.fractional_length, 0.0);
}

#[test]
fn perturbed_vortex_classification() {
    let d = disk(257);
    let pv = perturbed_vortex(&d, 0.4).unwrap();
    let (s_f, s_i) = classify_jumps(&pv.reference, &pv.u).unwrap();
    assert!((s_f.length() - 0.2).abs() <= 2.0 * d.h());
    assert!((s_i.length() - 0.7).abs() <= 2.0 * d.h());
    let r = jump_min_lifting(&pv.u, &pv.su).unwrap();
    assert!((r.jump_length - 0.9).abs() <= 2.0 * d.h() + 0.05 * 0.9);
    assert!((r.jump_length - (r.fractional_length + r.integer_length)).abs() < 1e-12);
    assert!(pv.su.iter().all(|e| r.jump_edges.contains(e)));
}

#[test]
fn quarter_turn_jump_is_fractional() {
    let d = square(33);
    let u = AngleField::from_fn(d.clone(), |p| if p.x < 0.5 { 0.0 } else { PI / 2.0 }).unwrap();
    let declared = threshold_jumps(&u, 0.5 * PI - 1e-9);
    assert!(!declared.is_empty());
    let r = jump_min_lifting(&u, &declared).unwrap();
    let (s_f, s_i) = classify_jumps(&r, &u).unwrap();
    assert_eq!(s_f.len(), r.jump_edges.len());
    assert!(s_i.is_empty());
}

#[test]
fn davila_ignat_examples() {
    let d = square(9);
    let c = AngleField::constant(d.clone(), 0.3);
    let rep = davila_ignat_check(&c, &ScalarField::constant(d.clone(), 0.3)).unwrap();
    assert!(rep.pass && rep.ratio == 0.0);

    let strip = Arc::new(make_domain(Shape::Rect { w: PI, h: 0.5 }, 33).unwrap());
    let u = AngleField::from_fn(strip.clone(), |p| p.x).unwrap();
    let phi = ScalarField::from_fn(strip.clone(), |p| p.x).unwrap();
    let rep = davila_ignat_check(&u, &phi).unwrap();
    // per-edge scalar oracle |dt| / (2 sin(|dt|/2)) for the x-edges, nothing on y-edges
    let dt = strip.h();
    let oracle = dt / (2.0 * (0.5 * dt).sin());
    assert!((rep.ratio - oracle).abs() < 1e-9);
    assert!(rep.ratio <= PI / 2.0 && rep.pass);

    let wrong = ScalarField::constant(d.clone(), 1.0);
    assert!(matches!(davila_ignat_check(&c, &wrong), Err(LiftingError::InvalidLifting(_))));
}

#[test]
fn bounded_lifting_stays_bounded() {
    let d = disk(97);
    let pv = perturbed_vortex(&d, 0.4).unwrap();
    let r = bounded_lifting(&pv.u, &pv.su, 128).unwrap();
    assert!(r.max_residual < RESIDUAL_TOL);
    let rep = davila_ignat_check(&pv.u, &r.phi).unwrap();
    assert!(rep.linf <= TAU + 1e-12);
    assert!(rep.pass, "{rep:?}");
}

fn charge_pair() -> impl Strategy<Value = (Point, Point)> {
    let p = (-0.7..0.7f64, -0.7..0.7f64).prop_map(|(x, y)| Point::new(x, y));
    (p.clone(), p).prop_filter("separated", |(a, b)| a.dist(*b) > 0.15)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn charge_additivity(seed in 0u64..10_000, i0 in 0usize..20, j0 in 0usize..20, wi in 1usize..12, wj in 1usize..12) {
        let d = square(33);
        let u = AngleField::new(d.clone(), (0..d.len()).map(|k| ((k as u64 * 2654435761 + seed) % 6283) as f64 * 1e-3).collect()).unwrap();
        let (i1, j1) = (i0 + wi, j0 + wj);
        let inside: i32 = (i0..i1).flat_map(|ci| (j0..j1).map(move |cj| (ci, cj))).map(|(ci, cj)| cell_charge(&u, ci, cj)).sum();
        prop_assert_eq!(winding_of_loop(&u, &rectangle_loop(&d, i0, j0, i1, j1)).unwrap(), inside);
    }

    #[test]
    fn cuts_sufficient_iff_unwrap_succeeds((p, n) in charge_pair()) {
        let d = disk(65);
        let u = dipole_field(&d, &[p], &[n]).unwrap();
        // skip charges so close to a lattice line that the discrete charge sits in the next plaquette
        let charges = detect_vortices(&u).charges;
        let cell = |q: i32| charges.iter().find(|c| c.q == q).map(|c| (c.cell.0 as isize, c.cell.1 as isize));
        prop_assume!(charges.len() == 2 && cell(1) == Some(d.cell_of(p)) && cell(-1) == Some(d.cell_of(n)));
        let ray = |a: Point| Segment::new(a, a * (1.2 / a.norm().max(1e-9)));
        // a single ray through the other charge would terminate it too
        prop_assume!(ray(p).distance(n) > 4.0 * d.h());
        let joined = edges_crossing(&d, &[Segment::new(n, p)]);
        let both = edges_crossing(&d, &[ray(p), ray(n)]);
        let one = edges_crossing(&d, &[ray(p)]);
        for cuts in [&joined, &both] {
            let r = unwrap(&u, cuts).unwrap();
            prop_assert!(r.max_residual < RESIDUAL_TOL);
        }
        let is_inconsistent = matches!(unwrap(&u, &one), Err(LiftingError::InconsistentCuts { .. }));
        prop_assert!(is_inconsistent);
    }

    #[test]
    fn minimal_lifting_bounds((p, n) in charge_pair(), c in -PI..PI) {
        let d = disk(65);
        let u = dipole_field(&d, &[p], &[n]).unwrap();
        let none = EdgeSet::empty(d.clone());
        let r = jump_min_lifting(&u, &none).unwrap();
        prop_assert!(r.max_residual < RESIDUAL_TOL);
        let conn = minimal_connection(&ChargeConfig::new(vec![p], vec![n], UNIT_DISK).unwrap()).unwrap();
        prop_assert!(r.jump_length >= conn.total_length - 2.0 * d.h());
        // near-ties may pick a different plan, so the staircase bound uses the plan actually rasterized
        let own = r.connection.as_ref().unwrap();
        prop_assert!(own.total_length <= conn.total_length + 4.0 * d.h());
        let l1: f64 = own.segments.iter().map(|s| (s.p.x - s.q.x).abs() + (s.p.y - s.q.y).abs()).sum();
        prop_assert!(r.jump_length <= l1 + 4.0 * d.h());
        let shifted = jump_min_lifting(&u.shifted(c), &none).unwrap();
        prop_assert_eq!(shifted.jump_length, r.jump_length);
    }
}
