use circle_at::transport::{mst_length, ConnectionSegment, MAX_CHARGES};
use circle_at::{
    minimal_connection, steiner_tree, verify_boundary, ChargeConfig, Connection, Point, Shape, TransportError,
};
use proptest::prelude::*;

const UNIT_DISK: Shape = Shape::Disk { cx: 0.0, cy: 0.0, r: 1.0 };

// plain recursive enumeration of every plan, independent of the bitmask DP
fn brute(pos: &[Point], neg: &[Point], shape: &Shape) -> f64 {
    fn go(pos: &[Point], neg: &mut Vec<Option<Point>>, shape: &Shape) -> f64 {
        let Some((&p, rest)) = pos.split_first() else {
            return neg.iter().flatten().map(|q| shape.boundary_distance(*q)).sum();
        };
        let mut best = shape.boundary_distance(p) + go(rest, neg, shape);
        for k in 0..neg.len() {
            if let Some(q) = neg[k].take() {
                best = best.min(p.dist(q) + go(rest, neg, shape));
                neg[k] = Some(q);
            }
        }
        best
    }
    go(pos, &mut neg.iter().copied().map(Some).collect(), shape)
}

fn cfg(pos: &[(f64, f64)], neg: &[(f64, f64)]) -> ChargeConfig {
    let pts = |v: &[(f64, f64)]| v.iter().map(|&(x, y)| Point::new(x, y)).collect();
    ChargeConfig::new(pts(pos), pts(neg), UNIT_DISK).unwrap()
}

#[test]
fn small_configurations() {
    let c = minimal_connection(&cfg(&[(0.25, 0.0)], &[(-0.25, 0.0)])).unwrap();
    assert!((c.total_length - 0.5).abs() < 1e-15);
    assert_eq!(c.segments.len(), 1);
    assert_eq!(c.segments[0].q, Point::new(0.25, 0.0));

    let c = minimal_connection(&cfg(&[(0.6, 0.0), (-0.6, 0.0)], &[])).unwrap();
    assert!((c.total_length - 0.8).abs() < 1e-12);

    let c = minimal_connection(&cfg(&[(0.9, 0.0)], &[(0.0, 0.0)])).unwrap();
    assert!((c.total_length - 0.9).abs() < 1e-15);

    let c = minimal_connection(&cfg(&[], &[])).unwrap();
    assert!(c.segments.is_empty() && c.total_length == 0.0);
}

#[test]
fn charges_outside_are_rejected() {
    let r = ChargeConfig::new(vec![Point::new(1.2, 0.0)], vec![], UNIT_DISK);
    assert!(matches!(r, Err(TransportError::OutsideDomain(..))));
    let many = cfg(&[(0.1, 0.0); 5], &[(-0.1, 0.0); 4]);
    assert!(matches!(minimal_connection(&many), Err(TransportError::BudgetExceeded { got: 9, max: MAX_CHARGES })));
}

#[test]
fn boundary_verification() {
    let c = cfg(&[(0.3, 0.0)], &[(-0.3, 0.0)]);
    let conn = minimal_connection(&c).unwrap();
    assert!(verify_boundary(&conn, &c).ok);

    let flipped = Connection::new(conn.segments.iter().map(|s| ConnectionSegment { multiplicity: -1, ..*s }).collect());
    let rep = verify_boundary(&flipped, &c);
    assert!(!rep.ok);
    assert_eq!(rep.discrepancies.len(), 2);

    assert!(!verify_boundary(&Connection::empty(), &c).ok);

    let b = cfg(&[(0.5, 0.0)], &[]);
    assert!(verify_boundary(&minimal_connection(&b).unwrap(), &b).ok);
}

#[test]
fn steiner_known_trees() {
    let tri = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.5, 0.75_f64.sqrt())];
    let t = steiner_tree(&tri).unwrap();
    assert!((t.total_length - 3.0_f64.sqrt()).abs() < 1e-6);

    let sq = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
    let t = steiner_tree(&sq).unwrap();
    assert!((t.total_length - (1.0 + 3.0_f64.sqrt())).abs() < 1e-6);

    // an obtuse corner above 120 degrees needs no Steiner point
    let flat = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.5, 0.1)];
    let t = steiner_tree(&flat).unwrap();
    assert!((t.total_length - mst_length(&flat)).abs() < 1e-9);

    assert!(matches!(steiner_tree(&sq[..1]), Err(TransportError::TooFewTerminals(1))));
    assert!(matches!(steiner_tree(&[Point::new(0.0, 0.0); 6]), Err(TransportError::BudgetExceeded { .. })));
}

fn point() -> impl Strategy<Value = Point> {
    (0.0..0.8f64, 0.0..std::f64::consts::TAU).prop_map(|(r, a)| Point::new(r * a.cos(), r * a.sin()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_brute_force(pos in prop::collection::vec(point(), 0..=4), neg in prop::collection::vec(point(), 0..=4)) {
        let c = ChargeConfig::new(pos.clone(), neg.clone(), UNIT_DISK).unwrap();
        let conn = minimal_connection(&c).unwrap();
        prop_assert!((conn.total_length - brute(&pos, &neg, &UNIT_DISK)).abs() < 1e-12);
        prop_assert!(verify_boundary(&conn, &c).ok);
    }

    #[test]
    fn rigid_motion_invariance(pos in prop::collection::vec(point(), 1..=3), neg in prop::collection::vec(point(), 1..=3), a in 0.0..std::f64::consts::TAU) {
        let rot = |p: &Point| Point::new(a.cos() * p.x - a.sin() * p.y, a.sin() * p.x + a.cos() * p.y);
        let base = minimal_connection(&ChargeConfig::new(pos.clone(), neg.clone(), UNIT_DISK).unwrap()).unwrap();
        let turned = ChargeConfig::new(pos.iter().map(rot).collect(), neg.iter().map(rot).collect(), UNIT_DISK).unwrap();
        prop_assert!((minimal_connection(&turned).unwrap().total_length - base.total_length).abs() < 1e-9);
        // for the plain tree a translation is rigid too
        let mut all = pos.clone();
        all.extend(&neg);
        if all.len() <= 5 && all.len() >= 2 {
            let t0 = steiner_tree(&all).unwrap().total_length;
            let moved: Vec<Point> = all.iter().map(|p| rot(p) + Point::new(3.0, -1.5)).collect();
            prop_assert!((steiner_tree(&moved).unwrap().total_length - t0).abs() < 1e-9 * t0.max(1.0));
        }
    }

    #[test]
    fn steiner_between_ratio_and_mst(pts in prop::collection::vec(point(), 2..=5)) {
        let t = steiner_tree(&pts).unwrap();
        let m = mst_length(&pts);
        prop_assert!(t.total_length <= m * (1.0 + 1e-9));
        prop_assert!(t.total_length >= 0.75_f64.sqrt() * m - 1e-9);
    }
}
