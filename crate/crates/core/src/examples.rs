//! Worked examples: the vortex map, the perturbed vortex with its reference
//! lifting, dipole fields, the GSBV-but-not-SBV lifting built from nested
//! rectangles, and recovery pairs for both regimes.

use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::ExampleError;
use crate::grid::{pv_diff, AngleField, Axis, Edge, EdgeSet, GridDomain, Point, ScalarField, Segment, Shape};
use crate::lifting::LiftingResult;
use crate::solver::Regime;

const NODE_TOL: f64 = 1e-12;

/// `3 t^2 - 2 t^3` clamped to `[0, 1]`.
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn check_no_node_at(domain: &GridDomain, c: Point) -> Result<(), ExampleError> {
    if domain.active_nodes().any(|k| domain.node_pos(k).dist(c) < NODE_TOL) {
        return Err(ExampleError::InvalidParameter(format!(
            "singular point ({}, {}) coincides with a grid node",
            c.x, c.y
        )));
    }
    Ok(())
}

/// `u(x) = (x - c) / |x - c|` as the angle `atan2`, with `c` the shape centre.
pub fn vortex_field(domain: &Arc<GridDomain>) -> Result<AngleField, ExampleError> {
    let c = domain.shape().center();
    check_no_node_at(domain, c)?;
    Ok(AngleField::from_fn(domain.clone(), |p| (p.y - c.y).atan2(p.x - c.x))?)
}

/// Product of unit vortices: `sum atan2(x - x_i) - sum atan2(x - y_i)`.
pub fn dipole_field(
    domain: &Arc<GridDomain>,
    positives: &[Point],
    negatives: &[Point],
) -> Result<AngleField, ExampleError> {
    for &c in positives.iter().chain(negatives) {
        check_no_node_at(domain, c)?;
    }
    Ok(AngleField::from_fn(domain.clone(), |p| {
        positives.iter().map(|c| (p.y - c.y).atan2(p.x - c.x)).sum::<f64>()
            - negatives.iter().map(|c| (p.y - c.y).atan2(p.x - c.x)).sum::<f64>()
    })?)
}

/// Active edges whose primal segment crosses one of `segs`.
pub fn edges_crossing(domain: &Arc<GridDomain>, segs: &[Segment]) -> EdgeSet {
    let mut out = EdgeSet::empty(domain.clone());
    let h = domain.h();
    for e in domain.active_edges() {
        let a = domain.pos(e.i, e.j);
        let b = match e.axis {
            Axis::X => Point::new(a.x + h, a.y),
            Axis::Y => Point::new(a.x, a.y + h),
        };
        if segs.iter().any(|s| crosses(a, b, s)) {
            out.insert(e).expect("active edge");
        }
    }
    out
}

/// Whether the half-open primal edge `(a, b]` meets the closed segment `s`.
/// A node lying on `s` belongs to the edge below (left of) it, matching the
/// branch of `atan2` that puts the axis itself on the upper side.
fn crosses(a: Point, b: Point, s: &Segment) -> bool {
    let r = b - a;
    let q = s.q - s.p;
    let den = r.x * q.y - r.y * q.x;
    if den == 0.0 {
        return false;
    }
    let w = s.p - a;
    let t = (w.x * q.y - w.y * q.x) / den;
    let u = (w.x * r.y - w.y * r.x) / den;
    t > 0.0 && t <= 1.0 && (0.0..=1.0).contains(&u)
}

/// The perturbed vortex and its reference lifting.
#[derive(Debug, Clone)]
pub struct PerturbedVortex {
    pub sigma: f64,
    pub u: AngleField,
    /// `theta_sigma = chi_sigma(r) theta`, `theta` in `[0, 2 pi)`.
    pub theta_ref: ScalarField,
    /// Edges crossed by the fractional jump `(sigma/4, 3 sigma/4) x {0}`.
    pub su: EdgeSet,
    /// Reference lifting: jumps on `(sigma/4, r) x {0}`.
    pub reference: LiftingResult,
    pub su_segment: Segment,
    pub sphi_segment: Segment,
    /// `r - sigma/4`, the minimal jump length.
    pub m2_expected: f64,
}

/// Analytic `theta_sigma` about `c`.
pub fn theta_sigma(p: Point, c: Point, sigma: f64) -> f64 {
    let d = p - c;
    let theta = d.y.atan2(d.x).rem_euclid(TAU);
    let chi = smoothstep((d.norm() - 0.25 * sigma) / (0.5 * sigma));
    chi * theta
}

pub fn perturbed_vortex(domain: &Arc<GridDomain>, sigma: f64) -> Result<PerturbedVortex, ExampleError> {
    let Shape::Disk { cx, cy, r } = domain.shape() else {
        return Err(ExampleError::InvalidParameter("perturbed vortex needs a disk domain".into()));
    };
    if !(sigma > 0.0 && sigma < r) {
        return Err(ExampleError::InvalidParameter(format!("sigma must lie in (0, {r}), got {sigma}")));
    }
    if !(0.25 * sigma > 4.0 * domain.h()) {
        return Err(ExampleError::Resolution(format!(
            "sigma/4 = {} must exceed 4h = {}",
            0.25 * sigma,
            4.0 * domain.h()
        )));
    }
    let c = Point::new(cx, cy);
    let vals: Vec<f64> = (0..domain.len()).map(|k| theta_sigma(domain.node_pos(k), c, sigma)).collect();
    let u = AngleField::new(domain.clone(), vals.clone())?;
    let theta_ref = ScalarField::new(domain.clone(), vals)?;
    let su_segment = Segment::new(Point::new(cx + 0.25 * sigma, cy), Point::new(cx + 0.75 * sigma, cy));
    let sphi_segment = Segment::new(Point::new(cx + 0.25 * sigma, cy), Point::new(cx + r, cy));
    let su = edges_crossing(domain, &[su_segment]);
    let jumps = edges_crossing(domain, &[sphi_segment]);
    let reference = LiftingResult::assemble(theta_ref.clone(), jumps, &su, 0.0, None);
    Ok(PerturbedVortex { sigma, u, theta_ref, su, reference, su_segment, sphi_segment, m2_expected: r - 0.25 * sigma })
}

/// Truncation-level quantities of the nested-rectangle lifting, computed
/// from the exact geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GsbvSummary {
    pub n_max: usize,
    pub p: f64,
    /// Integral of `|[phi]|` over the lateral edges of `V_n`, `W_n`, `n <= n_max`.
    pub partial_jump_variation: f64,
    /// Length of the jump set in `{x >= 2^-(n_max + 2)}`.
    pub partial_jump_length: f64,
    /// `sum_{n <= n_max} (a_n + b_n)`, `a_n = n^(3p-2) / 2^(n+1)`, `b_n = (n+1)^(3p-2) / 2^(n+2)`.
    pub grad_p_norm: f64,
    /// Exact `int |grad phi|^p` over `V_n`, `W_n`, `n <= n_max`.
    pub grad_p_norm_exact: f64,
    /// `sum_{n even <= n_max} 1/n`.
    pub harmonic_partial: f64,
}

fn inv_sq(m: usize) -> f64 {
    1.0 / (m as f64).powi(2)
}

fn pow2(k: usize) -> f64 {
    0.5f64.powi(k as i32)
}

fn pow10(k: usize) -> f64 {
    10f64.powi(-(k as i32))
}

/// The height where `T_2` and the constant rectangle end: `1/4 + 1/100`.
const D_TOP: f64 = 0.26;

/// `phi = alpha + beta y` on the piece containing `(x, y)`, using levels `n <= nlev`.
fn gsbv_piece(x: f64, y: f64, nlev: usize) -> (f64, f64) {
    let inside = |x0: f64, x1: f64, y0: f64, y1: f64| x >= x0 && x < x1 && y >= y0 && y < y1;
    if inside(0.25, 0.5, 0.0, D_TOP) {
        return (4.0, 0.0);
    }
    for n in (2..=nlev).step_by(2) {
        let nf = n as f64;
        let (xa, xb, xc, xe) = (pow2(n + 1), pow2(n), pow2(n - 1), pow2(n + 2));
        let y_t = inv_sq(n);
        if inside(xa, xc, y_t, y_t + pow10(n)) {
            return (nf * nf, 0.0);
        }
        let y_b = pow10(n + 1);
        if inside(xe, xb, 0.0, y_b) {
            return ((nf + 1.0).powi(2), 0.0);
        }
        if inside(xa, xb, y_b, y_t) {
            let beta = (nf * nf - (nf + 1.0).powi(2)) / (y_t - y_b);
            return ((nf + 1.0).powi(2) - beta * y_b, beta);
        }
        let y_w = inv_sq(n + 2);
        if inside(xe, xa, y_b, y_w) {
            let beta = ((nf + 2.0).powi(2) - (nf + 1.0).powi(2)) / (y_w - y_b);
            return ((nf + 1.0).powi(2) - beta * y_b, beta);
        }
    }
    (4.0, 0.0)
}

/// Value of the lifting truncated at level `n_max`: the construction for
/// `n <= n_max`, and the constant `(n_max + 1)^2` left of `x = 2^-(n_max + 2)`.
pub fn gsbv_value(p: Point, n_max: usize) -> f64 {
    if p.x < pow2(n_max + 2) {
        return (n_max as f64 + 1.0).powi(2);
    }
    let (a, b) = gsbv_piece(p.x, p.y, n_max);
    a + b * p.y
}

/// `int_{y0}^{y1} |a + b y| dy`.
fn abs_affine_integral(a: f64, b: f64, y0: f64, y1: f64) -> f64 {
    let prim = |y: f64| a * y + 0.5 * b * y * y;
    if b != 0.0 {
        let z = -a / b;
        if z > y0 && z < y1 {
            return (prim(z) - prim(y0)).abs() + (prim(y1) - prim(z)).abs();
        }
    }
    (prim(y1) - prim(y0)).abs()
}

struct Breakpoints {
    xs: Vec<f64>,
    ys: Vec<f64>,
    nlev: usize,
}

impl Breakpoints {
    fn new(nlev: usize) -> Self {
        let mut xs = vec![0.0, 1.0, 0.25, 0.5];
        for k in 1..=nlev + 3 {
            xs.push(pow2(k));
        }
        let mut ys = vec![0.0, 1.0, D_TOP];
        for n in (2..=nlev).step_by(2) {
            ys.extend([inv_sq(n), inv_sq(n) + pow10(n), pow10(n + 1), inv_sq(n + 2)]);
        }
        let clean = |v: &mut Vec<f64>| {
            v.retain(|x| (0.0..=1.0).contains(x));
            v.sort_by(f64::total_cmp);
            v.dedup();
        };
        clean(&mut xs);
        clean(&mut ys);
        Self { xs, ys, nlev }
    }

    fn piece(&self, i: usize, j: usize) -> (f64, f64) {
        let x = 0.5 * (self.xs[i] + self.xs[i + 1]);
        let y = 0.5 * (self.ys[j] + self.ys[j + 1]);
        gsbv_piece(x, y, self.nlev)
    }

    /// `int |[phi]|` across the vertical line `xs[i]` over `(ys[j], ys[j+1])`.
    fn vertical_jump(&self, i: usize, j: usize) -> f64 {
        let (al, bl) = self.piece(i - 1, j);
        let (ar, br) = self.piece(i, j);
        abs_affine_integral(al - ar, bl - br, self.ys[j], self.ys[j + 1])
    }

    fn horizontal_jump(&self, i: usize, j: usize) -> f64 {
        let y = self.ys[j];
        let (ab, bb) = self.piece(i, j - 1);
        let (aa, ba) = self.piece(i, j);
        ((ab + bb * y) - (aa + ba * y)).abs() * (self.xs[i + 1] - self.xs[i])
    }

    fn x_index(&self, x: f64) -> usize {
        self.xs.iter().position(|&v| v == x).expect("breakpoint")
    }

    fn y_index(&self, y: f64) -> usize {
        self.ys.iter().position(|&v| v == y).expect("breakpoint")
    }
}

/// Analytic partial sums at truncation level `n_max` (even, at least 2).
pub fn gsbv_summary(n_max: usize, p: f64) -> Result<GsbvSummary, ExampleError> {
    if n_max < 2 || n_max % 2 != 0 {
        return Err(ExampleError::InvalidParameter(format!("n_max must be even and >= 2, got {n_max}")));
    }
    if !(p >= 1.0) {
        return Err(ExampleError::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    let bp = Breakpoints::new(n_max + 4);

    // lateral edges of V_n and W_n as (x, y0, y1); overlapping pieces on one line are merged
    let mut lateral: Vec<(f64, f64, f64)> = Vec::new();
    for n in (2..=n_max).step_by(2) {
        let y_b = pow10(n + 1);
        lateral.push((pow2(n + 1), y_b, inv_sq(n)));
        lateral.push((pow2(n), y_b, inv_sq(n)));
        lateral.push((pow2(n + 2), y_b, inv_sq(n + 2)));
        lateral.push((pow2(n + 1), y_b, inv_sq(n + 2)));
    }
    let mut covered = std::collections::HashSet::new();
    for &(x, y0, y1) in &lateral {
        let i = bp.x_index(x);
        for j in bp.y_index(y0)..bp.y_index(y1) {
            covered.insert((i, j));
        }
    }
    let partial_jump_variation: f64 = covered.iter().map(|&(i, j)| bp.vertical_jump(i, j)).sum();

    let x_cut = pow2(n_max + 2);
    let mut partial_jump_length = 0.0;
    for i in 1..bp.xs.len() - 1 {
        if bp.xs[i] < x_cut {
            continue;
        }
        for j in 0..bp.ys.len() - 1 {
            if bp.vertical_jump(i, j) > 0.0 {
                partial_jump_length += bp.ys[j + 1] - bp.ys[j];
            }
        }
    }
    for i in 0..bp.xs.len() - 1 {
        if bp.xs[i] < x_cut {
            continue;
        }
        for j in 1..bp.ys.len() - 1 {
            if bp.horizontal_jump(i, j) > 0.0 {
                partial_jump_length += bp.xs[i + 1] - bp.xs[i];
            }
        }
    }

    let (mut grad_p_norm, mut grad_p_norm_exact, mut harmonic_partial) = (0.0, 0.0, 0.0);
    for n in (2..=n_max).step_by(2) {
        let nf = n as f64;
        grad_p_norm +=
            nf.powf(3.0 * p - 2.0) / 2f64.powi(n as i32 + 1) + (nf + 1.0).powf(3.0 * p - 2.0) / 2f64.powi(n as i32 + 2);
        let y_b = pow10(n + 1);
        let hv = inv_sq(n) - y_b;
        let hw = inv_sq(n + 2) - y_b;
        let sv = ((nf + 1.0).powi(2) - nf * nf) / hv;
        let sw = ((nf + 2.0).powi(2) - (nf + 1.0).powi(2)) / hw;
        grad_p_norm_exact += sv.powf(p) * hv * pow2(n + 1) + sw.powf(p) * hw * pow2(n + 2);
        harmonic_partial += 1.0 / nf;
    }
    Ok(GsbvSummary {
        n_max,
        p,
        partial_jump_variation,
        partial_jump_length,
        grad_p_norm,
        grad_p_norm_exact,
        harmonic_partial,
    })
}

/// Largest even level whose smallest width `2^-(n+2)` spans at least `2h`.
pub fn gsbv_max_resolvable(h: f64) -> Option<usize> {
    (2..=60).step_by(2).take_while(|&n| pow2(n + 2) >= 2.0 * h).last()
}

/// The truncated lifting sampled on a unit-square grid, with its analytic summary.
pub fn gsbv_example(
    domain: &Arc<GridDomain>,
    n_max: usize,
    p: f64,
) -> Result<(ScalarField, GsbvSummary), ExampleError> {
    match domain.shape() {
        Shape::Square { side } if side == 1.0 => {}
        s => return Err(ExampleError::InvalidParameter(format!("needs the unit square, got {s}"))),
    }
    let summary = gsbv_summary(n_max, p)?;
    if gsbv_max_resolvable(domain.h()).map_or(true, |m| n_max > m) {
        return Err(ExampleError::Resolution(format!(
            "level {n_max} is not resolvable at h = {} (2^-(n+2) must be >= 2h)",
            domain.h()
        )));
    }
    let phi = ScalarField::from_fn(domain.clone(), |q| gsbv_value(q, n_max))?;
    Ok((phi, summary))
}

/// `sum |grad phi|^p h^2` over the cells whose four corners lie in one affine
/// piece, read off the sampled field by finite differences.
pub fn gsbv_grid_grad_p_norm(phi: &ScalarField, n_max: usize, p: f64) -> f64 {
    let d = phi.domain();
    let h = d.h();
    let vals = phi.values();
    let cut = pow2(n_max + 2);
    let mut total = 0.0;
    for j in 0..d.ny() - 1 {
        for i in 0..d.nx() - 1 {
            let corners = [d.pos(i, j), d.pos(i + 1, j), d.pos(i, j + 1), d.pos(i + 1, j + 1)];
            let key = |c: &Point| if c.x < cut { None } else { Some(gsbv_piece(c.x, c.y, n_max)) };
            if corners[1..].iter().any(|c| key(c) != key(&corners[0])) {
                continue;
            }
            let at = |a, b| vals[d.idx(a, b)];
            let gx = 0.5 * (at(i + 1, j) - at(i, j) + at(i + 1, j + 1) - at(i, j + 1)) / h;
            let gy = 0.5 * (at(i, j + 1) - at(i, j) + at(i + 1, j + 1) - at(i + 1, j)) / h;
            total += gx.hypot(gy).powf(p) * h * h;
        }
    }
    total
}

/// Which limit map a recovery pair approximates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RecoveryExample {
    Constant { angle: f64 },
    PerturbedVortex { sigma: f64 },
}

/// A recovery pair; `phi` is the single-valued lifting in the constrained regime.
#[derive(Debug, Clone)]
pub struct RecoveryPair {
    pub u: AngleField,
    pub v: ScalarField,
    pub phi: Option<ScalarField>,
}

/// The exponential phase-field profile around `segs` with a zero core of width `xi`.
pub fn recovery_profile(domain: &Arc<GridDomain>, segs: &[Segment], eps: f64, xi: f64) -> ScalarField {
    if segs.is_empty() {
        return ScalarField::constant(domain.clone(), 1.0);
    }
    let dist = crate::grid::distance_to_segments(domain, segs);
    let vals =
        dist.values().iter().map(|&d| if d <= xi { 0.0 } else { 1.0 - (-(d - xi) / (2.0 * eps)).exp() }).collect();
    ScalarField::new(domain.clone(), vals).expect("finite")
}

/// Blends `f` across the `xi`-tube of a single segment: inside the tube the
/// value is interpolated between `f(p* - xi n)` and `f(p* + xi n)` along the
/// normal `n`, with `combine(a, b, t)` doing the interpolation.
fn blend_across<F, C>(domain: &Arc<GridDomain>, seg: Segment, xi: f64, f: F, combine: C) -> Vec<f64>
where
    F: Fn(Point) -> f64,
    C: Fn(f64, f64, f64) -> f64,
{
    let d = seg.q - seg.p;
    let len = d.norm();
    let n = Point::new(-d.y / len, d.x / len);
    (0..domain.len())
        .map(|k| {
            let x = domain.node_pos(k);
            if seg.distance(x) >= xi {
                return f(x);
            }
            let c = seg.closest_point(x);
            let s = (x.x - c.x) * n.x + (x.y - c.y) * n.y;
            let t = ((s + xi) / (2.0 * xi)).clamp(0.0, 1.0);
            combine(f(c - n * xi), f(c + n * xi), t)
        })
        .collect()
}

/// Recovery pair for `example` at `(eps, xi)`: in the relaxed regime the
/// phase field vanishes on the `xi`-tube around the fractional jump set and
/// `u` is blended along the shortest arc across it; in the constrained
/// regime the tube surrounds the full jump set of the minimal lifting, which
/// is blended linearly so that `u = exp(i phi)` with `phi` single-valued.
pub fn recovery_pair(
    domain: &Arc<GridDomain>,
    example: RecoveryExample,
    eps: f64,
    xi: f64,
    regime: Regime,
) -> Result<RecoveryPair, ExampleError> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(ExampleError::InvalidParameter(format!("eps must lie in (0, 1], got {eps}")));
    }
    if !(xi > 0.0 && xi < 0.25 * eps) {
        return Err(ExampleError::InvalidParameter(format!("xi must lie in (0, eps/4), got {xi}")));
    }
    match example {
        RecoveryExample::Constant { angle } => {
            let u = AngleField::constant(domain.clone(), angle);
            let v = ScalarField::constant(domain.clone(), 1.0);
            let phi = (regime == Regime::Constrained).then(|| ScalarField::constant(domain.clone(), angle));
            Ok(RecoveryPair { u, v, phi })
        }
        RecoveryExample::PerturbedVortex { sigma } => {
            let pv = perturbed_vortex(domain, sigma)?;
            let c = domain.shape().center();
            let th = |x: Point| theta_sigma(x, c, sigma);
            match regime {
                Regime::Relaxed => {
                    let seg = pv.su_segment;
                    let vals = blend_across(domain, seg, xi, th, |a, b, t| a + t * pv_diff(b, a));
                    let u = AngleField::new(domain.clone(), vals)?;
                    let v = recovery_profile(domain, &[seg], eps, xi);
                    Ok(RecoveryPair { u, v, phi: None })
                }
                Regime::Constrained => {
                    let seg = pv.sphi_segment;
                    let vals = blend_across(domain, seg, xi, th, |a, b, t| a + t * (b - a));
                    let phi = ScalarField::new(domain.clone(), vals)?;
                    let v = recovery_profile(domain, &[seg], eps, xi);
                    Ok(RecoveryPair { u: phi.to_angles(), v, phi: Some(phi) })
                }
            }
        }
    }
}

/// Edges of the lattice along the segment `(x0, x1) x {y}`, as a set; used by tests and the CLI sidecar.
pub fn horizontal_cut(domain: &Arc<GridDomain>, x0: f64, x1: f64, y: f64) -> EdgeSet {
    edges_crossing(domain, &[Segment::new(Point::new(x0, y), Point::new(x1, y))])
}

/// Edge list helper for serialisation.
pub fn edge_list(set: &EdgeSet) -> Vec<Edge> {
    set.iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_domain, wrap_angle};
    use std::f64::consts::FRAC_PI_2;

    fn disk(res: usize) -> Arc<GridDomain> {
        Arc::new(make_domain(Shape::Disk { cx: 0.0, cy: 0.0, r: 1.0 }, res).unwrap())
    }

    #[test]
    fn vortex_axis_values() {
        let d = disk(129);
        let u = vortex_field(&d).unwrap();
        for k in d.active_nodes() {
            let p = d.node_pos(k);
            assert!((u.theta()[k] - p.y.atan2(p.x)).abs() < 1e-15);
        }
        // no node lies on the axes, so check the formula through atan2 directly
        assert_eq!((0.0f64).atan2(0.5), 0.0);
        assert_eq!((0.5f64).atan2(0.0), FRAC_PI_2);
        let sq = Arc::new(make_domain(Shape::Square { side: 1.0 }, 33).unwrap());
        assert!(vortex_field(&sq).is_err());
        let sq = Arc::new(make_domain(Shape::Square { side: 1.0 }, 32).unwrap());
        assert!(vortex_field(&sq).is_ok());
    }

    #[test]
    fn perturbed_vortex_regions() {
        let d = disk(257);
        let sigma = 0.4;
        let pv = perturbed_vortex(&d, sigma).unwrap();
        let v = vortex_field(&d).unwrap();
        for k in d.active_nodes() {
            let r = d.node_pos(k).norm();
            if r > 0.75 * sigma {
                assert!(pv_diff(pv.u.theta()[k], v.theta()[k]).abs() < 1e-12);
            }
            if r < 0.25 * sigma {
                assert_eq!(wrap_angle(pv.u.theta()[k]), 0.0);
            }
        }
        assert!((pv.su.length() - 0.5 * sigma).abs() <= 2.0 * d.h());
        assert!((pv.reference.jump_length - 0.9).abs() <= 2.0 * d.h());
        assert!(perturbed_vortex(&disk(33), 0.4).is_err());
    }

    #[test]
    fn gsbv_closed_forms() {
        let s = gsbv_summary(2, 2.0).unwrap();
        // a_2 at p = 2
        let a2 = 2f64.powi(4) / 2f64.powi(3);
        assert_eq!(a2, 2.0);
        assert!((s.grad_p_norm - (a2 + 3f64.powi(4) / 16.0)).abs() < 1e-12);
        assert_eq!(s.harmonic_partial, 0.5);
        assert!(gsbv_summary(3, 2.0).is_err());
        // the constant rectangle
        assert_eq!(gsbv_value(Point::new(0.3, 0.1), 8), 4.0);
        assert_eq!(gsbv_value(Point::new(0.45, 0.255), 8), 4.0);
        // T_4 and B_5
        assert_eq!(gsbv_value(Point::new(0.05, 1.0 / 16.0 + 0.5e-4), 8), 16.0);
        assert_eq!(gsbv_value(Point::new(0.03, 0.5e-5), 8), 25.0);
    }

    #[test]
    fn abs_affine_integrals() {
        assert!((abs_affine_integral(-1.0, 2.0, 0.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((abs_affine_integral(1.0, 0.0, 0.0, 2.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn recovery_rejects_bad_xi() {
        let d = disk(33);
        let ex = RecoveryExample::Constant { angle: 0.0 };
        assert!(recovery_pair(&d, ex, 0.1, 0.05, Regime::Relaxed).is_err());
        assert!(recovery_pair(&d, ex, 0.1, 0.0, Regime::Relaxed).is_err());
        let r = recovery_pair(&d, ex, 0.1, 0.01, Regime::Constrained).unwrap();
        assert!(r.v.values().iter().filter(|x| !x.is_nan()).all(|&x| x == 1.0));
    }
}
