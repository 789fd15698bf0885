//! Discrete liftings of circle-valued maps: plaquette charges, unwrapping
//! along a spanning forest of the uncut edge graph, jump-set classification,
//! the jump-minimising construction and the bounded-variation diagnostic.

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LiftingError, TransportError};
use crate::grid::{pv_diff, AngleField, Axis, Edge, EdgeSet, GridDomain, Point, ScalarField};
use crate::transport::{min_partial_matching, Connection, ConnectionSegment, Pairing};

/// Largest number of unit atoms the jump-minimising construction will match.
pub const MAX_LIFTING_ATOMS: usize = 16;
/// Consistency tolerance of [`unwrap`] and the residual bound of a valid lifting.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Distance to `2 pi Z` below which a jump opening counts as integer.
pub const CLASSIFY_TOL: f64 = 0.02;

/// A nonzero plaquette winding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Charge {
    pub center: Point,
    pub cell: (usize, usize),
    pub q: i32,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VortexSet {
    pub charges: Vec<Charge>,
}

impl VortexSet {
    pub fn total(&self) -> i32 {
        self.charges.iter().map(|c| c.q).sum()
    }
}

/// A lifting `phi` of `u` and its jump set.
#[derive(Debug, Clone)]
pub struct LiftingResult {
    pub phi: ScalarField,
    pub jump_edges: EdgeSet,
    /// Declared fractional jumps (where `u` itself jumps).
    pub fractional_edges: EdgeSet,
    /// Remaining jumps; openings in `2 pi Z`.
    pub integer_edges: EdgeSet,
    pub jump_length: f64,
    pub fractional_length: f64,
    pub integer_length: f64,
    pub max_residual: f64,
    /// Continuous connection that was rasterised into cuts, if any.
    pub connection: Option<Connection>,
}

/// Serialisable summary of a [`LiftingResult`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftingSummary {
    pub jump_length: f64,
    pub fractional_length: f64,
    pub integer_length: f64,
    pub max_residual: f64,
    pub n_jump_edges: usize,
}

impl LiftingResult {
    pub(crate) fn assemble(
        phi: ScalarField,
        jump_edges: EdgeSet,
        declared: &EdgeSet,
        max_residual: f64,
        connection: Option<Connection>,
    ) -> Self {
        let fractional_edges = declared.clone();
        let jump_edges = jump_edges.union(declared);
        let integer_edges = jump_edges.difference(declared);
        Self {
            jump_length: jump_edges.length(),
            fractional_length: fractional_edges.length(),
            integer_length: integer_edges.length(),
            phi,
            jump_edges,
            fractional_edges,
            integer_edges,
            max_residual,
            connection,
        }
    }

    pub fn summary(&self) -> LiftingSummary {
        LiftingSummary {
            jump_length: self.jump_length,
            fractional_length: self.fractional_length,
            integer_length: self.integer_length,
            max_residual: self.max_residual,
            n_jump_edges: self.jump_edges.len(),
        }
    }

    /// Recomputes `max |pv(phi - theta)|` against a given map.
    pub fn residual_against(&self, u: &AngleField) -> Result<f64, LiftingError> {
        residual(u, &self.phi)
    }
}

fn same_domain(a: &Arc<GridDomain>, b: &Arc<GridDomain>) -> Result<(), LiftingError> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(LiftingError::DomainMismatch)
    }
}

/// `max |pv(phi_k - theta_k)|` over active nodes.
pub fn residual(u: &AngleField, phi: &ScalarField) -> Result<f64, LiftingError> {
    same_domain(u.domain(), phi.domain())?;
    Ok(u.domain().active_nodes().map(|k| pv_diff(phi.values()[k], u.theta()[k]).abs()).fold(0.0, f64::max))
}

/// Winding of `u` around the active cell `(ci, cj)`, counter-clockwise.
pub fn cell_charge(u: &AngleField, ci: usize, cj: usize) -> i32 {
    let s = u.edge_increment(Edge::new(ci, cj, Axis::X)) + u.edge_increment(Edge::new(ci + 1, cj, Axis::Y))
        - u.edge_increment(Edge::new(ci, cj + 1, Axis::X))
        - u.edge_increment(Edge::new(ci, cj, Axis::Y));
    (s / TAU).round() as i32
}

/// Degree of `u` along a closed 4-connected node cycle. The cycle may or may
/// not repeat its first node at the end.
pub fn winding_of_loop(u: &AngleField, cycle: &[usize]) -> Result<i32, LiftingError> {
    let d = u.domain();
    let nodes = match cycle {
        [first, .., last] if first == last => &cycle[..cycle.len() - 1],
        _ => cycle,
    };
    if nodes.len() < 2 {
        return Err(LiftingError::InvalidLoop);
    }
    let adjacent = |a: usize, b: usize| {
        let (ai, aj) = d.coords(a);
        let (bi, bj) = d.coords(b);
        ai.abs_diff(bi) + aj.abs_diff(bj) == 1
    };
    let mut s = 0.0;
    for w in 0..nodes.len() {
        let a = nodes[w];
        let b = nodes[(w + 1) % nodes.len()];
        if a >= d.len() || b >= d.len() || !d.is_active(a) || !d.is_active(b) || !adjacent(a, b) {
            return Err(LiftingError::InvalidLoop);
        }
        s += u.increment_between(a, b);
    }
    Ok((s / TAU).round() as i32)
}

/// Counter-clockwise boundary of the node rectangle `[i0, i1] x [j0, j1]`.
pub fn rectangle_loop(d: &GridDomain, i0: usize, j0: usize, i1: usize, j1: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for i in i0..i1 {
        out.push(d.idx(i, j0));
    }
    for j in j0..j1 {
        out.push(d.idx(i1, j));
    }
    for i in (i0 + 1..=i1).rev() {
        out.push(d.idx(i, j1));
    }
    for j in (j0 + 1..=j1).rev() {
        out.push(d.idx(i0, j));
    }
    out
}

/// Nonzero plaquette windings of `u`.
pub fn detect_vortices(u: &AngleField) -> VortexSet {
    let d = u.domain();
    let charges = d
        .active_cells()
        .filter_map(|(ci, cj)| {
            let q = cell_charge(u, ci, cj);
            (q != 0).then(|| Charge { center: d.cell_center(ci, cj), cell: (ci, cj), q })
        })
        .collect();
    VortexSet { charges }
}

/// Edges whose principal-value increment exceeds `threshold`; a diagnostic
/// for steep gradients, not a jump detector.
pub fn threshold_jumps(u: &AngleField, threshold: f64) -> EdgeSet {
    let d = u.domain();
    let mut s = EdgeSet::empty(d.clone());
    for e in d.active_edges() {
        if u.edge_increment(e).abs() > threshold {
            s.insert(e).expect("active edge");
        }
    }
    s
}

/// The four edge slots of node `k`: (edge, neighbour, sign of the edge increment).
fn node_edges(d: &GridDomain, k: usize) -> impl Iterator<Item = (Edge, usize, f64)> + '_ {
    let (i, j) = d.coords(k);
    let mut out: [Option<(Edge, usize, f64)>; 4] = [None; 4];
    if i + 1 < d.nx() {
        out[0] = Some((Edge::new(i, j, Axis::X), d.idx(i + 1, j), 1.0));
    }
    if i > 0 {
        out[1] = Some((Edge::new(i - 1, j, Axis::X), d.idx(i - 1, j), -1.0));
    }
    if j + 1 < d.ny() {
        out[2] = Some((Edge::new(i, j, Axis::Y), d.idx(i, j + 1), 1.0));
    }
    if j > 0 {
        out[3] = Some((Edge::new(i, j - 1, Axis::Y), d.idx(i, j - 1), -1.0));
    }
    out.into_iter().flatten().filter(move |&(_, n, _)| d.is_active(n))
}

/// Unwraps `u` by breadth-first accumulation of principal-value increments
/// over the active edge graph minus `cuts`.
///
/// Each connected component is rooted at its smallest node index with
/// `phi_root = pv(theta_root)`.
pub fn unwrap(u: &AngleField, cuts: &EdgeSet) -> Result<LiftingResult, LiftingError> {
    let (phi, jumps, res) = unwrap_raw(u, cuts)?;
    Ok(LiftingResult::assemble(phi, jumps, &EdgeSet::empty(u.domain().clone()), res, None))
}

fn unwrap_raw(u: &AngleField, cuts: &EdgeSet) -> Result<(ScalarField, EdgeSet, f64), LiftingError> {
    let d = u.domain();
    same_domain(d, cuts.domain())?;
    let th = u.theta();
    let mut phi = vec![f64::NAN; d.len()];
    let mut seen = vec![false; d.len()];
    let mut queue = VecDeque::new();
    for root in d.active_nodes() {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        phi[root] = pv_diff(th[root], 0.0);
        queue.push_back(root);
        while let Some(k) = queue.pop_front() {
            for (e, n, sgn) in node_edges(d, k) {
                if seen[n] || cuts.contains(e) {
                    continue;
                }
                seen[n] = true;
                phi[n] = phi[k] + sgn * u.edge_increment(e);
                queue.push_back(n);
            }
        }
    }
    for e in d.active_edges() {
        if cuts.contains(e) {
            continue;
        }
        let (hi, hj) = e.head();
        let a = d.idx(e.i, e.j);
        let b = d.idx(hi, hj);
        let mismatch = (phi[b] - phi[a] - u.edge_increment(e)).abs();
        if !(mismatch < RESIDUAL_TOL) {
            return Err(LiftingError::InconsistentCuts { edge: e, mismatch });
        }
    }
    let phi = ScalarField::new(d.clone(), phi)?;
    let mut jumps = cuts.clone();
    for e in d.active_edges() {
        let (hi, hj) = e.head();
        if (phi.values()[d.idx(hi, hj)] - phi.values()[d.idx(e.i, e.j)]).abs() > PI {
            jumps.insert(e)?;
        }
    }
    let res = residual(u, &phi)?;
    Ok((phi, jumps, res))
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Edges crossed by the straight path from the centre of `start` towards
/// `target`, walking cell to cell until `done` holds for the current cell.
fn raster(
    d: &GridDomain,
    start: (usize, usize),
    from: Point,
    target: Point,
    done: &dyn Fn(isize, isize) -> bool,
    out: &mut EdgeSet,
) {
    let h = d.h();
    let o = d.origin();
    let (mut ci, mut cj) = (start.0 as isize, start.1 as isize);
    let dx = target.x - from.x;
    let dy = target.y - from.y;
    let step_x: isize = if dx > 0.0 { 1 } else { -1 };
    let step_y: isize = if dy > 0.0 { 1 } else { -1 };
    let next_line = |c: isize, s: isize, o: f64| o + (c + if s > 0 { 1 } else { 0 }) as f64 * h;
    let mut t_max_x = if dx != 0.0 { (next_line(ci, step_x, o.x) - from.x) / dx } else { f64::INFINITY };
    let mut t_max_y = if dy != 0.0 { (next_line(cj, step_y, o.y) - from.y) / dy } else { f64::INFINITY };
    let t_dx = if dx != 0.0 { h / dx.abs() } else { f64::INFINITY };
    let t_dy = if dy != 0.0 { h / dy.abs() } else { f64::INFINITY };
    let limit = 4 * (d.nx() + d.ny());
    for _ in 0..limit {
        if done(ci, cj) {
            return;
        }
        // crossing a vertical line adds the y-edge at node (k, cj); a horizontal one the x-edge at (ci, k)
        let (ei, ej, axis) = if t_max_x <= t_max_y {
            let k = if step_x > 0 { ci + 1 } else { ci };
            let e = (k, cj, Axis::Y);
            ci += step_x;
            t_max_x += t_dx;
            e
        } else {
            let k = if step_y > 0 { cj + 1 } else { cj };
            let e = (ci, k, Axis::X);
            cj += step_y;
            t_max_y += t_dy;
            e
        };
        if ei >= 0 && ej >= 0 && (ei as usize) < d.nx() && (ej as usize) < d.ny() {
            let e = Edge::new(ei as usize, ej as usize, axis);
            if d.edge_active(e) {
                out.insert(e).expect("active edge");
            }
        }
    }
}

/// Jump-minimising lifting: cells glued across the declared fractional jumps
/// form faces, face charges are matched by the exact partial-matching oracle
/// (with boundary discharge), the matched segments are rasterised into cuts,
/// and `u` is unwrapped around them. A hole in the mask is a face carrying
/// the winding of `u` around it; only the outer boundary absorbs charge.
pub fn jump_min_lifting(u: &AngleField, declared_su: &EdgeSet) -> Result<LiftingResult, LiftingError> {
    let d = u.domain();
    same_domain(d, declared_su.domain())?;
    let ncx = d.n_cells_x();
    let ncy = d.n_cells_y();
    let ncell = ncx * ncy;
    let outer = ncell;
    let in_range = |c: (isize, isize)| c.0 >= 0 && c.1 >= 0 && (c.0 as usize) < ncx && (c.1 as usize) < ncy;
    let id = |c: (isize, isize)| if in_range(c) { d.cell_idx(c.0 as usize, c.1 as usize) } else { outer };
    // inactive cells split into the exterior (reaching the frame) and holes
    let mut uf = UnionFind::new(ncell + 1);
    for cj in 0..ncy {
        for ci in 0..ncx {
            let (a, b) = (ci as isize, cj as isize);
            if d.cell_active(a, b) {
                continue;
            }
            let c = d.cell_idx(ci, cj);
            if ci == 0 || cj == 0 || ci + 1 == ncx || cj + 1 == ncy {
                uf.union(c, outer);
            }
            for n in [(a + 1, b), (a, b + 1)] {
                if in_range(n) && !d.cell_active(n.0, n.1) {
                    uf.union(c, id(n));
                }
            }
        }
    }
    // hole cell -> active neighbour and the shared edge, oriented counter-clockwise around the hole
    let outline = |ci: usize, cj: usize| {
        let (a, b) = (ci as isize, cj as isize);
        [
            ((a, b - 1), Edge::new(ci, cj, Axis::X), 1.0),
            ((a + 1, b), Edge::new(ci + 1, cj, Axis::Y), 1.0),
            ((a, b + 1), Edge::new(ci, cj + 1, Axis::X), -1.0),
            ((a - 1, b), Edge::new(ci, cj, Axis::Y), -1.0),
        ]
        .into_iter()
        .filter(|&(n, _, _)| d.cell_active(n.0, n.1))
    };
    let outer_root = uf.find(outer);
    let mut holes: Vec<(usize, usize, usize)> = Vec::new();
    let mut windings: std::collections::HashMap<usize, f64> = std::collections::HashMap::new();
    for cj in 0..ncy {
        for ci in 0..ncx {
            if d.cell_active(ci as isize, cj as isize) {
                continue;
            }
            let r = uf.find(d.cell_idx(ci, cj));
            if r == outer_root {
                continue;
            }
            holes.push((ci, cj, r));
            let turn: f64 = outline(ci, cj).map(|(_, e, s)| s * u.edge_increment(e)).sum();
            *windings.entry(r).or_insert(0.0) += turn;
        }
    }

    for e in declared_su.iter() {
        let [a, b] = d.edge_cells(e);
        uf.union(id(a), id(b));
    }

    let vortices = detect_vortices(u);
    let outer_root = uf.find(outer);
    // face root -> (net charge, member cells with the edge linking them to a hole)
    type Member = ((usize, usize), Option<Edge>);
    let mut faces: Vec<(usize, i32, Vec<Member>)> = Vec::new();
    let mut face_of = std::collections::HashMap::new();
    let mut add_charge = |r: usize, q: i32, faces: &mut Vec<(usize, i32, Vec<Member>)>| {
        let f = *face_of.entry(r).or_insert_with(|| {
            faces.push((r, 0, Vec::new()));
            faces.len() - 1
        });
        faces[f].1 += q;
    };
    for c in &vortices.charges {
        let r = uf.find(d.cell_idx(c.cell.0, c.cell.1));
        if r != outer_root {
            add_charge(r, c.q, &mut faces);
        }
    }
    for (&h0, &turn) in &windings {
        let r = uf.find(h0);
        let q = (turn / TAU).round() as i32;
        if r != outer_root && q != 0 {
            add_charge(r, q, &mut faces);
        }
    }
    faces.retain(|f| f.1 != 0);
    if !faces.is_empty() {
        let roots: std::collections::HashMap<usize, usize> = faces.iter().enumerate().map(|(i, f)| (f.0, i)).collect();
        for (ci, cj) in d.active_cells() {
            if let Some(&f) = roots.get(&uf.find(d.cell_idx(ci, cj))) {
                faces[f].2.push(((ci, cj), None));
            }
        }
        for &(ci, cj, _) in &holes {
            if let Some(&f) = roots.get(&uf.find(d.cell_idx(ci, cj))) {
                for (n, e, _) in outline(ci, cj) {
                    faces[f].2.push(((n.0 as usize, n.1 as usize), Some(e)));
                }
            }
        }
    }

    let mut atoms: Vec<usize> = Vec::new();
    let mut signs: Vec<i8> = Vec::new();
    for (f, face) in faces.iter().enumerate() {
        for _ in 0..face.1.unsigned_abs() {
            atoms.push(f);
            signs.push(if face.1 > 0 { 1 } else { -1 });
        }
    }
    if atoms.len() > MAX_LIFTING_ATOMS {
        return Err(TransportError::BudgetExceeded { got: atoms.len(), max: MAX_LIFTING_ATOMS }.into());
    }

    // discharge goes to the outer boundary; holes are faces in their own right
    let shape = d.shape().outer();
    let nf = faces.len();
    // closest members between faces and from each face to the boundary
    let none: Member = ((0, 0), None);
    let mut pair_best = vec![(f64::INFINITY, none, none); nf * nf];
    for a in 0..nf {
        for b in a + 1..nf {
            let mut best = (f64::INFINITY, none, none);
            for &ma in &faces[a].2 {
                let pa = d.cell_center(ma.0 .0, ma.0 .1);
                for &mb in &faces[b].2 {
                    let dist = pa.dist(d.cell_center(mb.0 .0, mb.0 .1));
                    if dist < best.0 {
                        best = (dist, ma, mb);
                    }
                }
            }
            pair_best[a * nf + b] = best;
            pair_best[b * nf + a] = (best.0, best.2, best.1);
        }
    }
    let bdry_best: Vec<(f64, Member)> = faces
        .iter()
        .map(|f| {
            // the rastered cut has the lattice length of its displacement, so
            // near-ties on a hole outline go to the axis-aligned member
            let key = |m: &Member| {
                let pc = d.cell_center(m.0 .0, m.0 .1);
                let dv = shape.nearest_boundary_point(pc) - pc;
                dv.x.abs() + dv.y.abs()
            };
            let m = *f.2.iter().min_by(|x, y| key(x).total_cmp(&key(y))).unwrap();
            (shape.boundary_distance(d.cell_center(m.0 .0, m.0 .1)), m)
        })
        .collect();

    let (_, plan) =
        min_partial_matching(&signs, |a, b| pair_best[atoms[a] * nf + atoms[b]].0, |a| bdry_best[atoms[a]].0);

    let exterior: Vec<bool> = (0..ncell).map(|c| uf.find(c) == outer_root).collect();
    let exits = |ci: isize, cj: isize| !in_range((ci, cj)) || (!d.cell_active(ci, cj) && exterior[id((ci, cj))]);
    let mut cuts = declared_su.clone();
    let link = |m: Member, cuts: &mut EdgeSet| {
        if let Some(e) = m.1 {
            cuts.insert(e).expect("active edge");
        }
    };
    let mut segs = Vec::new();
    for c in plan {
        match c {
            Pairing::Pair(a, b) => {
                let (_, ma, mb) = pair_best[atoms[a] * nf + atoms[b]];
                let (ca, cb) = (ma.0, mb.0);
                let pa = d.cell_center(ca.0, ca.1);
                let pb = d.cell_center(cb.0, cb.1);
                raster(d, ca, pa, pb, &|i, j| (i, j) == (cb.0 as isize, cb.1 as isize), &mut cuts);
                link(ma, &mut cuts);
                link(mb, &mut cuts);
                let (p, q) = if signs[a] > 0 { (pb, pa) } else { (pa, pb) };
                segs.push(ConnectionSegment { p, q, multiplicity: 1 });
            }
            Pairing::Boundary(a) => {
                let m = bdry_best[atoms[a]].1;
                let c = m.0;
                let pc = d.cell_center(c.0, c.1);
                let bp = shape.nearest_boundary_point(pc);
                let dir = bp - pc;
                let n = dir.norm();
                let target = if n > 0.0 { bp + dir * (2.0 * d.h() / n) } else { bp };
                raster(d, c, pc, target, &exits, &mut cuts);
                link(m, &mut cuts);
                let (p, q) = if signs[a] > 0 { (bp, pc) } else { (pc, bp) };
                segs.push(ConnectionSegment { p, q, multiplicity: 1 });
            }
        }
    }
    let (phi, jumps, res) = unwrap_raw(u, &cuts)?;
    let connection = (!segs.is_empty()).then(|| Connection::new(segs));
    Ok(LiftingResult::assemble(phi, jumps, declared_su, res, connection))
}

/// Splits the jump set into fractional and integer parts by the size of the
/// jump opening.
///
/// The opening across an edge is the raw lifting difference minus the mean
/// of the differences on the collinear neighbouring edges that are not jumps
/// themselves, so the smooth part of the gradient is removed. An opening
/// within [`CLASSIFY_TOL`] of `2 pi Z` is integer.
pub fn classify_jumps(result: &LiftingResult, u: &AngleField) -> Result<(EdgeSet, EdgeSet), LiftingError> {
    let res = result.residual_against(u)?;
    if res >= RESIDUAL_TOL {
        return Err(LiftingError::InvalidLifting(res));
    }
    let d = result.phi.domain();
    let p = result.phi.values();
    let diff = |e: Edge| {
        let (hi, hj) = e.head();
        p[d.idx(hi, hj)] - p[d.idx(e.i, e.j)]
    };
    let mut s_f = EdgeSet::empty(d.clone());
    let mut s_i = EdgeSet::empty(d.clone());
    for e in result.jump_edges.iter() {
        let mut neigh = Vec::with_capacity(2);
        let (before, after) = match e.axis {
            Axis::X => ((e.i > 0).then(|| Edge::new(e.i - 1, e.j, Axis::X)), Some(Edge::new(e.i + 1, e.j, Axis::X))),
            Axis::Y => ((e.j > 0).then(|| Edge::new(e.i, e.j - 1, Axis::Y)), Some(Edge::new(e.i, e.j + 1, Axis::Y))),
        };
        for n in [before, after].into_iter().flatten() {
            let (hi, hj) = n.head();
            if hi < d.nx() && hj < d.ny() && d.edge_active(n) && !result.jump_edges.contains(n) {
                neigh.push(diff(n));
            }
        }
        let smooth = if neigh.is_empty() { 0.0 } else { neigh.iter().sum::<f64>() / neigh.len() as f64 };
        let opening = diff(e) - smooth;
        let off = opening - TAU * (opening / TAU).round();
        if off.abs() < CLASSIFY_TOL {
            s_i.insert(e)?;
        } else {
            s_f.insert(e)?;
        }
    }
    Ok((s_f, s_i))
}

/// Discrete total variations of a lifting and of the map it lifts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DavilaIgnatReport {
    /// `sum_edges |phi_j - phi_i| h`.
    pub phi_bv: f64,
    /// `sum_edges |u_j - u_i| h` (chord lengths).
    pub u_bv: f64,
    pub ratio: f64,
    pub linf: f64,
    pub pass: bool,
}

/// Compares `|phi|_BV` with `2 |u|_BV` (pass when `ratio <= 2.2`; `0/0` passes).
pub fn davila_ignat_check(u: &AngleField, phi: &ScalarField) -> Result<DavilaIgnatReport, LiftingError> {
    let res = residual(u, phi)?;
    if res >= RESIDUAL_TOL {
        return Err(LiftingError::InvalidLifting(res));
    }
    let d = u.domain();
    let p = phi.values();
    let (mut phi_bv, mut u_bv) = (0.0, 0.0);
    for e in d.active_edges() {
        let (hi, hj) = e.head();
        phi_bv += (p[d.idx(hi, hj)] - p[d.idx(e.i, e.j)]).abs();
        u_bv += 2.0 * (0.5 * u.edge_increment(e)).sin().abs();
    }
    phi_bv *= d.h();
    u_bv *= d.h();
    let linf = d.active_nodes().map(|k| p[k].abs()).fold(0.0, f64::max);
    let ratio = if u_bv == 0.0 {
        if phi_bv == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        phi_bv / u_bv
    };
    Ok(DavilaIgnatReport { phi_bv, u_bv, ratio, linf, pass: ratio <= 2.2 })
}

/// Bounded lifting: among the branches `phi_a = a + pv(theta - a)`, `a` on
/// `samples` equispaced angles of `[-pi, pi)`, the one with least total
/// variation. Values lie in `(-2 pi, 2 pi]`.
pub fn bounded_lifting(u: &AngleField, declared_su: &EdgeSet, samples: usize) -> Result<LiftingResult, LiftingError> {
    let d = u.domain();
    same_domain(d, declared_su.domain())?;
    let samples = samples.max(1);
    let th = u.theta();
    let edges: Vec<(usize, usize)> = d
        .active_edges()
        .map(|e| {
            let (hi, hj) = e.head();
            (d.idx(e.i, e.j), d.idx(hi, hj))
        })
        .collect();
    let branch = |a: f64, t: f64| a + pv_diff(t, a);
    let mut best = (f64::INFINITY, -PI);
    for s in 0..samples {
        let a = -PI + TAU * s as f64 / samples as f64;
        let tv: f64 = edges.iter().map(|&(x, y)| (branch(a, th[y]) - branch(a, th[x])).abs()).sum();
        if tv < best.0 {
            best = (tv, a);
        }
    }
    let a = best.1;
    let vals = (0..d.len()).map(|k| if d.is_active(k) { branch(a, th[k]) } else { f64::NAN }).collect();
    let phi = ScalarField::new(d.clone(), vals)?;
    let mut jumps = EdgeSet::empty(d.clone());
    for e in d.active_edges() {
        let (hi, hj) = e.head();
        if (phi.values()[d.idx(hi, hj)] - phi.values()[d.idx(e.i, e.j)]).abs() > PI {
            jumps.insert(e)?;
        }
    }
    let res = residual(u, &phi)?;
    Ok(LiftingResult::assemble(phi, jumps, declared_su, res, None))
}
