//! Exhaustive oracles for minimal connections of signed unit charges (with
//! free discharge to the boundary) and for small Euclidean Steiner trees.

use serde::{Deserialize, Serialize};

use crate::error::TransportError;
use crate::grid::{Point, Segment, Shape};

/// Largest charge count accepted by [`minimal_connection`].
pub const MAX_CHARGES: usize = 8;
/// Largest terminal count accepted by [`steiner_tree`].
pub const MAX_TERMINALS: usize = 5;

const BOUNDARY_TOL: f64 = 1e-9;

/// Oriented weighted segment; its boundary is `m (delta_q - delta_p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectionSegment {
    pub p: Point,
    pub q: Point,
    pub multiplicity: i32,
}

/// A finite union of segments; length is not weighted by multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Connection {
    pub segments: Vec<ConnectionSegment>,
    pub total_length: f64,
}

impl Connection {
    pub fn new(segments: Vec<ConnectionSegment>) -> Self {
        let total_length = segments.iter().map(|s| s.p.dist(s.q)).sum();
        Self { segments, total_length }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new())
    }

    pub fn geometry(&self) -> Vec<Segment> {
        self.segments.iter().map(|s| Segment::new(s.p, s.q)).collect()
    }
}

/// Positive charges `x_i`, negative charges `y_i`, and the ambient shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeConfig {
    pub positives: Vec<Point>,
    pub negatives: Vec<Point>,
    pub shape: Shape,
}

impl ChargeConfig {
    pub fn new(positives: Vec<Point>, negatives: Vec<Point>, shape: Shape) -> Result<Self, TransportError> {
        for p in positives.iter().chain(&negatives) {
            if !(shape.boundary_distance(*p) > 0.0) {
                return Err(TransportError::OutsideDomain(p.x, p.y));
            }
        }
        Ok(Self { positives, negatives, shape })
    }

    pub fn n_charges(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }
}

/// How one charge is resolved in a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    Pair(usize, usize),
    Boundary(usize),
}

/// Exact minimum-cost partial matching of signed atoms.
///
/// Every atom is either paired with an atom of opposite sign (cost
/// `pair(a, b)`) or sent to the boundary (cost `bdry(a)`). Returns the
/// optimal cost and plan; ties are broken towards the lexicographically first
/// choice in the bitmask recursion.
pub fn min_partial_matching<P, B>(signs: &[i8], pair: P, bdry: B) -> (f64, Vec<Pairing>)
where
    P: Fn(usize, usize) -> f64,
    B: Fn(usize) -> f64,
{
    let n = signs.len();
    let full = (1usize << n) - 1;
    let mut best = vec![f64::INFINITY; full + 1];
    let mut choice = vec![Pairing::Boundary(0); full + 1];
    best[0] = 0.0;
    for mask in 1..=full {
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut b = bdry(i) + best[rest];
        let mut c = Pairing::Boundary(i);
        let mut m = rest;
        while m != 0 {
            let j = m.trailing_zeros() as usize;
            m &= m - 1;
            if signs[i] != signs[j] {
                let cost = pair(i, j) + best[rest & !(1 << j)];
                if cost < b {
                    b = cost;
                    c = Pairing::Pair(i, j);
                }
            }
        }
        best[mask] = b;
        choice[mask] = c;
    }
    let mut plan = Vec::new();
    let mut mask = full;
    while mask != 0 {
        let c = choice[mask];
        plan.push(c);
        match c {
            Pairing::Boundary(i) => mask &= !(1 << i),
            Pairing::Pair(i, j) => mask &= !((1 << i) | (1 << j)),
        }
    }
    (best[full], plan)
}

/// Shortest connection whose boundary is `mu - nu` relative to the domain boundary.
pub fn minimal_connection(cfg: &ChargeConfig) -> Result<Connection, TransportError> {
    let n = cfg.n_charges();
    if n > MAX_CHARGES {
        return Err(TransportError::BudgetExceeded { got: n, max: MAX_CHARGES });
    }
    let pts: Vec<Point> = cfg.positives.iter().chain(&cfg.negatives).copied().collect();
    let signs: Vec<i8> = (0..n).map(|k| if k < cfg.positives.len() { 1 } else { -1 }).collect();
    let (_, plan) = min_partial_matching(&signs, |a, b| pts[a].dist(pts[b]), |a| cfg.shape.boundary_distance(pts[a]));
    let mut segs = Vec::with_capacity(plan.len());
    for c in plan {
        let (from, to) = match c {
            Pairing::Pair(a, b) => {
                if signs[a] > 0 {
                    (pts[b], pts[a])
                } else {
                    (pts[a], pts[b])
                }
            }
            Pairing::Boundary(a) => {
                let bp = cfg.shape.nearest_boundary_point(pts[a]);
                if signs[a] > 0 {
                    (bp, pts[a])
                } else {
                    (pts[a], bp)
                }
            }
        };
        segs.push(ConnectionSegment { p: from, q: to, multiplicity: 1 });
    }
    Ok(Connection::new(segs))
}

/// An endpoint whose net boundary multiplicity disagrees with the charges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub point: Point,
    pub expected: i32,
    pub found: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCheck {
    pub ok: bool,
    pub discrepancies: Vec<Discrepancy>,
}

/// Checks `boundary(conn) = mu - nu` away from the domain boundary.
pub fn verify_boundary(conn: &Connection, cfg: &ChargeConfig) -> BoundaryCheck {
    // (point, expected, found)
    let mut sites: Vec<(Point, i32, i32)> = Vec::new();
    let mut add = |p: Point, e: i32, f: i32| {
        if let Some(s) = sites.iter_mut().find(|s| s.0.dist(p) <= BOUNDARY_TOL) {
            s.1 += e;
            s.2 += f;
        } else {
            sites.push((p, e, f));
        }
    };
    for &p in &cfg.positives {
        add(p, 1, 0);
    }
    for &p in &cfg.negatives {
        add(p, -1, 0);
    }
    for s in &conn.segments {
        add(s.q, 0, s.multiplicity);
        add(s.p, 0, -s.multiplicity);
    }
    let discrepancies: Vec<Discrepancy> = sites
        .into_iter()
        .filter(|&(p, e, f)| e != f && cfg.shape.boundary_distance(p).abs() > BOUNDARY_TOL)
        .map(|(point, expected, found)| Discrepancy { point, expected, found })
        .collect();
    BoundaryCheck { ok: discrepancies.is_empty(), discrepancies }
}

/// Length of the Euclidean minimum spanning tree (Prim).
pub fn mst_length(pts: &[Point]) -> f64 {
    let n = pts.len();
    if n < 2 {
        return 0.0;
    }
    let mut in_tree = vec![false; n];
    let mut dist = vec![f64::INFINITY; n];
    dist[0] = 0.0;
    let mut total = 0.0;
    for _ in 0..n {
        let k = (0..n).filter(|&k| !in_tree[k]).min_by(|&a, &b| dist[a].total_cmp(&dist[b])).unwrap();
        in_tree[k] = true;
        total += dist[k];
        for j in 0..n {
            if !in_tree[j] {
                dist[j] = dist[j].min(pts[k].dist(pts[j]));
            }
        }
    }
    total
}

/// Decodes a Prufer sequence into the edge list of a labelled tree on `m` vertices.
fn prufer_edges(seq: &[usize], m: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; m];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(m - 1);
    for &s in seq {
        let leaf = (0..m).find(|&k| degree[k] == 1).unwrap();
        edges.push((leaf.min(s), leaf.max(s)));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..m).filter(|&k| degree[k] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

fn permutations(s: usize) -> Vec<Vec<usize>> {
    if s == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(s - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, s - 1);
            out.push(q);
        }
    }
    out
}

/// All tree topologies on `n` terminals plus `s` Steiner vertices of degree
/// exactly 3, terminals of degree at most 3, up to relabelling of the Steiner vertices.
fn steiner_topologies(n: usize, s: usize) -> Vec<Vec<(usize, usize)>> {
    let m = n + s;
    if m < 2 {
        return vec![];
    }
    if m == 2 {
        return vec![vec![(0, 1)]];
    }
    let perms = permutations(s);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    let len = m - 2;
    let mut seq = vec![0usize; len];
    loop {
        let mut count = vec![0usize; m];
        for &x in &seq {
            count[x] += 1;
        }
        let ok = (0..n).all(|k| count[k] <= 2) && (n..m).all(|k| count[k] == 2);
        if ok {
            let edges = prufer_edges(&seq, m);
            let canon = perms
                .iter()
                .map(|p| {
                    let relabel = |v: usize| if v < n { v } else { n + p[v - n] };
                    let mut e: Vec<(usize, usize)> = edges
                        .iter()
                        .map(|&(a, b)| {
                            let (a, b) = (relabel(a), relabel(b));
                            (a.min(b), a.max(b))
                        })
                        .collect();
                    e.sort_unstable();
                    e
                })
                .min()
                .unwrap();
            if seen.insert(canon.clone()) {
                out.push(canon);
            }
        }
        // next sequence in base m
        let mut k = 0;
        loop {
            if k == len {
                return out;
            }
            seq[k] += 1;
            if seq[k] < m {
                break;
            }
            seq[k] = 0;
            k += 1;
        }
    }
}

/// Optimises the Steiner vertex positions of one topology by Gauss–Seidel
/// Weiszfeld updates; returns `(length, positions of all vertices)`.
fn optimise_topology(terms: &[Point], s: usize, edges: &[(usize, usize)]) -> (f64, Vec<Point>) {
    let n = terms.len();
    let m = n + s;
    let mut adj = vec![Vec::new(); m];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let c = terms.iter().fold(Point::new(0.0, 0.0), |a, &p| a + p) * (1.0 / n as f64);
    let scale = terms.iter().map(|p| p.dist(c)).fold(0.0, f64::max).max(1e-300);
    let mut pos: Vec<Point> = terms.to_vec();
    for k in 0..s {
        let a = 2.0 * std::f64::consts::PI * k as f64 / s.max(1) as f64 + 0.3;
        pos.push(c + Point::new(a.cos(), a.sin()) * (0.05 * scale));
    }
    // start each Steiner vertex at the mean of its terminal neighbours when it has any
    for k in n..m {
        let t: Vec<Point> = adj[k].iter().filter(|&&j| j < n).map(|&j| pos[j]).collect();
        if !t.is_empty() {
            let mean = t.iter().fold(Point::new(0.0, 0.0), |a, &p| a + p) * (1.0 / t.len() as f64);
            pos[k] = mean * 0.5 + pos[k] * 0.5;
        }
    }
    let floor = 1e-15 * scale;
    for _ in 0..200_000 {
        let mut moved: f64 = 0.0;
        for k in n..m {
            let (mut num, mut den) = (Point::new(0.0, 0.0), 0.0);
            for &j in &adj[k] {
                let w = 1.0 / pos[k].dist(pos[j]).max(floor);
                num = num + pos[j] * w;
                den += w;
            }
            let next = num * (1.0 / den);
            moved = moved.max(next.dist(pos[k]));
            pos[k] = next;
        }
        if moved <= 1e-13 * scale {
            break;
        }
    }
    let len = edges.iter().map(|&(a, b)| pos[a].dist(pos[b])).sum();
    (len, pos)
}

/// Shortest connected network containing all terminals.
pub fn steiner_tree(terminals: &[Point]) -> Result<Connection, TransportError> {
    let n = terminals.len();
    if n > MAX_TERMINALS {
        return Err(TransportError::BudgetExceeded { got: n, max: MAX_TERMINALS });
    }
    if n < 2 {
        return Err(TransportError::TooFewTerminals(n));
    }
    let mut best: Option<(f64, Vec<(usize, usize)>, Vec<Point>)> = None;
    for s in 0..=n - 2 {
        for edges in steiner_topologies(n, s) {
            let (len, pos) = optimise_topology(terminals, s, &edges);
            if best.as_ref().map_or(true, |b| len < b.0) {
                best = Some((len, edges, pos));
            }
        }
    }
    let (len, edges, pos) = best.expect("at least one topology");
    debug_assert!(len <= mst_length(terminals) * (1.0 + 1e-12));
    Ok(Connection::new(
        edges
            .iter()
            .filter(|&&(a, b)| pos[a].dist(pos[b]) > 0.0)
            .map(|&(a, b)| ConnectionSegment { p: pos[a], q: pos[b], multiplicity: 1 })
            .collect(),
    ))
}
