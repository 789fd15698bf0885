//! Masked structured grids, nodal fields, edge sets and principal-value
//! angle arithmetic.
//!
//! Nodes are stored row-major: node `(i, j)` lives at index `j * nx + i` and
//! sits at `(x0 + i h, y0 + j h)`. Cell `(ci, cj)` is the plaquette whose
//! lower-left corner is node `(ci, cj)`; it is *active* when all four corners
//! are active. An [`Edge`] joins a node to its `+x` or `+y` neighbour.

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::GridError;

/// A point in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from(a: [f64; 2]) -> Self {
        Point::new(a[0], a[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// A straight segment `p -> q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub p: Point,
    pub q: Point,
}

impl Segment {
    pub const fn new(p: Point, q: Point) -> Self {
        Self { p, q }
    }

    pub fn length(&self) -> f64 {
        self.p.dist(self.q)
    }

    /// Euclidean distance from `x` to the closed segment.
    pub fn distance(&self, x: Point) -> f64 {
        let d = self.q - self.p;
        let len2 = d.x * d.x + d.y * d.y;
        if len2 == 0.0 {
            return x.dist(self.p);
        }
        let t = (((x.x - self.p.x) * d.x + (x.y - self.p.y) * d.y) / len2).clamp(0.0, 1.0);
        x.dist(self.p + d * t)
    }

    /// Closest point of the segment to `x`.
    pub fn closest_point(&self, x: Point) -> Point {
        let d = self.q - self.p;
        let len2 = d.x * d.x + d.y * d.y;
        if len2 == 0.0 {
            return self.p;
        }
        let t = (((x.x - self.p.x) * d.x + (x.y - self.p.y) * d.y) / len2).clamp(0.0, 1.0);
        self.p + d * t
    }
}

/// Principal-value difference `a - b` wrapped into `(-pi, pi]`.
///
/// A difference of exactly `pi` (mod `2 pi`) maps to `+pi`.
pub fn pv_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    pv_diff(a, 0.0)
}

/// Geometric shape of the continuous domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Disk {
        cx: f64,
        cy: f64,
        r: f64,
    },
    Square {
        side: f64,
    },
    Rect {
        w: f64,
        h: f64,
    },
    /// Disk with a concentric hole; used for vortex experiments away from the core.
    Annulus {
        cx: f64,
        cy: f64,
        r_in: f64,
        r_out: f64,
    },
}

impl Shape {
    fn validate(&self) -> Result<(), GridError> {
        let ok = match *self {
            Shape::Disk { cx, cy, r } => cx.is_finite() && cy.is_finite() && r > 0.0 && r.is_finite(),
            Shape::Square { side } => side > 0.0 && side.is_finite(),
            Shape::Rect { w, h } => w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite(),
            Shape::Annulus { cx, cy, r_in, r_out } => {
                cx.is_finite() && cy.is_finite() && r_in > 0.0 && r_out > r_in && r_out.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(GridError::InvalidShape(self.to_string()))
        }
    }

    fn extent(&self) -> (f64, f64) {
        match *self {
            Shape::Disk { r, .. } => (2.0 * r, 2.0 * r),
            Shape::Square { side } => (side, side),
            Shape::Rect { w, h } => (w, h),
            Shape::Annulus { r_out, .. } => (2.0 * r_out, 2.0 * r_out),
        }
    }

    pub fn center(&self) -> Point {
        match *self {
            Shape::Disk { cx, cy, .. } | Shape::Annulus { cx, cy, .. } => Point::new(cx, cy),
            Shape::Square { side } => Point::new(side / 2.0, side / 2.0),
            Shape::Rect { w, h } => Point::new(w / 2.0, h / 2.0),
        }
    }

    /// Membership used for the node mask: open for round shapes, closed for
    /// rectangles (so the corners of a square grid are active).
    pub fn contains(&self, p: Point, slack: f64) -> bool {
        match *self {
            Shape::Disk { cx, cy, r } => (p.x - cx).hypot(p.y - cy) < r,
            Shape::Annulus { cx, cy, r_in, r_out } => {
                let d = (p.x - cx).hypot(p.y - cy);
                d > r_in && d < r_out
            }
            Shape::Square { side } => p.x >= -slack && p.y >= -slack && p.x <= side + slack && p.y <= side + slack,
            Shape::Rect { w, h } => p.x >= -slack && p.y >= -slack && p.x <= w + slack && p.y <= h + slack,
        }
    }

    /// Distance from an interior point to the shape boundary.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        match *self {
            Shape::Disk { cx, cy, r } => r - (p.x - cx).hypot(p.y - cy),
            Shape::Annulus { cx, cy, r_in, r_out } => {
                let d = (p.x - cx).hypot(p.y - cy);
                (d - r_in).min(r_out - d)
            }
            Shape::Square { side } => p.x.min(side - p.x).min(p.y).min(side - p.y),
            Shape::Rect { w, h } => p.x.min(w - p.x).min(p.y).min(h - p.y),
        }
    }

    /// Nearest point on the shape boundary.
    pub fn nearest_boundary_point(&self, p: Point) -> Point {
        let radial = |cx: f64, cy: f64, rad: f64| {
            let d = Point::new(p.x - cx, p.y - cy);
            let n = d.norm();
            if n == 0.0 {
                Point::new(cx + rad, cy)
            } else {
                Point::new(cx + d.x / n * rad, cy + d.y / n * rad)
            }
        };
        let rect = |w: f64, h: f64| {
            let cands = [
                (p.x, Point::new(0.0, p.y)),
                (w - p.x, Point::new(w, p.y)),
                (p.y, Point::new(p.x, 0.0)),
                (h - p.y, Point::new(p.x, h)),
            ];
            cands.iter().min_by(|a, b| a.0.total_cmp(&b.0)).map(|c| c.1).unwrap()
        };
        match *self {
            Shape::Disk { cx, cy, r } => radial(cx, cy, r),
            Shape::Annulus { cx, cy, r_in, r_out } => {
                let d = (p.x - cx).hypot(p.y - cy);
                if d - r_in < r_out - d {
                    radial(cx, cy, r_in)
                } else {
                    radial(cx, cy, r_out)
                }
            }
            Shape::Square { side } => rect(side, side),
            Shape::Rect { w, h } => rect(w, h),
        }
    }

    /// The shape with its holes filled in.
    pub fn outer(&self) -> Shape {
        match *self {
            Shape::Annulus { cx, cy, r_out, .. } => Shape::Disk { cx, cy, r: r_out },
            s => s,
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Shape::Disk { cx, cy, r } => write!(f, "disk({cx},{cy},{r})"),
            Shape::Square { side } => write!(f, "square({side})"),
            Shape::Rect { w, h } => write!(f, "rect({w},{h})"),
            Shape::Annulus { cx, cy, r_in, r_out } => write!(f, "annulus({cx},{cy},{r_in},{r_out})"),
        }
    }
}

impl FromStr for Shape {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GridError::Parse(format!("invalid shape tag `{s}`"));
        let s = s.trim();
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let name = &s[..open];
        let args: Vec<f64> = s[open + 1..s.len() - 1]
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        let shape = match (name, args.as_slice()) {
            ("disk", &[cx, cy, r]) => Shape::Disk { cx, cy, r },
            ("square", &[side]) => Shape::Square { side },
            ("rect", &[w, h]) => Shape::Rect { w, h },
            ("annulus", &[cx, cy, r_in, r_out]) => Shape::Annulus { cx, cy, r_in, r_out },
            _ => return Err(bad()),
        };
        shape.validate()?;
        Ok(shape)
    }
}

/// Edge direction: from a node to its `+x` or `+y` neighbour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

/// The edge from node `(i, j)` to its `+axis` neighbour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub axis: Axis,
}

impl Edge {
    pub const fn new(i: usize, j: usize, axis: Axis) -> Self {
        Self { i, j, axis }
    }

    /// Far endpoint `(i, j) + axis`.
    pub fn head(&self) -> (usize, usize) {
        match self.axis {
            Axis::X => (self.i + 1, self.j),
            Axis::Y => (self.i, self.j + 1),
        }
    }
}

/// Masked rectangular lattice standing in for the open set.
#[derive(Debug, Clone)]
pub struct GridDomain {
    nx: usize,
    ny: usize,
    h: f64,
    x0: f64,
    y0: f64,
    shape: Shape,
    mask: Vec<bool>,
    n_active: usize,
}

impl PartialEq for GridDomain {
    fn eq(&self, o: &Self) -> bool {
        self.nx == o.nx && self.ny == o.ny && self.h == o.h && self.x0 == o.x0 && self.y0 == o.y0 && self.mask == o.mask
    }
}

/// Builds the lattice for `shape` at the given resolution.
///
/// The spacing is the bounding-box side divided by `resolution - 1`. Round
/// shapes are sampled on a lattice shifted by `h/2`, with nodes strictly
/// inside the shape active; rectangles are sampled corner to corner and every
/// node is active.
pub fn make_domain(shape: Shape, resolution: usize) -> Result<GridDomain, GridError> {
    shape.validate()?;
    if resolution < 2 {
        return Err(GridError::InvalidResolution(resolution));
    }
    let (w, hgt) = shape.extent();
    let side = w.max(hgt);
    let h = side / (resolution - 1) as f64;
    let (nx, ny, x0, y0) = match shape {
        Shape::Disk { cx, cy, r } => (resolution, resolution, cx - r + 0.5 * h, cy - r + 0.5 * h),
        Shape::Annulus { cx, cy, r_out, .. } => (resolution, resolution, cx - r_out + 0.5 * h, cy - r_out + 0.5 * h),
        Shape::Square { .. } | Shape::Rect { .. } => {
            ((w / h).round() as usize + 1, (hgt / h).round() as usize + 1, 0.0, 0.0)
        }
    };
    let slack = 1e-9 * h;
    let mut mask = vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let p = Point::new(x0 + i as f64 * h, y0 + j as f64 * h);
            mask[j * nx + i] = shape.contains(p, slack);
        }
    }
    GridDomain::from_parts(nx, ny, h, x0, y0, shape, mask)
}

impl GridDomain {
    fn from_parts(
        nx: usize,
        ny: usize,
        h: f64,
        x0: f64,
        y0: f64,
        shape: Shape,
        mask: Vec<bool>,
    ) -> Result<Self, GridError> {
        let n_active = mask.iter().filter(|&&m| m).count();
        if n_active == 0 {
            return Err(GridError::EmptyDomain);
        }
        let d = Self { nx, ny, h, x0, y0, shape, mask, n_active };
        if !d.is_connected() {
            return Err(GridError::Disconnected);
        }
        Ok(d)
    }

    /// Same lattice with a caller-supplied mask (must be nonempty and 4-connected).
    pub fn with_mask(&self, mask: Vec<bool>) -> Result<Self, GridError> {
        if mask.len() != self.nx * self.ny {
            return Err(GridError::LengthMismatch { expected: self.nx * self.ny, got: mask.len() });
        }
        Self::from_parts(self.nx, self.ny, self.h, self.x0, self.y0, self.shape, mask)
    }

    /// Restricts the mask to nodes where `keep` holds.
    pub fn restrict<F: Fn(Point) -> bool>(&self, keep: F) -> Result<Self, GridError> {
        let mask = (0..self.len()).map(|k| self.mask[k] && keep(self.node_pos(k))).collect();
        self.with_mask(mask)
    }

    fn is_connected(&self) -> bool {
        let Some(start) = self.mask.iter().position(|&m| m) else {
            return false;
        };
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        let mut count = 1;
        while let Some(k) = queue.pop_front() {
            for n in self.neighbors(k) {
                if !seen[n] {
                    seen[n] = true;
                    count += 1;
                    queue.push_back(n);
                }
            }
        }
        count == self.n_active
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn origin(&self) -> Point {
        Point::new(self.x0, self.y0)
    }
    pub fn shape(&self) -> Shape {
        self.shape
    }
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }
    pub fn n_active(&self) -> usize {
        self.n_active
    }
    /// Total number of lattice nodes, active or not.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        self.n_active == 0
    }

    /// Resolution that reproduces this lattice through [`make_domain`].
    pub fn resolution(&self) -> usize {
        let (w, hgt) = self.shape.extent();
        (w.max(hgt) / self.h).round() as usize + 1
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    #[inline]
    pub fn pos(&self, i: usize, j: usize) -> Point {
        Point::new(self.x0 + i as f64 * self.h, self.y0 + j as f64 * self.h)
    }

    #[inline]
    pub fn node_pos(&self, k: usize) -> Point {
        let (i, j) = self.coords(k);
        self.pos(i, j)
    }

    #[inline]
    pub fn is_active(&self, k: usize) -> bool {
        self.mask[k]
    }

    /// Activity of a possibly out-of-range node.
    #[inline]
    pub fn active_at(&self, i: isize, j: isize) -> bool {
        i >= 0
            && j >= 0
            && (i as usize) < self.nx
            && (j as usize) < self.ny
            && self.mask[j as usize * self.nx + i as usize]
    }

    pub fn active_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&k| self.mask[k])
    }

    /// Active 4-neighbours of node `k`.
    pub fn neighbors(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = self.coords(k);
        let (i, j) = (i as isize, j as isize);
        [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)]
            .into_iter()
            .filter(move |&(a, b)| self.active_at(a, b))
            .map(move |(a, b)| self.idx(a as usize, b as usize))
    }

    /// Active nodes with at least one missing 4-neighbour.
    pub fn boundary_nodes(&self) -> Vec<bool> {
        (0..self.len()).map(|k| self.mask[k] && self.neighbors(k).count() < 4).collect()
    }

    pub fn n_cells_x(&self) -> usize {
        self.nx.saturating_sub(1)
    }
    pub fn n_cells_y(&self) -> usize {
        self.ny.saturating_sub(1)
    }

    #[inline]
    pub fn cell_idx(&self, ci: usize, cj: usize) -> usize {
        cj * self.n_cells_x() + ci
    }

    /// Whether all four corners of cell `(ci, cj)` are active (out of range: false).
    #[inline]
    pub fn cell_active(&self, ci: isize, cj: isize) -> bool {
        self.active_at(ci, cj)
            && self.active_at(ci + 1, cj)
            && self.active_at(ci, cj + 1)
            && self.active_at(ci + 1, cj + 1)
    }

    pub fn cell_center(&self, ci: usize, cj: usize) -> Point {
        Point::new(self.x0 + (ci as f64 + 0.5) * self.h, self.y0 + (cj as f64 + 0.5) * self.h)
    }

    /// Cell containing `p`, in possibly out-of-range signed coordinates.
    pub fn cell_of(&self, p: Point) -> (isize, isize) {
        (((p.x - self.x0) / self.h).floor() as isize, ((p.y - self.y0) / self.h).floor() as isize)
    }

    /// Active cells, as `(ci, cj)`.
    pub fn active_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let ncx = self.n_cells_x();
        (0..ncx * self.n_cells_y())
            .map(move |c| (c % ncx, c / ncx))
            .filter(move |&(ci, cj)| self.cell_active(ci as isize, cj as isize))
    }

    /// Number of active cells containing node `(i, j)`.
    pub fn cells_at_node(&self, i: usize, j: usize) -> usize {
        let (i, j) = (i as isize, j as isize);
        [(i - 1, j - 1), (i, j - 1), (i - 1, j), (i, j)].into_iter().filter(|&(a, b)| self.cell_active(a, b)).count()
    }

    /// The two cells sharing an edge (below/above for x-edges, left/right for y-edges).
    pub fn edge_cells(&self, e: Edge) -> [(isize, isize); 2] {
        let (i, j) = (e.i as isize, e.j as isize);
        match e.axis {
            Axis::X => [(i, j - 1), (i, j)],
            Axis::Y => [(i - 1, j), (i, j)],
        }
    }

    /// Number of active cells containing an edge (0, 1 or 2).
    pub fn cells_at_edge(&self, e: Edge) -> usize {
        self.edge_cells(e).into_iter().filter(|&(a, b)| self.cell_active(a, b)).count()
    }

    /// Whether both endpoints of the edge are active.
    pub fn edge_active(&self, e: Edge) -> bool {
        let (hi, hj) = e.head();
        self.active_at(e.i as isize, e.j as isize) && self.active_at(hi as isize, hj as isize)
    }

    pub fn edge_index(&self, e: Edge) -> usize {
        2 * self.idx(e.i, e.j) + usize::from(e.axis == Axis::Y)
    }

    pub fn edge_from_index(&self, ix: usize) -> Edge {
        let (i, j) = self.coords(ix / 2);
        Edge::new(i, j, if ix % 2 == 0 { Axis::X } else { Axis::Y })
    }

    /// All active edges.
    pub fn active_edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..2 * self.len()).map(move |ix| self.edge_from_index(ix)).filter(move |&e| self.edge_active(e))
    }

    /// Midpoint of an edge.
    pub fn edge_midpoint(&self, e: Edge) -> Point {
        let p = self.pos(e.i, e.j);
        match e.axis {
            Axis::X => Point::new(p.x + 0.5 * self.h, p.y),
            Axis::Y => Point::new(p.x, p.y + 0.5 * self.h),
        }
    }

    /// The dual segment crossing an edge (joins the two adjacent cell centres).
    pub fn dual_segment(&self, e: Edge) -> Segment {
        let m = self.edge_midpoint(e);
        let hh = 0.5 * self.h;
        match e.axis {
            Axis::X => Segment::new(Point::new(m.x, m.y - hh), Point::new(m.x, m.y + hh)),
            Axis::Y => Segment::new(Point::new(m.x - hh, m.y), Point::new(m.x + hh, m.y)),
        }
    }
}

fn check_len(domain: &GridDomain, len: usize) -> Result<(), GridError> {
    if len != domain.len() {
        return Err(GridError::LengthMismatch { expected: domain.len(), got: len });
    }
    Ok(())
}

fn sanitize(domain: &GridDomain, mut values: Vec<f64>) -> Result<Vec<f64>, GridError> {
    check_len(domain, values.len())?;
    for (k, v) in values.iter_mut().enumerate() {
        if domain.is_active(k) {
            if !v.is_finite() {
                return Err(GridError::NonFinite(k));
            }
        } else {
            *v = f64::NAN;
        }
    }
    Ok(values)
}

/// Nodal angle field; `u = exp(i theta)`. Inactive nodes hold `NaN`.
#[derive(Debug, Clone)]
pub struct AngleField {
    domain: Arc<GridDomain>,
    theta: Vec<f64>,
}

impl AngleField {
    pub fn new(domain: Arc<GridDomain>, theta: Vec<f64>) -> Result<Self, GridError> {
        let theta = sanitize(&domain, theta)?;
        Ok(Self { domain, theta })
    }

    pub fn from_fn<F: Fn(Point) -> f64>(domain: Arc<GridDomain>, f: F) -> Result<Self, GridError> {
        let theta = (0..domain.len()).map(|k| f(domain.node_pos(k))).collect();
        Self::new(domain, theta)
    }

    pub fn constant(domain: Arc<GridDomain>, angle: f64) -> Self {
        Self::from_fn(domain, |_| angle).expect("finite constant angle")
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
    pub(crate) fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    /// The same map with every angle shifted by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self { domain: self.domain.clone(), theta: self.theta.iter().map(|t| t + c).collect() }
    }

    /// Circle equality: principal-value difference below `tol` everywhere.
    pub fn circle_eq(&self, other: &AngleField, tol: f64) -> bool {
        *self.domain == *other.domain
            && self.domain.active_nodes().all(|k| pv_diff(self.theta[k], other.theta[k]).abs() < tol)
    }

    /// Increment `theta(head) - theta(tail)` along an active edge, principal value.
    #[inline]
    pub fn edge_increment(&self, e: Edge) -> f64 {
        let (hi, hj) = e.head();
        pv_diff(self.theta[self.domain.idx(hi, hj)], self.theta[self.domain.idx(e.i, e.j)])
    }

    /// Signed increment from node `a` to an adjacent node `b`, antisymmetric by construction.
    pub fn increment_between(&self, a: usize, b: usize) -> f64 {
        let d = &self.domain;
        let (ai, aj) = d.coords(a);
        let (bi, bj) = d.coords(b);
        if bi == ai + 1 && bj == aj {
            self.edge_increment(Edge::new(ai, aj, Axis::X))
        } else if bj == aj + 1 && bi == ai {
            self.edge_increment(Edge::new(ai, aj, Axis::Y))
        } else if ai == bi + 1 && aj == bj {
            -self.edge_increment(Edge::new(bi, bj, Axis::X))
        } else if aj == bj + 1 && ai == bi {
            -self.edge_increment(Edge::new(bi, bj, Axis::Y))
        } else {
            panic!("nodes {a} and {b} are not 4-adjacent")
        }
    }
}

/// Nodal real field (a phase field `v` or a lifting `phi`). Inactive nodes hold `NaN`.
#[derive(Debug, Clone)]
pub struct ScalarField {
    domain: Arc<GridDomain>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(domain: Arc<GridDomain>, values: Vec<f64>) -> Result<Self, GridError> {
        let values = sanitize(&domain, values)?;
        Ok(Self { domain, values })
    }

    pub fn from_fn<F: Fn(Point) -> f64>(domain: Arc<GridDomain>, f: F) -> Result<Self, GridError> {
        let values = (0..domain.len()).map(|k| f(domain.node_pos(k))).collect();
        Self::new(domain, values)
    }

    pub fn constant(domain: Arc<GridDomain>, c: f64) -> Self {
        Self::from_fn(domain, |_| c).expect("finite constant")
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Interprets the values as angles.
    pub fn to_angles(&self) -> AngleField {
        AngleField { domain: self.domain.clone(), theta: self.values.clone() }
    }

    /// Clamps every active value into `[lo, hi]`.
    pub fn clamp(&mut self, lo: f64, hi: f64) {
        for k in 0..self.values.len() {
            if self.domain.is_active(k) {
                self.values[k] = self.values[k].clamp(lo, hi);
            }
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.domain
            .active_nodes()
            .map(|k| self.values[k])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }

    pub fn mean(&self) -> f64 {
        let s: f64 = self.domain.active_nodes().map(|k| self.values[k]).sum();
        s / self.domain.n_active() as f64
    }
}

/// Per-cell real field; inactive cells hold `NaN`.
#[derive(Debug, Clone)]
pub struct CellField {
    domain: Arc<GridDomain>,
    values: Vec<f64>,
}

impl CellField {
    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn get(&self, ci: usize, cj: usize) -> f64 {
        self.values[self.domain.cell_idx(ci, cj)]
    }

    /// `sum over active cells of value * h^2`.
    pub fn integrate(&self) -> f64 {
        let h2 = self.domain.h * self.domain.h;
        self.values.iter().filter(|v| !v.is_nan()).sum::<f64>() * h2
    }

    /// Like [`CellField::integrate`], restricted to cells whose centre satisfies `keep`.
    pub fn integrate_where<F: Fn(Point) -> bool>(&self, keep: F) -> f64 {
        let h2 = self.domain.h * self.domain.h;
        self.domain
            .active_cells()
            .filter(|&(ci, cj)| keep(self.domain.cell_center(ci, cj)))
            .map(|(ci, cj)| self.get(ci, cj))
            .sum::<f64>()
            * h2
    }
}

/// Cell-wise `|grad u|^2` of a circle-valued map from principal-value edge
/// increments: the two x-edges and the two y-edges of each cell are averaged.
pub fn grad_sq_circle(u: &AngleField) -> CellField {
    let d = u.domain();
    let ncx = d.n_cells_x();
    let mut values = vec![f64::NAN; ncx * d.n_cells_y()];
    let h2 = d.h * d.h;
    for (ci, cj) in d.active_cells() {
        let b = u.edge_increment(Edge::new(ci, cj, Axis::X));
        let t = u.edge_increment(Edge::new(ci, cj + 1, Axis::X));
        let l = u.edge_increment(Edge::new(ci, cj, Axis::Y));
        let r = u.edge_increment(Edge::new(ci + 1, cj, Axis::Y));
        values[d.cell_idx(ci, cj)] = 0.5 * (b * b + t * t + l * l + r * r) / h2;
    }
    CellField { domain: d.clone(), values }
}

/// Cell-wise `|grad phi|^2` of a real field from raw edge differences.
pub fn grad_sq_scalar(phi: &ScalarField) -> CellField {
    let d = phi.domain();
    let p = phi.values();
    let ncx = d.n_cells_x();
    let mut values = vec![f64::NAN; ncx * d.n_cells_y()];
    let h2 = d.h * d.h;
    for (ci, cj) in d.active_cells() {
        let a = p[d.idx(ci, cj)];
        let b = p[d.idx(ci + 1, cj)];
        let c = p[d.idx(ci, cj + 1)];
        let e = p[d.idx(ci + 1, cj + 1)];
        values[d.cell_idx(ci, cj)] = 0.5 * ((b - a).powi(2) + (e - c).powi(2) + (c - a).powi(2) + (e - b).powi(2)) / h2;
    }
    CellField { domain: d.clone(), values }
}

/// Exact Euclidean distance from every active node to the union of `segs`.
pub fn distance_to_segments(domain: &Arc<GridDomain>, segs: &[Segment]) -> ScalarField {
    let values = (0..domain.len())
        .map(|k| {
            let p = domain.node_pos(k);
            segs.iter().map(|s| s.distance(p)).fold(f64::INFINITY, f64::min)
        })
        .collect();
    ScalarField::new(domain.clone(), values).expect("distances are finite for nonempty segs")
}

/// Set of active edges, stored as a bitmap over edge indices.
#[derive(Debug, Clone)]
pub struct EdgeSet {
    domain: Arc<GridDomain>,
    bits: Vec<bool>,
    count: usize,
}

impl EdgeSet {
    pub fn empty(domain: Arc<GridDomain>) -> Self {
        let n = 2 * domain.len();
        Self { domain, bits: vec![false; n], count: 0 }
    }

    pub fn from_edges<I: IntoIterator<Item = Edge>>(domain: Arc<GridDomain>, edges: I) -> Result<Self, GridError> {
        let mut s = Self::empty(domain);
        for e in edges {
            s.insert(e)?;
        }
        Ok(s)
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    /// Inserts an edge; returns whether it was new.
    pub fn insert(&mut self, e: Edge) -> Result<bool, GridError> {
        if e.i >= self.domain.nx || e.j >= self.domain.ny || !self.domain.edge_active(e) {
            return Err(GridError::InactiveEdge(e));
        }
        let ix = self.domain.edge_index(e);
        if self.bits[ix] {
            Ok(false)
        } else {
            self.bits[ix] = true;
            self.count += 1;
            Ok(true)
        }
    }

    pub fn contains(&self, e: Edge) -> bool {
        e.i < self.domain.nx && e.j < self.domain.ny && self.bits[self.domain.edge_index(e)]
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// `h * |edges|`.
    pub fn length(&self) -> f64 {
        self.domain.h * self.count as f64
    }

    pub fn iter(&self) -> impl Iterator<Item = Edge> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(ix, _)| self.domain.edge_from_index(ix))
    }

    pub fn union(&self, other: &EdgeSet) -> EdgeSet {
        let mut out = self.clone();
        for e in other.iter() {
            out.insert(e).expect("edges of the same domain");
        }
        out
    }

    pub fn difference(&self, other: &EdgeSet) -> EdgeSet {
        let mut out = EdgeSet::empty(self.domain.clone());
        for e in self.iter().filter(|&e| !other.contains(e)) {
            out.insert(e).expect("edges of the same domain");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_disk(res: usize) -> Arc<GridDomain> {
        Arc::new(make_domain(Shape::Disk { cx: 0.0, cy: 0.0, r: 1.0 }, res).unwrap())
    }

    #[test]
    fn disk_domain_counts() {
        let d = unit_disk(257);
        assert_eq!((d.nx(), d.ny()), (257, 257));
        assert!((d.h() - 2.0 / 256.0).abs() < 1e-15);
        let expect = std::f64::consts::FRAC_PI_4 * 257.0 * 257.0;
        let got = d.n_active() as f64;
        assert!((got - expect).abs() / expect < 0.02, "{got} vs {expect}");
        assert!(d.h() * 257.0 >= 2.0);
        // the centre is never a node
        assert!(d.active_nodes().all(|k| d.node_pos(k).norm() > 0.25 * d.h()));
    }

    #[test]
    fn small_rectangles_are_fully_active() {
        let d = make_domain(Shape::Square { side: 1.0 }, 3).unwrap();
        assert_eq!((d.nx(), d.ny(), d.n_active()), (3, 3, 9));
        assert_eq!(d.h(), 0.5);
        let d = make_domain(Shape::Rect { w: 1.0, h: 1.0 }, 2).unwrap();
        assert_eq!((d.nx(), d.ny(), d.n_active()), (2, 2, 4));
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(make_domain(Shape::Disk { cx: 0.0, cy: 0.0, r: -1.0 }, 32).is_err());
        assert!(make_domain(Shape::Square { side: 1.0 }, 1).is_err());
        let d = make_domain(Shape::Square { side: 1.0 }, 8).unwrap();
        assert!(matches!(d.with_mask(vec![false; 64]), Err(GridError::EmptyDomain)));
        let mut m = vec![false; 64];
        m[0] = true;
        m[63] = true;
        assert!(matches!(d.with_mask(m), Err(GridError::Disconnected)));
    }

    #[test]
    fn pv_diff_conventions() {
        assert!((pv_diff(1.5 * PI, 0.0) + 0.5 * PI).abs() < 1e-15);
        assert!((pv_diff(0.1, -0.1) - 0.2).abs() < 1e-15);
        assert_eq!(pv_diff(PI, 0.0), PI);
        assert_eq!(pv_diff(0.0, PI), PI);
        assert_eq!(pv_diff(-PI, 0.0), PI);
    }

    #[test]
    fn shape_tags_round_trip() {
        for s in [
            Shape::Disk { cx: 0.0, cy: 0.5, r: 1.25 },
            Shape::Square { side: 1.0 },
            Shape::Rect { w: 1.0, h: 0.3 },
            Shape::Annulus { cx: 0.0, cy: 0.0, r_in: 0.2, r_out: 0.9 },
        ] {
            assert_eq!(s.to_string().parse::<Shape>().unwrap(), s);
        }
        assert!("blob(1)".parse::<Shape>().is_err());
        assert!("disk(0,0)".parse::<Shape>().is_err());
    }

    #[test]
    fn constant_field_has_zero_gradient() {
        let d = unit_disk(33);
        let g = grad_sq_circle(&AngleField::constant(d, 0.7));
        assert!(g.values().iter().filter(|v| !v.is_nan()).all(|&v| v == 0.0));
    }

    #[test]
    fn linear_phase_gradient() {
        let d = Arc::new(make_domain(Shape::Square { side: 1.0 }, 33).unwrap());
        let alpha = 2.5;
        let u = AngleField::from_fn(d.clone(), |p| alpha * p.x).unwrap();
        let g = grad_sq_circle(&u);
        for (ci, cj) in d.active_cells() {
            assert!((g.get(ci, cj) - alpha * alpha).abs() < 1e-9);
        }
    }

    #[test]
    fn vortex_dirichlet_energy_on_annulus() {
        let d = unit_disk(257);
        let u = AngleField::from_fn(d.clone(), |p| p.y.atan2(p.x)).unwrap();
        let g = grad_sq_circle(&u);
        let e = g.integrate_where(|c| {
            let r = c.norm();
            r > 0.2 && r < 0.9
        });
        let exact = 2.0 * PI * (0.9f64 / 0.2).ln();
        assert!((e - exact).abs() / exact < 0.03, "{e} vs {exact}");
    }

    #[test]
    fn segment_distances() {
        let d = unit_disk(17);
        let s = [Segment::new(Point::new(0.0, 0.0), Point::new(1.0, 0.0))];
        assert!((s[0].distance(Point::new(0.5, 0.3)) - 0.3).abs() < 1e-15);
        assert!((s[0].distance(Point::new(2.0, 0.0)) - 1.0).abs() < 1e-15);
        let cross = [
            Segment::new(Point::new(-1.0, 0.0), Point::new(1.0, 0.0)),
            Segment::new(Point::new(0.0, -1.0), Point::new(0.0, 1.0)),
        ];
        assert_eq!(cross[0].distance(Point::new(0.0, 0.0)).min(cross[1].distance(Point::new(0.0, 0.0))), 0.0);
        let f = distance_to_segments(&d, &s);
        for k in d.active_nodes() {
            assert!((f.values()[k] - s[0].distance(d.node_pos(k))).abs() < 1e-15);
        }
    }

    #[test]
    fn edge_sets() {
        let d = unit_disk(17);
        let mut s = EdgeSet::empty(d.clone());
        let e = Edge::new(8, 8, Axis::X);
        assert!(s.insert(e).unwrap());
        assert!(!s.insert(e).unwrap());
        assert_eq!(s.len(), 1);
        assert!((s.length() - d.h()).abs() < 1e-15);
        assert!(s.insert(Edge::new(0, 0, Axis::X)).is_err());
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![e]);
    }
}
