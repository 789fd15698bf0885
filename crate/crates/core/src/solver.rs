//! Alternating minimisation of the Ambrosio–Tortorelli energy with
//! `eps`-continuation, in the relaxed (free circle-valued `u`) and the
//! constrained (`u = exp(i phi)`, single-valued `phi`) regimes.
//!
//! Each half-step minimises one block exactly: the `v`-step is a linear SPD
//! solve, the relaxed `u`-step is a nodewise Gauss–Seidel minimisation on the
//! circle, and the constrained `phi`-step is a weighted Laplace solve.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::energy::{at_energy, at_energy_lifted, cell_edges, cell_nodes, EnergyReport};
use crate::error::SolverError;
use crate::grid::{
    grad_sq_circle, grad_sq_scalar, pv_diff, AngleField, Axis, CellField, Edge, EdgeSet, GridDomain, ScalarField,
};
use crate::lifting::jump_min_lifting;

/// Floor added to `v^2` in the constrained bulk operator.
pub const DELTA_REG: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Relaxed,
    Constrained,
}

impl std::str::FromStr for Regime {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "relaxed" => Ok(Regime::Relaxed),
            "constrained" => Ok(Regime::Constrained),
            _ => Err(format!("unknown regime `{s}` (expected relaxed or constrained)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub eps_schedule: Vec<f64>,
    pub max_outer_iters: usize,
    pub energy_tol: f64,
    pub cg_tol: f64,
    pub cg_max_iters: usize,
    /// Gauss–Seidel sweeps per relaxed `u`-step.
    pub u_sweeps: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            eps_schedule: vec![0.1, 0.05],
            max_outer_iters: 200,
            energy_tol: 1e-6,
            cg_tol: 1e-10,
            cg_max_iters: 20_000,
            u_sweeps: 4,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidConfig(m.to_string()));
        if self.eps_schedule.is_empty() {
            return bad("schedule must not be empty");
        }
        if self.eps_schedule.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return bad("schedule entries must lie in (0, 1]");
        }
        if self.eps_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return bad("schedule must be strictly decreasing");
        }
        if !(self.energy_tol > 0.0 && self.cg_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.max_outer_iters == 0 || self.cg_max_iters == 0 {
            return bad("iteration limits must be positive");
        }
        Ok(())
    }

    /// Allowed energy increase per half-step.
    pub fn slack(&self, energy: f64) -> f64 {
        10.0 * self.cg_tol * energy.abs().max(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub eps: f64,
    pub iters: usize,
    pub report: EnergyReport,
    pub converged: bool,
}

/// Current iterate. In the constrained regime `phi` is the single-valued
/// lifting and `u = exp(i phi)`.
#[derive(Debug, Clone)]
pub struct SolveState {
    pub u: AngleField,
    pub phi: Option<ScalarField>,
    pub v: ScalarField,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub state: SolveState,
    pub records: Vec<SweepRecord>,
    /// Total energy after every half-step, per schedule entry.
    pub trace: Vec<(f64, Vec<f64>)>,
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iters: usize,
    pub rel_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conjugate gradients for an SPD operator given as `apply(x, out)`.
pub fn cg_solve<F>(apply: F, rhs: &[f64], tol: f64, max_iters: usize) -> Result<CgOutcome, SolverError>
where
    F: Fn(&[f64], &mut [f64]),
{
    pcg_solve(apply, None, rhs, None, tol, max_iters)
}

/// Jacobi-preconditioned conjugate gradients. `inv_diag` is the inverse
/// preconditioner diagonal; `x0` an optional starting guess. Converged when
/// `|r| <= tol |b|`.
pub fn pcg_solve<F>(
    apply: F,
    inv_diag: Option<&[f64]>,
    rhs: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iters: usize,
) -> Result<CgOutcome, SolverError>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = rhs.len();
    let bnorm = dot(rhs, rhs).sqrt();
    if bnorm == 0.0 {
        return Ok(CgOutcome { x: vec![0.0; n], iters: 0, rel_residual: 0.0 });
    }
    let mut x = x0.map_or_else(|| vec![0.0; n], |x| x.to_vec());
    let mut ax = vec![0.0; n];
    apply(&x, &mut ax);
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let precond = |r: &[f64], z: &mut [f64]| match inv_diag {
        Some(m) => z.iter_mut().zip(r.iter().zip(m)).for_each(|(z, (r, m))| *z = r * m),
        None => z.copy_from_slice(r),
    };
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = dot(&r, &r).sqrt() / bnorm;
    let mut iters = 0;
    while rel > tol {
        if iters >= max_iters {
            return Err(SolverError::CgNotConverged { iters, residual: rel });
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(SolverError::CgNotConverged { iters, residual: rel });
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
        iters += 1;
        rel = dot(&r, &r).sqrt() / bnorm;
    }
    Ok(CgOutcome { x, iters, rel_residual: rel })
}

/// Sparse symmetric operator `diag_i x_i + sum_e w_e (x_i - x_j)` on a subset of nodes.
struct NodeSystem {
    /// lattice node of every unknown
    nodes: Vec<usize>,
    diag: Vec<f64>,
    /// coupling lists in CSR form: (unknown index, weight)
    start: Vec<usize>,
    nbr: Vec<(usize, f64)>,
}

impl NodeSystem {
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for a in 0..self.nodes.len() {
            let mut s = self.diag[a] * x[a];
            for &(b, w) in &self.nbr[self.start[a]..self.start[a + 1]] {
                s += w * (x[a] - x[b]);
            }
            out[a] = s;
        }
    }

    fn inv_diag(&self) -> Vec<f64> {
        (0..self.nodes.len())
            .map(|a| {
                let s = self.diag[a] + self.nbr[self.start[a]..self.start[a + 1]].iter().map(|e| e.1).sum::<f64>();
                1.0 / s
            })
            .collect()
    }
}

/// Per-edge weights `sum over active cells c containing e of f(c)`, indexed by edge index.
fn edge_weights<F: Fn(usize, usize) -> f64>(d: &GridDomain, f: F) -> Vec<f64> {
    let mut w = vec![0.0; 2 * d.len()];
    for (ci, cj) in d.active_cells() {
        let c = f(ci, cj);
        for e in cell_edges(ci, cj) {
            w[d.edge_index(e)] += c;
        }
    }
    w
}

/// Edge slots of node `k` as (edge index, neighbour).
fn slots(d: &GridDomain, k: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
    let (i, j) = d.coords(k);
    let mut out = [None; 4];
    if i + 1 < d.nx() {
        out[0] = Some((d.edge_index(Edge::new(i, j, Axis::X)), k + 1));
    }
    if i > 0 {
        out[1] = Some((d.edge_index(Edge::new(i - 1, j, Axis::X)), k - 1));
    }
    if j + 1 < d.ny() {
        out[2] = Some((d.edge_index(Edge::new(i, j, Axis::Y)), k + d.nx()));
    }
    if j > 0 {
        out[3] = Some((d.edge_index(Edge::new(i, j - 1, Axis::Y)), k - d.nx()));
    }
    out.into_iter().flatten()
}

fn check_domains(a: &Arc<GridDomain>, b: &Arc<GridDomain>) -> Result<(), SolverError> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(SolverError::DomainMismatch)
    }
}

/// Exact minimiser of the energy in `v` for fixed `u`, starting CG from `v = 1`.
pub fn update_v(u: &AngleField, eps: f64, cfg: &SolveConfig) -> Result<ScalarField, SolverError> {
    update_v_from(u, None, eps, cfg)
}

/// As [`update_v`], warm-starting CG from `v_prev`.
pub fn update_v_from(
    u: &AngleField,
    v_prev: Option<&ScalarField>,
    eps: f64,
    cfg: &SolveConfig,
) -> Result<ScalarField, SolverError> {
    solve_v(&grad_sq_circle(u), v_prev, eps, cfg)
}

/// `v`-step for the constrained regime: the gradient is taken from raw
/// differences of the lifting, so jumps of `phi` larger than `pi` are seen.
pub fn update_v_lifted(
    phi: &ScalarField,
    v_prev: Option<&ScalarField>,
    eps: f64,
    cfg: &SolveConfig,
) -> Result<ScalarField, SolverError> {
    solve_v(&grad_sq_scalar(phi), v_prev, eps, cfg)
}

fn solve_v(
    g: &CellField,
    v_prev: Option<&ScalarField>,
    eps: f64,
    cfg: &SolveConfig,
) -> Result<ScalarField, SolverError> {
    if !(eps > 0.0) {
        return Err(SolverError::InvalidConfig(format!("eps must be positive, got {eps}")));
    }
    let d = g.domain();
    if let Some(v) = v_prev {
        check_domains(d, v.domain())?;
    }
    let h2 = d.h() * d.h();
    let mut diag = vec![0.0; d.len()];
    let mut rhs = vec![0.0; d.len()];
    for (ci, cj) in d.active_cells() {
        let gc = g.get(ci, cj);
        for k in cell_nodes(d, ci, cj) {
            diag[k] += 0.25 * h2 * (gc + 0.25 / eps);
            rhs[k] += 0.25 * h2 * 0.25 / eps;
        }
    }
    let kappa = edge_weights(d, |_, _| 0.5 * eps);
    let mut index = vec![usize::MAX; d.len()];
    let nodes: Vec<usize> = d.active_nodes().filter(|&k| rhs[k] > 0.0).collect();
    for (a, &k) in nodes.iter().enumerate() {
        index[k] = a;
    }
    let mut start = vec![0];
    let mut nbr = Vec::new();
    for &k in &nodes {
        for (ei, n) in slots(d, k) {
            if kappa[ei] > 0.0 {
                nbr.push((index[n], kappa[ei]));
            }
        }
        start.push(nbr.len());
    }
    let sys = NodeSystem { diag: nodes.iter().map(|&k| diag[k]).collect(), nodes, start, nbr };
    let b: Vec<f64> = sys.nodes.iter().map(|&k| rhs[k]).collect();
    let x0: Vec<f64> = match v_prev {
        Some(v) => sys.nodes.iter().map(|&k| v.values()[k]).collect(),
        None => vec![1.0; sys.nodes.len()],
    };
    let out = pcg_solve(|x, y| sys.apply(x, y), Some(&sys.inv_diag()), &b, Some(&x0), cfg.cg_tol, cfg.cg_max_iters)?;
    let mut vals = vec![1.0; d.len()];
    for (a, &k) in sys.nodes.iter().enumerate() {
        vals[k] = out.x[a].clamp(0.0, 1.0);
    }
    Ok(ScalarField::new(d.clone(), vals).expect("finite"))
}

/// Bulk coupling weights `sum over cells containing e of v_c^2 / 2`.
fn bulk_weights(v: &ScalarField, floor: f64) -> Vec<f64> {
    let d = v.domain();
    let vv = v.values();
    edge_weights(d, |ci, cj| {
        let v2 = cell_nodes(d, ci, cj).iter().map(|&k| vv[k] * vv[k]).sum::<f64>() * 0.25;
        0.5 * (v2 + floor)
    })
}

/// Minimises `sum_k w_k pv(t - a_k)^2` over the circle.
///
/// The objective is a quadratic on each arc between consecutive cut points
/// `a_k + pi`; the arc minimisers are compared and the best one returned.
/// `t0` is kept unless another point is strictly better.
pub fn circle_weighted_min(t0: f64, targets: &[(f64, f64)]) -> f64 {
    let wsum: f64 = targets.iter().map(|t| t.1).sum();
    if !(wsum > 0.0) {
        return t0;
    }
    let f = |t: f64| targets.iter().map(|&(a, w)| w * pv_diff(t, a).powi(2)).sum::<f64>();
    // cut points relative to t0, in [0, 2 pi)
    let mut cuts: Vec<f64> = targets.iter().map(|&(a, _)| (a + PI - t0).rem_euclid(TAU)).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut best_t = t0;
    let mut best_f = f(t0);
    let m = cuts.len();
    for k in 0..m {
        let lo = cuts[k];
        let hi = if k + 1 < m { cuts[k + 1] } else { cuts[0] + TAU };
        if hi - lo <= 0.0 {
            continue;
        }
        // unwrap targets relative to the arc midpoint, then the quadratic minimiser
        let mid = t0 + 0.5 * (lo + hi);
        let mean = targets.iter().map(|&(a, w)| w * (mid + pv_diff(a, mid))).sum::<f64>() / wsum;
        let t = mean.clamp(t0 + lo, t0 + hi);
        let ft = f(t);
        if ft < best_f {
            best_f = ft;
            best_t = t;
        }
    }
    if best_t == t0 {
        t0
    } else {
        t0 + pv_diff(best_t, t0)
    }
}

/// Gauss–Seidel sweeps of the relaxed `u`-step over `free` nodes (all active
/// nodes when `None`). Each node moves to the exact minimiser of its local
/// `v^2`-weighted energy, so the bulk term never increases.
pub fn update_u_relaxed(
    u: &AngleField,
    v: &ScalarField,
    free: Option<&[bool]>,
    sweeps: usize,
) -> Result<AngleField, SolverError> {
    check_domains(u.domain(), v.domain())?;
    let d = u.domain().clone();
    let w = bulk_weights(v, 0.0);
    let mut out = u.clone();
    let mut nb: Vec<(f64, f64)> = Vec::with_capacity(4);
    for _ in 0..sweeps.max(1) {
        for k in d.active_nodes() {
            if free.is_some_and(|f| !f[k]) {
                continue;
            }
            nb.clear();
            let th = out.theta();
            for (ei, n) in slots(&d, k) {
                if w[ei] > 0.0 {
                    nb.push((th[n], w[ei]));
                }
            }
            let t = circle_weighted_min(th[k], &nb);
            out.theta_mut()[k] = t;
        }
    }
    Ok(out)
}

/// Constrained `phi`-step: exact minimiser of `sum_e (v_e^2 + DELTA_REG) (d phi)^2`
/// over the `free` nodes (all active nodes when `None`), with the others fixed.
/// With no fixed node the mean of `phi` is preserved.
pub fn update_phi_constrained(
    phi: &ScalarField,
    v: &ScalarField,
    free: Option<&[bool]>,
    cfg: &SolveConfig,
) -> Result<ScalarField, SolverError> {
    check_domains(phi.domain(), v.domain())?;
    let d = phi.domain();
    let w = bulk_weights(v, DELTA_REG);
    let p = phi.values();
    let is_free = |k: usize| free.map_or(true, |f| f[k]);
    let mut index = vec![usize::MAX; d.len()];
    let nodes: Vec<usize> =
        d.active_nodes().filter(|&k| is_free(k) && slots(d, k).any(|(ei, _)| w[ei] > 0.0)).collect();
    for (a, &k) in nodes.iter().enumerate() {
        index[k] = a;
    }
    let anchored = d.active_nodes().any(|k| index[k] == usize::MAX && slots(d, k).any(|(ei, _)| w[ei] > 0.0));
    let mut start = vec![0];
    let mut nbr = Vec::new();
    let mut diag = Vec::with_capacity(nodes.len());
    let mut rhs = Vec::with_capacity(nodes.len());
    for &k in &nodes {
        let (mut dg, mut r) = (0.0, 0.0);
        for (ei, n) in slots(d, k) {
            let we = w[ei];
            if we <= 0.0 {
                continue;
            }
            r -= we * (p[k] - p[n]);
            if index[n] == usize::MAX {
                dg += we;
            } else {
                nbr.push((index[n], we));
            }
        }
        diag.push(dg);
        rhs.push(r);
        start.push(nbr.len());
    }
    let sys = NodeSystem { nodes, diag, start, nbr };
    let out = if anchored {
        pcg_solve(|x, y| sys.apply(x, y), Some(&sys.inv_diag()), &rhs, None, cfg.cg_tol, cfg.cg_max_iters)?
    } else {
        // singular (constants in the kernel): CG on the consistent system, then re-anchor the mean
        let o = pcg_solve(|x, y| sys.apply(x, y), Some(&sys.inv_diag()), &rhs, None, cfg.cg_tol, cfg.cg_max_iters)?;
        let mean = o.x.iter().sum::<f64>() / o.x.len().max(1) as f64;
        CgOutcome { x: o.x.iter().map(|x| x - mean).collect(), ..o }
    };
    let mut vals = p.to_vec();
    for (a, &k) in sys.nodes.iter().enumerate() {
        vals[k] += out.x[a];
    }
    Ok(ScalarField::new(d.clone(), vals).expect("finite"))
}

fn energy_of(state: &SolveState, eps: f64) -> Result<EnergyReport, SolverError> {
    Ok(match &state.phi {
        Some(phi) => at_energy_lifted(phi, &state.v, eps)?,
        None => at_energy(&state.u, &state.v, eps)?,
    })
}

/// Default free set: every active node that is not on the mask boundary.
pub fn interior_nodes(d: &GridDomain) -> Vec<bool> {
    let b = d.boundary_nodes();
    (0..d.len()).map(|k| d.is_active(k) && !b[k]).collect()
}

/// Initial constrained state: the jump-minimising lifting of `u0`, with each
/// jump smoothed out by Jacobi averaging on a band one node wide around the cuts.
pub fn constrained_start(u0: &AngleField, declared_su: &EdgeSet) -> Result<ScalarField, SolverError> {
    let d = u0.domain();
    let lift = jump_min_lifting(u0, declared_su)?;
    let mut phi = lift.phi.clone();
    let mut band = vec![false; d.len()];
    for e in lift.jump_edges.iter() {
        let (hi, hj) = e.head();
        for k in [d.idx(e.i, e.j), d.idx(hi, hj)] {
            band[k] = true;
            for n in d.neighbors(k) {
                band[n] = true;
            }
        }
    }
    for _ in 0..3 {
        let old = phi.values().to_vec();
        let vals = phi.values_mut();
        for k in d.active_nodes().filter(|&k| band[k]) {
            let (s, c) = d.neighbors(k).fold((old[k], 1.0), |(s, c), n| (s + old[n], c + 1.0));
            vals[k] = s / c;
        }
    }
    Ok(phi)
}

/// Runs the alternating scheme from `u0` with `v = 1` and boundary nodes fixed.
pub fn solve_at(u0: &AngleField, regime: Regime, cfg: &SolveConfig) -> Result<SolveOutcome, SolverError> {
    solve_at_with(u0, regime, cfg, &EdgeSet::empty(u0.domain().clone()))
}

/// As [`solve_at`]; the constrained start lifts `u0` with `declared_su` as
/// the known jump set.
pub fn solve_at_with(
    u0: &AngleField,
    regime: Regime,
    cfg: &SolveConfig,
    declared_su: &EdgeSet,
) -> Result<SolveOutcome, SolverError> {
    cfg.validate()?;
    let d = u0.domain().clone();
    let phi = match regime {
        Regime::Relaxed => None,
        Regime::Constrained => Some(constrained_start(u0, declared_su)?),
    };
    let u = phi.as_ref().map_or_else(|| u0.clone(), |p| p.to_angles());
    let state = SolveState { u, phi, v: ScalarField::constant(d.clone(), 1.0) };
    let free = interior_nodes(&d);
    solve_from(state, regime, cfg, &free)
}

/// Runs the alternating scheme from an explicit state; only nodes with
/// `free[k]` move in the `u`/`phi` step.
pub fn solve_from(
    mut state: SolveState,
    regime: Regime,
    cfg: &SolveConfig,
    free: &[bool],
) -> Result<SolveOutcome, SolverError> {
    cfg.validate()?;
    check_domains(state.u.domain(), state.v.domain())?;
    if regime == Regime::Constrained && state.phi.is_none() {
        return Err(SolverError::InvalidConfig("constrained regime needs a lifting".into()));
    }
    if regime == Regime::Relaxed {
        state.phi = None;
    }
    let mut records = Vec::with_capacity(cfg.eps_schedule.len());
    let mut trace = Vec::with_capacity(cfg.eps_schedule.len());
    for &eps in &cfg.eps_schedule {
        let mut energies = Vec::new();
        let mut e_prev = energy_of(&state, eps)?.total;
        energies.push(e_prev);
        let mut converged = false;
        let mut iters = 0;
        let check = |before: f64, after: f64| {
            if after > before + cfg.slack(before) {
                Err(SolverError::EnergyIncrease { eps, before, after })
            } else {
                Ok(())
            }
        };
        while iters < cfg.max_outer_iters {
            iters += 1;
            state.v = match &state.phi {
                Some(phi) => update_v_lifted(phi, Some(&state.v), eps, cfg)?,
                None => update_v_from(&state.u, Some(&state.v), eps, cfg)?,
            };
            let e_half = energy_of(&state, eps)?.total;
            check(*energies.last().unwrap(), e_half)?;
            energies.push(e_half);
            match regime {
                Regime::Relaxed => {
                    state.u = update_u_relaxed(&state.u, &state.v, Some(free), cfg.u_sweeps)?;
                }
                Regime::Constrained => {
                    let phi = update_phi_constrained(state.phi.as_ref().unwrap(), &state.v, Some(free), cfg)?;
                    state.u = phi.to_angles();
                    state.phi = Some(phi);
                }
            }
            let e_new = energy_of(&state, eps)?.total;
            check(e_half, e_new)?;
            energies.push(e_new);
            if (e_prev - e_new).abs() <= cfg.energy_tol * e_new.abs() {
                converged = true;
                break;
            }
            e_prev = e_new;
        }
        let report = energy_of(&state, eps)?;
        records.push(SweepRecord { eps, iters, report, converged });
        trace.push((eps, energies));
    }
    Ok(SolveOutcome { state, records, trace })
}
