//! Discrete Ambrosio–Tortorelli energy, its Modica–Mortola part and the two
//! Mumford–Shah limit values.
//!
//! All integrals are cell sums over fully active cells. Within a cell the
//! gradient term averages the two x-edges and the two y-edges, and nodal
//! quantities (`v^2`, `(v-1)^2`) are averaged over the four corners.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::EnergyError;
use crate::grid::{AngleField, Axis, Edge, EdgeSet, GridDomain, ScalarField};
use crate::lifting::LiftingResult;

/// The three terms of the functional at one `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub bulk: f64,
    pub grad_v: f64,
    pub well: f64,
    pub total: f64,
    pub eps: f64,
}

impl EnergyReport {
    fn new(bulk: f64, grad_v: f64, well: f64, eps: f64) -> Self {
        Self { bulk, grad_v, well, total: bulk + grad_v + well, eps }
    }

    /// `grad_v + well`.
    pub fn surface(&self) -> f64 {
        self.grad_v + self.well
    }
}

/// Dirichlet and surface parts of a limit value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitValue {
    pub dirichlet: f64,
    pub jump: f64,
    pub total: f64,
}

impl LimitValue {
    fn new(dirichlet: f64, jump: f64) -> Self {
        Self { dirichlet, jump, total: dirichlet + jump }
    }
}

/// The four edges of cell `(ci, cj)`: bottom, top, left, right.
#[inline]
pub(crate) fn cell_edges(ci: usize, cj: usize) -> [Edge; 4] {
    [
        Edge::new(ci, cj, Axis::X),
        Edge::new(ci, cj + 1, Axis::X),
        Edge::new(ci, cj, Axis::Y),
        Edge::new(ci + 1, cj, Axis::Y),
    ]
}

/// The four corner nodes of cell `(ci, cj)`.
#[inline]
pub(crate) fn cell_nodes(d: &GridDomain, ci: usize, cj: usize) -> [usize; 4] {
    [d.idx(ci, cj), d.idx(ci + 1, cj), d.idx(ci, cj + 1), d.idx(ci + 1, cj + 1)]
}

fn check_eps(eps: f64) -> Result<(), EnergyError> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(EnergyError::InvalidEps(eps))
    }
}

fn check_v(v: &ScalarField) -> Result<(), EnergyError> {
    for k in v.domain().active_nodes() {
        let x = v.values()[k];
        if !(0.0..=1.0).contains(&x) {
            return Err(EnergyError::VOutOfRange { node: k, value: x });
        }
    }
    Ok(())
}

fn same_domain(a: &Arc<GridDomain>, b: &Arc<GridDomain>) -> Result<(), EnergyError> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(EnergyError::DomainMismatch)
    }
}

/// Per-cell `(grad_v, well)` contributions.
#[inline]
fn mm_cell(d: &GridDomain, v: &[f64], ci: usize, cj: usize, eps: f64) -> (f64, f64) {
    let n = cell_nodes(d, ci, cj);
    let (a, b, c, e) = (v[n[0]], v[n[1]], v[n[2]], v[n[3]]);
    let dv2 = (b - a).powi(2) + (e - c).powi(2) + (c - a).powi(2) + (e - b).powi(2);
    let w = (a - 1.0).powi(2) + (b - 1.0).powi(2) + (c - 1.0).powi(2) + (e - 1.0).powi(2);
    (eps * 0.5 * dv2, d.h() * d.h() * 0.25 * w / (4.0 * eps))
}

#[inline]
fn v2_cell(d: &GridDomain, v: &[f64], ci: usize, cj: usize) -> f64 {
    cell_nodes(d, ci, cj).iter().map(|&k| v[k] * v[k]).sum::<f64>() * 0.25
}

fn report_with<F: Fn(Edge) -> f64>(d: &GridDomain, incr: F, v: &ScalarField, eps: f64) -> EnergyReport {
    let vv = v.values();
    let (mut bulk, mut gv, mut well) = (0.0, 0.0, 0.0);
    for (ci, cj) in d.active_cells() {
        let g: f64 = cell_edges(ci, cj).iter().map(|&e| incr(e).powi(2)).sum::<f64>() * 0.5;
        bulk += v2_cell(d, vv, ci, cj) * g;
        let (a, b) = mm_cell(d, vv, ci, cj, eps);
        gv += a;
        well += b;
    }
    EnergyReport::new(bulk, gv, well, eps)
}

/// `AT_eps(u, v)` for a circle-valued `u`; gradients use principal-value increments.
pub fn at_energy(u: &AngleField, v: &ScalarField, eps: f64) -> Result<EnergyReport, EnergyError> {
    check_eps(eps)?;
    same_domain(u.domain(), v.domain())?;
    check_v(v)?;
    Ok(report_with(u.domain(), |e| u.edge_increment(e), v, eps))
}

/// `AT_eps(e^{i phi}, v)` with gradients taken from raw differences of the
/// single-valued lifting `phi`.
pub fn at_energy_lifted(phi: &ScalarField, v: &ScalarField, eps: f64) -> Result<EnergyReport, EnergyError> {
    check_eps(eps)?;
    same_domain(phi.domain(), v.domain())?;
    check_v(v)?;
    let d = phi.domain();
    let p = phi.values();
    Ok(report_with(
        d,
        |e| {
            let (hi, hj) = e.head();
            p[d.idx(hi, hj)] - p[d.idx(e.i, e.j)]
        },
        v,
        eps,
    ))
}

/// `MM_eps(v) = int eps |grad v|^2 + (v - 1)^2 / (4 eps)`.
pub fn mm_energy(v: &ScalarField, eps: f64) -> Result<f64, EnergyError> {
    check_eps(eps)?;
    check_v(v)?;
    let d = v.domain();
    Ok(d.active_cells()
        .map(|(ci, cj)| {
            let (a, b) = mm_cell(d, v.values(), ci, cj, eps);
            a + b
        })
        .sum())
}

/// Dirichlet energy of `u`, skipping every cell that contains an edge of `exclude`.
pub fn dirichlet_energy(u: &AngleField, exclude: Option<&EdgeSet>) -> f64 {
    let d = u.domain();
    d.active_cells()
        .filter_map(|(ci, cj)| {
            let edges = cell_edges(ci, cj);
            if let Some(x) = exclude {
                if edges.iter().any(|&e| x.contains(e)) {
                    return None;
                }
            }
            Some(edges.iter().map(|&e| u.edge_increment(e).powi(2)).sum::<f64>() * 0.5)
        })
        .sum()
}

/// Relaxed limit value: Dirichlet energy away from the declared jumps plus their length.
pub fn ms_circle_value(u: &AngleField, jump_edges: &EdgeSet) -> LimitValue {
    LimitValue::new(dirichlet_energy(u, Some(jump_edges)), jump_edges.length())
}

/// Constrained limit value: Dirichlet energy away from the fractional jumps
/// plus the jump length of a minimal lifting.
pub fn ms_lift_value(u: &AngleField, result: &LiftingResult) -> Result<LimitValue, EnergyError> {
    let res = result.residual_against(u).map_err(|_| EnergyError::DomainMismatch)?;
    if res >= 1e-9 {
        return Err(EnergyError::InvalidLifting(res));
    }
    Ok(LimitValue::new(dirichlet_energy(u, Some(&result.fractional_edges)), result.jump_length))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_domain, Shape};
    use std::f64::consts::PI;

    fn square(res: usize) -> Arc<GridDomain> {
        Arc::new(make_domain(Shape::Square { side: 1.0 }, res).unwrap())
    }

    #[test]
    fn trivial_values() {
        let d = square(17);
        let u = AngleField::constant(d.clone(), 1.3);
        let one = ScalarField::constant(d.clone(), 1.0);
        assert_eq!(at_energy(&u, &one, 0.3).unwrap().total, 0.0);
        let zero = ScalarField::constant(d.clone(), 0.0);
        let r = at_energy(&u, &zero, 0.25).unwrap();
        assert!((r.total - 1.0).abs() < 1e-12);
        assert_eq!(r.bulk + r.grad_v, 0.0);
        assert_eq!(mm_energy(&one, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn rejects_invalid_inputs() {
        let d = square(9);
        let u = AngleField::constant(d.clone(), 0.0);
        let bad = ScalarField::constant(d.clone(), 1.5);
        assert!(matches!(at_energy(&u, &bad, 0.1), Err(EnergyError::VOutOfRange { .. })));
        let one = ScalarField::constant(d.clone(), 1.0);
        assert!(at_energy(&u, &one, 0.0).is_err());
        assert!(at_energy(&u, &one, 1.5).is_err());
        let other = ScalarField::constant(square(10), 1.0);
        assert!(matches!(at_energy(&u, &other, 0.1), Err(EnergyError::DomainMismatch)));
    }

    #[test]
    fn pure_jump_line() {
        let d = square(33);
        let h = d.h();
        let u = AngleField::from_fn(d.clone(), |p| if p.x < 0.5 + 0.5 * h { 0.0 } else { PI / 2.0 }).unwrap();
        let edges = EdgeSet::from_edges(d.clone(), (0..d.ny()).map(|j| Edge::new(16, j, Axis::X))).unwrap();
        let m = ms_circle_value(&u, &edges);
        assert_eq!(m.dirichlet, 0.0);
        assert!((m.total - 1.0).abs() <= 2.0 * h);
    }

    #[test]
    fn unit_v_gives_dirichlet() {
        let d = square(21);
        let u = AngleField::from_fn(d.clone(), |p| (3.0 * p.x).sin() + p.y * p.y).unwrap();
        let one = ScalarField::constant(d.clone(), 1.0);
        let r = at_energy(&u, &one, 0.2).unwrap();
        assert!((r.total - dirichlet_energy(&u, None)).abs() < 1e-14);
        assert_eq!(r.grad_v + r.well, 0.0);
    }
}
