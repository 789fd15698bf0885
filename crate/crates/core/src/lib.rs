//! Phase-field (Ambrosio–Tortorelli) approximation of Mumford–Shah energies
//! for circle-valued maps on masked 2D grids, with jump-minimising liftings
//! and exhaustive transport oracles.

pub mod energy;
pub mod error;
pub mod examples;
pub mod grid;
pub mod io;
pub mod lifting;
pub mod solver;
pub mod transport;

pub use energy::{at_energy, at_energy_lifted, mm_energy, ms_circle_value, ms_lift_value, EnergyReport, LimitValue};
pub use error::{EnergyError, ExampleError, GridError, LiftingError, SolverError, TransportError};
pub use grid::{
    distance_to_segments, grad_sq_circle, make_domain, pv_diff, AngleField, Axis, CellField, Edge, EdgeSet, GridDomain,
    Point, ScalarField, Segment, Shape,
};
pub use lifting::{
    classify_jumps, davila_ignat_check, detect_vortices, jump_min_lifting, unwrap, winding_of_loop, LiftingResult,
    VortexSet,
};
pub use solver::{cg_solve, solve_at, solve_from, Regime, SolveConfig, SweepRecord};
pub use transport::{minimal_connection, steiner_tree, verify_boundary, ChargeConfig, Connection};
