//! Error types for each module.

use thiserror::Error;

use crate::grid::Edge;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid shape {0}")]
    InvalidShape(String),
    #[error("resolution must be at least 2, got {0}")]
    InvalidResolution(usize),
    #[error("domain has no active nodes")]
    EmptyDomain,
    #[error("active node set is not 4-connected")]
    Disconnected,
    #[error("field length {got} does not match the domain ({expected} nodes)")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at active node {0}")]
    NonFinite(usize),
    #[error("edge {0:?} does not join two active nodes")]
    InactiveEdge(Edge),
    #[error("fields live on different domains")]
    DomainMismatch,
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("eps must lie in (0, 1], got {0}")]
    InvalidEps(f64),
    #[error("phase field value {value} at node {node} leaves [0, 1]")]
    VOutOfRange { node: usize, value: f64 },
    #[error("fields live on different domains")]
    DomainMismatch,
    #[error("invalid lifting: residual {0:e}")]
    InvalidLifting(f64),
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("{0}")]
    InvalidConfig(String),
    #[error("conjugate gradient did not converge in {iters} iterations (relative residual {residual:e})")]
    CgNotConverged { iters: usize, residual: f64 },
    #[error("energy increased from {before} to {after} at eps = {eps}")]
    EnergyIncrease { eps: f64, before: f64, after: f64 },
    #[error("fields live on different domains")]
    DomainMismatch,
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Lifting(#[from] LiftingError),
}

#[derive(Debug, Error)]
pub enum LiftingError {
    #[error("inconsistent cuts at edge ({}, {}, {:?}): mismatch {mismatch:e}", edge.i, edge.j, edge.axis)]
    InconsistentCuts { edge: Edge, mismatch: f64 },
    #[error("loop is not a closed 4-connected cycle of active nodes")]
    InvalidLoop,
    #[error("invalid lifting: residual {0:e}")]
    InvalidLifting(f64),
    #[error("fields live on different domains")]
    DomainMismatch,
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("{got} charges exceed the exhaustive budget of {max}; a heuristic would be needed")]
    BudgetExceeded { got: usize, max: usize },
    #[error("a Steiner tree needs at least 2 terminals, got {0}")]
    TooFewTerminals(usize),
    #[error("charge at ({0}, {1}) is not strictly inside the domain")]
    OutsideDomain(f64, f64),
}

#[derive(Debug, Error)]
pub enum ExampleError {
    #[error("{0}")]
    InvalidParameter(String),
    #[error("{0}")]
    Resolution(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Lifting(#[from] LiftingError),
}
