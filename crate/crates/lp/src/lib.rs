//! Sparse linear programming: problem builder, bounded revised simplex,
//! KKT residual checks and fixed-format MPS export.

mod check;
mod lu;
mod mps;
mod problem;
mod simplex;

pub use check::{check_solution, ResidualReport, DEFAULT_CHECK_TOL};
pub use mps::{export_mps, mps_name};
pub use problem::{Column, LpProblem, Row, Sense};
pub use simplex::{solve, LpResult, SolveOptions, Status};

#[derive(Debug, thiserror::Error)]
pub enum LpError {
    #[error("column {name} has invalid bounds [{lower}, {upper}]")]
    InvalidBounds { name: String, lower: f64, upper: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("row {row} references unknown column {col}")]
    UnknownColumn { row: String, col: usize },
    #[error("duplicate name {0}")]
    DuplicateName(String),
    #[error("names collide after MPS truncation: {}", .0.join(", "))]
    NameCollision(Vec<String>),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
