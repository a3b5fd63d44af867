//! Exact MILP solving: presolve, LP relaxations by bounded-variable simplex,
//! and branch and bound.

mod bnb;
mod lp;
mod params;
mod presolve;
mod problem;

use thiserror::Error;

pub use bnb::{branch_and_bound, Heuristic, Hooks, MilpResult, MilpStatus, Timing};
pub use lp::{solve_lp, LpSolution, LpStatus};
pub use params::{Branching, NodeOrder, SolverParams};
pub use problem::{Problem, Row, Sense, VarDef, VarKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("invalid solver parameters: {0}")]
    InvalidParams(String),
    #[error("LP relaxation is unbounded")]
    Unbounded,
}
