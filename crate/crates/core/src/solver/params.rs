use serde::{Deserialize, Serialize};

use super::SolverError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Branching {
    #[default]
    MostFractional,
    PseudoCost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NodeOrder {
    #[default]
    BestFirst,
    DepthFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub integrality_tol: f64,
    pub gap_tol: f64,
    pub time_limit_ms: u64,
    pub branching: Branching,
    pub node_order: NodeOrder,
    pub presolve: bool,
    /// Run the rounding heuristic every this many nodes (0 = root only).
    pub heuristic_every: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            feas_tol: 1e-7,
            opt_tol: 1e-7,
            integrality_tol: 1e-6,
            gap_tol: 0.0,
            time_limit_ms: 60_000,
            branching: Branching::MostFractional,
            node_order: NodeOrder::BestFirst,
            presolve: true,
            heuristic_every: 25,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), SolverError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(SolverError::InvalidParams(format!("{name} must be positive, got {v}")))
            }
        };
        positive("feas_tol", self.feas_tol)?;
        positive("opt_tol", self.opt_tol)?;
        positive("integrality_tol", self.integrality_tol)?;
        if !(self.gap_tol >= 0.0 && self.gap_tol.is_finite()) {
            return Err(SolverError::InvalidParams(format!(
                "gap_tol must be non-negative, got {}",
                self.gap_tol
            )));
        }
        if self.time_limit_ms == 0 {
            return Err(SolverError::InvalidParams("time_limit_ms must be positive".into()));
        }
        Ok(())
    }
}
