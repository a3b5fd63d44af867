use std::io::Write;
use std::time::Instant;

use thiserror::Error;

use crate::schema::{Inventory, Itinerary, ObjectiveKind, TravelRequest};
use crate::solver::{branch_and_bound, Hooks, MilpResult, SolverError, SolverParams, Timing};
use crate::timegrid::{Rules, TimeGrid};

use super::{build_model, extract_itinerary, filter_offers, rounding_heuristic, MilpModel, ModelError};

/// Finer slot lengths tried, in order, when a flight is too short for the grid.
pub const SOLVE_GRID_FALLBACK: [u32; 4] = [30, 15, 10, 5];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Branch and bound on a compiled model, seeded by the rounding heuristic.
pub fn solve_milp(
    model: &MilpModel,
    params: &SolverParams,
    trace: Option<&mut dyn Write>,
) -> Result<MilpResult, SolverError> {
    let heuristic = |x: &[f64]| rounding_heuristic(model, x);
    let trace = trace.map(|w| w as &mut dyn Write);
    branch_and_bound(
        &model.problem,
        params,
        Hooks {
            heuristic: Some(&heuristic),
            trace,
        },
    )
}

#[derive(Debug, Clone)]
pub struct Solved {
    pub model: MilpModel,
    pub result: MilpResult,
    pub itinerary: Option<Itinerary>,
}

fn compile(
    request: &TravelRequest,
    inventory: &Inventory,
    objective: ObjectiveKind,
    rules: &Rules,
) -> Result<MilpModel, ModelError> {
    let filtered = filter_offers(request, inventory);
    let mut rules = *rules;
    loop {
        let candidates = filtered.flights.iter().filter(|f| {
            request
                .segments
                .get(f.segment)
                .is_some_and(|s| s.date == f.departure.date())
        });
        let grid = TimeGrid::for_trip(request, candidates, &rules)?;
        match build_model(request, &filtered, objective, &grid, &rules) {
            Err(ModelError::GridTooCoarse { .. })
                if SOLVE_GRID_FALLBACK.iter().any(|&s| s < rules.slot_minutes) =>
            {
                let next = SOLVE_GRID_FALLBACK
                    .iter()
                    .copied()
                    .find(|&s| s < rules.slot_minutes)
                    .expect("checked above");
                rules = rules.with_slot_minutes(next);
            }
            other => return other,
        }
    }
}

/// Filter, build, solve and extract, timing each phase. `load_ms` covers
/// filtering, model building and presolve; `solve_ms` the search.
pub fn solve_request(
    request: &TravelRequest,
    inventory: &Inventory,
    objective: ObjectiveKind,
    params: &SolverParams,
    rules: &Rules,
    trace: Option<&mut dyn Write>,
) -> Result<Solved, SolveError> {
    let start = Instant::now();
    let model = compile(request, inventory, objective, rules)?;
    let build_ms = start.elapsed().as_secs_f64() * 1000.0;
    let mut result = solve_milp(&model, params, trace)?;
    result.timing = Timing::new(build_ms + result.timing.load_ms, result.timing.solve_ms);
    let itinerary = match &result.values {
        Some(x) => Some(extract_itinerary(&model, x)?),
        None => None,
    };
    Ok(Solved {
        model,
        result,
        itinerary,
    })
}

/// [`solve_request`] with default timeline rules and no trace.
pub fn profile_solve(
    request: &TravelRequest,
    inventory: &Inventory,
    objective: ObjectiveKind,
    params: &SolverParams,
) -> Result<Solved, SolveError> {
    solve_request(request, inventory, objective, params, &Rules::default(), None)
}
