//! Symbolic travel planning.
//!
//! Travel requests and flight/hotel inventories are generated or parsed
//! ([`schema`], [`generator`]), compiled into a time-discretized
//! mixed-integer program ([`model`]), solved exactly by branch and bound
//! over a bounded-variable simplex ([`solver`]), and scored against ground
//! truth with exact-match and quality-ratio metrics ([`eval`]).

pub mod eval;
pub mod generator;
pub mod model;
pub mod schema;
pub mod solver;
pub mod timegrid;

pub use schema::{
    canonicalize, check_feasibility, parse_request, Cabin, CityCode, ConstraintReport, Inventory,
    Itinerary, ObjectiveKind, TravelRequest,
};
pub use timegrid::{Rules, TimeGrid};
