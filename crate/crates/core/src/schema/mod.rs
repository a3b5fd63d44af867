//! Symbolic data model: requests, inventories, itineraries, their canonical
//! JSON form and the feasibility checker.

mod canonical;
mod check;
mod parse;
mod types;

pub use canonical::{canonical_json, canonicalize, differing_fields, CanonicalForm};
pub use check::{
    check_feasibility, check_feasibility_with, flight_violations, hotel_violations, itinerary_cost,
    money_costs, CheckError,
};
pub use parse::{
    from_value, inventory_from_value, parse_inventory, parse_itinerary, parse_request,
    request_from_value, validate_inventory, validate_request, SchemaError,
};
pub use types::*;
