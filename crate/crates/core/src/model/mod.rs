//! Compiles a request and its inventory into a time-indexed binary program.
//!
//! Variables: `u_l(t)` (traveller at location `l` during slot `t`, with a
//! distinguished air location), `e(t)` (location may change between `t` and
//! `t+1`), `m(t)` (asleep in slot `t`, only for evening slots of away
//! nights), `f_j` (flight booked) and `h_j` (candidate stay booked).

mod build;
mod extract;
mod lpformat;
mod pipeline;

use std::ops::Range;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::{AwayBlock, Cents, Inventory, ObjectiveKind, TravelRequest};
use crate::solver::Problem;
use crate::timegrid::{FlightSlots, GridError, Rules, TimeGrid};

pub use build::{add_conditional_equality, build_model, filter_offers, Operand};
pub use extract::{assignment_for, extract_itinerary, rounding_heuristic, Selection};
pub use lpformat::to_lp_format;
pub use pipeline::{profile_solve, solve_milp, solve_request, SolveError, Solved, SOLVE_GRID_FALLBACK};

pub const AIR: &str = "AIR";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("flight {flight} spans fewer than two {slot_minutes}-minute slots")]
    GridTooCoarse { flight: String, slot_minutes: u32 },
    #[error("no flight offer survives filtering for segment {segment} ({route})")]
    EmptySegment { segment: usize, route: String },
    #[error("cannot choose a finite big-M for `{0}`")]
    UnboundedVariable(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("variable {0} is fractional")]
    FractionalAssignment(String),
    #[error("assignment violates model rows: {0}")]
    InconsistentAssignment(String),
}

/// Quality weights for the two preference objectives, all integers so the
/// objective stays integral (units of 1/1000 cent).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    /// Weight on quality vs. price, per mille.
    pub lambda_hotel: i64,
    pub lambda_flight: i64,
    /// Worth of one rating star per night, in cents.
    pub hotel_star_cents: Cents,
    /// Worth of one cabin-quality level per flight, in cents.
    pub flight_quality_cents: Cents,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        ObjectiveWeights {
            lambda_hotel: 300,
            lambda_flight: 300,
            hotel_star_cents: 4000,
            flight_quality_cents: 10000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VarTag {
    Location { location: usize, slot: usize },
    Sleep { slot: usize },
    Event { slot: usize },
    Flight { candidate: usize },
    Hotel { stay: usize },
}

/// A flight that may serve its segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlightCandidate {
    /// Index into the model's (filtered) inventory.
    pub offer: usize,
    pub segment: usize,
    pub slots: FlightSlots,
    pub var: usize,
}

/// One hotel booked for a whole away block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateStay {
    pub hotel: usize,
    pub block: usize,
    pub check_in: NaiveDate,
    pub check_out: NaiveDate,
    pub slots: Range<usize>,
    pub cost: Cents,
    pub var: usize,
}

/// Big-M constant chosen for one conditional equality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BigM {
    pub rows: [usize; 2],
    pub m: f64,
}

#[derive(Debug, Clone)]
pub struct MilpModel {
    pub problem: Problem,
    pub tags: Vec<VarTag>,
    pub objective: ObjectiveKind,
    pub weights: ObjectiveWeights,
    pub request: TravelRequest,
    /// Inventory after hard-constraint filtering.
    pub inventory: Inventory,
    pub grid: TimeGrid,
    pub rules: Rules,
    /// City codes in visiting order, then [`AIR`].
    pub locations: Vec<String>,
    pub blocks: Vec<AwayBlock>,
    pub flights: Vec<FlightCandidate>,
    pub stays: Vec<CandidateStay>,
    /// `u[l][t]`
    pub u: Vec<Vec<usize>>,
    /// `e[t]` for `t` in `0..T-1`
    pub e: Vec<usize>,
    /// `m[t]`, present only for evening slots of away nights.
    pub m: Vec<Option<usize>>,
    /// Evening slots per away night, in night order.
    pub nights: Vec<(NaiveDate, Range<usize>)>,
    pub min_sleep_slots: usize,
    pub big_m: Vec<BigM>,
}

impl MilpModel {
    pub fn air(&self) -> usize {
        self.locations.len() - 1
    }

    pub fn location_index(&self, code: &str) -> Option<usize> {
        self.locations.iter().position(|l| l == code)
    }

    pub fn segment_candidates(&self, segment: usize) -> impl Iterator<Item = (usize, &FlightCandidate)> {
        self.flights
            .iter()
            .enumerate()
            .filter(move |(_, c)| c.segment == segment)
    }

    pub fn block_stays(&self, block: usize) -> impl Iterator<Item = (usize, &CandidateStay)> {
        self.stays.iter().enumerate().filter(move |(_, s)| s.block == block)
    }

    /// Objective scale: 1 for cents, 1000 for the milli-cent objectives.
    pub fn objective_scale(&self) -> i64 {
        match self.objective {
            ObjectiveKind::MinCost => 1,
            _ => 1000,
        }
    }
}
