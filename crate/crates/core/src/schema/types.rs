use std::collections::BTreeSet;
use std::fmt;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

/// Version stamped into every request, inventory and itinerary document.
pub const SCHEMA_VERSION: u32 = 1;

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn default_slot_minutes() -> u32 {
    60
}

fn yes() -> bool {
    true
}

/// Money in integer cents.
pub type Cents = i64;

/// Minutes after local midnight, `0..1440`.
pub type MinuteOfDay = u16;

/// Three-letter uppercase airport / city code such as `DEN`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CityCode(String);

impl CityCode {
    pub fn new(code: impl Into<String>) -> Self {
        CityCode(code.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_valid(&self) -> bool {
        self.0.len() == 3 && self.0.bytes().all(|b| b.is_ascii_uppercase())
    }
}

impl fmt::Display for CityCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for CityCode {
    fn from(s: &str) -> Self {
        CityCode(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cabin {
    BasicEconomy,
    Coach,
    Business,
    First,
}

impl Cabin {
    pub const ALL: [Cabin; 4] = [Cabin::BasicEconomy, Cabin::Coach, Cabin::Business, Cabin::First];

    pub fn as_str(self) -> &'static str {
        match self {
            Cabin::BasicEconomy => "basic_economy",
            Cabin::Coach => "coach",
            Cabin::Business => "business",
            Cabin::First => "first",
        }
    }

    /// Service level used by the better-flight objective.
    pub fn quality_level(self) -> i64 {
        match self {
            Cabin::BasicEconomy => 0,
            Cabin::Coach => 1,
            Cabin::Business => 3,
            Cabin::First => 4,
        }
    }

    pub fn parse(s: &str) -> Option<Cabin> {
        Cabin::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for Cabin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One requested leg: "Day X, city A to city B".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub origin: CityCode,
    pub destination: CityCode,
    pub date: NaiveDate,
}

/// Inclusive `[min, max]` range in cents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceRange {
    pub min: Cents,
    pub max: Cents,
}

impl PriceRange {
    pub fn contains(&self, price: Cents) -> bool {
        self.min <= price && price <= self.max
    }
}

/// Local time-of-day window applied to every segment's flight.
///
/// Soft windows only add an objective penalty per minute outside the window;
/// hard windows remove offers outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeWindow {
    pub earliest: MinuteOfDay,
    pub latest: MinuteOfDay,
    #[serde(default = "yes")]
    pub soft: bool,
}

impl TimeWindow {
    pub fn contains(&self, minute: MinuteOfDay) -> bool {
        self.earliest <= minute && minute <= self.latest
    }

    /// Minutes between `minute` and the nearest edge of the window, 0 inside.
    pub fn minutes_outside(&self, minute: MinuteOfDay) -> i64 {
        let m = i64::from(minute);
        (i64::from(self.earliest) - m).max(0) + (m - i64::from(self.latest)).max(0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AirlineConstraints {
    /// Per-ticket price bounds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_range: Option<PriceRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub departure_window: Option<TimeWindow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrival_window: Option<TimeWindow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cabin_class: Option<Cabin>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refundable: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub non_stop: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plane_type: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preferred_airlines: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avoided_airlines: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub must_not_basic_economy: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avoid_red_eye: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub no_mixed_cabin: Option<bool>,
}

impl AirlineConstraints {
    pub const FIELDS: [&'static str; 12] = [
        "price_range",
        "departure_window",
        "arrival_window",
        "cabin_class",
        "refundable",
        "non_stop",
        "plane_type",
        "preferred_airlines",
        "avoided_airlines",
        "must_not_basic_economy",
        "avoid_red_eye",
        "no_mixed_cabin",
    ];

    /// Names of the fields that are set, in declaration order.
    pub fn present_fields(&self) -> Vec<&'static str> {
        let flags = [
            self.price_range.is_some(),
            self.departure_window.is_some(),
            self.arrival_window.is_some(),
            self.cabin_class.is_some(),
            self.refundable.is_some(),
            self.non_stop.is_some(),
            self.plane_type.is_some(),
            self.preferred_airlines.is_some(),
            self.avoided_airlines.is_some(),
            self.must_not_basic_economy.is_some(),
            self.avoid_red_eye.is_some(),
            self.no_mixed_cabin.is_some(),
        ];
        Self::FIELDS
            .iter()
            .zip(flags)
            .filter_map(|(name, set)| set.then_some(*name))
            .collect()
    }

    pub fn count(&self) -> usize {
        self.present_fields().len()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HotelConstraints {
    /// Nightly price bounds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_range: Option<PriceRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating_min: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preferred_brands: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avoided_brands: Option<BTreeSet<String>>,
}

impl HotelConstraints {
    pub const FIELDS: [&'static str; 4] =
        ["price_range", "rating_min", "preferred_brands", "avoided_brands"];

    pub fn present_fields(&self) -> Vec<&'static str> {
        let flags = [
            self.price_range.is_some(),
            self.rating_min.is_some(),
            self.preferred_brands.is_some(),
            self.avoided_brands.is_some(),
        ];
        Self::FIELDS
            .iter()
            .zip(flags)
            .filter_map(|(name, set)| set.then_some(*name))
            .collect()
    }

    pub fn count(&self) -> usize {
        self.present_fields().len()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConstraints {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_budget: Option<Cents>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flight_total_budget: Option<Cents>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hotel_total_budget: Option<Cents>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hotel_daily_budget: Option<Cents>,
}

impl BudgetConstraints {
    pub const FIELDS: [&'static str; 4] = [
        "total_budget",
        "flight_total_budget",
        "hotel_total_budget",
        "hotel_daily_budget",
    ];

    pub fn present_fields(&self) -> Vec<&'static str> {
        let flags = [
            self.total_budget.is_some(),
            self.flight_total_budget.is_some(),
            self.hotel_total_budget.is_some(),
            self.hotel_daily_budget.is_some(),
        ];
        Self::FIELDS
            .iter()
            .zip(flags)
            .filter_map(|(name, set)| set.then_some(*name))
            .collect()
    }
}

/// The symbolic user request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TravelRequest {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub request_id: String,
    pub segments: Vec<Segment>,
    #[serde(default)]
    pub airline_constraints: AirlineConstraints,
    #[serde(default)]
    pub hotel_constraints: HotelConstraints,
    #[serde(default)]
    pub budget: BudgetConstraints,
}

/// Consecutive nights spent in one away city between two segments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AwayBlock {
    /// Index of the segment that arrives in the city.
    pub arrival_segment: usize,
    pub city: CityCode,
    pub check_in: NaiveDate,
    pub check_out: NaiveDate,
}

impl AwayBlock {
    pub fn nights(&self) -> i64 {
        (self.check_out - self.check_in).num_days()
    }

    pub fn night_dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.check_in
            .iter_days()
            .take_while(move |d| *d < self.check_out)
    }
}

impl TravelRequest {
    pub fn home(&self) -> &CityCode {
        &self.segments[0].origin
    }

    pub fn is_round_trip(&self) -> bool {
        self.segments.last().map(|s| &s.destination) == self.segments.first().map(|s| &s.origin)
    }

    /// Distinct cities in visiting order, home first.
    pub fn cities(&self) -> Vec<CityCode> {
        let mut out: Vec<CityCode> = Vec::new();
        for seg in &self.segments {
            for c in [&seg.origin, &seg.destination] {
                if !out.contains(c) {
                    out.push(c.clone());
                }
            }
        }
        out
    }

    pub fn city_count(&self) -> usize {
        self.cities().len()
    }

    /// Nights that need a hotel: every gap of one or more days between a
    /// segment's arrival and the next segment's departure.
    pub fn away_blocks(&self) -> Vec<AwayBlock> {
        self.segments
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1].date > w[0].date)
            .map(|(k, w)| AwayBlock {
                arrival_segment: k,
                city: w[0].destination.clone(),
                check_in: w[0].date,
                check_out: w[1].date,
            })
            .collect()
    }

    pub fn first_date(&self) -> NaiveDate {
        self.segments[0].date
    }

    pub fn last_date(&self) -> NaiveDate {
        self.segments[self.segments.len() - 1].date
    }
}

/// A bookable flight for one segment of the paired request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlightOffer {
    pub id: String,
    pub segment: usize,
    pub airline: String,
    pub flight_number: String,
    pub cabin: Cabin,
    pub price_cents: Cents,
    pub departure: NaiveDateTime,
    pub arrival: NaiveDateTime,
    pub non_stop: bool,
    pub aircraft: String,
    pub refundable: bool,
    pub is_basic_economy: bool,
    pub is_red_eye: bool,
    pub is_mixed_cabin: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HotelOffer {
    pub id: String,
    pub name: String,
    pub city: CityCode,
    pub brand: String,
    pub rating: u8,
    pub nightly_price_cents: Cents,
    pub checkin_earliest: MinuteOfDay,
    pub checkout_latest: MinuteOfDay,
    /// First night the hotel can be booked.
    pub available_from: NaiveDate,
    /// Latest allowed check-out date.
    pub available_to: NaiveDate,
}

impl HotelOffer {
    pub fn available_for(&self, check_in: NaiveDate, check_out: NaiveDate) -> bool {
        self.available_from <= check_in && check_out <= self.available_to
    }
}

/// Flight and hotel information paired with a request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inventory {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub flights: Vec<FlightOffer>,
    pub hotels: Vec<HotelOffer>,
}

impl Inventory {
    pub fn flight(&self, id: &str) -> Option<&FlightOffer> {
        self.flights.iter().find(|f| f.id == id)
    }

    pub fn hotel(&self, id: &str) -> Option<&HotelOffer> {
        self.hotels.iter().find(|h| h.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    MinCost,
    BetterHotel,
    BetterFlight,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 3] = [
        ObjectiveKind::MinCost,
        ObjectiveKind::BetterHotel,
        ObjectiveKind::BetterFlight,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectiveKind::MinCost => "min_cost",
            ObjectiveKind::BetterHotel => "better_hotel",
            ObjectiveKind::BetterFlight => "better_flight",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ObjectiveKind::MinCost => "Minimum Cost",
            ObjectiveKind::BetterHotel => "Better Hotel",
            ObjectiveKind::BetterFlight => "Better Flight",
        }
    }

    pub fn parse(s: &str) -> Option<ObjectiveKind> {
        ObjectiveKind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HotelStay {
    pub hotel_id: String,
    pub check_in: NaiveDate,
    pub check_out: NaiveDate,
}

impl HotelStay {
    pub fn nights(&self) -> i64 {
        (self.check_out - self.check_in).num_days()
    }
}

/// A solution: one flight per segment plus hotel stays.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Itinerary {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub request_id: String,
    pub chosen_flights: Vec<String>,
    pub hotel_stays: Vec<HotelStay>,
    pub flight_cost: Cents,
    pub hotel_cost: Cents,
    pub total_cost: Cents,
    pub objective_kind: ObjectiveKind,
    /// Objective in the units of `objective_kind`: cents for `min_cost`,
    /// milli-cents for the quality-weighted objectives.
    pub objective_value: i64,
    /// Grid resolution the itinerary was planned on.
    #[serde(default = "default_slot_minutes")]
    pub slot_minutes: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

impl ConstraintReport {
    pub fn from_violations(violations: Vec<Violation>) -> Self {
        ConstraintReport {
            feasible: violations.is_empty(),
            violations,
        }
    }

    pub fn violates(&self, field: &str) -> bool {
        self.violations.iter().any(|v| v.field == field)
    }
}
