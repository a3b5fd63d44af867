use serde::de::DeserializeOwned;
use thiserror::Error;

use super::types::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("schema violation at `{path}`: {message}")]
    SchemaViolation { path: String, message: String },
}

impl SchemaError {
    pub(crate) fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        SchemaError::SchemaViolation {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn path(&self) -> Option<&str> {
        match self {
            SchemaError::SchemaViolation { path, .. } => Some(path),
            SchemaError::MalformedJson(_) => None,
        }
    }
}

/// Deserialize `value` strictly, reporting the failing field path.
pub fn from_value<T: DeserializeOwned>(value: serde_json::Value) -> Result<T, SchemaError> {
    serde_path_to_error::deserialize(value).map_err(|err| {
        let mut path = err.path().to_string();
        let message = err.inner().to_string();
        // A missing field is reported against its parent; point at the field.
        if let Some(rest) = message.strip_prefix("missing field `") {
            if let Some(name) = rest.split('`').next() {
                path = if path == "." {
                    name.to_string()
                } else {
                    format!("{path}.{name}")
                };
            }
        }
        SchemaError::at(path, message)
    })
}

fn parse_json(text: &str) -> Result<serde_json::Value, SchemaError> {
    serde_json::from_str(text).map_err(|e| SchemaError::MalformedJson(e.to_string()))
}

pub fn parse_request(json_text: &str) -> Result<TravelRequest, SchemaError> {
    request_from_value(parse_json(json_text)?)
}

pub fn request_from_value(value: serde_json::Value) -> Result<TravelRequest, SchemaError> {
    let request: TravelRequest = from_value(value)?;
    validate_request(&request)?;
    Ok(request)
}

/// Parse an inventory and validate it against the request it belongs to.
pub fn parse_inventory(json_text: &str, request: &TravelRequest) -> Result<Inventory, SchemaError> {
    inventory_from_value(parse_json(json_text)?, request)
}

pub fn inventory_from_value(
    value: serde_json::Value,
    request: &TravelRequest,
) -> Result<Inventory, SchemaError> {
    let inventory: Inventory = from_value(value)?;
    validate_inventory(&inventory, request, &crate::timegrid::RedEyeRule::default())?;
    Ok(inventory)
}

pub fn parse_itinerary(json_text: &str) -> Result<Itinerary, SchemaError> {
    let itinerary: Itinerary = from_value(parse_json(json_text)?)?;
    if itinerary.schema_version != SCHEMA_VERSION {
        return Err(SchemaError::at("schema_version", "unsupported schema version"));
    }
    Ok(itinerary)
}

fn check_range(path: &str, range: &PriceRange) -> Result<(), SchemaError> {
    if range.min < 0 {
        return Err(SchemaError::at(format!("{path}.min"), "must be non-negative"));
    }
    if range.min > range.max {
        return Err(SchemaError::at(path, "min exceeds max"));
    }
    Ok(())
}

fn check_window(path: &str, window: &TimeWindow) -> Result<(), SchemaError> {
    if window.latest >= 1440 {
        return Err(SchemaError::at(format!("{path}.latest"), "minute of day out of range"));
    }
    if window.earliest > window.latest {
        return Err(SchemaError::at(path, "earliest is after latest"));
    }
    Ok(())
}

fn check_disjoint(
    path: &str,
    preferred: &Option<std::collections::BTreeSet<String>>,
    avoided: &Option<std::collections::BTreeSet<String>>,
) -> Result<(), SchemaError> {
    if let (Some(p), Some(a)) = (preferred, avoided) {
        if let Some(both) = p.intersection(a).next() {
            return Err(SchemaError::at(
                path,
                format!("`{both}` is both preferred and avoided"),
            ));
        }
    }
    Ok(())
}

fn check_nonempty_set(
    path: &str,
    set: &Option<std::collections::BTreeSet<String>>,
) -> Result<(), SchemaError> {
    if let Some(s) = set {
        if s.is_empty() {
            return Err(SchemaError::at(path, "set must not be empty"));
        }
        if s.iter().any(|v| v.trim().is_empty()) {
            return Err(SchemaError::at(path, "entries must be non-blank"));
        }
    }
    Ok(())
}

pub fn validate_request(request: &TravelRequest) -> Result<(), SchemaError> {
    if request.schema_version != SCHEMA_VERSION {
        return Err(SchemaError::at("schema_version", "unsupported schema version"));
    }
    if request.segments.is_empty() {
        return Err(SchemaError::at("segments", "at least one segment is required"));
    }
    for (k, seg) in request.segments.iter().enumerate() {
        if !seg.origin.is_valid() {
            return Err(SchemaError::at(
                format!("segments[{k}].origin"),
                "expected a three-letter uppercase code",
            ));
        }
        if !seg.destination.is_valid() {
            return Err(SchemaError::at(
                format!("segments[{k}].destination"),
                "expected a three-letter uppercase code",
            ));
        }
        if seg.origin == seg.destination {
            return Err(SchemaError::at(
                format!("segments[{k}].destination"),
                "origin and destination are the same",
            ));
        }
        if k > 0 {
            let prev = &request.segments[k - 1];
            if prev.destination != seg.origin {
                return Err(SchemaError::at(
                    format!("segments[{k}].origin"),
                    format!("segment does not continue from {}", prev.destination),
                ));
            }
            if seg.date < prev.date {
                return Err(SchemaError::at(
                    format!("segments[{k}].date"),
                    "segment dates must be non-decreasing",
                ));
            }
        }
    }

    let air = &request.airline_constraints;
    if let Some(r) = &air.price_range {
        check_range("airline_constraints.price_range", r)?;
    }
    if let Some(w) = &air.departure_window {
        check_window("airline_constraints.departure_window", w)?;
    }
    if let Some(w) = &air.arrival_window {
        check_window("airline_constraints.arrival_window", w)?;
    }
    check_nonempty_set("airline_constraints.plane_type", &air.plane_type)?;
    check_nonempty_set("airline_constraints.preferred_airlines", &air.preferred_airlines)?;
    check_nonempty_set("airline_constraints.avoided_airlines", &air.avoided_airlines)?;
    check_disjoint(
        "airline_constraints.avoided_airlines",
        &air.preferred_airlines,
        &air.avoided_airlines,
    )?;

    let hotel = &request.hotel_constraints;
    if let Some(r) = &hotel.price_range {
        check_range("hotel_constraints.price_range", r)?;
    }
    if let Some(r) = hotel.rating_min {
        if !(1..=5).contains(&r) {
            return Err(SchemaError::at("hotel_constraints.rating_min", "rating must be 1..=5"));
        }
    }
    check_nonempty_set("hotel_constraints.preferred_brands", &hotel.preferred_brands)?;
    check_nonempty_set("hotel_constraints.avoided_brands", &hotel.avoided_brands)?;
    check_disjoint(
        "hotel_constraints.avoided_brands",
        &hotel.preferred_brands,
        &hotel.avoided_brands,
    )?;

    let b = &request.budget;
    for (name, value) in BudgetConstraints::FIELDS.iter().zip([
        b.total_budget,
        b.flight_total_budget,
        b.hotel_total_budget,
        b.hotel_daily_budget,
    ]) {
        if let Some(v) = value {
            if v <= 0 {
                return Err(SchemaError::at(format!("budget.{name}"), "budget must be positive"));
            }
        }
    }
    Ok(())
}

pub fn validate_inventory(
    inventory: &Inventory,
    request: &TravelRequest,
    red_eye: &crate::timegrid::RedEyeRule,
) -> Result<(), SchemaError> {
    if inventory.schema_version != SCHEMA_VERSION {
        return Err(SchemaError::at("schema_version", "unsupported schema version"));
    }
    let mut ids = std::collections::HashSet::new();
    for (i, f) in inventory.flights.iter().enumerate() {
        let path = format!("flights[{i}]");
        if !ids.insert(f.id.as_str()) {
            return Err(SchemaError::at(format!("{path}.id"), "duplicate offer id"));
        }
        if f.segment >= request.segments.len() {
            return Err(SchemaError::at(format!("{path}.segment"), "no such segment in request"));
        }
        if f.departure >= f.arrival {
            return Err(SchemaError::at(format!("{path}.arrival"), "arrival must follow departure"));
        }
        if f.price_cents <= 0 {
            return Err(SchemaError::at(format!("{path}.price_cents"), "price must be positive"));
        }
        if f.is_red_eye != red_eye.is_red_eye(f.departure, f.arrival) {
            return Err(SchemaError::at(
                format!("{path}.is_red_eye"),
                "flag disagrees with departure/arrival times",
            ));
        }
    }
    for (i, h) in inventory.hotels.iter().enumerate() {
        let path = format!("hotels[{i}]");
        if !ids.insert(h.id.as_str()) {
            return Err(SchemaError::at(format!("{path}.id"), "duplicate offer id"));
        }
        if !h.city.is_valid() {
            return Err(SchemaError::at(format!("{path}.city"), "expected a three-letter uppercase code"));
        }
        if !(1..=5).contains(&h.rating) {
            return Err(SchemaError::at(format!("{path}.rating"), "rating must be 1..=5"));
        }
        if h.nightly_price_cents <= 0 {
            return Err(SchemaError::at(
                format!("{path}.nightly_price_cents"),
                "price must be positive",
            ));
        }
        if h.checkin_earliest >= 1440 || h.checkout_latest >= 1440 {
            return Err(SchemaError::at(path, "check-in/out minute of day out of range"));
        }
        if h.available_from > h.available_to {
            return Err(SchemaError::at(format!("{path}.available_to"), "empty availability range"));
        }
    }
    Ok(())
}
