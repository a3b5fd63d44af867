//! Solver-independent feasibility checker.
//!
//! Judges an itinerary against every hard constraint of a request. The
//! timeline part replays the itinerary on the same slot grid the model uses,
//! so the model's rows and this checker accept exactly the same itineraries.

use thiserror::Error;

use super::types::*;
use crate::timegrid::{Rules, TimeGrid};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("itinerary references unknown offer `{0}`")]
    UnknownOffer(String),
}

fn v(field: impl Into<String>, detail: impl Into<String>) -> Violation {
    Violation {
        field: field.into(),
        detail: detail.into(),
    }
}

/// Hard airline constraints violated by a single flight offer.
pub fn flight_violations(flight: &FlightOffer, request: &TravelRequest) -> Vec<Violation> {
    let air = &request.airline_constraints;
    let mut out = Vec::new();
    let id = &flight.id;
    if let Some(cabin) = air.cabin_class {
        if flight.cabin != cabin {
            out.push(v(
                "airline_constraints.cabin_class",
                format!("flight {id} is {} but {cabin} was requested", flight.cabin),
            ));
        }
    }
    if air.refundable == Some(true) && !flight.refundable {
        out.push(v("airline_constraints.refundable", format!("flight {id} is not refundable")));
    }
    if air.non_stop == Some(true) && !flight.non_stop {
        out.push(v("airline_constraints.non_stop", format!("flight {id} has stops")));
    }
    if let Some(types) = &air.plane_type {
        if !types.contains(&flight.aircraft) {
            out.push(v(
                "airline_constraints.plane_type",
                format!("flight {id} uses {}", flight.aircraft),
            ));
        }
    }
    if let Some(pref) = &air.preferred_airlines {
        if !pref.contains(&flight.airline) {
            out.push(v(
                "airline_constraints.preferred_airlines",
                format!("flight {id} is operated by {}", flight.airline),
            ));
        }
    }
    if let Some(avoid) = &air.avoided_airlines {
        if avoid.contains(&flight.airline) {
            out.push(v(
                "airline_constraints.avoided_airlines",
                format!("flight {id} is operated by avoided {}", flight.airline),
            ));
        }
    }
    if air.must_not_basic_economy == Some(true) && flight.is_basic_economy {
        out.push(v(
            "airline_constraints.must_not_basic_economy",
            format!("flight {id} is basic economy"),
        ));
    }
    if air.avoid_red_eye == Some(true) && flight.is_red_eye {
        out.push(v("airline_constraints.avoid_red_eye", format!("flight {id} is a red-eye")));
    }
    if air.no_mixed_cabin == Some(true) && flight.is_mixed_cabin {
        out.push(v("airline_constraints.no_mixed_cabin", format!("flight {id} mixes cabins")));
    }
    if let Some(range) = air.price_range {
        if !range.contains(flight.price_cents) {
            out.push(v(
                "airline_constraints.price_range",
                format!("flight {id} costs {} outside [{}, {}]", flight.price_cents, range.min, range.max),
            ));
        }
    }
    if let Some(w) = air.departure_window.filter(|w| !w.soft) {
        if !w.contains(crate::timegrid::minute_of_day(flight.departure)) {
            out.push(v(
                "airline_constraints.departure_window",
                format!("flight {id} departs outside the required window"),
            ));
        }
    }
    if let Some(w) = air.arrival_window.filter(|w| !w.soft) {
        if !w.contains(crate::timegrid::minute_of_day(flight.arrival)) {
            out.push(v(
                "airline_constraints.arrival_window",
                format!("flight {id} arrives outside the required window"),
            ));
        }
    }
    out
}

/// Hard hotel constraints violated by a single hotel offer.
pub fn hotel_violations(hotel: &HotelOffer, request: &TravelRequest) -> Vec<Violation> {
    let hc = &request.hotel_constraints;
    let mut out = Vec::new();
    let id = &hotel.id;
    if let Some(min) = hc.rating_min {
        if hotel.rating < min {
            out.push(v(
                "hotel_constraints.rating_min",
                format!("hotel {id} is rated {} below {min}", hotel.rating),
            ));
        }
    }
    if let Some(pref) = &hc.preferred_brands {
        if !pref.contains(&hotel.brand) {
            out.push(v(
                "hotel_constraints.preferred_brands",
                format!("hotel {id} is a {} property", hotel.brand),
            ));
        }
    }
    if let Some(avoid) = &hc.avoided_brands {
        if avoid.contains(&hotel.brand) {
            out.push(v(
                "hotel_constraints.avoided_brands",
                format!("hotel {id} is an avoided {} property", hotel.brand),
            ));
        }
    }
    if let Some(range) = hc.price_range {
        if !range.contains(hotel.nightly_price_cents) {
            out.push(v(
                "hotel_constraints.price_range",
                format!(
                    "hotel {id} costs {} per night outside [{}, {}]",
                    hotel.nightly_price_cents, range.min, range.max
                ),
            ));
        }
    }
    out
}

struct Resolved<'a> {
    flights: Vec<&'a FlightOffer>,
    stays: Vec<(&'a HotelStay, &'a HotelOffer)>,
}

fn resolve<'a>(itinerary: &'a Itinerary, inventory: &'a Inventory) -> Result<Resolved<'a>, CheckError> {
    let flights = itinerary
        .chosen_flights
        .iter()
        .map(|id| inventory.flight(id).ok_or_else(|| CheckError::UnknownOffer(id.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let stays = itinerary
        .hotel_stays
        .iter()
        .map(|s| {
            inventory
                .hotel(&s.hotel_id)
                .map(|h| (s, h))
                .ok_or_else(|| CheckError::UnknownOffer(s.hotel_id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Resolved { flights, stays })
}

/// Money spent on an itinerary's flights and hotels, recomputed from offers.
pub fn money_costs(itinerary: &Itinerary, inventory: &Inventory) -> Result<(Cents, Cents), CheckError> {
    let r = resolve(itinerary, inventory)?;
    let flights = r.flights.iter().map(|f| f.price_cents).sum();
    let hotels = r
        .stays
        .iter()
        .map(|(s, h)| h.nightly_price_cents * s.nights())
        .sum();
    Ok((flights, hotels))
}

/// Ground-truth cost `f(s; x, G)`: money plus the request's soft-window
/// penalties on the chosen flights.
pub fn itinerary_cost(
    itinerary: &Itinerary,
    request: &TravelRequest,
    inventory: &Inventory,
    rules: &Rules,
) -> Result<Cents, CheckError> {
    let r = resolve(itinerary, inventory)?;
    let (flights, hotels) = money_costs(itinerary, inventory)?;
    let penalty: Cents = r
        .flights
        .iter()
        .map(|f| rules.soft_penalty(f, &request.airline_constraints))
        .sum();
    Ok(flights + hotels + penalty)
}

pub fn check_feasibility(
    itinerary: &Itinerary,
    request: &TravelRequest,
    inventory: &Inventory,
) -> Result<ConstraintReport, CheckError> {
    let rules = Rules::default().with_slot_minutes(itinerary.slot_minutes);
    check_feasibility_with(itinerary, request, inventory, &rules)
}

pub fn check_feasibility_with(
    itinerary: &Itinerary,
    request: &TravelRequest,
    inventory: &Inventory,
    rules: &Rules,
) -> Result<ConstraintReport, CheckError> {
    let r = resolve(itinerary, inventory)?;
    let mut out = Vec::new();

    // One flight per segment, on the right segment and date.
    let mut structure_ok = true;
    if r.flights.len() != request.segments.len() {
        structure_ok = false;
        out.push(v(
            "chosen_flights",
            format!(
                "{} flights chosen for {} segments",
                r.flights.len(),
                request.segments.len()
            ),
        ));
    }
    for (k, (flight, seg)) in r.flights.iter().zip(&request.segments).enumerate() {
        if flight.segment != k {
            structure_ok = false;
            out.push(v(
                format!("chosen_flights[{k}]"),
                format!("flight {} serves segment {}", flight.id, flight.segment),
            ));
        }
        if flight.departure.date() != seg.date {
            structure_ok = false;
            out.push(v(
                format!("segments[{k}].date"),
                format!("flight {} departs {} not {}", flight.id, flight.departure.date(), seg.date),
            ));
        }
    }
    for flight in &r.flights {
        out.extend(flight_violations(flight, request));
    }

    // Stays must each match an away block; every block needs exactly one.
    let blocks = request.away_blocks();
    let mut per_block = vec![0usize; blocks.len()];
    for (i, (stay, hotel)) in r.stays.iter().enumerate() {
        let path = format!("hotel_stays[{i}]");
        if stay.check_out <= stay.check_in {
            out.push(v(&path, "check-out must follow check-in"));
            continue;
        }
        match blocks
            .iter()
            .position(|b| b.check_in == stay.check_in && b.check_out == stay.check_out)
        {
            Some(b) => {
                per_block[b] += 1;
                if hotel.city != blocks[b].city {
                    out.push(v(
                        &path,
                        format!("hotel {} is in {} but the stay is in {}", hotel.id, hotel.city, blocks[b].city),
                    ));
                }
            }
            None => out.push(v(
                &path,
                format!("no away stay runs {} to {}", stay.check_in, stay.check_out),
            )),
        }
        if !hotel.available_for(stay.check_in, stay.check_out) {
            out.push(v(&path, format!("hotel {} is unavailable for these dates", hotel.id)));
        }
        out.extend(hotel_violations(hotel, request));
    }
    for (b, count) in blocks.iter().zip(&per_block) {
        if *count == 0 {
            out.push(v(
                "hotel_stays",
                format!("no hotel booked in {} from {} to {}", b.city, b.check_in, b.check_out),
            ));
        } else if *count > 1 {
            out.push(v(
                "hotel_stays",
                format!("{count} hotels booked in {} from {} to {}", b.city, b.check_in, b.check_out),
            ));
        }
    }

    // Budgets.
    let flight_cost: Cents = r.flights.iter().map(|f| f.price_cents).sum();
    let hotel_cost: Cents = r
        .stays
        .iter()
        .map(|(s, h)| h.nightly_price_cents * s.nights().max(0))
        .sum();
    let budget = &request.budget;
    if let Some(cap) = budget.flight_total_budget {
        if flight_cost > cap {
            out.push(v("budget.flight_total_budget", format!("flights cost {flight_cost} over {cap}")));
        }
    }
    if let Some(cap) = budget.hotel_total_budget {
        if hotel_cost > cap {
            out.push(v("budget.hotel_total_budget", format!("hotels cost {hotel_cost} over {cap}")));
        }
    }
    if let Some(cap) = budget.hotel_daily_budget {
        let mut nights: Vec<chrono::NaiveDate> = r
            .stays
            .iter()
            .flat_map(|(s, _)| s.check_in.iter_days().take_while(|d| *d < s.check_out))
            .collect();
        nights.sort();
        nights.dedup();
        for night in nights {
            let spent: Cents = r
                .stays
                .iter()
                .filter(|(s, _)| s.check_in <= night && night < s.check_out)
                .map(|(_, h)| h.nightly_price_cents)
                .sum();
            if spent > cap {
                out.push(v(
                    "budget.hotel_daily_budget",
                    format!("night of {night} costs {spent} over {cap}"),
                ));
            }
        }
    }
    if let Some(cap) = budget.total_budget {
        if flight_cost + hotel_cost > cap {
            out.push(v(
                "budget.total_budget",
                format!("trip costs {} over {cap}", flight_cost + hotel_cost),
            ));
        }
    }

    // Reported totals must match the offers.
    if itinerary.flight_cost != flight_cost
        || itinerary.hotel_cost != hotel_cost
        || itinerary.total_cost != itinerary.flight_cost + itinerary.hotel_cost
    {
        out.push(v(
            "total_cost",
            format!(
                "reported {}+{}={} but offers sum to {flight_cost}+{hotel_cost}",
                itinerary.flight_cost, itinerary.hotel_cost, itinerary.total_cost
            ),
        ));
    }

    if structure_ok {
        out.extend(timeline_violations(request, &r, &blocks, rules));
    }
    Ok(ConstraintReport::from_violations(out))
}

/// Replays the flights on the slot grid: each flight needs a distinct
/// departure, air and landing slot, flights must not overlap, and every
/// away night needs `L` evening slots spent in a booked hotel's city while
/// that stay covers the slot.
fn timeline_violations(
    request: &TravelRequest,
    r: &Resolved<'_>,
    blocks: &[AwayBlock],
    rules: &Rules,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let grid = match TimeGrid::for_trip(request, r.flights.iter().copied(), rules) {
        Ok(g) => g,
        Err(e) => {
            out.push(v("timeline", e.to_string()));
            return out;
        }
    };
    let slots: Vec<_> = r.flights.iter().map(|f| grid.flight_slots(f)).collect();
    let mut consistent = true;
    for (k, s) in slots.iter().enumerate() {
        if !s.fits_grid() {
            consistent = false;
            out.push(v(
                format!("timeline.flights[{k}]"),
                format!("flight {} is shorter than two {}-minute slots", r.flights[k].id, grid.slot_minutes),
            ));
        }
        if k > 0 && s.depart < slots[k - 1].land {
            consistent = false;
            out.push(v(
                format!("timeline.flights[{k}]"),
                format!("flight {} departs before flight {} lands", r.flights[k].id, r.flights[k - 1].id),
            ));
        }
    }
    if !consistent {
        return out;
    }

    // None = in the air.
    let mut location: Vec<Option<&CityCode>> = vec![Some(request.home()); grid.slots];
    for (k, s) in slots.iter().enumerate() {
        let seg = &request.segments[k];
        for (t, loc) in location.iter_mut().enumerate().skip(s.depart + 1) {
            *loc = if t < s.land { None } else { Some(&seg.destination) };
        }
    }

    let covers: Vec<(std::ops::Range<usize>, &CityCode)> = r
        .stays
        .iter()
        .map(|(s, h)| (grid.stay_slots(h, s.check_in, s.check_out), &h.city))
        .collect();
    let need = rules.min_sleep_slots();
    for block in blocks {
        for night in block.night_dates() {
            let slept = grid
                .evening_slots(night)
                .filter(|&t| {
                    let mut covering = covers.iter().filter(|(range, _)| range.contains(&t)).peekable();
                    covering.peek().is_some()
                        && covering.all(|(_, city)| location[t] == Some(*city))
                })
                .count();
            if slept < need {
                out.push(v(
                    format!("timeline.sleep[{night}]"),
                    format!("only {slept} of {need} evening slots can be spent asleep in a booked hotel"),
                ));
            }
        }
    }
    out
}
