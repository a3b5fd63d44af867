#![allow(dead_code)]

use chrono::{NaiveDate, NaiveDateTime};
use ttg_core::schema::{
    check_feasibility, itinerary_cost, money_costs, AirlineConstraints, BudgetConstraints, Cabin, CityCode,
    FlightOffer, HotelConstraints, HotelOffer, HotelStay, Inventory, Itinerary, ObjectiveKind, Segment,
    TravelRequest, SCHEMA_VERSION,
};
use ttg_core::model::MilpModel;
use ttg_core::timegrid::{RedEyeRule, Rules};

pub fn date(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
}

pub fn at(s: &str) -> NaiveDateTime {
    NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M").unwrap()
}

pub fn request(id: &str, legs: &[(&str, &str, &str)]) -> TravelRequest {
    TravelRequest {
        schema_version: SCHEMA_VERSION,
        request_id: id.to_string(),
        segments: legs
            .iter()
            .map(|(o, d, day)| Segment {
                origin: CityCode::from(*o),
                destination: CityCode::from(*d),
                date: date(day),
            })
            .collect(),
        airline_constraints: AirlineConstraints::default(),
        hotel_constraints: HotelConstraints::default(),
        budget: BudgetConstraints::default(),
    }
}

/// Coach non-stop flight with every flag off; tweak fields afterwards.
pub fn flight(id: &str, segment: usize, depart: &str, arrive: &str, price: i64) -> FlightOffer {
    let (departure, arrival) = (at(depart), at(arrive));
    FlightOffer {
        id: id.to_string(),
        segment,
        airline: "UA".into(),
        flight_number: format!("UA{}", 100 + segment),
        cabin: Cabin::Coach,
        price_cents: price,
        departure,
        arrival,
        non_stop: true,
        aircraft: "A320".into(),
        refundable: false,
        is_basic_economy: false,
        is_red_eye: RedEyeRule::default().is_red_eye(departure, arrival),
        is_mixed_cabin: false,
    }
}

pub fn hotel(id: &str, city: &str, rating: u8, nightly: i64) -> HotelOffer {
    HotelOffer {
        id: id.to_string(),
        name: format!("Hotel {id}"),
        city: CityCode::from(city),
        brand: "Hilton".into(),
        rating,
        nightly_price_cents: nightly,
        checkin_earliest: 15 * 60,
        checkout_latest: 11 * 60,
        available_from: date("2024-01-01"),
        available_to: date("2026-12-31"),
    }
}

pub fn inventory(flights: Vec<FlightOffer>, hotels: Vec<HotelOffer>) -> Inventory {
    Inventory {
        schema_version: SCHEMA_VERSION,
        flights,
        hotels,
    }
}

/// The demo request: DEN to MIA on Jan 15, MIA to JFK on Jan 17, JFK back
/// to DEN on Jan 18, coach and non-stop only, no basic economy or mixed
/// cabins, with flight, hotel and daily budgets.
pub fn demo_request() -> TravelRequest {
    let mut r = request(
        "demo",
        &[
            ("DEN", "MIA", "2025-01-15"),
            ("MIA", "JFK", "2025-01-17"),
            ("JFK", "DEN", "2025-01-18"),
        ],
    );
    r.airline_constraints.cabin_class = Some(Cabin::Coach);
    r.airline_constraints.non_stop = Some(true);
    r.airline_constraints.must_not_basic_economy = Some(true);
    r.airline_constraints.no_mixed_cabin = Some(true);
    r.budget.flight_total_budget = Some(138300);
    r.budget.hotel_daily_budget = Some(31700);
    r.budget.hotel_total_budget = Some(95200);
    r
}

pub fn demo_inventory() -> Inventory {
    let mut flights = vec![
        flight("dm1", 0, "2025-01-15T08:00", "2025-01-15T14:10", 32900),
        flight("dm2", 0, "2025-01-15T12:30", "2025-01-15T18:40", 28900),
        flight("dm3", 0, "2025-01-15T06:10", "2025-01-15T12:20", 19900),
        flight("mj1", 1, "2025-01-17T09:00", "2025-01-17T12:05", 21900),
        flight("mj2", 1, "2025-01-17T15:00", "2025-01-17T18:05", 17900),
        flight("mj3", 1, "2025-01-17T07:00", "2025-01-17T10:05", 14900),
        flight("jd1", 2, "2025-01-18T10:00", "2025-01-18T13:20", 30900),
        flight("jd2", 2, "2025-01-18T17:00", "2025-01-18T20:20", 26900),
        flight("jd3", 2, "2025-01-18T13:00", "2025-01-18T16:20", 22900),
    ];
    // The cheapest options each break a hard constraint.
    flights[2].is_basic_economy = true;
    flights[2].cabin = Cabin::BasicEconomy;
    flights[5].non_stop = false;
    flights[8].is_mixed_cabin = true;
    let hotels = vec![
        hotel("mia-a", "MIA", 3, 18900),
        hotel("mia-b", "MIA", 4, 26900),
        hotel("mia-c", "MIA", 5, 35000),
        hotel("jfk-a", "JFK", 3, 22900),
        hotel("jfk-b", "JFK", 4, 29900),
    ];
    inventory(flights, hotels)
}

/// Objective of an itinerary straight from the definitions: cents for
/// min_cost, milli-cents with quality credits otherwise.
pub fn reference_objective(it: &Itinerary, req: &TravelRequest, inv: &Inventory, kind: ObjectiveKind) -> i64 {
    let rules = Rules::default();
    let cost = itinerary_cost(it, req, inv, &rules).unwrap();
    let penalty = cost - it.flight_cost - it.hotel_cost;
    let lambda = 300;
    match kind {
        ObjectiveKind::MinCost => cost,
        ObjectiveKind::BetterHotel => {
            let stars: i64 = it
                .hotel_stays
                .iter()
                .map(|s| i64::from(inv.hotel(&s.hotel_id).unwrap().rating) * s.nights())
                .sum();
            1000 * (it.flight_cost + penalty) + (1000 - lambda) * it.hotel_cost - lambda * 4000 * stars
        }
        ObjectiveKind::BetterFlight => {
            let levels: i64 = it
                .chosen_flights
                .iter()
                .map(|id| inv.flight(id).unwrap().cabin.quality_level())
                .sum();
            1000 * (it.hotel_cost + penalty) + (1000 - lambda) * it.flight_cost - lambda * 10000 * levels
        }
    }
}

/// Best objective over every flight-per-segment and hotel-per-block
/// combination the checker accepts, or `None` if none is feasible.
pub fn brute_force(req: &TravelRequest, inv: &Inventory, kind: ObjectiveKind) -> Option<i64> {
    let blocks = req.away_blocks();
    let flight_options: Vec<Vec<&str>> = (0..req.segments.len())
        .map(|k| inv.flights.iter().filter(|f| f.segment == k).map(|f| f.id.as_str()).collect())
        .collect();
    let hotel_options: Vec<Vec<&str>> = blocks
        .iter()
        .map(|b| inv.hotels.iter().filter(|h| h.city == b.city).map(|h| h.id.as_str()).collect())
        .collect();
    let options: Vec<&Vec<&str>> = flight_options.iter().chain(&hotel_options).collect();
    if options.iter().any(|o| o.is_empty()) {
        return None;
    }
    let mut best: Option<i64> = None;
    let mut idx = vec![0usize; options.len()];
    loop {
        let flights: Vec<String> = (0..flight_options.len()).map(|k| options[k][idx[k]].to_string()).collect();
        let stays: Vec<HotelStay> = blocks
            .iter()
            .enumerate()
            .map(|(b, block)| HotelStay {
                hotel_id: options[flight_options.len() + b][idx[flight_options.len() + b]].to_string(),
                check_in: block.check_in,
                check_out: block.check_out,
            })
            .collect();
        let mut it = Itinerary {
            schema_version: SCHEMA_VERSION,
            request_id: req.request_id.clone(),
            chosen_flights: flights,
            hotel_stays: stays,
            flight_cost: 0,
            hotel_cost: 0,
            total_cost: 0,
            objective_kind: kind,
            objective_value: 0,
            slot_minutes: 60,
        };
        let (fc, hc) = money_costs(&it, inv).unwrap();
        it.flight_cost = fc;
        it.hotel_cost = hc;
        it.total_cost = fc + hc;
        if check_feasibility(&it, req, inv).unwrap().feasible {
            let v = reference_objective(&it, req, inv, kind);
            best = Some(best.map_or(v, |b| b.min(v)));
        }
        // Odometer increment.
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return best;
            }
            idx[pos] += 1;
            if idx[pos] < options[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

fn value(x: &[f64], j: usize) -> i64 {
    x[j].round() as i64
}

/// Row-independent reading of a solved assignment: one location per slot,
/// moves only on event slots, enough sleep each away night, one flight per
/// segment.
pub fn structural_violations(model: &MilpModel, x: &[f64]) -> Vec<String> {
    let mut out = Vec::new();
    let slots = model.u[0].len();
    for t in 0..slots {
        let at: i64 = model.u.iter().map(|row| value(x, row[t])).sum();
        if at != 1 {
            out.push(format!("slot {t} has {at} locations"));
        }
    }
    for (t, &e) in model.e.iter().enumerate() {
        if value(x, e) == 0 {
            for row in &model.u {
                if value(x, row[t]) != value(x, row[t + 1]) {
                    out.push(format!("location changes after slot {t} without an event"));
                }
            }
        }
    }
    for (date, range) in &model.nights {
        let asleep: usize = range.clone().filter(|&t| model.m[t].is_some_and(|j| value(x, j) == 1)).count();
        if asleep < model.min_sleep_slots {
            out.push(format!("night {date} has {asleep} sleep slots"));
        }
    }
    for k in 0..model.request.segments.len() {
        let n: i64 = model.segment_candidates(k).map(|(_, c)| value(x, c.var)).sum();
        if n != 1 {
            out.push(format!("segment {k} has {n} flights"));
        }
    }
    out
}
