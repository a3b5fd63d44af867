use std::fmt::Write as _;

use ttg_core::schema::{Cents, Inventory, Itinerary, TravelRequest};

pub fn dollars(cents: Cents) -> String {
    let sign = if cents < 0 { "-" } else { "" };
    let c = cents.unsigned_abs();
    format!("{sign}${}.{:02}", c / 100, c % 100)
}

/// Mean star rating over booked nights.
pub fn mean_hotel_rating(it: &Itinerary, inventory: &Inventory) -> Option<f64> {
    let (mut stars, mut nights) = (0i64, 0i64);
    for stay in &it.hotel_stays {
        let hotel = inventory.hotel(&stay.hotel_id)?;
        stars += i64::from(hotel.rating) * stay.nights();
        nights += stay.nights();
    }
    (nights > 0).then(|| stars as f64 / nights as f64)
}

/// Tabular view of an itinerary: one row per flight, one per hotel stay,
/// then the cost summary.
pub fn itinerary_table(it: &Itinerary, request: &TravelRequest, inventory: &Inventory) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} itinerary for {}", it.objective_kind.label(), it.request_id);
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<4} {:<10} {:<9} {:<8} {:<8} {:<8} {:<16} {:<16} {:<8} {:>10}",
        "seg", "flight", "route", "airline", "number", "cabin", "departs", "arrives", "stops", "price"
    );
    for id in &it.chosen_flights {
        let Some(f) = inventory.flight(id) else {
            let _ = writeln!(out, "?    {id}");
            continue;
        };
        let route = request
            .segments
            .get(f.segment)
            .map_or_else(String::new, |s| format!("{}-{}", s.origin, s.destination));
        let _ = writeln!(
            out,
            "{:<4} {:<10} {:<9} {:<8} {:<8} {:<8} {:<16} {:<16} {:<8} {:>10}",
            f.segment,
            f.id,
            route,
            f.airline,
            f.flight_number,
            f.cabin.as_str(),
            f.departure.format("%Y-%m-%d %H:%M").to_string(),
            f.arrival.format("%Y-%m-%d %H:%M").to_string(),
            if f.non_stop { "nonstop" } else { "1+" },
            dollars(f.price_cents)
        );
    }
    if !it.hotel_stays.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<10} {:<32} {:<5} {:<6} {:<10} {:<10} {:>6} {:>10} {:>10}",
            "hotel", "name", "city", "stars", "check-in", "check-out", "nights", "nightly", "cost"
        );
        for stay in &it.hotel_stays {
            let Some(h) = inventory.hotel(&stay.hotel_id) else {
                let _ = writeln!(out, "{}", stay.hotel_id);
                continue;
            };
            let _ = writeln!(
                out,
                "{:<10} {:<32} {:<5} {:<6} {:<10} {:<10} {:>6} {:>10} {:>10}",
                h.id,
                h.name,
                h.city.as_str(),
                h.rating,
                stay.check_in.to_string(),
                stay.check_out.to_string(),
                stay.nights(),
                dollars(h.nightly_price_cents),
                dollars(h.nightly_price_cents * stay.nights())
            );
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "flights {:>12}", dollars(it.flight_cost));
    let _ = writeln!(out, "hotels  {:>12}", dollars(it.hotel_cost));
    let _ = writeln!(out, "total   {:>12}", dollars(it.total_cost));
    let _ = writeln!(out, "objective {} ({} min slots)", it.objective_value, it.slot_minutes);
    out
}
