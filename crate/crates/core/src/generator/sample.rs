use std::collections::{BTreeMap, BTreeSet};

use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::LogNormal;

use crate::schema::{
    check_feasibility, itinerary_cost, AirlineConstraints, BudgetConstraints, Cabin, Cents, CityCode, FlightOffer,
    HotelConstraints, HotelOffer, HotelStay, Inventory, Itinerary, ObjectiveKind, PriceRange, Segment, TimeWindow,
    TravelRequest, SCHEMA_VERSION,
};
use crate::timegrid::{minute_of_day, RedEyeRule, Rules};

use super::config::GeneratorConfig;
use super::price::{DurationBand, Weighted};
use super::GeneratorError;

/// A sampled inventory together with the itinerary planted in it.
#[derive(Debug, Clone, PartialEq)]
pub struct Planted {
    pub inventory: Inventory,
    pub plant: Itinerary,
}

fn pick_weighted<R: Rng + ?Sized>(rng: &mut R, items: &[Weighted], exclude: &BTreeSet<String>) -> Option<String> {
    let pool: Vec<&Weighted> = items
        .iter()
        .filter(|w| w.weight > 0.0 && !exclude.contains(&w.name))
        .collect();
    let dist = WeightedIndex::new(pool.iter().map(|w| w.weight)).ok()?;
    Some(pool[dist.sample(rng)].name.clone())
}

/// `k` distinct names drawn without replacement in proportion to weight.
fn pick_subset<R: Rng + ?Sized>(rng: &mut R, items: &[Weighted], k: usize, exclude: &BTreeSet<String>) -> BTreeSet<String> {
    let mut taken = exclude.clone();
    let mut out = BTreeSet::new();
    for _ in 0..k {
        match pick_weighted(rng, items, &taken) {
            Some(name) => {
                taken.insert(name.clone());
                out.insert(name);
            }
            None => break,
        }
    }
    out
}

/// Sequential weighted sampling without replacement over `weights`.
pub(crate) fn weighted_fields<R: Rng + ?Sized>(rng: &mut R, weights: &BTreeMap<String, f64>, k: usize) -> BTreeSet<String> {
    let items: Vec<Weighted> = weights
        .iter()
        .map(|(name, weight)| Weighted {
            name: name.clone(),
            weight: *weight,
        })
        .collect();
    pick_subset(rng, &items, k, &BTreeSet::new())
}

fn pick_count<R: Rng + ?Sized>(rng: &mut R, weights: &BTreeMap<usize, f64>) -> usize {
    let keys: Vec<usize> = weights.keys().copied().collect();
    let dist = WeightedIndex::new(weights.values().copied()).expect("validated weights");
    keys[dist.sample(rng)]
}

fn haversine_km(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (la1, lo1) = (a.0.to_radians(), a.1.to_radians());
    let (la2, lo2) = (b.0.to_radians(), b.1.to_radians());
    let h = ((la2 - la1) / 2.0).sin().powi(2) + la1.cos() * la2.cos() * ((lo2 - lo1) / 2.0).sin().powi(2);
    2.0 * 6371.0 * h.sqrt().asin()
}

fn distance_km(config: &GeneratorConfig, from: &str, to: &str) -> f64 {
    match (config.city(from), config.city(to)) {
        (Some(a), Some(b)) => haversine_km((a.lat, a.lon), (b.lat, b.lon)),
        _ => 1500.0,
    }
}

/// Typical non-stop block time in minutes.
fn nonstop_minutes(config: &GeneratorConfig, from: &str, to: &str) -> i64 {
    (40.0 + distance_km(config, from, to) / 12.0).round() as i64
}

fn round_to(v: i64, step: i64) -> i64 {
    (v + step / 2).div_euclid(step) * step
}

/// Elapsed minutes for one flight, never shorter than 65 so it spans two
/// hour slots wherever it departs.
fn flight_minutes<R: Rng + ?Sized>(rng: &mut R, config: &GeneratorConfig, from: &str, to: &str, non_stop: bool) -> i64 {
    let mut m = nonstop_minutes(config, from, to) + rng.random_range(-5..=10);
    if !non_stop {
        m += 30 + rng.random_range(50..=150);
    }
    round_to(m, 5).max(65)
}

fn dollars(v: f64) -> Cents {
    ((v / 100.0).round() as Cents * 100).max(100)
}

fn fare<R: Rng + ?Sized>(rng: &mut R, config: &GeneratorConfig, cabin: Cabin, minutes: i64, date: NaiveDate) -> Cents {
    let b = config.price_model.flight_bucket(cabin, DurationBand::of_minutes(minutes));
    let mu = b.log_mean + config.price_model.day_offset(date);
    let v = LogNormal::new(mu, b.log_std).map_or(mu.exp(), |d| d.sample(rng));
    dollars(v).max(config.flight_price_floor)
}

fn nightly<R: Rng + ?Sized>(rng: &mut R, config: &GeneratorConfig, rating: u8) -> Cents {
    let b = config.price_model.hotel_bucket(rating);
    let v = LogNormal::new(b.log_mean, b.log_std).map_or(b.log_mean.exp(), |d| d.sample(rng));
    dollars(v).max(config.hotel_price_floor)
}

const CABIN_WEIGHTS: [(Cabin, f64); 4] = [
    (Cabin::BasicEconomy, 0.18),
    (Cabin::Coach, 0.56),
    (Cabin::Business, 0.18),
    (Cabin::First, 0.08),
];

fn pick_cabin<R: Rng + ?Sized>(rng: &mut R, allow_basic: bool) -> Cabin {
    let choices: Vec<(Cabin, f64)> = CABIN_WEIGHTS
        .iter()
        .copied()
        .filter(|(c, _)| allow_basic || *c != Cabin::BasicEconomy)
        .collect();
    choices.choose_weighted(rng, |c| c.1).expect("non-empty").0
}

fn pick_rating<R: Rng + ?Sized>(rng: &mut R, min: u8) -> u8 {
    let choices: Vec<(u8, f64)> = [(1, 0.08), (2, 0.2), (3, 0.37), (4, 0.25), (5, 0.1)]
        .into_iter()
        .filter(|(r, _)| *r >= min)
        .collect();
    choices.choose_weighted(rng, |c| c.1).expect("ratings up to 5").0
}

fn window<R: Rng + ?Sized>(rng: &mut R, config: &GeneratorConfig, first_hour: std::ops::RangeInclusive<u16>) -> TimeWindow {
    let earliest = rng.random_range(first_hour) * 60;
    let latest = (earliest + rng.random_range(4..=10) * 60).min(23 * 60 + 59);
    TimeWindow {
        earliest,
        latest,
        soft: !rng.random_bool(config.p_hard_window),
    }
}

fn airline_value<R: Rng + ?Sized>(rng: &mut R, config: &GeneratorConfig, air: &mut AirlineConstraints, field: &str, reference_fare: Cents) {
    let model = &config.price_model;
    match field {
        "price_range" => {
            let min = dollars(reference_fare as f64 * rng.random_range(0.2..0.6));
            let max = dollars(reference_fare as f64 * rng.random_range(1.5..3.0)).max(min + 5000);
            air.price_range = Some(PriceRange { min, max });
        }
        "departure_window" => air.departure_window = Some(window(rng, config, 5..=12)),
        "arrival_window" => air.arrival_window = Some(window(rng, config, 9..=14)),
        "cabin_class" => air.cabin_class = Some(pick_cabin(rng, true)),
        "refundable" => air.refundable = Some(rng.random_bool(0.7)),
        "non_stop" => air.non_stop = Some(rng.random_bool(0.75)),
        "plane_type" => {
            let k = rng.random_range(1..=3);
            air.plane_type = Some(pick_subset(rng, &model.aircraft, k, &BTreeSet::new()));
        }
        "preferred_airlines" => {
            let k = rng.random_range(1..=3);
            let avoid = air.avoided_airlines.clone().unwrap_or_default();
            air.preferred_airlines = Some(pick_subset(rng, &model.airlines, k, &avoid)).filter(|s| !s.is_empty());
        }
        "avoided_airlines" => {
            let k = rng.random_range(1..=2);
            let keep = air.preferred_airlines.clone().unwrap_or_default();
            air.avoided_airlines = Some(pick_subset(rng, &model.airlines, k, &keep)).filter(|s| !s.is_empty());
        }
        "must_not_basic_economy" => air.must_not_basic_economy = Some(rng.random_bool(0.85)),
        "avoid_red_eye" => air.avoid_red_eye = Some(rng.random_bool(0.85)),
        "no_mixed_cabin" => air.no_mixed_cabin = Some(rng.random_bool(0.85)),
        other => unreachable!("validated airline field {other}"),
    }
}

fn hotel_value<R: Rng + ?Sized>(rng: &mut R, config: &GeneratorConfig, hc: &mut HotelConstraints, field: &str) {
    let model = &config.price_model;
    match field {
        "price_range" => {
            let min = dollars(model.median_nightly(3) as f64 * rng.random_range(0.3..0.7));
            let max = dollars(model.median_nightly(4) as f64 * rng.random_range(1.2..2.2)).max(min + 5000);
            hc.price_range = Some(PriceRange { min, max });
        }
        "rating_min" => {
            hc.rating_min = Some([(2u8, 0.3), (3, 0.45), (4, 0.25)].choose_weighted(rng, |c| c.1).expect("non-empty").0)
        }
        "preferred_brands" => {
            let k = rng.random_range(1..=3);
            let avoid = hc.avoided_brands.clone().unwrap_or_default();
            hc.preferred_brands = Some(pick_subset(rng, &model.brands, k, &avoid)).filter(|s| !s.is_empty());
        }
        "avoided_brands" => {
            let k = rng.random_range(1..=2);
            let keep = hc.preferred_brands.clone().unwrap_or_default();
            hc.avoided_brands = Some(pick_subset(rng, &model.brands, k, &keep)).filter(|s| !s.is_empty());
        }
        other => unreachable!("validated hotel field {other}"),
    }
}

/// Draw a symbolic request: trip shape, then which constraints are set and
/// their values, then budgets scaled from typical prices.
pub fn sample_request<R: Rng + ?Sized>(rng: &mut R, config: &GeneratorConfig) -> Result<TravelRequest, GeneratorError> {
    config.validate()?;
    let one_way = rng.random_bool(config.p_one_way);
    let three = rng.random_bool(config.p_three_cities);
    let n_cities = if three { 3 } else { 2 };
    let picked = rand::seq::index::sample(rng, config.city_pool.len(), n_cities);
    let mut route: Vec<String> = picked.iter().map(|i| config.city_pool[i].code.clone()).collect();
    if !one_way {
        route.push(route[0].clone());
    }
    let span = (config.start_dates[1] - config.start_dates[0]).num_days();
    let mut date = config.start_dates[0] + Duration::days(rng.random_range(0..=span));
    let mut segments = Vec::new();
    for (k, pair) in route.windows(2).enumerate() {
        if k > 0 {
            let [lo, hi] = config.nights_per_stop;
            date += Duration::days(i64::from(rng.random_range(lo..=hi)));
        }
        segments.push(Segment {
            origin: CityCode::new(pair[0].clone()),
            destination: CityCode::new(pair[1].clone()),
            date,
        });
    }

    let mut air = AirlineConstraints::default();
    let n_air = pick_count(rng, &config.airline_count_weights);
    let air_fields = weighted_fields(rng, &config.airline_field_weights, n_air);
    let typical_minutes: Vec<i64> = segments
        .iter()
        .map(|s| nonstop_minutes(config, s.origin.as_str(), s.destination.as_str()))
        .collect();
    let longest = typical_minutes.iter().copied().max().unwrap_or(120);
    let coach_fare = config.price_model.median_fare(Cabin::Coach, DurationBand::of_minutes(longest));
    for field in AirlineConstraints::FIELDS {
        if air_fields.contains(field) {
            airline_value(rng, config, &mut air, field, coach_fare);
        }
    }
    if air.cabin_class == Some(Cabin::BasicEconomy) && air.must_not_basic_economy == Some(true) {
        air.cabin_class = Some(pick_cabin(rng, false));
    }

    let mut hc = HotelConstraints::default();
    let n_hotel = pick_count(rng, &config.hotel_count_weights);
    let hotel_fields = weighted_fields(rng, &config.hotel_field_weights, n_hotel);
    for field in HotelConstraints::FIELDS {
        if hotel_fields.contains(field) {
            hotel_value(rng, config, &mut hc, field);
        }
    }

    let model = &config.price_model;
    let cabin = air.cabin_class.unwrap_or(Cabin::Coach);
    let flight_typical: Cents = typical_minutes
        .iter()
        .map(|m| model.median_fare(cabin, DurationBand::of_minutes(*m)))
        .sum();
    let mut night_typical = model.median_nightly(hc.rating_min.unwrap_or(3));
    if let Some(r) = hc.price_range {
        night_typical = night_typical.clamp(r.min, r.max);
    }
    let nights: i64 = segments
        .windows(2)
        .map(|w| (w[1].date - w[0].date).num_days())
        .sum();
    let hotel_typical = night_typical * nights;
    let [s_lo, s_hi] = config.budget_slack;
    let slack = |rng: &mut R| if s_lo < s_hi { rng.random_range(s_lo..=s_hi) } else { s_lo };
    let presence = config.budget_presence;
    let mut budget = BudgetConstraints::default();
    if rng.random_bool(presence.total_budget) {
        budget.total_budget = Some(dollars((flight_typical + hotel_typical) as f64 * slack(rng)));
    }
    if rng.random_bool(presence.flight_total_budget) {
        budget.flight_total_budget = Some(dollars(flight_typical as f64 * slack(rng)));
    }
    if rng.random_bool(presence.hotel_total_budget) {
        budget.hotel_total_budget = Some(dollars(hotel_typical.max(night_typical) as f64 * slack(rng)));
    }
    if rng.random_bool(presence.hotel_daily_budget) {
        budget.hotel_daily_budget = Some(dollars(night_typical as f64 * slack(rng)));
    }

    Ok(TravelRequest {
        schema_version: SCHEMA_VERSION,
        request_id: format!("req-{:08x}", rng.random::<u32>()),
        segments,
        airline_constraints: air,
        hotel_constraints: hc,
        budget,
    })
}

fn datetime(date: NaiveDate, minute: i64) -> NaiveDateTime {
    date.and_time(NaiveTime::MIN) + Duration::minutes(minute)
}

struct Item {
    lo: Cents,
    price: Cents,
    weight: i64,
}

/// Pull prices toward their floors until the weighted sum fits `cap`.
fn shrink(items: &mut [&mut Item], cap: Cents, what: &str) -> Result<(), GeneratorError> {
    let floor: Cents = items.iter().map(|i| i.lo * i.weight).sum();
    if floor > cap {
        return Err(GeneratorError::InfeasibleRequest(format!(
            "{what} {cap} is below the cheapest possible plan {floor}"
        )));
    }
    let current: Cents = items.iter().map(|i| i.price * i.weight).sum();
    if current <= cap {
        return Ok(());
    }
    let alpha = (cap - floor) as f64 / (current - floor) as f64;
    for i in items.iter_mut() {
        i.price = i.lo + ((i.price - i.lo) as f64 * alpha).floor() as Cents;
    }
    Ok(())
}

struct PlantFlight {
    cabin: Cabin,
    non_stop: bool,
    refundable: bool,
    mixed: bool,
    airline: String,
    aircraft: String,
    departure: NaiveDateTime,
    arrival: NaiveDateTime,
}

fn plant_flights<R: Rng + ?Sized>(
    rng: &mut R,
    request: &TravelRequest,
    config: &GeneratorConfig,
    red_eye: &RedEyeRule,
) -> Result<Vec<PlantFlight>, GeneratorError> {
    let air = &request.airline_constraints;
    let model = &config.price_model;
    let mut out: Vec<PlantFlight> = Vec::new();
    for (k, seg) in request.segments.iter().enumerate() {
        let cabin = air
            .cabin_class
            .unwrap_or_else(|| pick_cabin(rng, air.must_not_basic_economy != Some(true)));
        let non_stop = air.non_stop == Some(true) || rng.random_bool(0.6);
        let refundable = air.refundable == Some(true) || rng.random_bool(0.35);
        let mixed = !non_stop && air.no_mixed_cabin != Some(true) && rng.random_bool(0.15);
        let airline = match &air.preferred_airlines {
            Some(set) => set.iter().collect::<Vec<_>>().choose(rng).map(|s| s.to_string()),
            None => pick_weighted(rng, &model.airlines, &air.avoided_airlines.clone().unwrap_or_default()),
        }
        .unwrap_or_else(|| "XP".to_string());
        let aircraft = match &air.plane_type {
            Some(set) => set.iter().collect::<Vec<_>>().choose(rng).map(|s| s.to_string()),
            None => pick_weighted(rng, &model.aircraft, &BTreeSet::new()),
        }
        .unwrap_or_else(|| "A320".to_string());
        let minutes = flight_minutes(rng, config, seg.origin.as_str(), seg.destination.as_str(), non_stop);

        let prev_arrival = out
            .last()
            .filter(|_| k > 0)
            .map(|p| p.arrival)
            .filter(|a| a.date() >= seg.date);
        let after = prev_arrival.map(|a| (a - seg.date.and_time(NaiveTime::MIN)).num_minutes() + 60);
        let ok = |dep: i64| {
            let (d, a) = (datetime(seg.date, dep), datetime(seg.date, dep + minutes));
            air.departure_window.filter(|w| !w.soft).is_none_or(|w| w.contains(minute_of_day(d)))
                && air.arrival_window.filter(|w| !w.soft).is_none_or(|w| w.contains(minute_of_day(a)))
                && (air.avoid_red_eye != Some(true) || !red_eye.is_red_eye(d, a))
        };
        // Comfortable hours first, then anything that lands the same day.
        let mut chosen = None;
        for (from, until) in [(420, 1320), (300, 1435)] {
            let from = after.map_or(from, |a| a.max(from));
            let candidates: Vec<i64> = (from..=until - minutes).filter(|m| m % 5 == 0 && ok(*m)).collect();
            if candidates.is_empty() {
                continue;
            }
            let early: Vec<i64> = candidates.iter().copied().filter(|m| *m <= candidates[0] + 180).collect();
            let pool = if k + 1 < request.segments.len() && request.segments[k + 1].date == seg.date {
                &early
            } else {
                &candidates
            };
            chosen = pool.choose(rng).copied();
            break;
        }
        let Some(dep) = chosen else {
            return Err(GeneratorError::InfeasibleRequest(format!(
                "no departure time on {} satisfies the time constraints for segment {k}",
                seg.date
            )));
        };
        out.push(PlantFlight {
            cabin,
            non_stop,
            refundable,
            mixed,
            airline,
            aircraft,
            departure: datetime(seg.date, dep),
            arrival: datetime(seg.date, dep + minutes),
        });
    }
    Ok(out)
}

const HOTEL_SUFFIXES: [&str; 10] = [
    "Downtown", "Airport", "Central", "Riverside", "Midtown", "Harbor", "Park", "Plaza", "Suites", "Inn",
];

fn city_name(config: &GeneratorConfig, code: &str) -> String {
    config.city(code).map_or_else(|| code.to_string(), |c| c.name.clone())
}

fn random_flight<R: Rng + ?Sized>(rng: &mut R, config: &GeneratorConfig, seg: &Segment, red_eye: &RedEyeRule) -> FlightOffer {
    let model = &config.price_model;
    let cabin = pick_cabin(rng, true);
    let non_stop = rng.random_bool(0.6);
    let minutes = flight_minutes(rng, config, seg.origin.as_str(), seg.destination.as_str(), non_stop);
    let mut date = seg.date;
    if rng.random_bool(config.p_off_date) {
        date += Duration::days(if rng.random_bool(0.5) { 1 } else { -1 });
    }
    let hours: Vec<(usize, f64)> = model.departure_hours.iter().copied().enumerate().collect();
    let hour = hours.choose_weighted(rng, |h| h.1).map_or(9, |h| h.0) as i64;
    let dep = hour * 60 + rng.random_range(0..12) * 5;
    let (departure, arrival) = (datetime(date, dep), datetime(date, dep + minutes));
    let airline = pick_weighted(rng, &model.airlines, &BTreeSet::new()).unwrap_or_else(|| "XP".into());
    FlightOffer {
        id: String::new(),
        segment: 0,
        flight_number: format!("{airline}{}", rng.random_range(100..3000)),
        airline,
        cabin,
        price_cents: fare(rng, config, cabin, minutes, date),
        departure,
        arrival,
        non_stop,
        aircraft: pick_weighted(rng, &model.aircraft, &BTreeSet::new()).unwrap_or_else(|| "A320".into()),
        refundable: rng.random_bool(0.35),
        is_basic_economy: cabin == Cabin::BasicEconomy,
        is_red_eye: red_eye.is_red_eye(departure, arrival),
        is_mixed_cabin: !non_stop && rng.random_bool(0.15),
    }
}

fn random_hotel<R: Rng + ?Sized>(rng: &mut R, config: &GeneratorConfig, city: &CityCode, request: &TravelRequest) -> HotelOffer {
    let model = &config.price_model;
    let rating = pick_rating(rng, 1);
    let brand = pick_weighted(rng, &model.brands, &BTreeSet::new()).unwrap_or_else(|| "Independent".into());
    let checkin_hour = if rng.random_bool(0.05) { 23 } else { rng.random_range(12..=17) };
    let (available_from, available_to) = if rng.random_bool(0.85) {
        (request.first_date() - Duration::days(30), request.last_date() + Duration::days(30))
    } else {
        let from = request.first_date() + Duration::days(rng.random_range(-5..=5));
        (from, from + Duration::days(rng.random_range(1..=10)))
    };
    HotelOffer {
        id: String::new(),
        name: format!("{brand} {} {}", city_name(config, city.as_str()), HOTEL_SUFFIXES.choose(rng).expect("non-empty")),
        city: city.clone(),
        brand,
        rating,
        nightly_price_cents: nightly(rng, config, rating),
        checkin_earliest: checkin_hour * 60,
        checkout_latest: rng.random_range(10..=12) * 60,
        available_from,
        available_to,
    }
}

/// Inventory for `request` with one compliant itinerary planted among
/// distractors, plus that itinerary.
pub fn sample_instance<R: Rng + ?Sized>(
    rng: &mut R,
    request: &TravelRequest,
    config: &GeneratorConfig,
) -> Result<Planted, GeneratorError> {
    config.validate()?;
    let red_eye = RedEyeRule::default();
    let air = &request.airline_constraints;
    let hc = &request.hotel_constraints;
    let budget = &request.budget;
    let blocks = request.away_blocks();
    let model = &config.price_model;

    let flights = plant_flights(rng, request, config, &red_eye)?;
    let f_lo = air.price_range.map_or(0, |r| r.min).max(config.flight_price_floor);
    let f_hi = air.price_range.map_or(Cents::MAX, |r| r.max);
    if f_lo > f_hi {
        return Err(GeneratorError::InfeasibleRequest(format!(
            "flight price range tops out at {f_hi}, below the fare floor {f_lo}"
        )));
    }
    let mut flight_items: Vec<Item> = request
        .segments
        .iter()
        .zip(&flights)
        .map(|(seg, p)| {
            let minutes = (p.arrival - p.departure).num_minutes();
            Item {
                lo: f_lo,
                price: fare(rng, config, p.cabin, minutes, seg.date).clamp(f_lo, f_hi),
                weight: 1,
            }
        })
        .collect();

    struct PlantHotel {
        rating: u8,
        brand: String,
        checkin: u16,
        checkout: u16,
    }
    let h_lo = hc.price_range.map_or(0, |r| r.min).max(config.hotel_price_floor);
    let h_hi = hc
        .price_range
        .map_or(Cents::MAX, |r| r.max)
        .min(budget.hotel_daily_budget.unwrap_or(Cents::MAX));
    if !blocks.is_empty() && h_lo > h_hi {
        return Err(GeneratorError::InfeasibleRequest(format!(
            "nightly hotel price cap {h_hi} is below the price floor {h_lo}"
        )));
    }
    let mut hotels = Vec::new();
    let mut hotel_items = Vec::new();
    for block in &blocks {
        let rating = pick_rating(rng, hc.rating_min.unwrap_or(1));
        let brand = match &hc.preferred_brands {
            Some(set) => set.iter().collect::<Vec<_>>().choose(rng).map(|s| s.to_string()),
            None => pick_weighted(rng, &model.brands, &hc.avoided_brands.clone().unwrap_or_default()),
        }
        .unwrap_or_else(|| "Independent".into());
        hotel_items.push(Item {
            lo: h_lo,
            price: nightly(rng, config, rating).clamp(h_lo, h_hi),
            weight: block.nights(),
        });
        hotels.push(PlantHotel {
            rating,
            brand,
            checkin: rng.random_range(14..=16) * 60,
            checkout: rng.random_range(10..=12) * 60,
        });
    }

    if let Some(cap) = budget.flight_total_budget {
        shrink(&mut flight_items.iter_mut().collect::<Vec<_>>(), cap, "flight budget")?;
    }
    if let Some(cap) = budget.hotel_total_budget {
        shrink(&mut hotel_items.iter_mut().collect::<Vec<_>>(), cap, "hotel budget")?;
    }
    if let Some(cap) = budget.total_budget {
        let mut all: Vec<&mut Item> = flight_items.iter_mut().chain(hotel_items.iter_mut()).collect();
        shrink(&mut all, cap, "total budget")?;
    }

    // Plant offers.
    let mut per_segment: Vec<Vec<(bool, FlightOffer)>> = Vec::new();
    for (k, (p, item)) in flights.iter().zip(&flight_items).enumerate() {
        let offer = FlightOffer {
            id: String::new(),
            segment: k,
            airline: p.airline.clone(),
            flight_number: format!("{}{}", p.airline, rng.random_range(100..3000)),
            cabin: p.cabin,
            price_cents: item.price,
            departure: p.departure,
            arrival: p.arrival,
            non_stop: p.non_stop,
            aircraft: p.aircraft.clone(),
            refundable: p.refundable,
            is_basic_economy: p.cabin == Cabin::BasicEconomy,
            is_red_eye: red_eye.is_red_eye(p.departure, p.arrival),
            is_mixed_cabin: p.mixed,
        };
        let [lo, hi] = config.flights_per_segment;
        let total = rng.random_range(lo..=hi);
        let mut offers = vec![(true, offer)];
        for _ in 1..total {
            let mut f = random_flight(rng, config, &request.segments[k], &red_eye);
            f.segment = k;
            offers.push((false, f));
        }
        offers.shuffle(rng);
        per_segment.push(offers);
    }

    let mut cities: Vec<CityCode> = Vec::new();
    for b in &blocks {
        if !cities.contains(&b.city) {
            cities.push(b.city.clone());
        }
    }
    // (block index of a planted stay, offer)
    let mut per_city: Vec<Vec<(Option<usize>, HotelOffer)>> = Vec::new();
    for city in &cities {
        let mut offers = Vec::new();
        for (b, block) in blocks.iter().enumerate().filter(|(_, b)| &b.city == city) {
            let h = &hotels[b];
            offers.push((
                Some(b),
                HotelOffer {
                    id: String::new(),
                    name: format!(
                        "{} {} {}",
                        h.brand,
                        city_name(config, city.as_str()),
                        HOTEL_SUFFIXES.choose(rng).expect("non-empty")
                    ),
                    city: city.clone(),
                    brand: h.brand.clone(),
                    rating: h.rating,
                    nightly_price_cents: hotel_items[b].price,
                    checkin_earliest: h.checkin,
                    checkout_latest: h.checkout,
                    available_from: block.check_in - Duration::days(rng.random_range(0..=60)),
                    available_to: block.check_out + Duration::days(rng.random_range(0..=60)),
                },
            ));
        }
        let [lo, hi] = config.hotels_per_city;
        let total = rng.random_range(lo..=hi);
        while offers.len() < total {
            offers.push((None, random_hotel(rng, config, city, request)));
        }
        offers.shuffle(rng);
        per_city.push(offers);
    }

    let mut inventory = Inventory {
        schema_version: SCHEMA_VERSION,
        flights: Vec::new(),
        hotels: Vec::new(),
    };
    let mut chosen_flights = vec![String::new(); request.segments.len()];
    for (k, offers) in per_segment.into_iter().enumerate() {
        for (i, (planted, mut f)) in offers.into_iter().enumerate() {
            f.id = format!("S{k}-F{i:02}");
            if planted {
                chosen_flights[k] = f.id.clone();
            }
            inventory.flights.push(f);
        }
    }
    let mut stays: Vec<Option<HotelStay>> = vec![None; blocks.len()];
    for (city, offers) in cities.iter().zip(per_city) {
        for (i, (planted, mut h)) in offers.into_iter().enumerate() {
            h.id = format!("{city}-H{i:02}");
            if let Some(b) = planted {
                stays[b] = Some(HotelStay {
                    hotel_id: h.id.clone(),
                    check_in: blocks[b].check_in,
                    check_out: blocks[b].check_out,
                });
            }
            inventory.hotels.push(h);
        }
    }

    let flight_cost: Cents = flight_items.iter().map(|i| i.price).sum();
    let hotel_cost: Cents = hotel_items.iter().map(|i| i.price * i.weight).sum();
    let mut plant = Itinerary {
        schema_version: SCHEMA_VERSION,
        request_id: request.request_id.clone(),
        chosen_flights,
        hotel_stays: stays.into_iter().map(|s| s.expect("every block planted")).collect(),
        flight_cost,
        hotel_cost,
        total_cost: flight_cost + hotel_cost,
        objective_kind: ObjectiveKind::MinCost,
        objective_value: 0,
        slot_minutes: 60,
    };
    plant.objective_value =
        itinerary_cost(&plant, request, &inventory, &Rules::default()).expect("plant references its own offers");
    let report = check_feasibility(&plant, request, &inventory).expect("plant references its own offers");
    if !report.feasible {
        let why: Vec<String> = report.violations.iter().map(|v| format!("{}: {}", v.field, v.detail)).collect();
        return Err(GeneratorError::InfeasibleRequest(why.join("; ")));
    }
    Ok(Planted { inventory, plant })
}

/// [`sample_instance`] without the planted itinerary.
pub fn sample_inventory<R: Rng + ?Sized>(
    rng: &mut R,
    request: &TravelRequest,
    config: &GeneratorConfig,
) -> Result<Inventory, GeneratorError> {
    sample_instance(rng, request, config).map(|p| p.inventory)
}
