use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::schema::{AirlineConstraints, Cents, HotelConstraints};

use super::price::PriceModel;
use super::GeneratorError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct City {
    pub code: String,
    pub name: String,
    pub lat: f64,
    pub lon: f64,
}

fn city(code: &str, name: &str, lat: f64, lon: f64) -> City {
    City {
        code: code.into(),
        name: name.into(),
        lat,
        lon,
    }
}

pub fn default_city_pool() -> Vec<City> {
    vec![
        city("ATL", "Atlanta", 33.64, -84.43),
        city("BOS", "Boston", 42.37, -71.01),
        city("CLT", "Charlotte", 35.21, -80.94),
        city("DEN", "Denver", 39.86, -104.67),
        city("DFW", "Dallas", 32.90, -97.04),
        city("DTW", "Detroit", 42.21, -83.35),
        city("EWR", "Newark", 40.69, -74.17),
        city("IAD", "Washington", 38.95, -77.46),
        city("JFK", "New York", 40.64, -73.78),
        city("LAX", "Los Angeles", 33.94, -118.41),
        city("LGA", "New York LaGuardia", 40.78, -73.87),
        city("MIA", "Miami", 25.79, -80.29),
        city("OAK", "Oakland", 37.72, -122.22),
        city("ORD", "Chicago", 41.98, -87.90),
        city("PHL", "Philadelphia", 39.87, -75.24),
        city("SFO", "San Francisco", 37.62, -122.38),
    ]
}

/// Presence probability of each budget field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetPresence {
    pub total_budget: f64,
    pub flight_total_budget: f64,
    pub hotel_total_budget: f64,
    pub hotel_daily_budget: f64,
}

impl Default for BudgetPresence {
    fn default() -> Self {
        BudgetPresence {
            total_budget: 0.4,
            flight_total_budget: 0.5,
            hotel_total_budget: 0.5,
            hotel_daily_budget: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub rng_seed: u64,
    pub city_pool: Vec<City>,
    pub p_one_way: f64,
    /// Probability of a trip with two stops rather than one.
    pub p_three_cities: f64,
    /// Relative weight of each airline-constraint count.
    pub airline_count_weights: BTreeMap<usize, f64>,
    /// Relative weight of each airline field when choosing which are set.
    pub airline_field_weights: BTreeMap<String, f64>,
    pub hotel_count_weights: BTreeMap<usize, f64>,
    pub hotel_field_weights: BTreeMap<String, f64>,
    pub budget_presence: BudgetPresence,
    /// Probability that a sampled time window is hard instead of soft.
    pub p_hard_window: f64,
    /// Inclusive range, counting the planted offer.
    pub flights_per_segment: [usize; 2],
    pub hotels_per_city: [usize; 2],
    pub nights_per_stop: [u32; 2],
    /// Inclusive range of trip start dates.
    pub start_dates: [NaiveDate; 2],
    /// Budgets are typical cost times a factor drawn from this range.
    pub budget_slack: [f64; 2],
    pub flight_price_floor: Cents,
    pub hotel_price_floor: Cents,
    /// Chance a distractor flight is listed a day off its segment date.
    pub p_off_date: f64,
    pub price_model: PriceModel,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        // Count weights follow the sample counts per bucket of the published
        // breakdown (airline 4..=8, hotel 2..=4).
        let airline_count_weights = BTreeMap::from([
            (4, 4974.0),
            (5, 9777.0),
            (6, 5555.0),
            (7, 1299.0),
            (8, 173.0),
        ]);
        let hotel_count_weights = BTreeMap::from([(2, 3345.0), (3, 10438.0), (4, 8001.0)]);
        let airline_field_weights = [
            ("price_range", 1.0),
            ("departure_window", 2.0),
            ("arrival_window", 1.0),
            ("cabin_class", 2.0),
            ("refundable", 1.0),
            ("non_stop", 1.5),
            ("plane_type", 0.5),
            ("preferred_airlines", 1.0),
            ("avoided_airlines", 0.7),
            ("must_not_basic_economy", 2.0),
            ("avoid_red_eye", 2.0),
            ("no_mixed_cabin", 1.0),
        ]
        .into_iter()
        .map(|(k, w)| (k.to_string(), w))
        .collect();
        let hotel_field_weights = [
            ("price_range", 1.0),
            ("rating_min", 1.5),
            ("preferred_brands", 1.0),
            ("avoided_brands", 0.8),
        ]
        .into_iter()
        .map(|(k, w)| (k.to_string(), w))
        .collect();
        GeneratorConfig {
            rng_seed: 0,
            city_pool: default_city_pool(),
            p_one_way: 0.04,
            p_three_cities: 0.13,
            airline_count_weights,
            airline_field_weights,
            hotel_count_weights,
            hotel_field_weights,
            budget_presence: BudgetPresence::default(),
            p_hard_window: 0.0,
            flights_per_segment: [8, 24],
            hotels_per_city: [4, 10],
            nights_per_stop: [1, 4],
            start_dates: [
                NaiveDate::from_ymd_opt(2025, 1, 1).expect("valid date"),
                NaiveDate::from_ymd_opt(2025, 12, 31).expect("valid date"),
            ],
            budget_slack: [1.0, 1.8],
            flight_price_floor: 2900,
            hotel_price_floor: 3900,
            p_off_date: 0.05,
            price_model: PriceModel::default(),
        }
    }
}

fn check_probability(name: &str, p: f64) -> Result<(), GeneratorError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(GeneratorError::Config(format!("{name} = {p} is not a probability")))
    }
}

fn check_weights<K: std::fmt::Debug>(name: &str, weights: &BTreeMap<K, f64>) -> Result<(), GeneratorError> {
    if weights.values().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(GeneratorError::Config(format!("{name} has a negative or non-finite weight")));
    }
    if weights.values().sum::<f64>() <= 0.0 {
        return Err(GeneratorError::Config(format!("{name} has no positive weight")));
    }
    Ok(())
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        if self.city_pool.len() < 2 {
            return Err(GeneratorError::Config("city pool needs at least two cities".into()));
        }
        if self.p_three_cities > 0.0 && self.city_pool.len() < 3 {
            return Err(GeneratorError::Config("three-city trips need at least three cities".into()));
        }
        for c in &self.city_pool {
            if c.code.len() != 3 || !c.code.bytes().all(|b| b.is_ascii_uppercase()) {
                return Err(GeneratorError::Config(format!("bad city code `{}`", c.code)));
            }
        }
        check_probability("p_one_way", self.p_one_way)?;
        check_probability("p_three_cities", self.p_three_cities)?;
        check_probability("p_hard_window", self.p_hard_window)?;
        check_probability("p_off_date", self.p_off_date)?;
        let b = &self.budget_presence;
        for (name, p) in [
            ("budget_presence.total_budget", b.total_budget),
            ("budget_presence.flight_total_budget", b.flight_total_budget),
            ("budget_presence.hotel_total_budget", b.hotel_total_budget),
            ("budget_presence.hotel_daily_budget", b.hotel_daily_budget),
        ] {
            check_probability(name, p)?;
        }
        check_weights("airline_count_weights", &self.airline_count_weights)?;
        check_weights("hotel_count_weights", &self.hotel_count_weights)?;
        check_weights("airline_field_weights", &self.airline_field_weights)?;
        check_weights("hotel_field_weights", &self.hotel_field_weights)?;
        for key in self.airline_field_weights.keys() {
            if !AirlineConstraints::FIELDS.contains(&key.as_str()) {
                return Err(GeneratorError::Config(format!("unknown airline field `{key}`")));
            }
        }
        for key in self.hotel_field_weights.keys() {
            if !HotelConstraints::FIELDS.contains(&key.as_str()) {
                return Err(GeneratorError::Config(format!("unknown hotel field `{key}`")));
            }
        }
        let airline_fields = self.airline_field_weights.values().filter(|w| **w > 0.0).count();
        if self.airline_count_weights.iter().any(|(c, w)| *w > 0.0 && *c > airline_fields) {
            return Err(GeneratorError::Config(
                "an airline constraint count exceeds the fields that can be set".into(),
            ));
        }
        let hotel_fields = self.hotel_field_weights.values().filter(|w| **w > 0.0).count();
        if self.hotel_count_weights.iter().any(|(c, w)| *w > 0.0 && *c > hotel_fields) {
            return Err(GeneratorError::Config(
                "a hotel constraint count exceeds the fields that can be set".into(),
            ));
        }
        for (name, [lo, hi]) in [
            ("flights_per_segment", self.flights_per_segment),
            ("hotels_per_city", self.hotels_per_city),
        ] {
            if lo == 0 || lo > hi {
                return Err(GeneratorError::Config(format!("{name} must be a positive range")));
            }
        }
        let [n_lo, n_hi] = self.nights_per_stop;
        if n_lo == 0 || n_lo > n_hi {
            return Err(GeneratorError::Config("nights_per_stop must be a positive range".into()));
        }
        if self.start_dates[0] > self.start_dates[1] {
            return Err(GeneratorError::Config("start_dates range is empty".into()));
        }
        let [s_lo, s_hi] = self.budget_slack;
        if !(s_lo.is_finite() && s_hi.is_finite() && 0.0 < s_lo && s_lo <= s_hi) {
            return Err(GeneratorError::Config("budget_slack must be a positive range".into()));
        }
        if self.flight_price_floor <= 0 || self.hotel_price_floor <= 0 {
            return Err(GeneratorError::Config("price floors must be positive".into()));
        }
        self.price_model.validate()
    }

    pub fn city(&self, code: &str) -> Option<&City> {
        self.city_pool.iter().find(|c| c.code == code)
    }
}
