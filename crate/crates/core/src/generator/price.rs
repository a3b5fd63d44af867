use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::schema::{Cabin, Cents};

use super::GeneratorError;

/// Flight length class used to bucket fares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DurationBand {
    Short,
    Medium,
    Long,
}

impl DurationBand {
    pub const ALL: [DurationBand; 3] = [DurationBand::Short, DurationBand::Medium, DurationBand::Long];

    /// Under 2.5 hours, up to 5 hours, longer.
    pub fn of_minutes(minutes: i64) -> DurationBand {
        if minutes < 150 {
            DurationBand::Short
        } else if minutes <= 300 {
            DurationBand::Medium
        } else {
            DurationBand::Long
        }
    }
}

/// Log-normal fare distribution (in cents) for one cabin and length band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlightBucket {
    pub cabin: Cabin,
    pub band: DurationBand,
    pub log_mean: f64,
    pub log_std: f64,
    /// Rows the bucket was fitted on, 0 for built-in defaults.
    #[serde(default)]
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HotelBucket {
    pub rating: u8,
    pub log_mean: f64,
    pub log_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weighted {
    pub name: String,
    pub weight: f64,
}

/// Per-date fare level relative to the bucket means, tiled over its span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DayEffects {
    pub start: NaiveDate,
    pub log_offsets: Vec<f64>,
}

impl DayEffects {
    pub fn offset(&self, date: NaiveDate) -> f64 {
        if self.log_offsets.is_empty() {
            return 0.0;
        }
        let n = self.log_offsets.len() as i64;
        let i = (date - self.start).num_days().rem_euclid(n);
        self.log_offsets[i as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceModel {
    /// Fitted buckets; any cabin and band missing here uses the built-in
    /// defaults.
    pub flight_buckets: Vec<FlightBucket>,
    pub hotel_buckets: Vec<HotelBucket>,
    pub airlines: Vec<Weighted>,
    pub brands: Vec<Weighted>,
    pub aircraft: Vec<Weighted>,
    /// Share of departures per local hour, 24 entries summing to 1.
    pub departure_hours: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub day_effects: Option<DayEffects>,
}

fn weighted(items: &[(&str, f64)]) -> Vec<Weighted> {
    items
        .iter()
        .map(|(n, w)| Weighted {
            name: n.to_string(),
            weight: *w,
        })
        .collect()
}

const DEFAULT_DEPARTURE_HOURS: [f64; 24] = [
    0.2, 0.1, 0.0, 0.0, 0.1, 1.0, 5.5, 8.0, 7.5, 6.5, 5.5, 6.0, 6.0, 5.5, 5.5, 6.0, 6.5, 7.0, 6.5, 5.0, 3.5,
    2.5, 1.5, 0.5,
];

fn default_coach_median(band: DurationBand) -> f64 {
    match band {
        DurationBand::Short => 14000.0,
        DurationBand::Medium => 22000.0,
        DurationBand::Long => 32000.0,
    }
}

fn cabin_factor(cabin: Cabin) -> f64 {
    match cabin {
        Cabin::BasicEconomy => 0.75,
        Cabin::Coach => 1.0,
        Cabin::Business => 2.8,
        Cabin::First => 3.8,
    }
}

pub fn default_flight_bucket(cabin: Cabin, band: DurationBand) -> FlightBucket {
    FlightBucket {
        cabin,
        band,
        log_mean: (default_coach_median(band) * cabin_factor(cabin)).ln(),
        log_std: 0.35,
        count: 0,
    }
}

impl Default for PriceModel {
    fn default() -> Self {
        let mut flight_buckets = Vec::new();
        for cabin in Cabin::ALL {
            for band in DurationBand::ALL {
                flight_buckets.push(default_flight_bucket(cabin, band));
            }
        }
        let hotel_buckets = [7000.0, 9500.0, 14000.0, 21000.0, 34000.0]
            .iter()
            .enumerate()
            .map(|(i, median): (usize, &f64)| HotelBucket {
                rating: i as u8 + 1,
                log_mean: median.ln(),
                log_std: 0.3,
            })
            .collect();
        let total: f64 = DEFAULT_DEPARTURE_HOURS.iter().sum();
        PriceModel {
            flight_buckets,
            hotel_buckets,
            airlines: weighted(&[
                ("AA", 0.22),
                ("DL", 0.21),
                ("UA", 0.19),
                ("WN", 0.14),
                ("B6", 0.08),
                ("AS", 0.07),
                ("NK", 0.05),
                ("F9", 0.04),
            ]),
            brands: weighted(&[
                ("Marriott", 0.2),
                ("Hilton", 0.2),
                ("Hyatt", 0.12),
                ("IHG", 0.14),
                ("Best Western", 0.1),
                ("Wyndham", 0.1),
                ("Choice", 0.08),
                ("Accor", 0.06),
            ]),
            aircraft: weighted(&[
                ("A320", 0.22),
                ("A321", 0.16),
                ("B737", 0.3),
                ("B757", 0.07),
                ("B787", 0.05),
                ("E175", 0.1),
                ("CRJ900", 0.06),
                ("A220", 0.04),
            ]),
            departure_hours: DEFAULT_DEPARTURE_HOURS.iter().map(|w| w / total).collect(),
            day_effects: None,
        }
    }
}

impl PriceModel {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        let bad = |what: &str| Err(GeneratorError::Config(format!("price model: {what}")));
        for b in &self.flight_buckets {
            if !b.log_mean.is_finite() || !b.log_std.is_finite() || b.log_std < 0.0 {
                return bad("flight bucket parameters must be finite");
            }
        }
        for b in &self.hotel_buckets {
            if !(1..=5).contains(&b.rating) || !b.log_mean.is_finite() || !b.log_std.is_finite() || b.log_std < 0.0
            {
                return bad("hotel bucket parameters must be finite");
            }
        }
        for (name, list) in [("airlines", &self.airlines), ("brands", &self.brands), ("aircraft", &self.aircraft)] {
            if list.is_empty() || list.iter().any(|w| !w.weight.is_finite() || w.weight < 0.0) {
                return bad(&format!("{name} needs non-negative finite weights"));
            }
            if list.iter().map(|w| w.weight).sum::<f64>() <= 0.0 {
                return bad(&format!("{name} has no positive weight"));
            }
        }
        if self.departure_hours.len() != 24 || self.departure_hours.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return bad("departure_hours needs 24 non-negative entries");
        }
        if (self.departure_hours.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
            return bad("departure_hours must sum to 1");
        }
        if let Some(d) = &self.day_effects {
            if d.log_offsets.iter().any(|v| !v.is_finite()) {
                return bad("day effects must be finite");
            }
        }
        Ok(())
    }

    pub fn flight_bucket(&self, cabin: Cabin, band: DurationBand) -> FlightBucket {
        self.flight_buckets
            .iter()
            .find(|b| b.cabin == cabin && b.band == band)
            .cloned()
            .unwrap_or_else(|| default_flight_bucket(cabin, band))
    }

    pub fn hotel_bucket(&self, rating: u8) -> HotelBucket {
        self.hotel_buckets
            .iter()
            .find(|b| b.rating == rating)
            .cloned()
            .unwrap_or_else(|| {
                let defaults = PriceModel::default();
                defaults.hotel_buckets[usize::from(rating.clamp(1, 5)) - 1].clone()
            })
    }

    /// Median fare in cents for a cabin and flight length.
    pub fn median_fare(&self, cabin: Cabin, band: DurationBand) -> Cents {
        self.flight_bucket(cabin, band).log_mean.exp().round() as Cents
    }

    pub fn median_nightly(&self, rating: u8) -> Cents {
        self.hotel_bucket(rating).log_mean.exp().round() as Cents
    }

    pub fn day_offset(&self, date: NaiveDate) -> f64 {
        self.day_effects.as_ref().map_or(0.0, |d| d.offset(date))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub rows_read: usize,
    pub rows_used: usize,
    pub rows_skipped: usize,
    pub buckets: Vec<FlightBucket>,
}

const ORIGIN: &[&str] = &["origin", "startingairport", "from"];
const DESTINATION: &[&str] = &["destination", "destinationairport", "to"];
const CABIN: &[&str] = &["cabin", "segmentscabincode", "cabin_class"];
const FARE: &[&str] = &["total_fare", "totalfare", "fare", "price"];
const DEPARTURE: &[&str] = &["departure", "segmentsdeparturetimeraw", "departure_time"];
const ARRIVAL: &[&str] = &["arrival", "segmentsarrivaltimeraw", "arrival_time"];
const AIRLINE: &[&str] = &["airline", "segmentsairlinecode"];
const AIRCRAFT: &[&str] = &["aircraft", "segmentsequipmentdescription", "equipment"];
const BASIC: &[&str] = &["isbasiceconomy", "is_basic_economy"];

fn column(headers: &csv::StringRecord, names: &[&str]) -> Option<usize> {
    headers.iter().position(|h| {
        let h = h.trim().to_ascii_lowercase();
        names.contains(&h.as_str())
    })
}

/// First departure or last arrival of a `||`-joined multi-leg field.
fn pick(field: &str, last: bool) -> &str {
    let part = if last { field.rsplit("||").next() } else { field.split("||").next() };
    part.unwrap_or("").trim()
}

enum Stamp {
    Local(NaiveDateTime),
    Offset(DateTime<chrono::FixedOffset>),
}

impl Stamp {
    fn local(&self) -> NaiveDateTime {
        match self {
            Stamp::Local(t) => *t,
            Stamp::Offset(t) => t.naive_local(),
        }
    }
}

fn parse_stamp(s: &str) -> Option<Stamp> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(Stamp::Offset(t));
    }
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(Stamp::Local)
}

fn elapsed_minutes(dep: &Stamp, arr: &Stamp) -> i64 {
    match (dep, arr) {
        (Stamp::Offset(a), Stamp::Offset(b)) => (*b - *a).num_minutes(),
        _ => (arr.local() - dep.local()).num_minutes(),
    }
}

fn parse_cabin(s: &str, basic: bool) -> Option<Cabin> {
    let first = pick(s, false).to_ascii_lowercase().replace(' ', "_");
    let cabin = match first.as_str() {
        "basic_economy" | "basic" => Cabin::BasicEconomy,
        "coach" | "economy" | "premium_coach" | "premium_economy" => Cabin::Coach,
        "business" => Cabin::Business,
        "first" => Cabin::First,
        _ => return None,
    };
    Some(if basic && cabin == Cabin::Coach { Cabin::BasicEconomy } else { cabin })
}

fn parse_fare(s: &str) -> Option<f64> {
    let v: f64 = s.trim().trim_start_matches('$').parse().ok()?;
    (v.is_finite() && v > 0.0).then_some(v)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn frequencies(counts: BTreeMap<String, usize>) -> Vec<Weighted> {
    let total: usize = counts.values().sum();
    counts
        .into_iter()
        .map(|(name, c)| Weighted {
            name,
            weight: c as f64 / total as f64,
        })
        .collect()
}

/// Fit fare buckets, the departure-hour histogram, carrier and aircraft
/// frequencies and per-date fare levels from a one-way flight price CSV.
/// Fares are in dollars. Rows with unusable fares, times or cabins are
/// skipped and counted.
pub fn ingest_flight_csv(path: &Path) -> Result<(PriceModel, FitSummary), GeneratorError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| GeneratorError::Io(format!("{}: {e}", path.display())))?;
    let headers = match reader.headers() {
        Ok(h) => h.clone(),
        Err(_) => return Err(GeneratorError::EmptyData),
    };
    if headers.is_empty() || headers.iter().all(|h| h.trim().is_empty()) {
        return Err(GeneratorError::EmptyData);
    }
    let need = |names: &[&str], what: &str| {
        column(&headers, names).ok_or_else(|| GeneratorError::MissingColumn(what.to_string()))
    };
    let c_origin = need(ORIGIN, "origin")?;
    let c_dest = need(DESTINATION, "destination")?;
    let c_cabin = need(CABIN, "cabin")?;
    let c_fare = need(FARE, "total_fare")?;
    let c_dep = need(DEPARTURE, "departure")?;
    let c_arr = need(ARRIVAL, "arrival")?;
    let c_airline = column(&headers, AIRLINE);
    let c_aircraft = column(&headers, AIRCRAFT);
    let c_basic = column(&headers, BASIC);

    let mut rows_read = 0;
    let mut samples: BTreeMap<(Cabin, DurationBand), Vec<f64>> = BTreeMap::new();
    let mut dated: Vec<(NaiveDate, Cabin, DurationBand, f64)> = Vec::new();
    let mut hours = [0usize; 24];
    let mut airlines: BTreeMap<String, usize> = BTreeMap::new();
    let mut aircraft: BTreeMap<String, usize> = BTreeMap::new();
    for record in reader.records() {
        rows_read += 1;
        let Ok(record) = record else { continue };
        let get = |c: usize| record.get(c).unwrap_or("").trim();
        if get(c_origin).is_empty() || get(c_dest).is_empty() {
            continue;
        }
        let basic = c_basic.is_some_and(|c| get(c).eq_ignore_ascii_case("true"));
        let (Some(fare), Some(dep), Some(arr), Some(cabin)) = (
            parse_fare(get(c_fare)),
            parse_stamp(pick(get(c_dep), false)),
            parse_stamp(pick(get(c_arr), true)),
            parse_cabin(get(c_cabin), basic),
        ) else {
            continue;
        };
        let minutes = elapsed_minutes(&dep, &arr);
        if minutes <= 0 {
            continue;
        }
        let band = DurationBand::of_minutes(minutes);
        let log_fare = (fare * 100.0).round().ln();
        samples.entry((cabin, band)).or_default().push(log_fare);
        let local = dep.local();
        dated.push((local.date(), cabin, band, log_fare));
        hours[local.hour() as usize] += 1;
        if let Some(c) = c_airline {
            let a = pick(get(c), false);
            if !a.is_empty() {
                *airlines.entry(a.to_string()).or_default() += 1;
            }
        }
        if let Some(c) = c_aircraft {
            let a = pick(get(c), false);
            if !a.is_empty() {
                *aircraft.entry(a.to_string()).or_default() += 1;
            }
        }
    }
    let rows_used = dated.len();
    if rows_used == 0 {
        return Err(GeneratorError::EmptyData);
    }

    let buckets: Vec<FlightBucket> = samples
        .iter()
        .map(|((cabin, band), logs)| {
            let (log_mean, log_std) = mean_std(logs);
            FlightBucket {
                cabin: *cabin,
                band: *band,
                log_mean,
                log_std,
                count: logs.len(),
            }
        })
        .collect();

    let first = dated.iter().map(|d| d.0).min().expect("rows_used > 0");
    let last = dated.iter().map(|d| d.0).max().expect("rows_used > 0");
    let span = (last - first).num_days() as usize + 1;
    let day_effects = (span > 1).then(|| {
        let mut sum = vec![0.0; span];
        let mut n = vec![0usize; span];
        for (date, cabin, band, log_fare) in &dated {
            let b = buckets
                .iter()
                .find(|b| b.cabin == *cabin && b.band == *band)
                .expect("bucket exists");
            let i = (*date - first).num_days() as usize;
            sum[i] += log_fare - b.log_mean;
            n[i] += 1;
        }
        DayEffects {
            start: first,
            log_offsets: sum
                .iter()
                .zip(&n)
                .map(|(s, c)| if *c == 0 { 0.0 } else { s / *c as f64 })
                .collect(),
        }
    });

    let total_hours: usize = hours.iter().sum();
    let mut model = PriceModel {
        flight_buckets: buckets.clone(),
        departure_hours: hours.iter().map(|h| *h as f64 / total_hours as f64).collect(),
        ..PriceModel::default()
    };
    if !airlines.is_empty() {
        model.airlines = frequencies(airlines);
    }
    if !aircraft.is_empty() {
        model.aircraft = frequencies(aircraft);
    }
    model.day_effects = day_effects;
    Ok((
        model,
        FitSummary {
            rows_read,
            rows_used,
            rows_skipped: rows_read - rows_used,
            buckets,
        },
    ))
}
