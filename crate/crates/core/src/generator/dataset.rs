use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::schema::{Inventory, Itinerary, TravelRequest};

use super::config::GeneratorConfig;
use super::sample::{sample_instance, sample_request};
use super::GeneratorError;

const MAX_ATTEMPTS: usize = 64;

/// One dataset line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pair {
    pub request: TravelRequest,
    pub inventory: Inventory,
}

/// Per-index seed, independent of how many items precede it.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(index.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest is 32 bytes"))
}

/// Item `index` of the dataset seeded by `config.rng_seed`, with its planted
/// itinerary. Requests the inventory sampler cannot satisfy are redrawn.
pub fn sample_pair(config: &GeneratorConfig, index: u64) -> Result<(Pair, Itinerary), GeneratorError> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.rng_seed, index));
    let mut last = String::new();
    for _ in 0..MAX_ATTEMPTS {
        let mut request = sample_request(&mut rng, config)?;
        request.request_id = format!("s{}-{index:06}", config.rng_seed);
        match sample_instance(&mut rng, &request, config) {
            Ok(p) => return Ok((Pair { request, inventory: p.inventory }, p.plant)),
            Err(GeneratorError::InfeasibleRequest(why)) => last = why,
            Err(e) => return Err(e),
        }
    }
    Err(GeneratorError::InfeasibleRequest(format!(
        "no satisfiable request after {MAX_ATTEMPTS} draws (last: {last})"
    )))
}

pub fn generate_dataset(config: &GeneratorConfig, n: usize) -> Result<Vec<Pair>, GeneratorError> {
    if n == 0 {
        return Err(GeneratorError::Config("dataset size must be at least 1".into()));
    }
    config.validate()?;
    (0..n as u64)
        .into_par_iter()
        .map(|i| sample_pair(config, i).map(|(p, _)| p))
        .collect()
}

pub fn write_dataset(path: &Path, pairs: &[Pair]) -> Result<(), GeneratorError> {
    let io = |e: std::io::Error| GeneratorError::Io(format!("{}: {e}", path.display()));
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for p in pairs {
        serde_json::to_writer(&mut w, p).map_err(|e| GeneratorError::Json(e.to_string()))?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_dataset(path: &Path) -> Result<Vec<Pair>, GeneratorError> {
    let io = |e: std::io::Error| GeneratorError::Io(format!("{}: {e}", path.display()));
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let pair = serde_json::from_str(&line).map_err(|e| GeneratorError::Json(format!("line {}: {e}", n + 1)))?;
        out.push(pair);
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub pairs: usize,
    pub one_way: usize,
    pub three_city: usize,
    pub airline_constraint_counts: BTreeMap<usize, usize>,
    pub hotel_constraint_counts: BTreeMap<usize, usize>,
    /// How often each constraint or budget field is present.
    pub field_counts: BTreeMap<String, usize>,
    pub mean_flights_per_segment: f64,
    pub mean_hotels: f64,
}

impl DatasetSummary {
    pub fn of(pairs: &[Pair]) -> Self {
        let mut s = DatasetSummary {
            pairs: pairs.len(),
            ..Default::default()
        };
        let (mut flights, mut segments, mut hotels) = (0usize, 0usize, 0usize);
        for p in pairs {
            let r = &p.request;
            s.one_way += usize::from(!r.is_round_trip());
            s.three_city += usize::from(r.city_count() >= 3);
            *s.airline_constraint_counts.entry(r.airline_constraints.count()).or_default() += 1;
            *s.hotel_constraint_counts.entry(r.hotel_constraints.count()).or_default() += 1;
            let fields = r
                .airline_constraints
                .present_fields()
                .into_iter()
                .map(|f| format!("airline_constraints.{f}"))
                .chain(r.hotel_constraints.present_fields().into_iter().map(|f| format!("hotel_constraints.{f}")))
                .chain(r.budget.present_fields().into_iter().map(|f| format!("budget.{f}")));
            for f in fields {
                *s.field_counts.entry(f).or_default() += 1;
            }
            flights += p.inventory.flights.len();
            segments += r.segments.len();
            hotels += p.inventory.hotels.len();
        }
        if !pairs.is_empty() {
            s.mean_flights_per_segment = flights as f64 / segments.max(1) as f64;
            s.mean_hotels = hotels as f64 / pairs.len() as f64;
        }
        s
    }
}
