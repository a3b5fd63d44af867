//! Shared instances for the benchmarks.

use ttg_core::generator::{sample_pair, GeneratorConfig, Pair};

/// Three segments, 50 flights per segment, 20 hotels per city.
pub fn paper_scale(seed: u64) -> GeneratorConfig {
    GeneratorConfig {
        rng_seed: seed,
        p_one_way: 0.0,
        p_three_cities: 1.0,
        flights_per_segment: [50, 50],
        hotels_per_city: [20, 20],
        ..GeneratorConfig::default()
    }
}

pub fn pairs(config: &GeneratorConfig, n: u64) -> Vec<Pair> {
    (0..n).map(|i| sample_pair(config, i).expect("generator succeeds").0).collect()
}
