//! Synthetic requests, inventories with a planted feasible itinerary,
//! request perturbations and dataset assembly.

mod config;
mod dataset;
mod perturb;
mod price;
mod sample;

pub use config::{default_city_pool, BudgetPresence, City, GeneratorConfig};
pub use dataset::{derive_seed, generate_dataset, read_dataset, sample_pair, write_dataset, DatasetSummary, Pair};
pub use perturb::{apply_changes, perturb_request, AppliedChange, Perturbation, PerturbationSpec};
pub use price::{
    ingest_flight_csv, DayEffects, DurationBand, FitSummary, FlightBucket, HotelBucket, PriceModel, Weighted,
};
pub use sample::{sample_instance, sample_inventory, sample_request, Planted};

#[derive(Debug, thiserror::Error)]
pub enum GeneratorError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("request cannot be satisfied: {0}")]
    InfeasibleRequest(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("no usable rows in price data")]
    EmptyData,
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("bad json: {0}")]
    Json(String),
}
