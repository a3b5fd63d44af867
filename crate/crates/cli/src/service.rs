//! JSON-over-HTTP front end: solve a request under all three objectives,
//! generate sample pairs, report health.

use std::collections::BTreeMap;
use std::net::SocketAddr;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use tower_http::cors::{Any, CorsLayer};

use ttg_core::generator::{sample_instance, sample_pair, GeneratorConfig, GeneratorError};
use ttg_core::model::{solve_request, ModelError, SolveError};
use ttg_core::schema::{
    canonical_json, from_value, inventory_from_value, request_from_value, Inventory, Itinerary, ObjectiveKind,
    SchemaError, TravelRequest,
};
use ttg_core::solver::{MilpStatus, SolverParams};
use ttg_core::Rules;

use crate::render::mean_hotel_rating;

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub port: u16,
    pub time_limit_ms: u64,
    pub slot_minutes: u32,
    /// Solve the three objectives on separate threads.
    pub concurrent_objectives: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            port: 8080,
            time_limit_ms: SolverParams::default().time_limit_ms,
            slot_minutes: Rules::default().slot_minutes,
            concurrent_objectives: false,
        }
    }
}

impl ServiceConfig {
    /// Reads TTG_PORT, TTG_TIME_LIMIT_MS, TTG_SLOT_MINUTES and
    /// TTG_CONCURRENT_OBJECTIVES.
    pub fn from_env() -> Result<ServiceConfig, String> {
        ServiceConfig::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Result<ServiceConfig, String> {
        fn parsed<T: std::str::FromStr>(key: &str, raw: Option<String>, default: T) -> Result<T, String> {
            match raw {
                None => Ok(default),
                Some(s) => s.trim().parse().map_err(|_| format!("{key}: cannot parse `{s}`")),
            }
        }
        let d = ServiceConfig::default();
        let config = ServiceConfig {
            port: parsed("TTG_PORT", lookup("TTG_PORT"), d.port)?,
            time_limit_ms: parsed("TTG_TIME_LIMIT_MS", lookup("TTG_TIME_LIMIT_MS"), d.time_limit_ms)?,
            slot_minutes: parsed("TTG_SLOT_MINUTES", lookup("TTG_SLOT_MINUTES"), d.slot_minutes)?,
            concurrent_objectives: parsed(
                "TTG_CONCURRENT_OBJECTIVES",
                lookup("TTG_CONCURRENT_OBJECTIVES"),
                d.concurrent_objectives,
            )?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.slot_minutes == 0 || 1440 % self.slot_minutes != 0 {
            return Err(format!("slot length {} does not divide a day", self.slot_minutes));
        }
        if self.time_limit_ms == 0 {
            return Err("time limit must be positive".into());
        }
        Ok(())
    }

    fn params(&self) -> SolverParams {
        SolverParams {
            time_limit_ms: self.time_limit_ms,
            ..SolverParams::default()
        }
    }

    fn rules(&self) -> Rules {
        Rules::default().with_slot_minutes(self.slot_minutes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionTiming {
    /// Always null: requests arrive already symbolic.
    pub translate_ms: Option<f64>,
    pub load_ms: f64,
    pub solve_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItineraryOption {
    pub objective: ObjectiveKind,
    pub label: String,
    pub feasible: bool,
    pub itinerary: Option<Itinerary>,
    pub mean_hotel_rating: Option<f64>,
    /// Why there is no itinerary.
    pub notice: Option<String>,
    pub timing: OptionTiming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedInventory {
    pub seed: u64,
    pub inventory: Inventory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResponse {
    pub request: TravelRequest,
    pub options: BTreeMap<ObjectiveKind, ItineraryOption>,
    /// Present when the caller did not send an inventory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated: Option<GeneratedInventory>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub kind: &'static str,
    pub message: String,
    pub path: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            kind,
            message: message.into(),
            path: None,
        }
    }

    fn schema(prefix: &str, err: SchemaError) -> ApiError {
        let path = match err.path() {
            Some(".") | None => prefix.to_string(),
            Some(p) => format!("{prefix}.{p}"),
        };
        ApiError {
            path: Some(path),
            ..ApiError::new(StatusCode::BAD_REQUEST, "schema_violation", err.to_string())
        }
    }

    fn bad_body(path: &str, message: impl Into<String>) -> ApiError {
        ApiError {
            path: Some(path.to_string()),
            ..ApiError::new(StatusCode::BAD_REQUEST, "schema_violation", message)
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": self.message, "kind": self.kind, "path": self.path});
        (self.status, Json(body)).into_response()
    }
}

fn parse_body(bytes: &[u8], allowed: &[&str]) -> Result<serde_json::Map<String, Value>, ApiError> {
    let value: Value = serde_json::from_slice(bytes)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed_json", e.to_string()))?;
    let Value::Object(map) = value else {
        return Err(ApiError::bad_body(".", "body must be a JSON object"));
    };
    if let Some(k) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(ApiError::bad_body(k, format!("unknown field `{k}`")));
    }
    Ok(map)
}

/// Seed for an on-demand inventory: the first eight bytes of the SHA-256 of
/// the request's canonical JSON.
pub fn inventory_seed(request: &TravelRequest) -> u64 {
    let digest = Sha256::digest(canonical_json(request).as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub fn generate_inventory(request: &TravelRequest) -> Result<GeneratedInventory, ApiError> {
    let seed = inventory_seed(request);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match sample_instance(&mut rng, request, &GeneratorConfig::default()) {
        Ok(p) => Ok(GeneratedInventory {
            seed,
            inventory: p.inventory,
        }),
        Err(GeneratorError::InfeasibleRequest(why)) => Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "infeasible_request",
            format!("no inventory can satisfy this request: {why}"),
        )),
        Err(e) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "generator", e.to_string())),
    }
}

fn solve_one(
    request: &TravelRequest,
    inventory: &Inventory,
    kind: ObjectiveKind,
    config: &ServiceConfig,
) -> Result<ItineraryOption, ApiError> {
    let solved = match solve_request(request, inventory, kind, &config.params(), &config.rules(), None) {
        Ok(s) => s,
        Err(SolveError::Model(e @ ModelError::EmptySegment { .. })) => {
            return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "empty_segment", e.to_string()))
        }
        Err(e) => return Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "solver", e.to_string())),
    };
    let t = solved.result.timing;
    let timing = OptionTiming {
        translate_ms: None,
        load_ms: t.load_ms,
        solve_ms: t.solve_ms,
        total_ms: t.total_ms,
    };
    let (itinerary, notice) = match solved.result.status {
        MilpStatus::Optimal => (solved.itinerary, None),
        MilpStatus::Infeasible => (None, Some("no itinerary satisfies every constraint".to_string())),
        MilpStatus::TimeLimitWithIncumbent | MilpStatus::TimeLimitNoIncumbent => {
            return Err(ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "time_limit",
                format!("{kind} not solved to optimality within {} ms", config.time_limit_ms),
            ))
        }
    };
    Ok(ItineraryOption {
        objective: kind,
        label: kind.label().to_string(),
        feasible: itinerary.is_some(),
        mean_hotel_rating: itinerary.as_ref().and_then(|it| mean_hotel_rating(it, inventory)),
        itinerary,
        notice,
        timing,
    })
}

/// Parse a `{request, inventory?}` body and solve it under every objective.
pub fn solve_body(bytes: &[u8], config: &ServiceConfig) -> Result<SolveResponse, ApiError> {
    let mut body = parse_body(bytes, &["request", "inventory"])?;
    let raw = body.remove("request").ok_or_else(|| ApiError::bad_body("request", "missing field `request`"))?;
    let request = request_from_value(raw).map_err(|e| ApiError::schema("request", e))?;
    let (inventory, generated) = match body.remove("inventory") {
        Some(Value::Null) | None => {
            let g = generate_inventory(&request)?;
            (g.inventory.clone(), Some(g))
        }
        Some(v) => (inventory_from_value(v, &request).map_err(|e| ApiError::schema("inventory", e))?, None),
    };
    let options: Vec<Result<ItineraryOption, ApiError>> = if config.concurrent_objectives {
        std::thread::scope(|s| {
            let (request, inventory) = (&request, &inventory);
            let handles: Vec<_> = ObjectiveKind::ALL
                .map(|k| s.spawn(move || solve_one(request, inventory, k, config)))
                .into_iter()
                .collect();
            handles.into_iter().map(|h| h.join().expect("solver thread panicked")).collect()
        })
    } else {
        ObjectiveKind::ALL
            .iter()
            .map(|&k| solve_one(&request, &inventory, k, config))
            .collect()
    };
    let options = options
        .into_iter()
        .map(|o| o.map(|o| (o.objective, o)))
        .collect::<Result<_, _>>()?;
    Ok(SolveResponse {
        request,
        options,
        generated,
    })
}

/// Parse a `{seed, config?}` body and build sample pair 0 of that dataset.
pub fn generate_body(bytes: &[u8]) -> Result<Value, ApiError> {
    let mut body = parse_body(bytes, &["seed", "config"])?;
    let seed = match body.remove("seed") {
        Some(v) => v
            .as_u64()
            .ok_or_else(|| ApiError::bad_body("seed", "seed must be a non-negative integer"))?,
        None => return Err(ApiError::bad_body("seed", "missing field `seed`")),
    };
    let mut config = serde_json::to_value(GeneratorConfig::default()).expect("config serializes");
    match body.remove("config") {
        None | Some(Value::Null) => {}
        Some(Value::Object(overrides)) => merge(&mut config, Value::Object(overrides)),
        Some(_) => return Err(ApiError::bad_body("config", "config overrides must be an object")),
    }
    let mut config: GeneratorConfig = from_value(config).map_err(|e| ApiError::schema("config", e))?;
    config.rng_seed = seed;
    config
        .validate()
        .map_err(|e| ApiError::bad_body("config", e.to_string()))?;
    match sample_pair(&config, 0) {
        Ok((pair, _)) => Ok(serde_json::to_value(pair).expect("pair serializes")),
        Err(GeneratorError::InfeasibleRequest(why)) => Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "infeasible_request",
            why,
        )),
        Err(e) => Err(ApiError::new(StatusCode::BAD_REQUEST, "generator", e.to_string())),
    }
}

/// Overlay `patch` onto `base`, recursing into objects present in both.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

async fn solve(State(config): State<ServiceConfig>, body: Bytes) -> Result<Json<SolveResponse>, ApiError> {
    blocking(move || solve_body(&body, &config)).await.map(Json)
}

async fn generate(body: Bytes) -> Result<Json<Value>, ApiError> {
    blocking(move || generate_body(&body)).await.map(Json)
}

async fn health() -> Json<Value> {
    Json(json!({"status": "ok", "version": env!("CARGO_PKG_VERSION")}))
}

pub fn router(config: ServiceConfig) -> Router {
    let cors = CorsLayer::new().allow_origin(Any).allow_methods(Any).allow_headers(Any);
    Router::new()
        .route("/api/solve", post(solve))
        .route("/api/generate", post(generate))
        .route("/api/health", get(health))
        .layer(cors)
        .with_state(config)
}

pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let addr = SocketAddr::from(([0, 0, 0, 0], config.port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(config))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
