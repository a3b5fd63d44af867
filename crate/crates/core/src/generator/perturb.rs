use std::collections::BTreeSet;

use chrono::NaiveDate;
use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::schema::{AirlineConstraints, BudgetConstraints, HotelConstraints, TravelRequest};

use super::config::default_city_pool;
use super::GeneratorError;

fn always() -> f64 {
    1.0
}

/// One kind of edit; `p` is the chance it is attempted at all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Perturbation {
    DropConstraint {
        #[serde(default)]
        field: Option<String>,
        #[serde(default = "always")]
        p: f64,
    },
    FlipBoolean {
        #[serde(default)]
        field: Option<String>,
        #[serde(default = "always")]
        p: f64,
    },
    ShiftBudget {
        #[serde(default)]
        field: Option<String>,
        relative_delta: f64,
        #[serde(default = "always")]
        p: f64,
    },
    ShiftWindow {
        minutes: i32,
        #[serde(default = "always")]
        p: f64,
    },
    SwapDates {
        #[serde(default = "always")]
        p: f64,
    },
    ChangeCity {
        #[serde(default = "always")]
        p: f64,
    },
}

impl Perturbation {
    fn kind(&self) -> &'static str {
        match self {
            Perturbation::DropConstraint { .. } => "drop_constraint",
            Perturbation::FlipBoolean { .. } => "flip_boolean",
            Perturbation::ShiftBudget { .. } => "shift_budget",
            Perturbation::ShiftWindow { .. } => "shift_window",
            Perturbation::SwapDates { .. } => "swap_dates",
            Perturbation::ChangeCity { .. } => "change_city",
        }
    }

    fn p(&self) -> f64 {
        match self {
            Perturbation::DropConstraint { p, .. }
            | Perturbation::FlipBoolean { p, .. }
            | Perturbation::ShiftBudget { p, .. }
            | Perturbation::ShiftWindow { p, .. }
            | Perturbation::SwapDates { p }
            | Perturbation::ChangeCity { p } => *p,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub perturbations: Vec<Perturbation>,
    /// Replacement cities for `change_city`; the generator's pool if unset.
    #[serde(default)]
    pub city_pool: Option<Vec<String>>,
}

impl PerturbationSpec {
    /// Drop every constraint and budget field with probability `p_drop`,
    /// then flip every boolean with probability `p_flip`, each independently.
    pub fn per_field(p_drop: f64, p_flip: f64) -> Self {
        let groups: [(&str, &[&str]); 3] = [
            ("airline_constraints", &AirlineConstraints::FIELDS),
            ("hotel_constraints", &HotelConstraints::FIELDS),
            ("budget", &BudgetConstraints::FIELDS),
        ];
        let mut perturbations = Vec::new();
        for (group, fields) in groups {
            for f in fields {
                perturbations.push(Perturbation::DropConstraint {
                    field: Some(format!("{group}.{f}")),
                    p: p_drop,
                });
            }
        }
        for f in BOOLEAN_FIELDS {
            perturbations.push(Perturbation::FlipBoolean {
                field: Some(format!("airline_constraints.{f}")),
                p: p_flip,
            });
        }
        PerturbationSpec {
            perturbations,
            city_pool: None,
        }
    }
}

/// A single field edit, `None` meaning the field is absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppliedChange {
    pub kind: String,
    pub field: String,
    pub before: Option<Value>,
    pub after: Option<Value>,
}

const BOOLEAN_FIELDS: [&str; 5] = [
    "refundable",
    "non_stop",
    "must_not_basic_economy",
    "avoid_red_eye",
    "no_mixed_cabin",
];

enum Step {
    Key(String),
    Index(usize),
}

fn parse_path(path: &str) -> Result<Vec<Step>, GeneratorError> {
    let bad = || GeneratorError::Config(format!("bad field path `{path}`"));
    let mut steps = Vec::new();
    for part in path.split('.') {
        let (name, rest) = part.split_once('[').map_or((part, None), |(n, r)| (n, Some(r)));
        if name.is_empty() {
            return Err(bad());
        }
        steps.push(Step::Key(name.to_string()));
        if let Some(rest) = rest {
            let idx = rest.strip_suffix(']').and_then(|i| i.parse().ok()).ok_or_else(bad)?;
            steps.push(Step::Index(idx));
        }
    }
    Ok(steps)
}

fn get_path(root: &Value, path: &str) -> Result<Option<Value>, GeneratorError> {
    let mut cur = root;
    for step in parse_path(path)? {
        let next = match step {
            Step::Key(k) => cur.get(&k),
            Step::Index(i) => cur.get(i),
        };
        match next {
            Some(v) => cur = v,
            None => return Ok(None),
        }
    }
    Ok(Some(cur.clone()))
}

fn set_path(root: &mut Value, path: &str, value: Option<Value>) -> Result<(), GeneratorError> {
    let steps = parse_path(path)?;
    let missing = || GeneratorError::Config(format!("no parent for `{path}`"));
    let (last, parents) = steps.split_last().ok_or_else(missing)?;
    let mut cur = root;
    for step in parents {
        cur = match step {
            Step::Key(k) => {
                let obj = cur.as_object_mut().ok_or_else(missing)?;
                obj.entry(k.clone()).or_insert_with(|| Value::Object(Default::default()))
            }
            Step::Index(i) => cur.get_mut(*i).ok_or_else(missing)?,
        };
    }
    match (last, value) {
        (Step::Key(k), Some(v)) => {
            cur.as_object_mut().ok_or_else(missing)?.insert(k.clone(), v);
        }
        (Step::Key(k), None) => {
            cur.as_object_mut().ok_or_else(missing)?.remove(k);
        }
        (Step::Index(i), Some(v)) => *cur.get_mut(*i).ok_or_else(missing)? = v,
        (Step::Index(_), None) => return Err(missing()),
    }
    Ok(())
}

fn present_constraints(request: &TravelRequest) -> Vec<String> {
    let mut out = Vec::new();
    for f in request.airline_constraints.present_fields() {
        out.push(format!("airline_constraints.{f}"));
    }
    for f in request.hotel_constraints.present_fields() {
        out.push(format!("hotel_constraints.{f}"));
    }
    for f in request.budget.present_fields() {
        out.push(format!("budget.{f}"));
    }
    out
}

fn known_field(path: &str) -> bool {
    match path.split_once('.') {
        Some(("airline_constraints", f)) => AirlineConstraints::FIELDS.contains(&f),
        Some(("hotel_constraints", f)) => HotelConstraints::FIELDS.contains(&f),
        Some(("budget", f)) => BudgetConstraints::FIELDS.contains(&f),
        _ => false,
    }
}

/// Qualify a bare field name with its group.
fn qualify(field: &str, group: &str) -> String {
    if field.contains('.') {
        field.to_string()
    } else {
        format!("{group}.{field}")
    }
}

fn pick<R: Rng + ?Sized>(rng: &mut R, requested: &Option<String>, group: &str, candidates: Vec<String>) -> Result<Option<String>, GeneratorError> {
    match requested {
        Some(f) => {
            let path = qualify(f, group);
            if !known_field(&path) {
                return Err(GeneratorError::Config(format!("unknown constraint `{f}`")));
            }
            Ok(candidates.contains(&path).then_some(path))
        }
        None => Ok(candidates.choose(rng).cloned()),
    }
}

fn edits<R: Rng + ?Sized>(
    rng: &mut R,
    p: &Perturbation,
    request: &TravelRequest,
    value: &Value,
    pool: &[String],
) -> Result<Vec<(String, Option<Value>)>, GeneratorError> {
    let mut out = Vec::new();
    match p {
        Perturbation::DropConstraint { field, .. } => {
            let group = field.as_deref().map_or("airline_constraints", |f| {
                if HotelConstraints::FIELDS.contains(&f) && !AirlineConstraints::FIELDS.contains(&f) {
                    "hotel_constraints"
                } else if BudgetConstraints::FIELDS.contains(&f) {
                    "budget"
                } else {
                    "airline_constraints"
                }
            });
            if let Some(path) = pick(rng, field, group, present_constraints(request))? {
                out.push((path, None));
            }
        }
        Perturbation::FlipBoolean { field, .. } => {
            if let Some(f) = field {
                if !BOOLEAN_FIELDS.contains(&f.trim_start_matches("airline_constraints.")) {
                    return Err(GeneratorError::Config(format!("`{f}` is not a boolean constraint")));
                }
            }
            let present: Vec<String> = request
                .airline_constraints
                .present_fields()
                .into_iter()
                .filter(|f| BOOLEAN_FIELDS.contains(f))
                .map(|f| format!("airline_constraints.{f}"))
                .collect();
            if let Some(path) = pick(rng, field, "airline_constraints", present)? {
                let before = get_path(value, &path)?.and_then(|v| v.as_bool()).unwrap_or(false);
                out.push((path, Some(Value::Bool(!before))));
            }
        }
        Perturbation::ShiftBudget { field, relative_delta, .. } => {
            let present: Vec<String> = request
                .budget
                .present_fields()
                .into_iter()
                .map(|f| format!("budget.{f}"))
                .collect();
            if let Some(path) = pick(rng, field, "budget", present)? {
                let before = get_path(value, &path)?.and_then(|v| v.as_i64()).unwrap_or(0);
                let after = ((before as f64) * (1.0 + relative_delta)).round().max(1.0) as i64;
                out.push((path, Some(Value::from(after))));
            }
        }
        Perturbation::ShiftWindow { minutes, .. } => {
            let air = &request.airline_constraints;
            let windows: Vec<(&str, _)> = [("departure_window", air.departure_window), ("arrival_window", air.arrival_window)]
                .into_iter()
                .filter_map(|(n, w)| w.map(|w| (n, w)))
                .collect();
            if let Some((name, w)) = windows.choose(rng) {
                let shift = |m: u16| (i32::from(m) + minutes).clamp(0, 1439) as u16;
                let mut moved = *w;
                moved.earliest = shift(w.earliest);
                moved.latest = shift(w.latest);
                out.push((
                    format!("airline_constraints.{name}"),
                    Some(serde_json::to_value(moved).expect("serializable")),
                ));
            }
        }
        Perturbation::SwapDates { .. } => {
            let segs = &request.segments;
            if segs.len() >= 3 {
                let j = rng.random_range(0..segs.len() - 2);
                let first = segs[j + 1].date - segs[j].date;
                let second = segs[j + 2].date - segs[j + 1].date;
                if first != second {
                    let moved: NaiveDate = segs[j].date + second;
                    out.push((format!("segments[{}].date", j + 1), Some(Value::from(moved.to_string()))));
                }
            }
        }
        Perturbation::ChangeCity { .. } => {
            let cities = request.cities();
            let home = request.home().clone();
            let away: Vec<_> = cities.iter().filter(|c| **c != home).collect();
            let used: BTreeSet<&str> = cities.iter().map(|c| c.as_str()).collect();
            let fresh: Vec<&String> = pool.iter().filter(|c| !used.contains(c.as_str())).collect();
            if let (Some(old), Some(new)) = (away.choose(rng), fresh.choose(rng)) {
                for (i, seg) in request.segments.iter().enumerate() {
                    if seg.origin == **old {
                        out.push((format!("segments[{i}].origin"), Some(Value::from(new.as_str()))));
                    }
                    if seg.destination == **old {
                        out.push((format!("segments[{i}].destination"), Some(Value::from(new.as_str()))));
                    }
                }
            }
        }
    }
    Ok(out)
}

fn from_value(value: Value) -> Result<TravelRequest, GeneratorError> {
    serde_json::from_value(value).map_err(|e| GeneratorError::Json(e.to_string()))
}

/// Apply each perturbation in order (each with its own probability) and
/// report the net field changes.
pub fn perturb_request<R: Rng + ?Sized>(
    rng: &mut R,
    request: &TravelRequest,
    spec: &PerturbationSpec,
) -> Result<(TravelRequest, Vec<AppliedChange>), GeneratorError> {
    let pool: Vec<String> = spec
        .city_pool
        .clone()
        .unwrap_or_else(|| default_city_pool().into_iter().map(|c| c.code).collect());
    for p in &spec.perturbations {
        if !(0.0..=1.0).contains(&p.p()) {
            return Err(GeneratorError::Config(format!("{} has p = {} outside [0, 1]", p.kind(), p.p())));
        }
    }
    let original = serde_json::to_value(request).expect("serializable");
    let mut value = original.clone();
    let mut current = request.clone();
    let mut changes: Vec<AppliedChange> = Vec::new();
    for p in &spec.perturbations {
        if !rng.random_bool(p.p()) {
            continue;
        }
        for (path, after) in edits(rng, p, &current, &value, &pool)? {
            let before = get_path(&value, &path)?;
            set_path(&mut value, &path, after.clone())?;
            match changes.iter_mut().find(|c| c.field == path) {
                Some(c) => c.after = after,
                None => changes.push(AppliedChange {
                    kind: p.kind().to_string(),
                    field: path,
                    before,
                    after,
                }),
            }
        }
        current = from_value(value.clone())?;
    }
    changes.retain(|c| c.before != c.after);
    Ok((current, changes))
}

/// Replay recorded changes onto `request`.
pub fn apply_changes(request: &TravelRequest, changes: &[AppliedChange]) -> Result<TravelRequest, GeneratorError> {
    let mut value = serde_json::to_value(request).expect("serializable");
    for c in changes {
        set_path(&mut value, &c.field, c.after.clone())?;
    }
    from_value(value)
}
