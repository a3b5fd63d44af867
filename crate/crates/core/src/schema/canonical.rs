//! Deterministic normal form for symbolic requests.
//!
//! Object keys are emitted in sorted order, set-valued fields are already
//! ordered sets, and absent optionals are skipped during serialization, so two
//! requests are equal exactly when their canonical strings are byte-identical.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use super::types::TravelRequest;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalForm(String);

impl CanonicalForm {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

pub fn canonicalize(request: &TravelRequest) -> CanonicalForm {
    CanonicalForm(canonical_json(request))
}

/// Serialize any value with sorted object keys and no whitespace.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("schema types serialize to JSON");
    let mut out = String::new();
    write_value(&mut out, &v);
    out
}

fn write_value(out: &mut String, v: &Value) {
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_string(out, k);
                out.push(':');
                write_value(out, &map[k]);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, item);
            }
            out.push(']');
        }
        Value::String(s) => write_string(out, s),
        other => {
            let _ = write!(out, "{other}");
        }
    }
}

fn write_string(out: &mut String, s: &str) {
    out.push_str(&serde_json::to_string(s).expect("string serializes"));
}

/// Field paths whose values differ between two requests.
///
/// Constraint groups are compared per field (`airline_constraints.avoid_red_eye`),
/// segments per attribute (`segments[1].date`); a change in segment count is
/// reported as `segments`.
pub fn differing_fields(a: &TravelRequest, b: &TravelRequest) -> Vec<String> {
    let va = serde_json::to_value(a).expect("serializable");
    let vb = serde_json::to_value(b).expect("serializable");
    let (Value::Object(ma), Value::Object(mb)) = (va, vb) else {
        unreachable!("requests serialize to objects")
    };
    let mut keys: Vec<&String> = ma.keys().chain(mb.keys()).collect();
    keys.sort();
    keys.dedup();

    let mut out = Vec::new();
    for key in keys {
        let x = ma.get(key).unwrap_or(&Value::Null);
        let y = mb.get(key).unwrap_or(&Value::Null);
        if x == y {
            continue;
        }
        match (key.as_str(), x, y) {
            ("segments", Value::Array(xs), Value::Array(ys)) if xs.len() == ys.len() => {
                for (i, (sx, sy)) in xs.iter().zip(ys).enumerate() {
                    for sub in object_diff(sx, sy) {
                        out.push(format!("segments[{i}].{sub}"));
                    }
                }
            }
            (_, Value::Object(_), Value::Object(_)) => {
                for sub in object_diff(x, y) {
                    out.push(format!("{key}.{sub}"));
                }
            }
            _ => out.push(key.clone()),
        }
    }
    out
}

fn object_diff(x: &Value, y: &Value) -> Vec<String> {
    let empty = serde_json::Map::new();
    let mx = x.as_object().unwrap_or(&empty);
    let my = y.as_object().unwrap_or(&empty);
    let mut keys: Vec<&String> = mx.keys().chain(my.keys()).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .filter(|k| mx.get(*k) != my.get(*k))
        .cloned()
        .collect()
}
