//! Translator evaluation: exact match between requests and the quality
//! ratio of the itinerary an estimated request leads to.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generator::AppliedChange;
use crate::model::{solve_request, ModelError, SolveError};
use crate::schema::{
    canonicalize, check_feasibility, differing_fields, itinerary_cost, Cents, Inventory, Itinerary, ObjectiveKind,
    TravelRequest,
};
use crate::solver::{MilpStatus, SolverParams};
use crate::timegrid::Rules;

fn describe_failures(failures: &[(usize, String)]) -> String {
    failures
        .iter()
        .map(|(i, e)| format!("#{i} ({e})"))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("ground-truth request {0} has no feasible itinerary")]
    OracleInfeasible(String),
    #[error("solver failed on {request_id}: {source}")]
    Solve {
        request_id: String,
        #[source]
        source: SolveError,
    },
    #[error("solver stopped before proving optimality on {0}")]
    NotOptimal(String),
    #[error("no cases to evaluate")]
    Empty,
    #[error("{} case(s) failed: {}", .0.len(), describe_failures(.0))]
    Cases(Vec<(usize, String)>),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("bad json: {0}")]
    Json(String),
}

/// Ground truth, a translator's estimate of it, and the inventory both are
/// solved against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalCase {
    pub request: TravelRequest,
    pub estimate: TravelRequest,
    pub inventory: Inventory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub changes: Option<Vec<AppliedChange>>,
}

pub fn exact_match(x: &TravelRequest, x_hat: &TravelRequest) -> (bool, Vec<String>) {
    if canonicalize(x) == canonicalize(x_hat) {
        return (true, Vec::new());
    }
    (false, differing_fields(x, x_hat))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    /// The estimate equals the ground truth.
    Matched,
    Scored,
    /// No itinerary exists for the estimate.
    EstimateInfeasible { reason: String },
    /// The estimate's itinerary breaks the ground truth's constraints.
    Violates { fields: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub score: f64,
    /// Ground-truth cost of the ground truth's optimum.
    pub oracle_cost: Cents,
    /// Ground-truth cost of the estimate's optimum, when it is feasible.
    pub estimate_cost: Option<Cents>,
    pub outcome: Outcome,
}

fn solve(
    request: &TravelRequest,
    inventory: &Inventory,
    objective: ObjectiveKind,
    params: &SolverParams,
    rules: &Rules,
) -> Result<Result<Itinerary, String>, EvalError> {
    let wrap = |source| EvalError::Solve {
        request_id: request.request_id.clone(),
        source,
    };
    match solve_request(request, inventory, objective, params, rules, None) {
        Ok(s) => match (s.result.status, s.itinerary) {
            (MilpStatus::Optimal, Some(it)) => Ok(Ok(it)),
            (MilpStatus::Infeasible, _) => Ok(Err("no itinerary satisfies the request".into())),
            _ => Err(EvalError::NotOptimal(request.request_id.clone())),
        },
        Err(SolveError::Model(e @ ModelError::EmptySegment { .. })) => Ok(Err(e.to_string())),
        Err(e) => Err(wrap(e)),
    }
}

/// Ratio of the ground-truth optimum's cost to the cost of the estimate's
/// optimum, both measured under the ground truth (money plus its soft-window
/// penalties); 0 when the estimate's itinerary is missing or infeasible.
pub fn quality_ratio(
    x: &TravelRequest,
    x_hat: &TravelRequest,
    inventory: &Inventory,
    objective: ObjectiveKind,
    params: &SolverParams,
    rules: &Rules,
) -> Result<Score, EvalError> {
    let oracle = solve(x, inventory, objective, params, rules)?
        .map_err(|_| EvalError::OracleInfeasible(x.request_id.clone()))?;
    let cost = |it: &Itinerary| itinerary_cost(it, x, inventory, rules).expect("solver returns inventory offers");
    let oracle_cost = cost(&oracle);
    if canonicalize(x) == canonicalize(x_hat) {
        return Ok(Score {
            score: 1.0,
            oracle_cost,
            estimate_cost: Some(oracle_cost),
            outcome: Outcome::Matched,
        });
    }
    let estimate = match solve(x_hat, inventory, objective, params, rules)? {
        Ok(it) => it,
        Err(reason) => {
            return Ok(Score {
                score: 0.0,
                oracle_cost,
                estimate_cost: None,
                outcome: Outcome::EstimateInfeasible { reason },
            })
        }
    };
    let report = check_feasibility(&estimate, x, inventory).expect("solver returns inventory offers");
    if !report.feasible {
        let mut fields: Vec<String> = report.violations.into_iter().map(|v| v.field).collect();
        fields.dedup();
        return Ok(Score {
            score: 0.0,
            oracle_cost,
            estimate_cost: None,
            outcome: Outcome::Violates { fields },
        });
    }
    let estimate_cost = cost(&estimate);
    // Only min_cost makes the oracle optimal for this cost; other objectives
    // can land on a cheaper plan for the estimate.
    let score = if estimate_cost <= 0 {
        1.0
    } else {
        (oracle_cost as f64 / estimate_cost as f64).min(1.0)
    };
    Ok(Score {
        score,
        oracle_cost,
        estimate_cost: Some(estimate_cost),
        outcome: Outcome::Scored,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalParams {
    pub objective: ObjectiveKind,
    pub subsets: usize,
    pub solver: SolverParams,
    pub rules: Rules,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams {
            objective: ObjectiveKind::MinCost,
            subsets: 8,
            solver: SolverParams::default(),
            rules: Rules::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub index: usize,
    pub request_id: String,
    pub exact_match: bool,
    pub differing_fields: Vec<String>,
    pub score: Score,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub samples: usize,
    pub exact: usize,
    pub em_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_cases: usize,
    pub em_accuracy: f64,
    /// Mean and sample standard deviation of the per-subset mean ratio.
    pub ratio_mean: f64,
    pub ratio_std: f64,
    pub subset_sizes: Vec<usize>,
    pub subset_means: Vec<f64>,
    /// Mean ratio over cases that are not an exact match.
    pub non_em_ratio_mean: Option<f64>,
    pub by_airline_constraints: BTreeMap<usize, Bucket>,
    pub by_hotel_constraints: BTreeMap<usize, Bucket>,
    pub by_cities: BTreeMap<usize, Bucket>,
    /// How the error histogram counts.
    pub error_counting: String,
    pub error_histogram: BTreeMap<String, usize>,
    pub cases: Vec<CaseRecord>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// `k` contiguous subsets in input order, sizes differing by at most one.
pub fn partition_sizes(n: usize, k: usize) -> Vec<usize> {
    let k = k.clamp(1, n.max(1));
    (0..k).map(|i| n / k + usize::from(i < n % k)).collect()
}

pub fn evaluate_case(case: &EvalCase, params: &EvalParams) -> Result<(bool, Vec<String>, Score), EvalError> {
    let (matched, diff) = exact_match(&case.request, &case.estimate);
    let score = quality_ratio(
        &case.request,
        &case.estimate,
        &case.inventory,
        params.objective,
        &params.solver,
        &params.rules,
    )?;
    Ok((matched, diff, score))
}

pub fn run_eval(cases: &[EvalCase], params: &EvalParams) -> Result<EvalReport, EvalError> {
    if cases.is_empty() {
        return Err(EvalError::Empty);
    }
    let results: Vec<Result<CaseRecord, (usize, String)>> = cases
        .par_iter()
        .enumerate()
        .map(|(index, case)| {
            evaluate_case(case, params)
                .map(|(exact_match, differing_fields, score)| CaseRecord {
                    index,
                    request_id: case.request.request_id.clone(),
                    exact_match,
                    differing_fields,
                    score,
                })
                .map_err(|e| (index, e.to_string()))
        })
        .collect();
    let mut records = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(f) => failures.push(f),
        }
    }
    if !failures.is_empty() {
        return Err(EvalError::Cases(failures));
    }
    Ok(aggregate(cases, records, params.subsets))
}

fn aggregate(cases: &[EvalCase], records: Vec<CaseRecord>, subsets: usize) -> EvalReport {
    let n = records.len();
    let scores: Vec<f64> = records.iter().map(|r| r.score.score).collect();
    let sizes = partition_sizes(n, subsets);
    let mut subset_means = Vec::new();
    let mut start = 0;
    for s in &sizes {
        subset_means.push(mean(&scores[start..start + s]));
        start += s;
    }
    let non_em: Vec<f64> = records
        .iter()
        .filter(|r| !r.exact_match)
        .map(|r| r.score.score)
        .collect();

    let mut by_air: BTreeMap<usize, Bucket> = BTreeMap::new();
    let mut by_hotel: BTreeMap<usize, Bucket> = BTreeMap::new();
    let mut by_cities: BTreeMap<usize, Bucket> = BTreeMap::new();
    let mut histogram: BTreeMap<String, usize> = BTreeMap::new();
    for (case, r) in cases.iter().zip(&records) {
        let x = &case.request;
        for (table, key) in [
            (&mut by_air, x.airline_constraints.count()),
            (&mut by_hotel, x.hotel_constraints.count()),
            (&mut by_cities, x.city_count()),
        ] {
            let b = table.entry(key).or_default();
            b.samples += 1;
            b.exact += usize::from(r.exact_match);
        }
        for f in &r.differing_fields {
            *histogram.entry(f.clone()).or_default() += 1;
        }
    }
    for table in [&mut by_air, &mut by_hotel, &mut by_cities] {
        for b in table.values_mut() {
            b.em_accuracy = b.exact as f64 / b.samples as f64;
        }
    }

    EvalReport {
        n_cases: n,
        em_accuracy: records.iter().filter(|r| r.exact_match).count() as f64 / n as f64,
        ratio_mean: mean(&subset_means),
        ratio_std: sample_std(&subset_means),
        subset_sizes: sizes,
        subset_means,
        non_em_ratio_mean: (!non_em.is_empty()).then(|| mean(&non_em)),
        by_airline_constraints: by_air,
        by_hotel_constraints: by_hotel,
        by_cities,
        error_counting: "one count per differing field path of each non-matching case".into(),
        error_histogram: histogram,
        cases: records,
    }
}

fn table_block(out: &mut String, title: &str, table: &BTreeMap<usize, Bucket>) {
    let _ = write!(out, "{title:<24}");
    for k in table.keys() {
        let _ = write!(out, "{k:>8}");
    }
    let _ = write!(out, "\n{:<24}", "  EM accuracy");
    for b in table.values() {
        let _ = write!(out, "{:>8.3}", b.em_accuracy);
    }
    let _ = write!(out, "\n{:<24}", "  samples");
    for b in table.values() {
        let _ = write!(out, "{:>8}", b.samples);
    }
    out.push('\n');
}

/// Plain-text rendering: headline numbers, the three breakdowns and the
/// error histogram.
pub fn render_report(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "cases                   {}", report.n_cases);
    let _ = writeln!(out, "exact match             {:.3}", report.em_accuracy);
    let _ = writeln!(
        out,
        "quality ratio           {:.3} ± {:.3} over {} subsets",
        report.ratio_mean,
        report.ratio_std,
        report.subset_sizes.len()
    );
    if let Some(r) = report.non_em_ratio_mean {
        let _ = writeln!(out, "ratio when not exact    {r:.3}");
    }
    out.push('\n');
    table_block(&mut out, "# hotel constraints", &report.by_hotel_constraints);
    table_block(&mut out, "# airline constraints", &report.by_airline_constraints);
    table_block(&mut out, "# cities", &report.by_cities);
    if !report.error_histogram.is_empty() {
        let _ = writeln!(out, "\nerrors ({})", report.error_counting);
        let mut rows: Vec<(&String, &usize)> = report.error_histogram.iter().collect();
        rows.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
        for (field, count) in rows {
            let _ = writeln!(out, "  {field:<40}{count:>6}");
        }
    }
    out
}

pub fn read_cases(path: &Path) -> Result<Vec<EvalCase>, EvalError> {
    let io = |e: std::io::Error| EvalError::Io(format!("{}: {e}", path.display()));
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| EvalError::Json(format!("line {}: {e}", n + 1)))?);
    }
    Ok(out)
}
