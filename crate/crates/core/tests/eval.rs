mod common;

use common::{brute_force, demo_inventory, demo_request};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ttg_core::eval::*;
use ttg_core::generator::{derive_seed, perturb_request, sample_pair, GeneratorConfig, PerturbationSpec};
use ttg_core::model::profile_solve;
use ttg_core::schema::{check_feasibility, ObjectiveKind, TravelRequest};
use ttg_core::solver::SolverParams;
use ttg_core::Rules;

fn ratio(x: &TravelRequest, x_hat: &TravelRequest, inv: &ttg_core::Inventory) -> Score {
    quality_ratio(x, x_hat, inv, ObjectiveKind::MinCost, &SolverParams::default(), &Rules::default()).unwrap()
}

#[test]
fn exact_match_basics() {
    let x = demo_request();
    assert_eq!(exact_match(&x, &x.clone()), (true, vec![]));
    let mut y = x.clone();
    y.airline_constraints.no_mixed_cabin = None;
    assert_eq!(exact_match(&x, &y), (false, vec!["airline_constraints.no_mixed_cabin".to_string()]));
    assert_eq!(exact_match(&y, &x).0, exact_match(&x, &y).0);
    // Field order and set order do not matter to the canonical form.
    let text = serde_json::to_string(&x).unwrap();
    let reparsed: TravelRequest = serde_json::from_str(&text).unwrap();
    assert!(exact_match(&x, &reparsed).0);
}

#[test]
fn exact_match_reports_recorded_changes() {
    let cfg = GeneratorConfig::default();
    let spec = PerturbationSpec::per_field(0.3, 0.3);
    for i in 0..100 {
        let (pair, _) = sample_pair(&cfg, i).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(i);
        let (x_hat, changes) = perturb_request(&mut rng, &pair.request, &spec).unwrap();
        let (matched, mut diff) = exact_match(&pair.request, &x_hat);
        let mut fields: Vec<String> = changes.into_iter().map(|c| c.field).collect();
        diff.sort();
        fields.sort();
        assert_eq!(matched, fields.is_empty());
        assert_eq!(diff, fields);
    }
}

#[test]
fn identity_scores_one() {
    let (x, inv) = (demo_request(), demo_inventory());
    let s = ratio(&x, &x, &inv);
    assert_eq!(s.score, 1.0);
    assert_eq!(s.outcome, Outcome::Matched);
    assert_eq!(s.oracle_cost, 28900 + 17900 + 26900 + 2 * 18900 + 22900);
}

#[test]
fn dropped_constraint_that_gets_violated_scores_zero() {
    let (x, inv) = (demo_request(), demo_inventory());
    let mut x_hat = x.clone();
    x_hat.airline_constraints.non_stop = None;
    let s = ratio(&x, &x_hat, &inv);
    assert_eq!(s.score, 0.0);
    match s.outcome {
        Outcome::Violates { fields } => assert!(fields.contains(&"airline_constraints.non_stop".to_string())),
        other => panic!("expected a violation, got {other:?}"),
    }

    // A dropped constraint the estimate's optimum happens to satisfy costs nothing.
    let mut x_hat = x.clone();
    x_hat.budget.hotel_total_budget = None;
    let s = ratio(&x, &x_hat, &inv);
    assert_eq!((s.score, s.outcome), (1.0, Outcome::Scored));
}

#[test]
fn infeasible_estimate_scores_zero() {
    let (x, inv) = (demo_request(), demo_inventory());
    let mut x_hat = x.clone();
    x_hat.budget.flight_total_budget = Some(100);
    let s = ratio(&x, &x_hat, &inv);
    assert_eq!(s.score, 0.0);
    assert!(matches!(s.outcome, Outcome::EstimateInfeasible { .. }));
    // An estimate routed through a city with no flights.
    let mut x_hat = x.clone();
    x_hat.segments[1].destination = "SEA".into();
    x_hat.segments[2].origin = "SEA".into();
    assert_eq!(ratio(&x, &x_hat, &inv).score, 0.0);
}

#[test]
fn infeasible_ground_truth_is_an_error() {
    let (mut x, inv) = (demo_request(), demo_inventory());
    x.budget.flight_total_budget = Some(100);
    let err = quality_ratio(&x, &x, &inv, ObjectiveKind::MinCost, &SolverParams::default(), &Rules::default());
    assert!(matches!(err, Err(EvalError::OracleInfeasible(_))));
}

#[test]
fn tightened_budget_ratio_matches_brute_force() {
    let cfg = GeneratorConfig {
        rng_seed: 8,
        p_three_cities: 0.0,
        flights_per_segment: [3, 6],
        hotels_per_city: [2, 4],
        nights_per_stop: [1, 3],
        ..GeneratorConfig::default()
    };
    let mut partial = 0;
    for i in 0..120 {
        let (pair, _) = sample_pair(&cfg, i).unwrap();
        let x = &pair.request;
        let best = profile_solve(x, &pair.inventory, ObjectiveKind::MinCost, &SolverParams::default())
            .unwrap()
            .itinerary
            .unwrap();
        let mut x_hat = x.clone();
        x_hat.budget.flight_total_budget = Some(best.flight_cost - 1);
        let s = ratio(x, &x_hat, &pair.inventory);
        // A plan within the tighter budget also satisfies x, so the ratio is
        // the ratio of the two brute-force optima.
        let expected = match (
            brute_force(x, &pair.inventory, ObjectiveKind::MinCost),
            brute_force(&x_hat, &pair.inventory, ObjectiveKind::MinCost),
        ) {
            (Some(a), Some(b)) => a as f64 / b as f64,
            (Some(_), None) => 0.0,
            (None, _) => unreachable!("planted instances are feasible"),
        };
        assert_eq!(s.score, expected, "{}", x.request_id);
        if s.score > 0.0 && s.score < 1.0 {
            partial += 1;
        }
    }
    assert!(partial > 0, "sweep should include partially scored cases");
}

fn cases(n: u64, spec: Option<&PerturbationSpec>) -> Vec<EvalCase> {
    let cfg = GeneratorConfig::default();
    (0..n)
        .map(|i| {
            let (pair, _) = sample_pair(&cfg, i).unwrap();
            let (estimate, changes) = match spec {
                Some(spec) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(99, i));
                    let (e, c) = perturb_request(&mut rng, &pair.request, spec).unwrap();
                    (e, Some(c))
                }
                None => (pair.request.clone(), None),
            };
            EvalCase {
                request: pair.request,
                estimate,
                inventory: pair.inventory,
                changes,
            }
        })
        .collect()
}

#[test]
fn identity_dataset_report() {
    let report = run_eval(&cases(16, None), &EvalParams::default()).unwrap();
    assert_eq!(report.n_cases, 16);
    assert_eq!(report.em_accuracy, 1.0);
    assert_eq!(report.ratio_mean, 1.0);
    assert_eq!(report.ratio_std, 0.0);
    assert_eq!(report.subset_sizes, vec![2; 8]);
    assert_eq!(report.non_em_ratio_mean, None);
    assert!(report.error_histogram.is_empty());
    for table in [&report.by_airline_constraints, &report.by_hotel_constraints, &report.by_cities] {
        assert_eq!(table.values().map(|b| b.samples).sum::<usize>(), 16);
    }
    let text = render_report(&report);
    assert!(text.contains("exact match             1.000"));
    assert!(text.contains("# hotel constraints"));
}

#[test]
fn partition_arithmetic() {
    assert_eq!(partition_sizes(16, 8), vec![2; 8]);
    assert_eq!(partition_sizes(10, 8), vec![2, 2, 1, 1, 1, 1, 1, 1]);
    assert_eq!(partition_sizes(3, 8), vec![1, 1, 1]);
    assert!(matches!(run_eval(&[], &EvalParams::default()), Err(EvalError::Empty)));
}

#[test]
fn perturbed_dataset_report() {
    let p = 0.1;
    let spec = PerturbationSpec::per_field(p, 0.0);
    let data = cases(240, Some(&spec));
    let report = run_eval(&data, &EvalParams::default()).unwrap();

    // Each present field survives independently with probability 1 - p.
    let probs: Vec<f64> = data
        .iter()
        .map(|c| {
            let r = &c.request;
            let present = r.airline_constraints.count() + r.hotel_constraints.count() + r.budget.present_fields().len();
            (1.0 - p).powi(present as i32)
        })
        .collect();
    let expected: f64 = probs.iter().sum();
    let sigma = probs.iter().map(|q| q * (1.0 - q)).sum::<f64>().sqrt();
    let observed = report.em_accuracy * data.len() as f64;
    assert!((observed - expected).abs() <= 3.0 * sigma, "EM count {observed}, expected {expected:.1} ± {:.1}", 3.0 * sigma);

    let mut fields_total = 0;
    for (case, rec) in data.iter().zip(&report.cases) {
        let s = &rec.score;
        assert!((0.0..=1.0).contains(&s.score));
        fields_total += rec.differing_fields.len();
        if rec.exact_match {
            assert_eq!(s.score, 1.0);
            continue;
        }
        // Re-derive the zero cases independently.
        let solved = profile_solve(&case.estimate, &case.inventory, ObjectiveKind::MinCost, &SolverParams::default());
        let violates = match solved.ok().and_then(|s| s.itinerary) {
            Some(it) => !check_feasibility(&it, &case.request, &case.inventory).unwrap().feasible,
            None => true,
        };
        assert_eq!(s.score == 0.0, violates, "{}", rec.request_id);
    }
    assert_eq!(report.error_histogram.values().sum::<usize>(), fields_total);
    assert_eq!(report.subset_sizes, vec![30; 8]);
    assert!(report.ratio_std >= 0.0);
    assert!(report.non_em_ratio_mean.is_some());
}

#[test]
fn case_file_round_trip() {
    let data = cases(3, Some(&PerturbationSpec::per_field(0.5, 0.5)));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cases.jsonl");
    let text: String = data.iter().map(|c| serde_json::to_string(c).unwrap() + "\n").collect();
    std::fs::write(&path, text).unwrap();
    assert_eq!(read_cases(&path).unwrap(), data);
}
