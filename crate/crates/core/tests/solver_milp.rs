use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ttg_core::solver::{
    branch_and_bound, Branching, Hooks, MilpStatus, NodeOrder, Problem, Sense, SolverParams, VarKind,
};

/// Random pure-binary program with integer data.
fn random_bip(seed: u64, n: usize, m: usize) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = Problem::default();
    for j in 0..n {
        p.add_var(format!("b{j}"), VarKind::Binary, 0.0, 1.0, rng.random_range(-20..=20) as f64);
    }
    for i in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.random_bool(0.5) {
                coeffs.push((j, rng.random_range(-6..=9) as f64));
            }
        }
        let total: f64 = coeffs.iter().map(|c| c.1.abs()).sum();
        let sense = match rng.random_range(0..5) {
            0 => Sense::Ge,
            1 => Sense::Eq,
            _ => Sense::Le,
        };
        let rhs = (rng.random_range(-0.1..0.7) * total).round();
        p.add_row(format!("r{i}"), coeffs, sense, rhs);
    }
    p
}

fn brute_force(p: &Problem) -> Option<f64> {
    let n = p.num_vars();
    let mut best: Option<f64> = None;
    let mut x = vec![0.0; n];
    for mask in 0u32..(1 << n) {
        for (j, v) in x.iter_mut().enumerate() {
            *v = f64::from((mask >> j) & 1);
        }
        if p.rows.iter().all(|r| r.violation(&x) <= 1e-9) {
            let obj = p.objective_value(&x);
            best = Some(best.map_or(obj, |b: f64| b.min(obj)));
        }
    }
    best
}

fn solve(p: &Problem, params: &SolverParams) -> ttg_core::solver::MilpResult {
    branch_and_bound(p, params, Hooks::default()).unwrap()
}

#[test]
fn picks_cheaper_of_two() {
    let mut p = Problem::default();
    let a = p.add_var("f_0", VarKind::Binary, 0.0, 1.0, 10000.0);
    let b = p.add_var("f_1", VarKind::Binary, 0.0, 1.0, 20000.0);
    p.add_row("seg0", vec![(a, 1.0), (b, 1.0)], Sense::Eq, 1.0);
    let r = solve(&p, &SolverParams::default());
    assert_eq!(r.status, MilpStatus::Optimal);
    assert_eq!(r.objective, Some(10000.0));
    assert_eq!(r.values.unwrap(), vec![1.0, 0.0]);
}

#[test]
fn infeasible_binary_program() {
    let mut p = Problem::default();
    let a = p.add_var("a", VarKind::Binary, 0.0, 1.0, 1.0);
    let b = p.add_var("b", VarKind::Binary, 0.0, 1.0, 1.0);
    // a + b = 1 and 2a + 2b = 1 has LP solutions but no integral one.
    p.add_row("one", vec![(a, 1.0), (b, 1.0)], Sense::Eq, 1.0);
    p.add_row("half", vec![(a, 2.0), (b, 2.0)], Sense::Le, 1.0);
    for presolve in [true, false] {
        let params = SolverParams {
            presolve,
            ..SolverParams::default()
        };
        assert_eq!(solve(&p, &params).status, MilpStatus::Infeasible);
    }
}

#[test]
fn fractional_root_needs_branching() {
    // max 5a + 4b + 3c s.t. 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8
    let mut p = Problem::default();
    let v: Vec<usize> = [-5.0, -4.0, -3.0]
        .iter()
        .enumerate()
        .map(|(j, c)| p.add_var(format!("x{j}"), VarKind::Integer, 0.0, 5.0, *c))
        .collect();
    p.add_row("a", vec![(v[0], 2.0), (v[1], 3.0), (v[2], 1.0)], Sense::Le, 5.0);
    p.add_row("b", vec![(v[0], 4.0), (v[1], 1.0), (v[2], 2.0)], Sense::Le, 11.0);
    p.add_row("c", vec![(v[0], 3.0), (v[1], 4.0), (v[2], 2.0)], Sense::Le, 8.0);
    let r = solve(&p, &SolverParams::default());
    assert_eq!(r.status, MilpStatus::Optimal);
    // Enumerate the small integer box directly.
    let mut best = f64::INFINITY;
    for a in 0..=5 {
        for b in 0..=5 {
            for c in 0..=5 {
                let x = [a as f64, b as f64, c as f64];
                if p.rows.iter().all(|row| row.violation(&x) == 0.0) {
                    best = best.min(p.objective_value(&x));
                }
            }
        }
    }
    assert_eq!(r.objective, Some(best));
}

#[test]
fn random_binary_programs_match_enumeration() {
    let mut feasible = 0;
    for seed in 0..120 {
        let p = random_bip(seed, 12, 6);
        let expected = brute_force(&p);
        let r = solve(&p, &SolverParams::default());
        match expected {
            None => assert_eq!(r.status, MilpStatus::Infeasible, "seed {seed}"),
            Some(obj) => {
                feasible += 1;
                assert_eq!(r.status, MilpStatus::Optimal, "seed {seed}");
                assert_eq!(r.objective, Some(obj), "seed {seed}");
                assert!(r.bound <= obj + 1e-9);
                let x = r.values.unwrap();
                assert!(p.audit(&x, 1e-9, 1e-9).is_empty(), "seed {seed}");
            }
        }
    }
    assert!(feasible > 30, "only {feasible} feasible instances");
}

#[test]
fn search_variants_agree() {
    for seed in 200..260 {
        let p = random_bip(seed, 11, 5);
        let reference = solve(&p, &SolverParams::default()).objective;
        for (branching, node_order, presolve) in [
            (Branching::PseudoCost, NodeOrder::BestFirst, true),
            (Branching::MostFractional, NodeOrder::DepthFirst, true),
            (Branching::PseudoCost, NodeOrder::DepthFirst, false),
            (Branching::MostFractional, NodeOrder::BestFirst, false),
        ] {
            let params = SolverParams {
                branching,
                node_order,
                presolve,
                ..SolverParams::default()
            };
            assert_eq!(solve(&p, &params).objective, reference, "seed {seed} {params:?}");
        }
    }
}

#[test]
fn repeated_runs_are_identical() {
    let p = random_bip(99, 14, 7);
    let a = solve(&p, &SolverParams::default());
    let b = solve(&p, &SolverParams::default());
    assert_eq!(a.nodes, b.nodes);
    assert_eq!(a.lp_iterations, b.lp_iterations);
    assert_eq!(a.values, b.values);
}

#[test]
fn heuristic_incumbent_is_audited() {
    let p = random_bip(5, 10, 4);
    let bogus = |_: &[f64]| Some(vec![1.0; 10]);
    let r = branch_and_bound(
        &p,
        &SolverParams::default(),
        Hooks {
            heuristic: Some(&bogus),
            trace: None,
        },
    )
    .unwrap();
    assert_eq!(r.objective, brute_force(&p));
}

#[test]
fn trace_lists_nodes() {
    let p = random_bip(3, 10, 5);
    let mut log = Vec::new();
    let r = branch_and_bound(
        &p,
        &SolverParams::default(),
        Hooks {
            heuristic: None,
            trace: Some(&mut log),
        },
    )
    .unwrap();
    let text = String::from_utf8(log).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("node ")).count(), r.nodes);
}

#[test]
fn timing_adds_up() {
    let p = random_bip(11, 12, 6);
    let r = solve(&p, &SolverParams::default());
    assert_eq!(r.timing.total_ms, r.timing.load_ms + r.timing.solve_ms);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bnb_matches_enumeration(seed in any::<u64>(), n in 1usize..10, m in 1usize..6) {
        let p = random_bip(seed, n, m);
        let r = solve(&p, &SolverParams::default());
        prop_assert_eq!(r.objective, brute_force(&p));
    }

    #[test]
    fn presolve_preserves_optimum(seed in any::<u64>(), n in 1usize..10, m in 1usize..6) {
        let p = random_bip(seed, n, m);
        let with = solve(&p, &SolverParams::default());
        let without = solve(&p, &SolverParams { presolve: false, ..SolverParams::default() });
        prop_assert_eq!(with.objective, without.objective);
    }
}

