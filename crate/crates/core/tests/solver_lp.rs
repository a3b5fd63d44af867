use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ttg_core::solver::{solve_lp, LpStatus, Problem, Sense, SolverParams, VarKind};

/// Textbook two-phase dense tableau simplex with Bland's rule, used as an
/// independent oracle. Solves min c.x s.t. rows (a, sense, b), 0 <= x <= u.
fn tableau_oracle(n: usize, rows: &[(Vec<f64>, Sense, f64)], upper: &[f64], c: &[f64]) -> Option<f64> {
    // Upper bounds become explicit <= rows.
    let mut all: Vec<(Vec<f64>, Sense, f64)> = rows.to_vec();
    for j in 0..n {
        let mut a = vec![0.0; n];
        a[j] = 1.0;
        all.push((a, Sense::Le, upper[j]));
    }
    // Normalize to b >= 0.
    for r in all.iter_mut() {
        if r.2 < 0.0 {
            r.0.iter_mut().for_each(|v| *v = -*v);
            r.2 = -r.2;
            r.1 = match r.1 {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }
    let m = all.len();
    let n_slack = all.iter().filter(|r| r.1 != Sense::Eq).count();
    let n_art = all.iter().filter(|r| r.1 != Sense::Le).count();
    let width = n + n_slack + n_art;
    let mut t = vec![vec![0.0; width + 1]; m];
    let mut basis = vec![0usize; m];
    let (mut s_col, mut a_col) = (n, n + n_slack);
    for (i, (a, sense, b)) in all.iter().enumerate() {
        t[i][..n].copy_from_slice(a);
        t[i][width] = *b;
        match sense {
            Sense::Le => {
                t[i][s_col] = 1.0;
                basis[i] = s_col;
                s_col += 1;
            }
            Sense::Ge => {
                t[i][s_col] = -1.0;
                s_col += 1;
                t[i][a_col] = 1.0;
                basis[i] = a_col;
                a_col += 1;
            }
            Sense::Eq => {
                t[i][a_col] = 1.0;
                basis[i] = a_col;
                a_col += 1;
            }
        }
    }

    fn run(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], allowed: usize) -> bool {
        let width = cost.len();
        loop {
            let mut entering = None;
            for j in 0..allowed {
                if basis.contains(&j) {
                    continue;
                }
                let d = cost[j] - basis.iter().enumerate().map(|(i, &b)| cost[b] * t[i][j]).sum::<f64>();
                if d < -1e-9 {
                    entering = Some(j);
                    break;
                }
            }
            let Some(q) = entering else { return true };
            let mut leave = None;
            let mut best = f64::INFINITY;
            for i in 0..t.len() {
                if t[i][q] > 1e-9 {
                    let r = t[i][width] / t[i][q];
                    if r < best - 1e-12 || (r <= best + 1e-12 && leave.is_some_and(|l: usize| basis[i] < basis[l])) {
                        best = r;
                        leave = Some(i);
                    }
                }
            }
            let Some(p) = leave else { return false };
            let piv = t[p][q];
            t[p].iter_mut().for_each(|v| *v /= piv);
            for i in 0..t.len() {
                if i != p && t[i][q] != 0.0 {
                    let f = t[i][q];
                    let row_p = t[p].clone();
                    t[i].iter_mut().zip(&row_p).for_each(|(v, pv)| *v -= f * pv);
                }
            }
            basis[p] = q;
        }
    }

    let mut phase1 = vec![0.0; width];
    phase1[n + n_slack..].iter_mut().for_each(|v| *v = 1.0);
    run(&mut t, &mut basis, &phase1, width);
    let infeas: f64 = basis.iter().enumerate().map(|(i, &b)| phase1[b] * t[i][width]).sum();
    if infeas > 1e-7 {
        return None;
    }
    // Drive zero-level artificials out of the basis; rows where that is
    // impossible are redundant and dropped.
    let mut i = 0;
    while i < t.len() {
        if basis[i] >= n + n_slack {
            match (0..n + n_slack).find(|&j| t[i][j].abs() > 1e-9) {
                Some(q) => {
                    let piv = t[i][q];
                    t[i].iter_mut().for_each(|v| *v /= piv);
                    let row_p = t[i].clone();
                    for (k, row) in t.iter_mut().enumerate() {
                        if k != i && row[q] != 0.0 {
                            let f = row[q];
                            row.iter_mut().zip(&row_p).for_each(|(v, pv)| *v -= f * pv);
                        }
                    }
                    basis[i] = q;
                }
                None => {
                    t.remove(i);
                    basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }
    let mut phase2 = vec![0.0; width];
    phase2[..n].copy_from_slice(c);
    let bounded = run(&mut t, &mut basis, &phase2, n + n_slack);
    assert!(bounded, "oracle instances are bounded by construction");
    Some(basis.iter().enumerate().map(|(i, &b)| phase2[b] * t[i][width]).sum())
}

fn random_lp(seed: u64, m: usize, n: usize) -> (Problem, Vec<(Vec<f64>, Sense, f64)>, Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let upper: Vec<f64> = (0..n).map(|_| rng.random_range(1..=10) as f64).collect();
    let x0: Vec<f64> = upper.iter().map(|u| rng.random_range(0.0..*u)).collect();
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(-10..=10) as f64).collect();
    let mut rows = Vec::new();
    for _ in 0..m {
        let a: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.4) { rng.random_range(-5..=5) as f64 } else { 0.0 })
            .collect();
        let act: f64 = a.iter().zip(&x0).map(|(a, x)| a * x).sum();
        let (sense, b) = match rng.random_range(0..3) {
            0 => (Sense::Le, (act + rng.random_range(0.0..3.0)).round()),
            1 => (Sense::Ge, (act - rng.random_range(0.0..3.0)).round()),
            // Equalities may make some instances infeasible; both verdicts are compared.
            _ => (Sense::Eq, act.round()),
        };
        rows.push((a, sense, b));
    }
    let mut p = Problem::default();
    for j in 0..n {
        p.add_var(format!("x{j}"), VarKind::Continuous, 0.0, upper[j], c[j]);
    }
    for (i, (a, sense, b)) in rows.iter().enumerate() {
        let coeffs = a.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect();
        p.add_row(format!("r{i}"), coeffs, *sense, *b);
    }
    (p, rows, upper, c)
}

#[test]
fn one_variable_lp() {
    let mut p = Problem::default();
    let x = p.add_var("x", VarKind::Continuous, 0.0, 10.0, 1.0);
    p.add_row("min3", vec![(x, 1.0)], Sense::Ge, 3.0);
    let sol = solve_lp(&p, &SolverParams::default()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.values[0] - 3.0).abs() < 1e-9);
    assert!((sol.objective - 3.0).abs() < 1e-9);
}

#[test]
fn contradictory_rows_are_infeasible() {
    let mut p = Problem::default();
    let x = p.add_var("x", VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY, 0.0);
    p.add_row("le", vec![(x, 1.0)], Sense::Le, 1.0);
    p.add_row("ge", vec![(x, 1.0)], Sense::Ge, 2.0);
    let sol = solve_lp(&p, &SolverParams::default()).unwrap();
    assert_eq!(sol.status, LpStatus::Infeasible);
}

#[test]
fn unbounded_ray_detected() {
    let mut p = Problem::default();
    let x = p.add_var("x", VarKind::Continuous, 0.0, f64::INFINITY, -1.0);
    let y = p.add_var("y", VarKind::Continuous, 0.0, f64::INFINITY, 0.0);
    p.add_row("r", vec![(x, 1.0), (y, -1.0)], Sense::Le, 2.0);
    let sol = solve_lp(&p, &SolverParams::default()).unwrap();
    assert_eq!(sol.status, LpStatus::Unbounded);
}

#[test]
fn free_variable_and_equality() {
    // min x + y, x - y = 4, y free, x in [0, 10] -> x = 0, y = -4
    let mut p = Problem::default();
    let x = p.add_var("x", VarKind::Continuous, 0.0, 10.0, 1.0);
    let y = p.add_var("y", VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY, 1.0);
    p.add_row("eq", vec![(x, 1.0), (y, -1.0)], Sense::Eq, 4.0);
    let sol = solve_lp(&p, &SolverParams::default()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.objective + 4.0).abs() < 1e-9, "{sol:?}");
    assert!((sol.values[1] + 4.0).abs() < 1e-9);
}

#[test]
fn random_lps_match_tableau_oracle() {
    let params = SolverParams::default();
    let mut optimal = 0;
    for seed in 0..150 {
        let (p, rows, upper, c) = random_lp(seed, 20, 30);
        let sol = solve_lp(&p, &params).unwrap();
        let oracle = tableau_oracle(30, &rows, &upper, &c);
        match oracle {
            None => assert_eq!(sol.status, LpStatus::Infeasible, "seed {seed}"),
            Some(obj) => {
                optimal += 1;
                assert_eq!(sol.status, LpStatus::Optimal, "seed {seed}");
                let rel = (sol.objective - obj).abs() / (1.0 + obj.abs());
                assert!(rel < 1e-6, "seed {seed}: {} vs oracle {obj}", sol.objective);
                assert!(p.audit(&sol.values, 1e-7, 1.0).is_empty(), "seed {seed}");
            }
        }
    }
    assert!(optimal > 50, "too few feasible instances ({optimal})");
}

#[test]
fn optimal_solution_satisfies_reduced_cost_conditions() {
    let (p, ..) = random_lp(7, 20, 30);
    let sol = solve_lp(&p, &SolverParams::default()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    for (j, var) in p.vars.iter().enumerate() {
        let d = sol.reduced_costs[j];
        let x = sol.values[j];
        if d > 1e-6 {
            assert!((x - var.lb).abs() < 1e-7, "x{j} = {x} with d = {d}");
        } else if d < -1e-6 {
            assert!((x - var.ub).abs() < 1e-7, "x{j} = {x} with d = {d}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn small_lps_match_oracle(seed in any::<u64>(), m in 1usize..8, n in 1usize..10) {
        let (p, rows, upper, c) = random_lp(seed, m, n);
        let sol = solve_lp(&p, &SolverParams::default()).unwrap();
        match tableau_oracle(n, &rows, &upper, &c) {
            None => prop_assert_eq!(sol.status, LpStatus::Infeasible),
            Some(obj) => {
                prop_assert_eq!(sol.status, LpStatus::Optimal);
                prop_assert!((sol.objective - obj).abs() <= 1e-6 * (1.0 + obj.abs()));
            }
        }
    }
}
