//! Bounded-variable primal simplex.
//!
//! Every row `lo <= a.x <= hi` gets a logical variable `s = -a.x` with bounds
//! `[-hi, -lo]`, so the constraint matrix is `[A | I]` with right-hand side
//! zero and the all-logical basis is the identity. The basis inverse is kept
//! in product form (a list of eta columns) and rebuilt from scratch every
//! `REFACTOR_EVERY` pivots. Phase one minimizes the sum of bound violations
//! of the basic variables; phase two the true objective. Dantzig pricing is
//! replaced by Bland's rule after a streak of degenerate pivots.

use serde::{Deserialize, Serialize};

use super::params::SolverParams;
use super::problem::{Problem, Sense};
use super::SolverError;

const NONE: usize = usize::MAX;
const PIVOT_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-14;
const REFACTOR_EVERY: usize = 96;
const DEGENERATE_STREAK: usize = 40;
const ETA_GROWTH_LIMIT: f64 = 1e11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of an LP relaxation solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Row duals `y`, with reduced costs `c - yA`.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
}

/// Power of two nearest to `1 / max_abs`, so scaling is exact in binary.
fn pow2_scale(max_abs: f64) -> f64 {
    if max_abs <= 0.0 || !max_abs.is_finite() {
        1.0
    } else {
        (-max_abs.log2().round()).exp2()
    }
}

/// Column-major LP with ranged rows, row-equilibrated and cost-scaled.
#[derive(Debug, Clone)]
pub(crate) struct LpData {
    pub m: usize,
    pub n: usize,
    pub cols: Vec<Vec<(usize, f64)>>,
    pub row_lo: Vec<f64>,
    pub row_hi: Vec<f64>,
    pub cost: Vec<f64>,
    pub row_scale: Vec<f64>,
    pub cost_scale: f64,
}

impl LpData {
    /// `rows` are `(coeffs, lo, hi)` over `n` columns; `cost` is unscaled.
    pub fn new(n: usize, rows: &[(Vec<(usize, f64)>, f64, f64)], cost: &[f64]) -> LpData {
        let m = rows.len();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut row_lo = Vec::with_capacity(m);
        let mut row_hi = Vec::with_capacity(m);
        let mut row_scale = Vec::with_capacity(m);
        for (i, (coeffs, lo, hi)) in rows.iter().enumerate() {
            let max_abs = coeffs.iter().fold(0.0f64, |acc, &(_, a)| acc.max(a.abs()));
            let s = pow2_scale(max_abs);
            for &(j, a) in coeffs {
                if a != 0.0 {
                    cols[j].push((i, a * s));
                }
            }
            row_lo.push(lo * s);
            row_hi.push(hi * s);
            row_scale.push(s);
        }
        let max_c = cost.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
        let cost_scale = pow2_scale(max_c);
        LpData {
            m,
            n,
            cols,
            row_lo,
            row_hi,
            cost: cost.iter().map(|c| c * cost_scale).collect(),
            row_scale,
            cost_scale,
        }
    }

    pub fn from_problem(p: &Problem) -> LpData {
        let rows: Vec<_> = p
            .rows
            .iter()
            .map(|r| {
                let (lo, hi) = match r.sense {
                    Sense::Le => (f64::NEG_INFINITY, r.rhs),
                    Sense::Ge => (r.rhs, f64::INFINITY),
                    Sense::Eq => (r.rhs, r.rhs),
                };
                (r.coeffs.clone(), lo, hi)
            })
            .collect();
        LpData::new(p.num_vars(), &rows, &p.objective)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum VarState {
    Basic,
    Lower,
    Upper,
    Free,
}

/// A simplex basis: the variable at each basis position plus the state of
/// every structural and logical variable. Reusable as a warm start.
#[derive(Debug, Clone)]
pub(crate) struct Basis {
    pub head: Vec<usize>,
    pub state: Vec<VarState>,
}

#[derive(Debug, Clone)]
pub(crate) struct LpOutcome {
    pub status: LpStatus,
    /// Structural values.
    pub x: Vec<f64>,
    /// Unscaled objective `c.x`.
    pub objective: f64,
    pub iterations: usize,
    pub basis: Basis,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
}

struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

struct Engine<'a> {
    data: &'a LpData,
    m: usize,
    n: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    head: Vec<usize>,
    etas: Vec<Eta>,
    feas_tol: f64,
    opt_tol: f64,
    iterations: usize,
}

impl<'a> Engine<'a> {
    fn cost(&self, k: usize) -> f64 {
        if k < self.n {
            self.data.cost[k]
        } else {
            0.0
        }
    }

    fn tol(&self, bound: f64) -> f64 {
        self.feas_tol * (1.0 + bound.abs())
    }

    fn scatter(&self, k: usize, out: &mut [f64]) {
        out.fill(0.0);
        if k < self.n {
            for &(i, a) in &self.data.cols[k] {
                out[i] = a;
            }
        } else {
            out[k - self.n] = 1.0;
        }
    }

    fn dot_col(&self, k: usize, y: &[f64]) -> f64 {
        if k < self.n {
            self.data.cols[k].iter().map(|&(i, a)| y[i] * a).sum()
        } else {
            y[k - self.n]
        }
    }

    fn ftran(&self, v: &mut [f64]) {
        for eta in &self.etas {
            let vp = v[eta.pos];
            if vp != 0.0 {
                v[eta.pos] = vp * eta.pivot;
                for &(i, e) in &eta.entries {
                    v[i] += e * vp;
                }
            }
        }
    }

    fn btran(&self, y: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut s = y[eta.pos] * eta.pivot;
            for &(i, e) in &eta.entries {
                s += y[i] * e;
            }
            y[eta.pos] = s;
        }
    }

    fn push_eta(&mut self, pos: usize, alpha: &[f64]) -> Result<(), SolverError> {
        let ap = alpha[pos];
        let entries: Vec<(usize, f64)> = alpha
            .iter()
            .enumerate()
            .filter(|&(i, a)| i != pos && a.abs() > DROP_TOL)
            .map(|(i, a)| (i, -a / ap))
            .collect();
        let growth = entries.iter().fold((1.0 / ap).abs(), |acc, &(_, e)| acc.max(e.abs()));
        if !growth.is_finite() || growth > ETA_GROWTH_LIMIT {
            return Err(SolverError::NumericalBreakdown(format!(
                "basis update growth {growth:e} exceeds {ETA_GROWTH_LIMIT:e}"
            )));
        }
        self.etas.push(Eta {
            pos,
            pivot: 1.0 / ap,
            entries,
        });
        Ok(())
    }

    fn park(&mut self, k: usize) {
        let (lo, hi, x) = (self.lo[k], self.hi[k], self.x[k]);
        let (state, value) = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => {
                if (x - lo).abs() <= (hi - x).abs() {
                    (VarState::Lower, lo)
                } else {
                    (VarState::Upper, hi)
                }
            }
            (true, false) => (VarState::Lower, lo),
            (false, true) => (VarState::Upper, hi),
            (false, false) => (VarState::Free, 0.0),
        };
        self.state[k] = state;
        self.x[k] = value;
    }

    /// Snap nonbasic variables onto their (possibly changed) bounds.
    fn sync_nonbasic(&mut self) {
        for k in 0..self.n + self.m {
            let s = self.state[k];
            if s == VarState::Basic {
                continue;
            }
            let (lo, hi) = (self.lo[k], self.hi[k]);
            let (state, value) = match s {
                VarState::Lower if lo.is_finite() => (VarState::Lower, lo),
                VarState::Upper if hi.is_finite() => (VarState::Upper, hi),
                _ if lo.is_finite() => (VarState::Lower, lo),
                _ if hi.is_finite() => (VarState::Upper, hi),
                _ => (VarState::Free, 0.0),
            };
            self.state[k] = state;
            self.x[k] = value;
        }
    }

    fn compute_primal(&mut self) {
        let mut r = vec![0.0; self.m];
        for k in 0..self.n + self.m {
            if self.state[k] == VarState::Basic {
                continue;
            }
            let xk = self.x[k];
            if xk == 0.0 {
                continue;
            }
            if k < self.n {
                for &(i, a) in &self.data.cols[k] {
                    r[i] -= a * xk;
                }
            } else {
                r[k - self.n] -= xk;
            }
        }
        self.ftran(&mut r);
        for (p, &k) in self.head.iter().enumerate() {
            self.x[k] = r[p];
        }
    }

    /// Rebuild the product-form inverse for the current basic set.
    fn reinvert(&mut self) -> Result<(), SolverError> {
        let (m, n) = (self.m, self.n);
        self.etas.clear();
        let mut available = vec![true; m];
        let mut head = vec![NONE; m];
        let mut structurals = Vec::new();
        for &k in &self.head {
            if k >= n {
                head[k - n] = k;
                available[k - n] = false;
            } else {
                structurals.push(k);
            }
        }
        structurals.sort_by_key(|&k| (self.data.cols[k].len(), k));
        let mut alpha = vec![0.0; m];
        for q in structurals {
            self.scatter(q, &mut alpha);
            self.ftran(&mut alpha);
            let mut best = NONE;
            let mut best_abs = 0.0;
            for (i, a) in alpha.iter().enumerate() {
                if available[i] && a.abs() > best_abs {
                    best_abs = a.abs();
                    best = i;
                }
            }
            if best == NONE || best_abs < PIVOT_TOL {
                // Dependent column: drop it and let a logical take its place.
                self.park(q);
                continue;
            }
            self.push_eta(best, &alpha)?;
            head[best] = q;
            available[best] = false;
        }
        for (i, h) in head.iter_mut().enumerate() {
            if *h == NONE {
                *h = n + i;
                self.state[n + i] = VarState::Basic;
            }
        }
        self.head = head;
        self.compute_primal();
        Ok(())
    }

    fn primal_infeasibility(&self, cb: &mut [f64]) -> bool {
        let mut any = false;
        for (p, &k) in self.head.iter().enumerate() {
            let xk = self.x[k];
            cb[p] = if xk < self.lo[k] - self.tol(self.lo[k]) {
                any = true;
                -1.0
            } else if xk > self.hi[k] + self.tol(self.hi[k]) {
                any = true;
                1.0
            } else {
                0.0
            };
        }
        any
    }

    fn run(&mut self, max_iterations: usize) -> Result<LpStatus, SolverError> {
        let total = self.n + self.m;
        let mut cb = vec![0.0; self.m];
        let mut alpha = vec![0.0; self.m];
        let mut degenerate_streak = 0usize;
        let mut since_refactor = 0usize;
        let mut cleanups = 0usize;

        loop {
            if self.iterations >= max_iterations {
                return Err(SolverError::NumericalBreakdown(format!(
                    "simplex exceeded {max_iterations} iterations"
                )));
            }
            if since_refactor >= REFACTOR_EVERY {
                self.reinvert()?;
                since_refactor = 0;
            }

            let phase_one = self.primal_infeasibility(&mut cb);
            if !phase_one {
                for (p, &k) in self.head.iter().enumerate() {
                    cb[p] = self.cost(k);
                }
            }
            let mut y = cb.clone();
            self.btran(&mut y);

            let bland = degenerate_streak >= DEGENERATE_STREAK;
            let mut entering = NONE;
            let mut direction = 0.0;
            let mut best_score = 0.0;
            for k in 0..total {
                let s = self.state[k];
                if s == VarState::Basic || self.lo[k] == self.hi[k] {
                    continue;
                }
                let ck = if phase_one { 0.0 } else { self.cost(k) };
                let d = ck - self.dot_col(k, &y);
                let dir = if d < -self.opt_tol && s != VarState::Upper {
                    1.0
                } else if d > self.opt_tol && s != VarState::Lower {
                    -1.0
                } else {
                    0.0
                };
                if dir == 0.0 {
                    continue;
                }
                if bland {
                    entering = k;
                    direction = dir;
                    break;
                }
                if d.abs() > best_score {
                    best_score = d.abs();
                    entering = k;
                    direction = dir;
                }
            }

            if entering == NONE {
                // Candidate optimum: verify on a fresh factorization.
                if cleanups < 3 && (since_refactor > 0 || !self.etas.is_empty()) {
                    cleanups += 1;
                    self.reinvert()?;
                    since_refactor = 0;
                    let still_infeasible = self.primal_infeasibility(&mut cb);
                    if still_infeasible != phase_one || self.needs_more_work(phase_one) {
                        continue;
                    }
                }
                return Ok(if phase_one {
                    LpStatus::Infeasible
                } else {
                    LpStatus::Optimal
                });
            }

            let q = entering;
            self.scatter(q, &mut alpha);
            self.ftran(&mut alpha);

            // Ratio test. Basic variable at position p moves by -direction * alpha[p] per unit step.
            // Harris two-pass: find the smallest step allowed with bounds relaxed by their
            // tolerance, then take the largest pivot whose exact ratio fits under it.
            let flip_limit = self.hi[q] - self.lo[q];
            let mut candidates: Vec<(usize, f64, f64, bool)> = Vec::new();
            let mut relaxed_min = f64::INFINITY;
            for (p, &a) in alpha.iter().enumerate() {
                if a.abs() < PIVOT_TOL {
                    continue;
                }
                let k = self.head[p];
                let rate = -direction * a;
                let xk = self.x[k];
                let (lo, hi) = (self.lo[k], self.hi[k]);
                let (ratio, to_upper, tol) = if rate < 0.0 {
                    if phase_one && xk > hi + self.tol(hi) {
                        ((xk - hi) / -rate, true, self.tol(hi))
                    } else if xk >= lo - self.tol(lo) && lo.is_finite() {
                        (((xk - lo) / -rate).max(0.0), false, self.tol(lo))
                    } else {
                        continue;
                    }
                } else if phase_one && xk < lo - self.tol(lo) {
                    ((lo - xk) / rate, false, self.tol(lo))
                } else if xk <= hi + self.tol(hi) && hi.is_finite() {
                    (((hi - xk) / rate).max(0.0), true, self.tol(hi))
                } else {
                    continue;
                };
                relaxed_min = relaxed_min.min(ratio + tol / rate.abs());
                candidates.push((p, ratio, a.abs(), to_upper));
            }
            let mut best_ratio = f64::INFINITY;
            let mut leave = NONE;
            let mut leave_to_upper = false;
            let mut leave_pivot = 0.0;
            for &(p, ratio, a_abs, to_upper) in &candidates {
                let better = if bland {
                    leave == NONE
                        || ratio < best_ratio - 1e-12
                        || (ratio <= best_ratio + 1e-12 && self.head[p] < self.head[leave])
                } else {
                    ratio <= relaxed_min && a_abs > leave_pivot
                };
                if better {
                    best_ratio = ratio;
                    leave = p;
                    leave_to_upper = to_upper;
                    leave_pivot = a_abs;
                }
            }

            if flip_limit.is_finite() && flip_limit <= best_ratio {
                // Entering variable runs into its own opposite bound.
                let step = flip_limit;
                for (p, &a) in alpha.iter().enumerate() {
                    if a != 0.0 {
                        let k = self.head[p];
                        self.x[k] -= direction * step * a;
                    }
                }
                if direction > 0.0 {
                    self.state[q] = VarState::Upper;
                    self.x[q] = self.hi[q];
                } else {
                    self.state[q] = VarState::Lower;
                    self.x[q] = self.lo[q];
                }
                self.iterations += 1;
                degenerate_streak = 0;
                continue;
            }

            if leave == NONE {
                if phase_one {
                    // Infeasibility should always bound the step; refresh and retry.
                    if cleanups < 3 {
                        cleanups += 1;
                        self.reinvert()?;
                        since_refactor = 0;
                        continue;
                    }
                    return Err(SolverError::NumericalBreakdown(
                        "unbounded phase-one ray".to_string(),
                    ));
                }
                return Ok(LpStatus::Unbounded);
            }

            let step = best_ratio;
            for (p, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    let k = self.head[p];
                    self.x[k] -= direction * step * a;
                }
            }
            self.x[q] += direction * step;
            let k_out = self.head[leave];
            if leave_to_upper {
                self.state[k_out] = VarState::Upper;
                self.x[k_out] = self.hi[k_out];
            } else {
                self.state[k_out] = VarState::Lower;
                self.x[k_out] = self.lo[k_out];
            }
            self.state[q] = VarState::Basic;
            self.head[leave] = q;
            if self.push_eta(leave, &alpha).is_err() {
                // Ill-conditioned update: factor the new basis from scratch.
                self.reinvert()?;
                since_refactor = 0;
            } else {
                since_refactor += 1;
            }
            self.iterations += 1;
            if step <= 1e-12 {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }
        }
    }

    /// After a refactor, check whether any reduced cost still prices out.
    fn needs_more_work(&self, phase_one: bool) -> bool {
        let mut cb = vec![0.0; self.m];
        let infeasible = self.primal_infeasibility(&mut cb);
        if infeasible != phase_one {
            return true;
        }
        if !phase_one {
            for (p, &k) in self.head.iter().enumerate() {
                cb[p] = self.cost(k);
            }
        }
        self.btran(&mut cb);
        (0..self.n + self.m).any(|k| {
            let s = self.state[k];
            if s == VarState::Basic || self.lo[k] == self.hi[k] {
                return false;
            }
            let ck = if phase_one { 0.0 } else { self.cost(k) };
            let d = ck - self.dot_col(k, &cb);
            (d < -self.opt_tol && s != VarState::Upper) || (d > self.opt_tol && s != VarState::Lower)
        })
    }
}

/// Solve `min c.x` over `data` with structural bounds `lb`/`ub`, optionally
/// starting from a previous basis.
pub(crate) fn simplex(
    data: &LpData,
    lb: &[f64],
    ub: &[f64],
    warm: Option<&Basis>,
    params: &SolverParams,
) -> Result<LpOutcome, SolverError> {
    let (m, n) = (data.m, data.n);
    let mut lo = Vec::with_capacity(n + m);
    let mut hi = Vec::with_capacity(n + m);
    lo.extend_from_slice(lb);
    hi.extend_from_slice(ub);
    for i in 0..m {
        lo.push(-data.row_hi[i]);
        hi.push(-data.row_lo[i]);
    }
    for k in 0..n + m {
        if lo[k] > hi[k] + params.feas_tol * (1.0 + lo[k].abs()) {
            return Ok(infeasible_outcome(data, lb, m, n));
        }
        if lo[k] > hi[k] {
            hi[k] = lo[k];
        }
    }

    let (head, state) = match warm {
        Some(b) if b.head.len() == m && b.state.len() == n + m => (b.head.clone(), b.state.clone()),
        _ => {
            let mut state = vec![VarState::Lower; n + m];
            for s in state.iter_mut().skip(n) {
                *s = VarState::Basic;
            }
            ((n..n + m).collect(), state)
        }
    };
    let mut engine = Engine {
        data,
        m,
        n,
        lo,
        hi,
        x: vec![0.0; n + m],
        state,
        head,
        etas: Vec::new(),
        feas_tol: params.feas_tol,
        opt_tol: params.opt_tol,
        iterations: 0,
    };
    engine.sync_nonbasic();
    engine.reinvert()?;
    let max_iterations = 200 * (n + m) + 10_000;
    let status = engine.run(max_iterations)?;

    let mut y = vec![0.0; m];
    for (p, &k) in engine.head.iter().enumerate() {
        y[p] = engine.cost(k);
    }
    engine.btran(&mut y);
    let reduced: Vec<f64> = (0..n)
        .map(|j| (engine.cost(j) - engine.dot_col(j, &y)) / data.cost_scale)
        .collect();
    let duals: Vec<f64> = y
        .iter()
        .zip(&data.row_scale)
        .map(|(yi, s)| yi * s / data.cost_scale)
        .collect();
    let x: Vec<f64> = engine.x[..n].to_vec();
    let objective = x
        .iter()
        .zip(&data.cost)
        .map(|(v, c)| v * c)
        .sum::<f64>()
        / data.cost_scale;
    Ok(LpOutcome {
        status,
        x,
        objective,
        iterations: engine.iterations,
        basis: Basis {
            head: engine.head,
            state: engine.state,
        },
        duals,
        reduced_costs: reduced,
    })
}

fn infeasible_outcome(data: &LpData, lb: &[f64], m: usize, n: usize) -> LpOutcome {
    let mut state = vec![VarState::Lower; n + m];
    for s in state.iter_mut().skip(n) {
        *s = VarState::Basic;
    }
    LpOutcome {
        status: LpStatus::Infeasible,
        x: lb.iter().map(|v| if v.is_finite() { *v } else { 0.0 }).collect(),
        objective: f64::NAN,
        iterations: 0,
        basis: Basis {
            head: (n..n + m).collect(),
            state,
        },
        duals: vec![0.0; data.m],
        reduced_costs: vec![0.0; n],
    }
}

/// Solve the LP relaxation of `problem` (integrality ignored).
pub fn solve_lp(problem: &Problem, params: &SolverParams) -> Result<LpSolution, SolverError> {
    params.validate()?;
    let data = LpData::from_problem(problem);
    let lb: Vec<f64> = problem.vars.iter().map(|v| v.lb).collect();
    let ub: Vec<f64> = problem.vars.iter().map(|v| v.ub).collect();
    let out = simplex(&data, &lb, &ub, None, params)?;
    let objective = match out.status {
        LpStatus::Optimal => out.objective + problem.objective_offset,
        LpStatus::Infeasible => f64::INFINITY,
        LpStatus::Unbounded => f64::NEG_INFINITY,
    };
    Ok(LpSolution {
        status: out.status,
        values: out.x,
        objective,
        iterations: out.iterations,
        duals: out.duals,
        reduced_costs: out.reduced_costs,
    })
}
