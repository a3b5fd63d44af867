//! Optimum-preserving reductions applied before branch and bound.
//!
//! Fixed columns are substituted out, rows whose activity range already
//! satisfies them are dropped, integer bounds are tightened from row activity,
//! columns that every row lets move toward their cheaper bound are fixed there,
//! and pairs of integer columns forced equal by two-term rows are merged.

use super::problem::{Problem, Row, Sense};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum VarFate {
    Fixed(f64),
    Kept(usize),
}

#[derive(Debug, Clone)]
pub(crate) struct Presolved {
    pub problem: Problem,
    pub fates: Vec<VarFate>,
    pub log: Vec<String>,
}

impl Presolved {
    /// Map a solution of the reduced problem back to the original columns.
    pub fn postsolve(&self, y: &[f64]) -> Vec<f64> {
        self.fates
            .iter()
            .map(|f| match *f {
                VarFate::Fixed(v) => v,
                VarFate::Kept(k) => y[k],
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub(crate) enum PresolveOutcome {
    Reduced(Presolved),
    Infeasible(String),
}

struct Work {
    rows: Vec<Row>,
    active: Vec<bool>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    cost: Vec<f64>,
    integer: Vec<bool>,
    parent: Vec<usize>,
    tol: f64,
}

fn row_bounds(row: &Row) -> (f64, f64) {
    match row.sense {
        Sense::Le => (f64::NEG_INFINITY, row.rhs),
        Sense::Ge => (row.rhs, f64::INFINITY),
        Sense::Eq => (row.rhs, row.rhs),
    }
}

impl Work {
    fn find(&mut self, mut j: usize) -> usize {
        while self.parent[j] != j {
            self.parent[j] = self.parent[self.parent[j]];
            j = self.parent[j];
        }
        j
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.ub[j] - self.lb[j] <= self.tol
    }

    fn slack(&self, v: f64) -> f64 {
        self.tol * (1.0 + v.abs())
    }

    /// Remove fixed columns from rows, folding them into the right-hand side.
    fn substitute_fixed(&mut self) -> usize {
        let mut removed = 0;
        for i in 0..self.rows.len() {
            if !self.active[i] {
                continue;
            }
            let mut shift = 0.0;
            let before = self.rows[i].coeffs.len();
            let coeffs = std::mem::take(&mut self.rows[i].coeffs);
            let kept: Vec<(usize, f64)> = coeffs
                .into_iter()
                .filter(|&(j, a)| {
                    if self.is_fixed(j) {
                        shift += a * self.lb[j];
                        false
                    } else {
                        true
                    }
                })
                .collect();
            removed += before - kept.len();
            self.rows[i].coeffs = kept;
            self.rows[i].rhs -= shift;
        }
        removed
    }

    fn activity_range(&self, row: &Row) -> (f64, f64) {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for &(j, a) in &row.coeffs {
            if a > 0.0 {
                lo += a * self.lb[j];
                hi += a * self.ub[j];
            } else {
                lo += a * self.ub[j];
                hi += a * self.lb[j];
            }
        }
        (lo, hi)
    }

    /// Drop redundant rows and tighten integer bounds. Errors on a row no
    /// assignment within bounds can satisfy.
    fn scan_rows(&mut self) -> Result<(usize, usize), String> {
        let mut dropped = 0;
        let mut tightened = 0;
        for i in 0..self.rows.len() {
            if !self.active[i] {
                continue;
            }
            let (rlo, rhi) = row_bounds(&self.rows[i]);
            let (amin, amax) = self.activity_range(&self.rows[i]);
            if amin > rhi + self.slack(rhi) || amax < rlo - self.slack(rlo) {
                return Err(format!(
                    "row {} cannot be satisfied: activity in [{amin}, {amax}]",
                    self.rows[i].name
                ));
            }
            if amin >= rlo - self.slack(rlo) && amax <= rhi + self.slack(rhi) {
                self.active[i] = false;
                dropped += 1;
                continue;
            }
            if !amin.is_finite() || !amax.is_finite() {
                continue;
            }
            for k in 0..self.rows[i].coeffs.len() {
                let (j, a) = self.rows[i].coeffs[k];
                if !self.integer[j] || a == 0.0 {
                    continue;
                }
                let (own_min, own_max) = if a > 0.0 {
                    (a * self.lb[j], a * self.ub[j])
                } else {
                    (a * self.ub[j], a * self.lb[j])
                };
                let rest_min = amin - own_min;
                let rest_max = amax - own_max;
                let mut new_lb = self.lb[j];
                let mut new_ub = self.ub[j];
                if rhi.is_finite() {
                    let v = (rhi - rest_min) / a;
                    if a > 0.0 {
                        new_ub = new_ub.min((v + 1e-6).floor());
                    } else {
                        new_lb = new_lb.max((v - 1e-6).ceil());
                    }
                }
                if rlo.is_finite() {
                    let v = (rlo - rest_max) / a;
                    if a > 0.0 {
                        new_lb = new_lb.max((v - 1e-6).ceil());
                    } else {
                        new_ub = new_ub.min((v + 1e-6).floor());
                    }
                }
                if new_lb > new_ub + self.tol {
                    return Err(format!("column {j} has empty domain after row {}", self.rows[i].name));
                }
                if new_lb > self.lb[j] || new_ub < self.ub[j] {
                    self.lb[j] = new_lb;
                    self.ub[j] = new_ub.max(new_lb);
                    tightened += 1;
                    // Bounds moved; the cached activity range is stale for the rest of this row.
                    break;
                }
            }
        }
        Ok((dropped, tightened))
    }

    /// Fix columns whose cost and every row agree on the direction to move.
    fn fix_dominated(&mut self) -> usize {
        let n = self.lb.len();
        // 1: may decrease freely, 2: may increase freely.
        let mut free_dir = vec![3u8; n];
        let mut seen = vec![false; n];
        for (i, row) in self.rows.iter().enumerate() {
            if !self.active[i] {
                continue;
            }
            for &(j, a) in &row.coeffs {
                seen[j] = true;
                let mask = match (row.sense, a > 0.0) {
                    (Sense::Eq, _) => 0,
                    (Sense::Le, true) | (Sense::Ge, false) => 1,
                    (Sense::Le, false) | (Sense::Ge, true) => 2,
                };
                free_dir[j] &= mask;
            }
        }
        let mut fixed = 0;
        for j in 0..n {
            if self.parent[j] != j || self.is_fixed(j) {
                continue;
            }
            let c = self.cost[j];
            if c >= 0.0 && free_dir[j] & 1 != 0 && self.lb[j].is_finite() {
                self.ub[j] = self.lb[j];
                fixed += 1;
            } else if c <= 0.0 && free_dir[j] & 2 != 0 && self.ub[j].is_finite() {
                self.lb[j] = self.ub[j];
                fixed += 1;
            } else if !seen[j] && c == 0.0 && !self.lb[j].is_finite() && !self.ub[j].is_finite() {
                self.lb[j] = 0.0;
                self.ub[j] = 0.0;
                fixed += 1;
            }
        }
        fixed
    }

    /// Merge integer pairs that two-term rows force to be equal.
    fn merge_pairs(&mut self) -> Result<usize, String> {
        use std::collections::BTreeMap;
        let mut gaps: BTreeMap<(usize, usize), (f64, f64)> = BTreeMap::new();
        for (i, row) in self.rows.iter().enumerate() {
            if !self.active[i] || row.coeffs.len() != 2 {
                continue;
            }
            let (j1, a1) = row.coeffs[0];
            let (j2, a2) = row.coeffs[1];
            if j1 == j2 || !self.integer[j1] || !self.integer[j2] || (a1 + a2).abs() > 1e-12 * a1.abs() {
                continue;
            }
            // a1 (x_j1 - x_j2) in [rlo, rhi]
            let (rlo, rhi) = row_bounds(row);
            let (mut lo, mut hi) = if a1 > 0.0 { (rlo / a1, rhi / a1) } else { (rhi / a1, rlo / a1) };
            let key = if j1 < j2 {
                (j1, j2)
            } else {
                (lo, hi) = (-hi, -lo);
                (j2, j1)
            };
            let e = gaps.entry(key).or_insert((f64::NEG_INFINITY, f64::INFINITY));
            e.0 = e.0.max(lo);
            e.1 = e.1.min(hi);
        }
        let mut merged = 0;
        for ((j1, j2), (lo, hi)) in gaps {
            if lo > hi + self.tol {
                return Err(format!("columns {j1} and {j2} have contradictory difference bounds"));
            }
            if lo.abs() > self.tol || hi.abs() > self.tol {
                continue;
            }
            let r1 = self.find(j1);
            let r2 = self.find(j2);
            if r1 == r2 {
                continue;
            }
            let (keep, gone) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
            self.parent[gone] = keep;
            self.lb[keep] = self.lb[keep].max(self.lb[gone]);
            self.ub[keep] = self.ub[keep].min(self.ub[gone]);
            if self.lb[keep] > self.ub[keep] + self.tol {
                return Err(format!("merged column {keep} has empty domain"));
            }
            self.cost[keep] += self.cost[gone];
            self.cost[gone] = 0.0;
            merged += 1;
        }
        if merged > 0 {
            for i in 0..self.rows.len() {
                if !self.active[i] {
                    continue;
                }
                let coeffs = std::mem::take(&mut self.rows[i].coeffs);
                let mut out: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
                for (j, a) in coeffs {
                    let r = self.find(j);
                    match out.iter_mut().find(|(k, _)| *k == r) {
                        Some(slot) => slot.1 += a,
                        None => out.push((r, a)),
                    }
                }
                out.retain(|&(_, a)| a != 0.0);
                self.rows[i].coeffs = out;
            }
        }
        Ok(merged)
    }
}

pub(crate) fn presolve(p: &Problem, tol: f64) -> PresolveOutcome {
    let n = p.num_vars();
    let mut rows = p.rows.clone();
    for r in rows.iter_mut() {
        r.coeffs.retain(|&(_, a)| a != 0.0);
    }
    let mut w = Work {
        rows,
        active: vec![true; p.num_rows()],
        lb: p.vars.iter().map(|v| v.lb).collect(),
        ub: p.vars.iter().map(|v| v.ub).collect(),
        cost: p.objective.clone(),
        integer: p.vars.iter().map(|v| v.kind.is_integer()).collect(),
        parent: (0..n).collect(),
        tol,
    };
    let mut log = Vec::new();
    for j in 0..n {
        if w.integer[j] {
            w.lb[j] = (w.lb[j] - 1e-9).ceil();
            w.ub[j] = (w.ub[j] + 1e-9).floor();
        }
        if w.lb[j] > w.ub[j] + tol {
            return PresolveOutcome::Infeasible(format!("column {} has empty domain", p.vars[j].name));
        }
    }

    for pass in 1..=25 {
        let substituted = w.substitute_fixed();
        let (dropped, tightened) = match w.scan_rows() {
            Ok(v) => v,
            Err(msg) => return PresolveOutcome::Infeasible(msg),
        };
        let dominated = w.fix_dominated();
        let merged = match w.merge_pairs() {
            Ok(v) => v,
            Err(msg) => return PresolveOutcome::Infeasible(msg),
        };
        if substituted + dropped + tightened + dominated + merged == 0 {
            break;
        }
        log.push(format!(
            "pass {pass}: substituted {substituted} fixed entries, dropped {dropped} rows, \
             tightened {tightened} bounds, fixed {dominated} dominated columns, merged {merged} pairs"
        ));
    }
    w.substitute_fixed();

    let mut reduced = Problem {
        objective_offset: p.objective_offset,
        ..Problem::default()
    };
    let mut rep_fate = vec![None; n];
    for j in 0..n {
        if w.parent[j] != j {
            continue;
        }
        rep_fate[j] = Some(if w.is_fixed(j) {
            reduced.objective_offset += w.cost[j] * w.lb[j];
            VarFate::Fixed(w.lb[j])
        } else {
            let v = &p.vars[j];
            VarFate::Kept(reduced.add_var(v.name.clone(), v.kind, w.lb[j], w.ub[j], w.cost[j]))
        });
    }
    let fates: Vec<VarFate> = (0..n)
        .map(|j| {
            let r = w.find(j);
            rep_fate[r].expect("representatives have fates")
        })
        .collect();
    for (i, row) in w.rows.iter().enumerate() {
        if !w.active[i] {
            continue;
        }
        if row.coeffs.is_empty() {
            let (lo, hi) = row_bounds(row);
            if 0.0 < lo - w.slack(lo) || 0.0 > hi + w.slack(hi) {
                return PresolveOutcome::Infeasible(format!("row {} reduces to 0 outside its bounds", row.name));
            }
            continue;
        }
        let coeffs = row
            .coeffs
            .iter()
            .map(|&(j, a)| match fates[j] {
                VarFate::Kept(k) => (k, a),
                VarFate::Fixed(_) => unreachable!("fixed columns were substituted"),
            })
            .collect();
        reduced.add_row(row.name.clone(), coeffs, row.sense, row.rhs);
    }
    log.push(format!(
        "presolve: {} x {} -> {} x {}",
        p.num_rows(),
        n,
        reduced.num_rows(),
        reduced.num_vars()
    ));
    PresolveOutcome::Reduced(Presolved {
        problem: reduced,
        fates,
        log,
    })
}
