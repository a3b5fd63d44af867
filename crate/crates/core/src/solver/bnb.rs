use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;
use std::rc::Rc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::lp::{simplex, Basis, LpData, LpStatus};
use super::params::{Branching, NodeOrder, SolverParams};
use super::presolve::{presolve, PresolveOutcome, Presolved};
use super::problem::Problem;
use super::SolverError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    TimeLimitWithIncumbent,
    TimeLimitNoIncumbent,
}

/// Wall time per phase, in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub load_ms: f64,
    pub solve_ms: f64,
    pub total_ms: f64,
}

impl Timing {
    pub fn new(load_ms: f64, solve_ms: f64) -> Timing {
        Timing {
            load_ms,
            solve_ms,
            total_ms: load_ms + solve_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpResult {
    pub status: MilpStatus,
    /// Incumbent assignment over the original columns.
    pub values: Option<Vec<f64>>,
    pub objective: Option<f64>,
    /// Best proven lower bound on the optimum.
    pub bound: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
    pub timing: Timing,
    pub presolve_log: Vec<String>,
}

/// Rounding hook: gets LP values over the original columns and may return an
/// integral assignment. Whatever it returns is audited before use.
pub type Heuristic<'a> = &'a dyn Fn(&[f64]) -> Option<Vec<f64>>;

#[derive(Default)]
pub struct Hooks<'a> {
    pub heuristic: Option<Heuristic<'a>>,
    pub trace: Option<&'a mut dyn Write>,
}

struct Node {
    id: usize,
    depth: usize,
    bound: f64,
    changes: Vec<(usize, f64, f64)>,
    basis: Option<Rc<Basis>>,
    branched: Option<(usize, bool, f64)>,
}

struct Queued(Node);

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    // BinaryHeap is a max-heap: smallest bound, then smallest id, pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .bound
            .total_cmp(&self.0.bound)
            .then_with(|| other.0.id.cmp(&self.0.id))
    }
}

enum Frontier {
    Best(BinaryHeap<Queued>),
    Depth(Vec<Node>),
}

impl Frontier {
    fn push(&mut self, node: Node) {
        match self {
            Frontier::Best(h) => h.push(Queued(node)),
            Frontier::Depth(s) => s.push(node),
        }
    }

    fn pop(&mut self) -> Option<Node> {
        match self {
            Frontier::Best(h) => h.pop().map(|q| q.0),
            Frontier::Depth(s) => s.pop(),
        }
    }

    fn min_bound(&self) -> f64 {
        match self {
            Frontier::Best(h) => h.peek().map_or(f64::INFINITY, |q| q.0.bound),
            Frontier::Depth(s) => s.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Clone, Copy)]
struct PseudoCost {
    down: (f64, usize),
    up: (f64, usize),
}

impl PseudoCost {
    fn estimate(side: (f64, usize), fallback: f64) -> f64 {
        if side.1 == 0 {
            fallback
        } else {
            side.0 / side.1 as f64
        }
    }
}

fn elapsed_ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1000.0
}

struct Search<'a, 'h> {
    original: &'a Problem,
    reduced: Problem,
    pre: Option<Presolved>,
    params: &'a SolverParams,
    hooks: Hooks<'h>,
    incumbent: Option<(f64, Vec<f64>)>,
    integral_objective: bool,
}

impl Search<'_, '_> {
    fn to_original(&self, y: &[f64]) -> Vec<f64> {
        match &self.pre {
            Some(p) => p.postsolve(y),
            None => y.to_vec(),
        }
    }

    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            None => f64::INFINITY,
            Some((obj, _)) if self.integral_objective => obj - 0.5,
            Some((obj, _)) => {
                let slack = (self.params.gap_tol * obj.abs()).max(1e-9 * (1.0 + obj.abs()));
                obj - slack
            }
        }
    }

    fn trace(&mut self, line: std::fmt::Arguments) {
        if let Some(w) = self.hooks.trace.as_mut() {
            let _ = writeln!(w, "{line}");
        }
    }

    /// Round integer columns and audit against the original problem.
    fn offer(&mut self, mut x: Vec<f64>, source: &str, node: usize) -> bool {
        for (v, def) in x.iter_mut().zip(&self.original.vars) {
            if def.kind.is_integer() {
                *v = v.round();
            }
        }
        if !self.original.audit(&x, 1e-6, self.params.integrality_tol).is_empty() {
            return false;
        }
        let obj = self.original.objective_value(&x);
        let improves = self.incumbent.as_ref().is_none_or(|(best, _)| obj < *best - 1e-9 * (1.0 + best.abs()));
        if improves {
            self.trace(format_args!("incumbent {obj} from {source} at node {node}"));
            self.incumbent = Some((obj, x));
        }
        improves
    }

    fn pick_branch(&self, y: &[f64], pcs: &[PseudoCost]) -> Option<(usize, f64)> {
        let tol = self.params.integrality_tol;
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = f64::NEG_INFINITY;
        let (mut avg_down, mut avg_up, mut cnt_down, mut cnt_up) = (0.0, 0.0, 0usize, 0usize);
        if self.params.branching == Branching::PseudoCost {
            for pc in pcs {
                if pc.down.1 > 0 {
                    avg_down += pc.down.0 / pc.down.1 as f64;
                    cnt_down += 1;
                }
                if pc.up.1 > 0 {
                    avg_up += pc.up.0 / pc.up.1 as f64;
                    cnt_up += 1;
                }
            }
        }
        let avg_down = if cnt_down > 0 { avg_down / cnt_down as f64 } else { 1.0 };
        let avg_up = if cnt_up > 0 { avg_up / cnt_up as f64 } else { 1.0 };
        for (j, def) in self.reduced.vars.iter().enumerate() {
            if !def.kind.is_integer() {
                continue;
            }
            let v = y[j];
            let f = v - v.floor();
            if f <= tol || f >= 1.0 - tol {
                continue;
            }
            let score = match self.params.branching {
                Branching::MostFractional => f.min(1.0 - f),
                Branching::PseudoCost => {
                    let d = PseudoCost::estimate(pcs[j].down, avg_down) * f;
                    let u = PseudoCost::estimate(pcs[j].up, avg_up) * (1.0 - f);
                    d.max(1e-6) * u.max(1e-6)
                }
            };
            if score > best_score {
                best_score = score;
                best = Some((j, v));
            }
        }
        best
    }
}

/// Exact branch and bound over LP relaxations.
pub fn branch_and_bound(problem: &Problem, params: &SolverParams, hooks: Hooks<'_>) -> Result<MilpResult, SolverError> {
    params.validate()?;
    let load_start = Instant::now();
    let (reduced, pre, presolve_log) = if params.presolve {
        match presolve(problem, params.feas_tol) {
            PresolveOutcome::Reduced(p) => (p.problem.clone(), Some(p.clone()), p.log),
            PresolveOutcome::Infeasible(reason) => {
                let load_ms = elapsed_ms(load_start);
                return Ok(MilpResult {
                    status: MilpStatus::Infeasible,
                    values: None,
                    objective: None,
                    bound: f64::INFINITY,
                    nodes: 0,
                    lp_iterations: 0,
                    timing: Timing::new(load_ms, 0.0),
                    presolve_log: vec![format!("presolve proved infeasibility: {reason}")],
                });
            }
        }
    } else {
        (problem.clone(), None, Vec::new())
    };
    let data = LpData::from_problem(&reduced);
    let load_ms = elapsed_ms(load_start);

    let solve_start = Instant::now();
    let integral_objective = problem.has_integral_objective();
    let root_lb: Vec<f64> = reduced.vars.iter().map(|v| v.lb).collect();
    let root_ub: Vec<f64> = reduced.vars.iter().map(|v| v.ub).collect();
    let mut search = Search {
        original: problem,
        reduced,
        pre,
        params,
        hooks,
        incumbent: None,
        integral_objective,
    };
    for line in &presolve_log {
        search.trace(format_args!("{line}"));
    }

    let offset = search.reduced.objective_offset;
    let mut frontier = match params.node_order {
        NodeOrder::BestFirst => Frontier::Best(BinaryHeap::new()),
        NodeOrder::DepthFirst => Frontier::Depth(Vec::new()),
    };
    frontier.push(Node {
        id: 0,
        depth: 0,
        bound: f64::NEG_INFINITY,
        changes: Vec::new(),
        basis: None,
        branched: None,
    });
    let mut next_id = 1;
    let mut nodes = 0usize;
    let mut lp_iterations = 0usize;
    let mut pcs = vec![
        PseudoCost {
            down: (0.0, 0),
            up: (0.0, 0),
        };
        search.reduced.num_vars()
    ];
    let mut timed_out = false;
    let mut lb = root_lb.clone();
    let mut ub = root_ub.clone();

    while let Some(node) = frontier.pop() {
        if node.bound >= search.cutoff() {
            continue;
        }
        if solve_start.elapsed().as_millis() as u64 >= params.time_limit_ms {
            frontier.push(node);
            timed_out = true;
            break;
        }
        lb.copy_from_slice(&root_lb);
        ub.copy_from_slice(&root_ub);
        for &(j, l, u) in &node.changes {
            lb[j] = lb[j].max(l);
            ub[j] = ub[j].min(u);
        }
        let out = match simplex(&data, &lb, &ub, node.basis.as_deref(), params) {
            Ok(out) => out,
            Err(_) if node.basis.is_some() => simplex(&data, &lb, &ub, None, params)?,
            Err(e) => return Err(e),
        };
        nodes += 1;
        lp_iterations += out.iterations;
        let obj = out.objective + offset;
        search.trace(format_args!(
            "node {} depth {} parent_bound {} lp {:?} obj {} iters {}",
            node.id, node.depth, node.bound, out.status, obj, out.iterations
        ));
        match out.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                return Err(SolverError::Unbounded);
            }
            LpStatus::Optimal => {}
        }
        if let Some((j, up, dist)) = node.branched {
            if node.bound.is_finite() && dist > 0.0 {
                let gain = ((obj - node.bound) / dist).max(0.0);
                let side = if up { &mut pcs[j].up } else { &mut pcs[j].down };
                side.0 += gain;
                side.1 += 1;
            }
        }
        if obj >= search.cutoff() {
            continue;
        }

        let branch = search.pick_branch(&out.x, &pcs);
        let Some((j, v)) = branch else {
            let x = search.to_original(&out.x);
            search.offer(x, "lp", node.id);
            continue;
        };

        let run_heuristic = nodes == 1 || (params.heuristic_every > 0 && nodes.is_multiple_of(params.heuristic_every));
        if run_heuristic {
            if let Some(h) = search.hooks.heuristic {
                let x = search.to_original(&out.x);
                if let Some(cand) = h(&x) {
                    search.offer(cand, "rounding", node.id);
                }
            }
            if obj >= search.cutoff() {
                continue;
            }
        }

        let basis = Rc::new(out.basis);
        let down_first = v - v.floor() < 0.5;
        let f = v - v.floor();
        let mut children = Vec::with_capacity(2);
        for up in [!down_first, down_first] {
            let mut changes = node.changes.clone();
            if up {
                changes.push((j, v.ceil(), f64::INFINITY));
            } else {
                changes.push((j, f64::NEG_INFINITY, v.floor()));
            }
            children.push((up, changes));
        }
        // Depth-first pops from the end, so push the preferred child last.
        if params.node_order == NodeOrder::DepthFirst {
            children.reverse();
        }
        for (up, changes) in children {
            frontier.push(Node {
                id: next_id,
                depth: node.depth + 1,
                bound: obj,
                changes,
                basis: Some(Rc::clone(&basis)),
                branched: Some((j, up, if up { 1.0 - f } else { f })),
            });
            next_id += 1;
        }
    }

    let solve_ms = elapsed_ms(solve_start);
    let incumbent = search.incumbent.take();
    let (status, bound) = match (&incumbent, timed_out) {
        (Some((obj, _)), false) => (MilpStatus::Optimal, *obj),
        (None, false) => (MilpStatus::Infeasible, f64::INFINITY),
        (Some((obj, _)), true) => (MilpStatus::TimeLimitWithIncumbent, frontier.min_bound().min(*obj)),
        (None, true) => (MilpStatus::TimeLimitNoIncumbent, frontier.min_bound()),
    };
    if let Some((_, x)) = &incumbent {
        let bad = problem.audit(x, 1e-6, params.integrality_tol);
        if !bad.is_empty() {
            return Err(SolverError::NumericalBreakdown(format!(
                "incumbent failed final audit: {}",
                bad.join("; ")
            )));
        }
    }
    let (objective, values) = match incumbent {
        Some((o, x)) => (Some(o), Some(x)),
        None => (None, None),
    };
    Ok(MilpResult {
        status,
        values,
        objective,
        bound,
        nodes,
        lp_iterations,
        timing: Timing::new(load_ms, solve_ms),
        presolve_log,
    })
}
