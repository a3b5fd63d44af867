use std::fmt::Write as _;

use crate::solver::{Problem, Sense, VarKind};

use super::MilpModel;

fn num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn linear(out: &mut String, problem: &Problem, terms: &[(usize, f64)]) {
    let mut first = true;
    for &(j, a) in terms {
        if a == 0.0 {
            continue;
        }
        let name = &problem.vars[j].name;
        let mag = num(a.abs());
        match (first, a < 0.0) {
            (true, false) => write!(out, " {mag} {name}"),
            (true, true) => write!(out, " -{mag} {name}"),
            (false, false) => write!(out, " + {mag} {name}"),
            (false, true) => write!(out, " - {mag} {name}"),
        }
        .expect("writing to a String");
        first = false;
    }
    if first {
        let _ = write!(out, " 0 {}", problem.vars.first().map_or("x", |v| v.name.as_str()));
    }
}

/// CPLEX LP text for the model, with semantic variable names.
pub fn to_lp_format(model: &MilpModel) -> String {
    let p = &model.problem;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "\\ request {} objective {} slots {}x{}min",
        model.request.request_id, model.objective, model.grid.slots, model.grid.slot_minutes
    );
    out.push_str("Minimize\n obj:");
    let terms: Vec<(usize, f64)> = p.objective.iter().copied().enumerate().collect();
    linear(&mut out, p, &terms);
    out.push_str("\nSubject To\n");
    for row in &p.rows {
        let _ = write!(out, " {}:", row.name);
        linear(&mut out, p, &row.coeffs);
        let op = match row.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", num(row.rhs));
    }
    out.push_str("Bounds\n");
    for v in &p.vars {
        if v.lb == v.ub {
            let _ = writeln!(out, " {} = {}", v.name, num(v.lb));
        } else if v.kind != VarKind::Binary {
            let lo = if v.lb.is_finite() { num(v.lb) } else { "-inf".into() };
            let hi = if v.ub.is_finite() { num(v.ub) } else { "+inf".into() };
            let _ = writeln!(out, " {lo} <= {} <= {hi}", v.name);
        }
    }
    for (title, kind) in [("Binaries", VarKind::Binary), ("Generals", VarKind::Integer)] {
        let names: Vec<&str> = p.vars.iter().filter(|v| v.kind == kind).map(|v| v.name.as_str()).collect();
        if names.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{title}");
        for chunk in names.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}
