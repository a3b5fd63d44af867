use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Binary,
    Integer,
    Continuous,
}

impl VarKind {
    pub fn is_integer(self) -> bool {
        !matches!(self, VarKind::Continuous)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarDef {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row, 0 when satisfied.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let act = self.activity(x);
        match self.sense {
            Sense::Le => (act - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - act).max(0.0),
            Sense::Eq => (act - self.rhs).abs(),
        }
    }
}

/// A linear minimization problem with optional integrality.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub vars: Vec<VarDef>,
    pub rows: Vec<Row>,
    pub objective: Vec<f64>,
    pub objective_offset: f64,
}

impl Problem {
    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lb: f64, ub: f64, cost: f64) -> usize {
        let (lb, ub) = match kind {
            VarKind::Binary => (lb.max(0.0), ub.min(1.0)),
            _ => (lb, ub),
        };
        self.vars.push(VarDef {
            name: name.into(),
            kind,
            lb,
            ub,
        });
        self.objective.push(cost);
        self.vars.len() - 1
    }

    pub fn add_row(&mut self, name: impl Into<String>, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        self.rows.push(Row {
            name: name.into(),
            coeffs,
            sense,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Rows violated by more than `tol` (scaled by row magnitude), plus any
    /// bound or integrality breach. Empty means `x` is feasible.
    pub fn audit(&self, x: &[f64], tol: f64, integrality_tol: f64) -> Vec<String> {
        let mut bad = Vec::new();
        for (j, var) in self.vars.iter().enumerate() {
            let v = x[j];
            if v < var.lb - tol || v > var.ub + tol {
                bad.push(format!("{} = {v} outside [{}, {}]", var.name, var.lb, var.ub));
            }
            if var.kind.is_integer() && (v - v.round()).abs() > integrality_tol {
                bad.push(format!("{} = {v} is fractional", var.name));
            }
        }
        for row in &self.rows {
            let scale = 1.0 + row.rhs.abs();
            if row.violation(x) > tol * scale {
                bad.push(format!("row {} violated by {}", row.name, row.violation(x)));
            }
        }
        bad
    }

    /// True when every objective term sits on an integer variable with an
    /// integral coefficient, so optimal values are integers.
    pub fn has_integral_objective(&self) -> bool {
        self.objective_offset.fract() == 0.0
            && self
                .objective
                .iter()
                .zip(&self.vars)
                .all(|(c, v)| *c == 0.0 || (v.kind.is_integer() && c.fract() == 0.0))
    }
}
