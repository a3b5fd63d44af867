use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use ttg_core::solver::Timing;

/// Mean and sample standard deviation, in seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub mean: f64,
    pub std: f64,
}

impl PhaseStats {
    pub fn of(seconds: &[f64]) -> PhaseStats {
        let n = seconds.len();
        if n == 0 {
            return PhaseStats::default();
        }
        let mean = seconds.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (seconds.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        PhaseStats { mean, std }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseProfile {
    pub runs: usize,
    pub loading: PhaseStats,
    pub solving: PhaseStats,
    pub total: PhaseStats,
    pub max_load_s: f64,
    pub max_solve_s: f64,
}

impl PhaseProfile {
    pub fn of(timings: &[Timing]) -> PhaseProfile {
        let secs = |f: fn(&Timing) -> f64| -> Vec<f64> { timings.iter().map(|t| f(t) / 1000.0).collect() };
        let load = secs(|t| t.load_ms);
        let solve = secs(|t| t.solve_ms);
        let total = secs(|t| t.total_ms);
        PhaseProfile {
            runs: timings.len(),
            loading: PhaseStats::of(&load),
            solving: PhaseStats::of(&solve),
            total: PhaseStats::of(&total),
            max_load_s: load.iter().copied().fold(0.0, f64::max),
            max_solve_s: solve.iter().copied().fold(0.0, f64::max),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<22}Time (s)", "Phase");
        for (name, s) in [
            ("Loading constraints", self.loading),
            ("Solving", self.solving),
            ("Total", self.total),
        ] {
            let _ = writeln!(out, "{name:<22}{:.3}±{:.3}", s.mean, s.std);
        }
        let _ = writeln!(out, "averaged over {} runs", self.runs);
        out
    }
}
