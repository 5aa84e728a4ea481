use std::fmt::Write as _;

use serde::Serialize;

use super::output::{fmt_num, summary_lines};
use crate::control::ControllerKind;
use crate::dynamics::{run_cycle, CycleSummary, SimOptions, SimulationRun};
use crate::error::Result;
use crate::model::ModelAssembly;
use crate::motion::GaitTrajectory;

/// `(case − base) / base` in percent; `None` when the base is zero.
pub fn percent_delta(case: f64, base: f64) -> Option<f64> {
    if base.abs() < 1e-12 || !base.is_finite() || !case.is_finite() {
        None
    } else {
        Some((case - base) / base * 100.0)
    }
}

/// Per-case peaks with deltas against the no-exo and passive cases.
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonSummary {
    pub cases: Vec<CycleSummary>,
    /// Cases that failed, with their error.
    pub failures: Vec<(ControllerKind, String)>,
}

/// Metrics that appear in the comparison table, keyed as in the summary.
pub fn metrics(s: &CycleSummary) -> Vec<(&'static str, f64)> {
    vec![
        ("peak_hip_flexion", s.peak_hip_flexion),
        ("peak_hip_extension", s.peak_hip_extension),
        ("peak_hip_abduction", s.peak_hip_abduction),
        ("peak_hip_rotation", s.peak_hip_rotation),
        ("peak_knee_extension", s.peak_knee_extension),
        ("peak_grf_vertical", s.peak_grf_vertical),
        ("strap_rms", s.strap_rms),
        ("peak_activation", s.peak_activation),
        ("peak_knee_compression", s.peak_knee_compression),
    ]
}

impl ComparisonSummary {
    pub fn case(&self, kind: ControllerKind) -> Option<&CycleSummary> {
        self.cases.iter().find(|c| c.controller == kind)
    }

    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }

    /// Percent change of `metric` in `case` relative to `base`.
    pub fn delta(&self, case: ControllerKind, base: ControllerKind, metric: &str) -> Option<f64> {
        let value = |k| {
            self.case(k).and_then(|s| {
                metrics(s)
                    .into_iter()
                    .find(|(n, _)| *n == metric)
                    .map(|(_, v)| v)
            })
        };
        percent_delta(value(case)?, value(base)?)
    }

    /// Console table: peaks per case with `(% vs No Exo, % vs Passive)`.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<24}", "metric");
        for c in &self.cases {
            let _ = write!(out, "{:>28}", c.controller.label());
        }
        out.push('\n');
        let rows = self.cases.first().map(metrics).unwrap_or_default();
        for (name, _) in rows {
            let _ = write!(out, "{name:<24}");
            for c in &self.cases {
                let v = metrics(c)
                    .into_iter()
                    .find(|(n, _)| *n == name)
                    .map_or(f64::NAN, |(_, v)| v);
                let pct = |base| match self.delta(c.controller, base, name) {
                    Some(d) if c.controller != base => format!("{d:+.1}%"),
                    _ => "-".to_string(),
                };
                let cell = format!(
                    "{v:.1} ({}, {})",
                    pct(ControllerKind::None),
                    pct(ControllerKind::Passive)
                );
                let _ = write!(out, "{cell:>28}");
            }
            out.push('\n');
        }
        for (k, e) in &self.failures {
            let _ = writeln!(out, "{} FAILED: {e}", k.label());
        }
        out
    }

    /// Key-value summary of every case plus both percent bases.
    pub fn summary_text(&self, assembly: &ModelAssembly) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "complete = {}", self.is_complete());
        for c in &self.cases {
            let prefix = format!("{}.", c.controller);
            summary_lines(assembly, c, &prefix, &mut out);
            for (name, _) in metrics(c) {
                for base in [ControllerKind::None, ControllerKind::Passive] {
                    if let Some(d) = self.delta(c.controller, base, name) {
                        let _ = writeln!(out, "{prefix}{name}.pct_vs_{base} = {}", fmt_num(d));
                    }
                }
            }
        }
        for (k, e) in &self.failures {
            let _ = writeln!(out, "{k}.error = {:?}", e);
        }
        out
    }

    /// One row per case, one column per metric.
    pub fn csv(&self) -> String {
        let mut out = String::from("case");
        let names: Vec<&str> = self
            .cases
            .first()
            .map(|c| metrics(c).into_iter().map(|(n, _)| n).collect())
            .unwrap_or_default();
        for n in &names {
            let _ = write!(out, ",{n}");
        }
        out.push('\n');
        for c in &self.cases {
            out.push_str(c.controller.as_str());
            for (_, v) in metrics(c) {
                let _ = write!(out, ",{}", fmt_num(v));
            }
            out.push('\n');
        }
        out
    }
}

/// Run each case on shared inputs, concurrently, in the order given.
pub fn run_cases(
    assembly: &ModelAssembly,
    traj: &GaitTrajectory,
    base: &SimOptions,
    cases: &[ControllerKind],
) -> Vec<(ControllerKind, Result<SimulationRun>)> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = cases
            .iter()
            .map(|&kind| {
                let opts = SimOptions {
                    controller: kind,
                    ..base.clone()
                };
                (kind, scope.spawn(move || run_cycle(assembly, traj, opts)))
            })
            .collect();
        handles
            .into_iter()
            .map(|(k, h)| (k, h.join().expect("simulation thread panicked")))
            .collect()
    })
}

pub fn summarize(results: &[(ControllerKind, Result<SimulationRun>)]) -> ComparisonSummary {
    let mut cases = Vec::new();
    let mut failures = Vec::new();
    for (k, r) in results {
        match r {
            Ok(run) => cases.push(run.summary.clone()),
            Err(e) => failures.push((*k, e.to_string())),
        }
    }
    ComparisonSummary { cases, failures }
}
