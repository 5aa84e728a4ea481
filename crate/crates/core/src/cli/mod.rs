//! Scenario runner: config ingestion, single runs, the four-case comparison,
//! the validation suite and trajectory export.

pub mod compare;
pub mod output;
pub mod scenario;
pub mod validate;

use std::path::{Path, PathBuf};

use crate::control::ControllerKind;
use crate::dynamics::SimulationRun;
use crate::error::Result;
use crate::model::ModelAssembly;
use crate::motion::{synthesize_running_gait, GaitParams, GaitTrajectory};

pub use compare::{percent_delta, run_cases, summarize, ComparisonSummary};
pub use output::{
    fmt_num, frame_header, frame_row, frames_csv, summary_pairs, summary_text, write_atomic,
};
pub use scenario::{LoadedScenario, ScenarioConfig};
pub use validate::{run_validation, CheckResult, ValidateOptions, ValidationReport};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const SIMULATION: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const INVARIANT: i32 = 3;
    pub const VALIDATION: i32 = 4;
}

/// Invariant violations in a finished run, one message per kind.
pub fn run_violations(assembly: &ModelAssembly, run: &SimulationRun) -> Vec<String> {
    let mut out = Vec::new();
    let finite = |v: &nalgebra::DVector<f64>| v.iter().all(|x| x.is_finite());
    if let Some(f) = run.frames.iter().find(|f| {
        !(finite(&f.tau)
            && finite(&f.strap.values)
            && finite(&f.control.force)
            && f.grf.force.iter().all(|x| x.is_finite()))
    }) {
        out.push(format!("non-finite output at t = {:.4} s", f.t));
    }
    if let Some(f) = run.frames.iter().find(|f| {
        f.muscle
            .activations
            .iter()
            .any(|a| !(0.0..=1.0).contains(a))
    }) {
        out.push(format!(
            "muscle activation outside [0, 1] at t = {:.4} s",
            f.t
        ));
    }
    for f in &run.frames {
        let over = f
            .control
            .force
            .iter()
            .zip(&assembly.actuators)
            .find(|(v, a)| v.abs() > a.force_limit * (1.0 + 1e-12));
        if let Some((v, a)) = over {
            out.push(format!(
                "actuator {} at {v:.1} N beyond its limit at t = {:.4} s",
                a.name, f.t
            ));
            break;
        }
    }
    out
}

fn case_paths(dir: &Path, kind: ControllerKind) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("{kind}.csv")),
        dir.join(format!("{kind}.summary")),
    )
}

/// Write the frame CSV and summary for one case.
pub fn write_case(
    dir: &Path,
    assembly: &ModelAssembly,
    cfg: &ScenarioConfig,
    run: &SimulationRun,
) -> Result<(PathBuf, PathBuf)> {
    let (csv_path, summary_path) = case_paths(dir, run.controller);
    write_atomic(&csv_path, &frames_csv(assembly, &run.frames)?)?;
    let extra = [
        ("dt", fmt_num(cfg.dt)),
        ("cycles", cfg.cycles.to_string()),
        ("seed", cfg.seed.to_string()),
        ("frames", run.frames.len().to_string()),
    ];
    write_atomic(&summary_path, &summary_text(assembly, &run.summary, &extra))?;
    Ok((csv_path, summary_path))
}

/// Files written by `compare`.
pub struct CompareOutput {
    pub summary: ComparisonSummary,
    pub table_path: PathBuf,
    pub summary_path: PathBuf,
    pub csv_path: PathBuf,
    pub violations: Vec<String>,
}

/// Run the given cases on one scenario and write per-case files plus the
/// comparison table, summary and CSV.
pub fn compare_scenario(
    inputs: &LoadedScenario,
    cases: &[ControllerKind],
) -> Result<CompareOutput> {
    let cfg = &inputs.config;
    let dir = cfg.output_dir();
    let results = run_cases(
        &inputs.assembly,
        &inputs.trajectory,
        &cfg.sim_options(),
        cases,
    );
    let mut violations = Vec::new();
    for (kind, r) in &results {
        if let Ok(run) = r {
            write_case(&dir, &inputs.assembly, cfg, run)?;
            violations.extend(
                run_violations(&inputs.assembly, run)
                    .into_iter()
                    .map(|v| format!("{kind}: {v}")),
            );
        }
    }
    let summary = summarize(&results);
    let table_path = dir.join("comparison.txt");
    let summary_path = dir.join("comparison.summary");
    let csv_path = dir.join("comparison.csv");
    write_atomic(&table_path, &summary.table())?;
    write_atomic(&summary_path, &summary.summary_text(&inputs.assembly))?;
    write_atomic(&csv_path, &summary.csv())?;
    Ok(CompareOutput {
        summary,
        table_path,
        summary_path,
        csv_path,
        violations,
    })
}

/// Synthesize a gait and write it in the trajectory CSV format.
pub fn synth_gait(params: &GaitParams, path: &Path) -> Result<GaitTrajectory> {
    let traj = synthesize_running_gait(params)?;
    write_atomic(path, &traj.to_csv_string())?;
    Ok(traj)
}

/// Parse a comma-separated case list.
pub fn parse_cases(text: &str) -> Result<Vec<ControllerKind>> {
    let mut out: Vec<ControllerKind> = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let k: ControllerKind = part.parse()?;
        if !out.contains(&k) {
            out.push(k);
        }
    }
    if out.is_empty() {
        return Err(crate::Error::Config {
            path: "cases".into(),
            message: "no cases given".into(),
        });
    }
    Ok(out)
}
