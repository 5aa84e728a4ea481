//! Python bindings: scenario runs, comparisons, validation and gait export.

use std::collections::BTreeMap;
use std::path::Path;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use exosim::cli::{self, ScenarioConfig, ValidateOptions};
use exosim::control::ControllerKind;
use exosim::dynamics::run_cycle;
use exosim::model::ModelConfig;
use exosim::strap::STRAP_FORCE_LEN;
use exosim::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config { .. }
        | Error::Parse { .. }
        | Error::InvalidModel { .. }
        | Error::Unsupported(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Scenario from TOML text or a file, with keyword overrides applied.
fn scenario(
    toml: Option<&str>,
    path: Option<&str>,
    controller: Option<&str>,
    dt: Option<f64>,
    cycles: Option<usize>,
) -> PyResult<ScenarioConfig> {
    let mut cfg = match (toml, path) {
        (Some(_), Some(_)) => {
            return Err(PyValueError::new_err(
                "give scenario text or scenario_file, not both",
            ))
        }
        (Some(t), None) => ScenarioConfig::from_toml_str(t).map_err(to_py)?,
        (None, Some(p)) => ScenarioConfig::load(Path::new(p)).map_err(to_py)?,
        (None, None) => ScenarioConfig::default(),
    };
    if let Some(c) = controller {
        cfg.controller = c.parse().map_err(to_py)?;
    }
    if let Some(v) = dt {
        cfg.dt = v;
    }
    if let Some(v) = cycles {
        cfg.cycles = v;
    }
    Ok(cfg)
}

/// Frames and summary of one simulated case.
#[pyclass(frozen, get_all)]
struct RunResult {
    controller: String,
    /// Column names of `rows`, in CSV order.
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    summary: BTreeMap<String, f64>,
}

#[pymethods]
impl RunResult {
    /// Values of one column over all frames.
    fn column(&self, name: &str) -> PyResult<Vec<f64>> {
        let i = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| PyValueError::new_err(format!("no column `{name}`")))?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }

    fn __len__(&self) -> usize {
        self.rows.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "RunResult(controller={:?}, frames={})",
            self.controller,
            self.rows.len()
        )
    }
}

/// One validation check.
#[pyclass(frozen, get_all)]
struct Check {
    name: String,
    measured: f64,
    threshold: f64,
    passed: bool,
    detail: String,
}

#[pymethods]
impl Check {
    fn __repr__(&self) -> String {
        format!(
            "Check({:?}, passed={}, measured={:e}, threshold={:e})",
            self.name, self.passed, self.measured, self.threshold
        )
    }
}

/// Simulate one scenario. `scenario` is TOML text; `scenario_file` a path.
#[pyfunction]
#[pyo3(signature = (controller=None, scenario=None, scenario_file=None, dt=None, cycles=None))]
fn run(
    py: Python<'_>,
    controller: Option<&str>,
    scenario: Option<&str>,
    scenario_file: Option<&str>,
    dt: Option<f64>,
    cycles: Option<usize>,
) -> PyResult<RunResult> {
    let cfg = self::scenario(scenario, scenario_file, controller, dt, cycles)?;
    py.detach(|| {
        let inputs = cfg.load_inputs()?;
        let a = &inputs.assembly;
        let sim = run_cycle(a, &inputs.trajectory, cfg.sim_options())?;
        Ok(RunResult {
            controller: sim.controller.to_string(),
            columns: cli::frame_header(a),
            rows: sim.frames.iter().map(|f| cli::frame_row(a, f)).collect(),
            summary: cli::summary_pairs(a, &sim.summary).into_iter().collect(),
        })
    })
    .map_err(to_py)
}

/// Run several cases and return per-case metrics, including
/// `<metric>.pct_vs_none` and `<metric>.pct_vs_passive` deltas.
#[pyfunction]
#[pyo3(signature = (cases=None, scenario=None, scenario_file=None, dt=None, cycles=None))]
fn compare(
    py: Python<'_>,
    cases: Option<Vec<String>>,
    scenario: Option<&str>,
    scenario_file: Option<&str>,
    dt: Option<f64>,
    cycles: Option<usize>,
) -> PyResult<BTreeMap<String, BTreeMap<String, f64>>> {
    let cfg = self::scenario(scenario, scenario_file, None, dt, cycles)?;
    let kinds = match cases {
        Some(c) => cli::parse_cases(&c.join(",")).map_err(to_py)?,
        None => ControllerKind::ALL.to_vec(),
    };
    let (summary, a) = py
        .detach(|| -> exosim::Result<_> {
            let inputs = cfg.load_inputs()?;
            let results = cli::run_cases(
                &inputs.assembly,
                &inputs.trajectory,
                &cfg.sim_options(),
                &kinds,
            );
            Ok((cli::summarize(&results), inputs.assembly))
        })
        .map_err(to_py)?;
    if let Some((k, e)) = summary.failures.first() {
        return Err(PyRuntimeError::new_err(format!("case {k} failed: {e}")));
    }
    let mut out = BTreeMap::new();
    for c in &summary.cases {
        let mut m: BTreeMap<String, f64> = cli::summary_pairs(&a, c).into_iter().collect();
        for (name, _) in cli::compare::metrics(c) {
            for base in [ControllerKind::None, ControllerKind::Passive] {
                if let Some(d) = summary.delta(c.controller, base, name) {
                    m.insert(format!("{name}.pct_vs_{base}"), d);
                }
            }
        }
        out.insert(c.controller.to_string(), m);
    }
    Ok(out)
}

/// Run the property checks on the reference model.
#[pyfunction]
#[pyo3(signature = (seed=0, quick=true, flip_exo_strap=None))]
fn validate(
    py: Python<'_>,
    seed: u64,
    quick: bool,
    flip_exo_strap: Option<String>,
) -> PyResult<Vec<Check>> {
    let opts = ValidateOptions {
        seed,
        flip_exo_strap,
        simulate: !quick,
    };
    let report = py
        .detach(|| cli::run_validation(&ModelConfig::default(), &opts))
        .map_err(to_py)?;
    Ok(report
        .checks
        .into_iter()
        .map(|c| Check {
            name: c.name,
            measured: c.measured,
            threshold: c.threshold,
            passed: c.passed,
            detail: c.detail,
        })
        .collect())
}

/// Synthesize a running gait and write it as a trajectory CSV. Returns the
/// cycle duration in seconds.
#[pyfunction]
#[pyo3(signature = (path, scenario=None))]
fn synth_gait(path: &str, scenario: Option<&str>) -> PyResult<f64> {
    let cfg = self::scenario(scenario, None, None, None, None)?;
    let traj = cli::synth_gait(&cfg.gait, Path::new(path)).map_err(to_py)?;
    Ok(traj.cycle_duration)
}

/// Standing vertical GRF (N) without and with the exoskeleton.
#[pyfunction]
fn static_grf() -> PyResult<(f64, f64)> {
    cli::validate::static_grf(&ModelConfig::default()).map_err(to_py)
}

/// Contact pressure (Pa) per strap for a 12-component strap force vector.
#[pyfunction]
fn strap_pressure(forces: Vec<f64>) -> PyResult<Vec<f64>> {
    if forces.len() != STRAP_FORCE_LEN {
        return Err(PyValueError::new_err(format!(
            "expected {STRAP_FORCE_LEN} strap force components"
        )));
    }
    let a = exosim::model::build_default_assembly(&ModelConfig::default()).map_err(to_py)?;
    exosim::strap::strap_pressure(&nalgebra::DVector::from_vec(forces), &a.straps).map_err(to_py)
}

#[pymodule]
fn pyexosim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<RunResult>()?;
    m.add_class::<Check>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(synth_gait, m)?)?;
    m.add_function(wrap_pyfunction!(static_grf, m)?)?;
    m.add_function(wrap_pyfunction!(strap_pressure, m)?)?;
    Ok(())
}
