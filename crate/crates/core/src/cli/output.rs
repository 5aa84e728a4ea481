use std::fmt::Write as _;
use std::path::Path;

use crate::dynamics::{CycleSummary, SimulationFrame};
use crate::error::Result;
use crate::model::ModelAssembly;

/// Significant digits in every serialized number.
pub const SIGNIFICANT_DIGITS: usize = 9;

/// Shortest decimal that rounds to `v` at nine significant digits.
pub fn fmt_num(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v)
        .parse()
        .expect("formatted float parses");
    let mag = rounded.abs();
    if rounded == 0.0 {
        "0".into()
    } else if !(1e-4..1e15).contains(&mag) {
        format!("{rounded:e}")
    } else {
        rounded.to_string()
    }
}

fn column_name(name: &str) -> String {
    name.to_ascii_lowercase().replace('-', "_")
}

/// Frame CSV columns, in order:
/// `time, gait_pct, grf_x, grf_y, grf_z`, one `tau_<dof>` per human DOF,
/// `strap_<name>_<x|y|z>` per strap, `fa_<actuator>` per actuator, `phi`,
/// `act_<muscle>` per muscle, `knee_reaction_l, knee_reaction_r`.
pub fn frame_header(assembly: &ModelAssembly) -> Vec<String> {
    let mut h: Vec<String> = ["time", "gait_pct", "grf_x", "grf_y", "grf_z"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend(
        assembly.dof_names()[assembly.human_dofs()]
            .iter()
            .map(|n| format!("tau_{n}")),
    );
    for s in &assembly.straps {
        let name = column_name(&s.name);
        h.extend(["x", "y", "z"].iter().map(|c| format!("strap_{name}_{c}")));
    }
    h.extend(
        assembly
            .actuators
            .iter()
            .map(|a| format!("fa_{}", column_name(&a.name))),
    );
    h.push("phi".into());
    h.extend(assembly.muscles.iter().map(|m| format!("act_{}", m.name)));
    h.push("knee_reaction_l".into());
    h.push("knee_reaction_r".into());
    h
}

/// Values of one frame in `frame_header` order.
pub fn frame_row(assembly: &ModelAssembly, f: &SimulationFrame) -> Vec<f64> {
    let mut r = vec![f.t, f.gait_pct, f.grf.force.x, f.grf.force.y, f.grf.force.z];
    r.extend(f.tau.iter());
    r.extend(f.strap.values.iter());
    if f.control.force.len() == assembly.actuators.len() {
        r.extend(f.control.force.iter());
    } else {
        r.extend(std::iter::repeat_n(0.0, assembly.actuators.len()));
    }
    r.push(f.control.objective.unwrap_or(0.0));
    r.extend(f.muscle.activations.iter());
    r.extend(f.knee_reaction);
    r
}

pub fn frames_csv(assembly: &ModelAssembly, frames: &[SimulationFrame]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = frame_header(assembly);
    w.write_record(&header).map_err(csv_error)?;
    for f in frames {
        let row = frame_row(assembly, f);
        debug_assert_eq!(row.len(), header.len());
        w.write_record(row.iter().map(|v| fmt_num(*v)))
            .map_err(csv_error)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_error(e: csv::Error) -> crate::Error {
    std::io::Error::other(e.to_string()).into()
}

/// Summary quantities of one case as `(key, value)` pairs.
pub fn summary_pairs(assembly: &ModelAssembly, s: &CycleSummary) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = s
        .torque_peaks()
        .iter()
        .map(|(n, v)| (format!("peak_{n}"), *v))
        .collect();
    let mut kv = |k: &str, v: f64| out.push((k.to_string(), v));
    kv("peak_grf_vertical", s.peak_grf_vertical);
    kv("peak_grf_horizontal", s.peak_grf_horizontal);
    kv("strap_rms", s.strap_rms);
    kv("peak_strap_pressure", s.peak_strap_pressure);
    kv("peak_actuator_force", s.peak_actuator_force);
    kv("peak_activation", s.peak_activation);
    for (m, a) in assembly.muscles.iter().zip(&s.peak_activations) {
        kv(&format!("peak_activation.{}", m.name), *a);
    }
    kv("peak_knee_compression", s.peak_knee_compression);
    kv("impulse_error", s.impulse_error);
    kv("mean_vertical_grf_ratio", s.mean_vertical_grf_ratio);
    kv("max_friction_clamp", s.max_friction_clamp);
    out
}

/// `key = value` lines for one case, with keys prefixed by `prefix`.
pub fn summary_lines(assembly: &ModelAssembly, s: &CycleSummary, prefix: &str, out: &mut String) {
    for (k, v) in summary_pairs(assembly, s) {
        let _ = writeln!(out, "{prefix}{k} = {}", fmt_num(v));
    }
}

pub fn summary_text(
    assembly: &ModelAssembly,
    s: &CycleSummary,
    extra: &[(&str, String)],
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "controller = {}", s.controller);
    for (k, v) in extra {
        let _ = writeln!(out, "{k} = {v}");
    }
    summary_lines(assembly, s, "", &mut out);
    out
}

/// Write through a temporary sibling and rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
