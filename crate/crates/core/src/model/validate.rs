use std::fmt;

use super::{JointKind, JointMode, ModelAssembly, Subsystem, Topology};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    /// Name of the offending segment, joint, actuator or strap.
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub diagnostics: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.diagnostics.is_empty()
    }

    fn push(&mut self, subject: impl Into<String>, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic {
            subject: subject.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.diagnostics {
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}

/// List every violated structural or physical invariant of an assembly.
pub fn validate_assembly(a: &ModelAssembly) -> ValidationReport {
    let mut r = ValidationReport::default();

    for seg in &a.segments {
        if let Some(problem) = seg.inertial_problem() {
            r.push(&seg.name, problem);
        }
    }

    if let Err(e) = Topology::build(&a.segments, &a.joints) {
        r.push("joints", e.to_string());
    }

    let mut roots = 0;
    for joint in &a.joints {
        if joint.parent.is_none() {
            roots += 1;
        }
        let expected_axes = match joint.kind {
            JointKind::Revolute => 1,
            JointKind::Spherical | JointKind::Free => 3,
            JointKind::Fixed => 0,
        };
        if joint.axes.len() < expected_axes {
            r.push(
                &joint.name,
                format!("needs {expected_axes} axes, has {}", joint.axes.len()),
            );
        }
        for axis in joint.axes.iter().take(expected_axes) {
            if (axis.norm() - 1.0).abs() > 1e-9 {
                r.push(
                    &joint.name,
                    format!("axis norm {} is not unit", axis.norm()),
                );
            }
        }
        if !joint.limits.is_empty() && joint.limits.len() != joint.kind.dof() {
            r.push(&joint.name, "limit count does not match DOF count");
        }
        if joint.limits.iter().any(|(lo, hi)| !(lo <= hi)) {
            r.push(&joint.name, "lower limit exceeds upper limit");
        }
        let Some(child) = a.segments.get(joint.child) else {
            continue;
        };
        let expected_mode = match child.subsystem {
            Subsystem::Human => JointMode::PrescribedId,
            Subsystem::Exo if joint.kind == JointKind::Fixed => joint.mode,
            Subsystem::Exo => JointMode::FreeFd,
        };
        if joint.mode != expected_mode {
            r.push(&joint.name, format!("mode must be {expected_mode:?}"));
        }
    }
    if roots != 1 {
        r.push(
            "joints",
            format!("expected exactly one root joint, found {roots}"),
        );
    }

    // Human structure: free root, and per leg hip/knee/ankle.
    match a.joints.iter().find(|j| j.parent.is_none()) {
        Some(root) if root.kind != JointKind::Free => r.push(&root.name, "root joint must be free"),
        _ => {}
    }
    for side in ["l", "r"] {
        for (name, kind) in [
            (format!("hip_{side}"), JointKind::Spherical),
            (format!("knee_angle_{side}"), JointKind::Revolute),
            (format!("ankle_angle_{side}"), JointKind::Revolute),
        ] {
            match a.joints.iter().find(|j| j.name == name) {
                None => r.push(&name, "missing joint"),
                Some(j) if j.kind != kind => r.push(&name, format!("must be {kind:?}")),
                _ => {}
            }
        }
    }

    // Exoskeleton structure.
    let exo_segments = a
        .segments
        .iter()
        .filter(|s| s.subsystem == Subsystem::Exo)
        .count();
    if exo_segments != 7 {
        r.push(
            "exoskeleton",
            format!("expected 7 segments, found {exo_segments}"),
        );
    }
    let exo_revolute = a
        .joints
        .iter()
        .filter(|j| {
            a.segments
                .get(j.child)
                .is_some_and(|s| s.subsystem == Subsystem::Exo)
        })
        .filter(|j| j.kind == JointKind::Revolute)
        .count();
    if exo_revolute != 6 {
        r.push(
            "exoskeleton",
            format!("expected 6 revolute joints, found {exo_revolute}"),
        );
    }

    // Tie constraint.
    let tie_ok = a
        .segments
        .get(a.tie.support)
        .is_some_and(|s| s.subsystem == Subsystem::Exo)
        && a.segments
            .get(a.tie.pelvis)
            .is_some_and(|s| s.subsystem == Subsystem::Human)
        && a.joints.iter().any(|j| {
            j.child == a.tie.support && j.parent == Some(a.tie.pelvis) && j.kind == JointKind::Fixed
        });
    if !tie_ok {
        r.push("tie", "load support must be welded to the human pelvis");
    }

    if a.actuators.len() != 6 {
        r.push(
            "actuators",
            format!("expected 6, found {}", a.actuators.len()),
        );
    }
    for act in &a.actuators {
        if !(act.force_limit.is_finite() && act.force_limit > 0.0) {
            r.push(&act.name, "force limit must be positive");
        }
        if act.endpoint_a.0 == act.endpoint_b.0 {
            r.push(&act.name, "endpoints must lie on distinct segments");
        }
    }

    if a.straps.len() != 4 {
        r.push("straps", format!("expected 4, found {}", a.straps.len()));
    }
    for s in &a.straps {
        let negatives = s.stiffness_negative.iter().flat_map(|k| k.iter());
        if s.stiffness
            .iter()
            .chain(s.damping.iter())
            .chain(negatives)
            .any(|v| !(*v >= 0.0))
        {
            r.push(&s.name, "stiffness and damping must be non-negative");
        }
        if !(s.contact_area > 0.0) {
            r.push(&s.name, "contact area must be positive");
        }
    }

    for m in &a.muscles {
        if !(m.f_max > 0.0) {
            r.push(&m.name, "f_max must be positive");
        }
        if m.spanned_dofs().is_empty() {
            r.push(&m.name, "spans no DOF");
        }
        if m.moment_arms
            .iter()
            .chain(m.moment_arm_slopes.iter())
            .any(|v| !v.is_finite())
        {
            r.push(&m.name, "moment arms must be finite");
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_default_assembly, ModelConfig, Vec3};

    fn assembly() -> ModelAssembly {
        build_default_assembly(&ModelConfig::default()).unwrap()
    }

    #[test]
    fn default_is_clean() {
        let report = validate_assembly(&assembly());
        assert!(report.is_empty(), "{report}");
    }

    #[test]
    fn non_unit_axis_is_named() {
        let mut a = assembly();
        let j = a.joints.iter().position(|j| j.name == "exo_hip_r").unwrap();
        a.joints[j].axes[0] = Vec3::new(0.0, 0.0, 2.0);
        let report = validate_assembly(&a);
        assert_eq!(report.diagnostics.len(), 1, "{report}");
        assert_eq!(report.diagnostics[0].subject, "exo_hip_r");
    }

    #[test]
    fn five_exo_joints_is_structural() {
        let mut a = assembly();
        let j = a
            .joints
            .iter()
            .position(|j| j.name == "exo_knee_l")
            .unwrap();
        a.joints[j].kind = JointKind::Fixed;
        a.joints[j].limits.clear();
        a.rebuild().unwrap();
        let report = validate_assembly(&a);
        assert!(report
            .diagnostics
            .iter()
            .any(|d| d.subject == "exoskeleton" && d.message.contains("revolute")));
    }
}
