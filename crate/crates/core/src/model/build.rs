use super::config::{ExoPartConfig, ModelConfig, StrapConfig};
use super::*;

const REFERENCE_MASS: f64 = 65.9;
const REFERENCE_TRUNK: f64 = 0.70;

/// Mirror a right-side point or COM offset onto the left side.
fn mirror_point(v: [f64; 3], side: Side) -> Vec3 {
    Vec3::new(v[0], v[1], side.lateral_sign() * v[2])
}

/// Mirror a right-side rotation axis. Reflection across the sagittal plane
/// maps an axial vector `(x, y, z)` to `(-x, -y, z)`.
fn mirror_axis(v: [f64; 3], side: Side) -> Vec3 {
    match side {
        Side::Right => Vec3::from(v),
        Side::Left => Vec3::new(-v[0], -v[1], v[2]),
    }
}

fn check_part(label: &str, part: &ExoPartConfig) -> Result<()> {
    let probe = BodySegment {
        name: label.to_string(),
        subsystem: Subsystem::Exo,
        mass: part.mass,
        inertia_diag: Vec3::from(part.inertia),
        com_offset: Vec3::from(part.com),
        length: part.length,
    };
    match probe.inertial_problem() {
        Some(reason) => Err(Error::invalid(label, reason)),
        None => Ok(()),
    }
}

fn exo_segment(name: String, part: &ExoPartConfig, side: Option<Side>) -> Result<BodySegment> {
    let com = match side {
        Some(s) => mirror_point(part.com, s),
        None => Vec3::from(part.com),
    };
    BodySegment::new(
        name,
        Subsystem::Exo,
        part.mass,
        Vec3::from(part.inertia),
        com,
        part.length,
    )
}

struct HumanSegmentDraft {
    name: String,
    mass: f64,
    inertia: Vec3,
    com: Vec3,
    length: f64,
}

fn human_segments(cfg: &ModelConfig) -> Result<Vec<BodySegment>> {
    let s = &cfg.subject;
    let m = s.mass;
    let mass_scale = m / REFERENCE_MASS;
    let trunk_scale = s.trunk_length / REFERENCE_TRUNK;

    let mut drafts = vec![
        HumanSegmentDraft {
            name: "pelvis".into(),
            mass: 0.142 * m,
            inertia: 0.142 * m * Vec3::new(0.11_f64.powi(2), 0.12_f64.powi(2), 0.09_f64.powi(2)),
            com: Vec3::new(-0.03, 0.03, 0.0),
            length: 2.0 * s.hip_half_width,
        },
        HumanSegmentDraft {
            name: "hat".into(),
            mass: 0.536 * m,
            inertia: mass_scale * trunk_scale.powi(2) * Vec3::new(1.41, 0.353, 1.27),
            com: Vec3::new(0.0, 0.32 * trunk_scale, 0.0),
            length: s.trunk_length,
        },
    ];
    for side in Side::BOTH {
        let sfx = side.suffix();
        let lt = s.thigh_length;
        let ls = s.shank_length;
        let (mt, ms, mf) = (0.100 * m, 0.0465 * m, 0.0145 * m);
        drafts.push(HumanSegmentDraft {
            name: format!("thigh_{sfx}"),
            mass: mt,
            inertia: mt
                * Vec3::new(
                    (0.323 * lt).powi(2),
                    (0.12 * lt).powi(2),
                    (0.323 * lt).powi(2),
                ),
            com: Vec3::new(0.0, -0.433 * lt, 0.0),
            length: lt,
        });
        drafts.push(HumanSegmentDraft {
            name: format!("shank_{sfx}"),
            mass: ms,
            inertia: ms
                * Vec3::new(
                    (0.302 * ls).powi(2),
                    (0.08 * ls).powi(2),
                    (0.302 * ls).powi(2),
                ),
            com: Vec3::new(0.0, -0.433 * ls, 0.0),
            length: ls,
        });
        let foot_len = s.heel_length + s.toe_length;
        drafts.push(HumanSegmentDraft {
            name: format!("foot_{sfx}"),
            mass: mf,
            inertia: mf
                * Vec3::new(
                    0.03_f64.powi(2),
                    (0.475 * foot_len).powi(2),
                    (0.475 * foot_len).powi(2),
                ),
            com: Vec3::new(0.06, -0.04, 0.0),
            length: foot_len,
        });
    }

    for (key, over) in &s.overrides {
        let draft = drafts
            .iter_mut()
            .find(|d| &d.name == key)
            .ok_or_else(|| Error::invalid(format!("subject.overrides.{key}"), "no such segment"))?;
        if let Some(mass) = over.mass {
            draft.mass = mass;
        }
        if let Some(i) = over.inertia {
            draft.inertia = Vec3::from(i);
        }
        if let Some(c) = over.com {
            draft.com = Vec3::from(c);
        }
    }

    drafts
        .into_iter()
        .map(|d| BodySegment::new(d.name, Subsystem::Human, d.mass, d.inertia, d.com, d.length))
        .collect()
}

fn revolute(
    name: String,
    parent: usize,
    child: usize,
    axis: Vec3,
    anchor: Vec3,
    mode: JointMode,
) -> JointSpec {
    JointSpec {
        name,
        kind: JointKind::Revolute,
        parent: Some(parent),
        child,
        axes: vec![axis],
        anchor,
        mode,
        limits: Vec::new(),
    }
}

/// Build the combined human + exoskeleton assembly from a parameter record.
///
/// Segment order: pelvis, hat, then thigh/shank/foot for the left and right
/// legs, then load support and exo-pelvis/femur/tibia for each side. Joint
/// `j` is the parent joint of segment `j`.
pub fn build_default_assembly(cfg: &ModelConfig) -> Result<ModelAssembly> {
    let s = &cfg.subject;
    let e = &cfg.exo;
    if !(cfg.gravity.is_finite() && cfg.gravity >= 0.0) {
        return Err(Error::invalid("gravity", "must be finite and non-negative"));
    }
    for (label, v) in [
        ("subject.thigh_length", s.thigh_length),
        ("subject.shank_length", s.shank_length),
        ("subject.ankle_height", s.ankle_height),
        ("subject.trunk_length", s.trunk_length),
        ("subject.hip_half_width", s.hip_half_width),
        ("subject.heel_length", s.heel_length),
        ("subject.toe_length", s.toe_length),
        ("subject.foot_half_width", s.foot_half_width),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(label, format!("must be positive, got {v}")));
        }
    }
    if !(s.mass.is_finite() && s.mass > 0.0) {
        return Err(Error::invalid(
            "subject.mass",
            format!("must be positive, got {}", s.mass),
        ));
    }
    check_part("exo-load-support", &e.load_support)?;
    check_part("exo-pelvis", &e.pelvis)?;
    check_part("exo-femur", &e.femur)?;
    check_part("exo-tibia", &e.tibia)?;
    if !(cfg.actuators.force_limit.is_finite() && cfg.actuators.force_limit > 0.0) {
        return Err(Error::invalid("actuators.force_limit", "must be positive"));
    }

    let mut segments = human_segments(cfg)?;
    let pelvis = 0;
    let hat = 1;
    let thigh = |side: Side| 2 + 3 * side.index();
    let shank = |side: Side| 3 + 3 * side.index();
    let foot = |side: Side| 4 + 3 * side.index();
    let load_support = 8;
    let exo_pelvis = |side: Side| 9 + 3 * side.index();
    let exo_femur = |side: Side| 10 + 3 * side.index();
    let exo_tibia = |side: Side| 11 + 3 * side.index();

    segments.push(exo_segment("load_support".into(), &e.load_support, None)?);
    for side in Side::BOTH {
        let sfx = side.suffix();
        segments.push(exo_segment(
            format!("exo_pelvis_{sfx}"),
            &e.pelvis,
            Some(side),
        )?);
        segments.push(exo_segment(
            format!("exo_femur_{sfx}"),
            &e.femur,
            Some(side),
        )?);
        segments.push(exo_segment(
            format!("exo_tibia_{sfx}"),
            &e.tibia,
            Some(side),
        )?);
    }

    let id = JointMode::PrescribedId;
    let fd = JointMode::FreeFd;
    let mut joints = vec![
        JointSpec {
            name: "pelvis".into(),
            kind: JointKind::Free,
            parent: None,
            child: pelvis,
            axes: vec![Vec3::z(), Vec3::x(), Vec3::y()],
            anchor: Vec3::zeros(),
            mode: id,
            limits: Vec::new(),
        },
        JointSpec {
            name: "lumbar".into(),
            kind: JointKind::Fixed,
            parent: Some(pelvis),
            child: hat,
            axes: Vec::new(),
            anchor: Vec3::zeros(),
            mode: id,
            limits: Vec::new(),
        },
    ];
    for side in Side::BOTH {
        let sfx = side.suffix();
        joints.push(JointSpec {
            name: format!("hip_{sfx}"),
            kind: JointKind::Spherical,
            parent: Some(pelvis),
            child: thigh(side),
            axes: vec![
                Vec3::z(),
                mirror_axis([-1.0, 0.0, 0.0], side),
                mirror_axis([0.0, 1.0, 0.0], side),
            ],
            anchor: mirror_point([0.0, 0.0, s.hip_half_width], side),
            mode: id,
            limits: Vec::new(),
        });
        joints.push(revolute(
            format!("knee_angle_{sfx}"),
            thigh(side),
            shank(side),
            Vec3::z(),
            Vec3::new(0.0, -s.thigh_length, 0.0),
            id,
        ));
        joints.push(revolute(
            format!("ankle_angle_{sfx}"),
            shank(side),
            foot(side),
            Vec3::z(),
            Vec3::new(0.0, -s.shank_length, 0.0),
            id,
        ));
    }
    joints.push(JointSpec {
        name: "tie".into(),
        kind: JointKind::Fixed,
        parent: Some(pelvis),
        child: load_support,
        axes: Vec::new(),
        anchor: Vec3::zeros(),
        mode: id,
        limits: Vec::new(),
    });
    for side in Side::BOTH {
        let sfx = side.suffix();
        let mut j = revolute(
            format!("exo_pelvis_{sfx}"),
            load_support,
            exo_pelvis(side),
            mirror_axis(e.pelvis_joint_axis, side),
            mirror_point(e.pelvis_joint_anchor, side),
            fd,
        );
        j.limits = vec![(e.pelvis_joint_limits[0], e.pelvis_joint_limits[1])];
        joints.push(j);
        let mut j = revolute(
            format!("exo_hip_{sfx}"),
            exo_pelvis(side),
            exo_femur(side),
            mirror_axis(e.hip_joint_axis, side),
            mirror_point(e.hip_joint_anchor, side),
            fd,
        );
        j.limits = vec![(e.hip_joint_limits[0], e.hip_joint_limits[1])];
        joints.push(j);
        let mut j = revolute(
            format!("exo_knee_{sfx}"),
            exo_femur(side),
            exo_tibia(side),
            mirror_axis(e.knee_joint_axis, side),
            mirror_point(e.knee_joint_anchor, side),
            fd,
        );
        j.limits = vec![(e.knee_joint_limits[0], e.knee_joint_limits[1])];
        joints.push(j);
    }

    let limit = cfg.actuators.force_limit;
    let a = &cfg.actuators;
    let mut actuators = Vec::new();
    for side in Side::BOTH {
        let tag = side.upper();
        actuators.push(ActuatorSpec {
            name: format!("exo-pelvis-{tag}"),
            endpoint_a: (load_support, mirror_point(a.pelvis.proximal_point, side)),
            endpoint_b: (exo_pelvis(side), mirror_point(a.pelvis.distal_point, side)),
            force_limit: limit,
        });
        actuators.push(ActuatorSpec {
            name: format!("exo-hip-{tag}"),
            endpoint_a: (exo_pelvis(side), mirror_point(a.hip.proximal_point, side)),
            endpoint_b: (exo_femur(side), mirror_point(a.hip.distal_point, side)),
            force_limit: limit,
        });
        actuators.push(ActuatorSpec {
            name: format!("exo-knee-{tag}"),
            endpoint_a: (exo_femur(side), mirror_point(a.knee.proximal_point, side)),
            endpoint_b: (exo_tibia(side), mirror_point(a.knee.distal_point, side)),
            force_limit: limit,
        });
    }

    let mut muscles = Vec::new();
    for side in Side::BOTH {
        for mc in &cfg.muscles {
            muscles.push(MuscleActuator::from_config(mc, side)?);
        }
    }

    let foot_geom = FootGeometry {
        ankle_height: s.ankle_height,
        heel_length: s.heel_length,
        toe_length: s.toe_length,
        half_width: s.foot_half_width,
    };
    let mut assembly = ModelAssembly::new(
        segments,
        joints,
        actuators,
        Vec::new(),
        muscles,
        TieConstraint {
            support: load_support,
            pelvis,
        },
        s.mass,
        Vec3::new(0.0, -cfg.gravity, 0.0),
        foot_geom,
    )?;

    // Strap exo points default to the spot coincident with the body point in
    // the reference pose; rest offsets are the reference separations.
    let poses = forward_kinematics(&assembly, &assembly.zero_coordinates())?;
    let mut straps = Vec::new();
    let strap_sets: [(&str, &StrapConfig, fn(Side) -> usize, fn(Side) -> usize); 2] = [
        (
            "femur",
            &cfg.straps.femur,
            |s| 2 + 3 * s.index(),
            |s| 10 + 3 * s.index(),
        ),
        (
            "tibia",
            &cfg.straps.tibia,
            |s| 3 + 3 * s.index(),
            |s| 11 + 3 * s.index(),
        ),
    ];
    for (label, sc, body_seg, exo_seg) in strap_sets {
        for side in Side::BOTH {
            let (bs, es) = (body_seg(side), exo_seg(side));
            let body_point = mirror_point(sc.body_point, side);
            let world_body = poses[bs].transform_point(&body_point);
            let exo_point = match sc.exo_point {
                Some(p) => mirror_point(p, side),
                None => poses[es].inverse_transform_point(&world_body),
            };
            let world_exo = poses[es].transform_point(&exo_point);
            let rest_offset = poses[bs].rotation.transpose() * (world_exo - world_body);
            straps.push(StrapElement::new(
                format!("{label}-{}", side.upper()),
                (es, exo_point),
                (bs, body_point),
                rest_offset,
                sc,
            )?);
        }
    }
    assembly.straps = straps;
    Ok(assembly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn default_masses() {
        let a = build_default_assembly(&ModelConfig::default()).unwrap();
        assert_relative_eq!(a.mass_of(Subsystem::Exo), 23.0, epsilon = 1e-12);
        assert_relative_eq!(a.mass_of(Subsystem::Human), 65.9, epsilon = 1e-9);
        assert_relative_eq!(a.total_mass(), 88.9, epsilon = 1e-9);
    }

    #[test]
    fn layout() {
        let a = build_default_assembly(&ModelConfig::default()).unwrap();
        assert_eq!(a.ndof(), 22);
        assert_eq!(a.human_dofs(), 0..16);
        assert_eq!(a.exo_dofs(), 16..22);
        assert_eq!(a.controlled_dofs(), [6, 7, 8, 9, 11, 12, 13, 14]);
        assert_eq!(a.dof_names()[9], "knee_angle_l");
        assert_eq!(a.dof_names()[21], "exo_knee_r");
        assert_eq!(a.straps.len(), 4);
        assert_eq!(a.actuators.len(), 6);
        assert_eq!(a.muscles.len(), 12);
    }

    #[test]
    fn negative_femur_mass_names_part() {
        let mut cfg = ModelConfig::default();
        cfg.exo.femur.mass = -1.0;
        let err = build_default_assembly(&cfg).unwrap_err().to_string();
        assert!(err.contains("exo-femur"), "{err}");
    }

    #[test]
    fn straps_rest_at_reference() {
        let a = build_default_assembly(&ModelConfig::default()).unwrap();
        for s in &a.straps {
            assert!(s.rest_offset.norm() < 1e-12);
        }
    }

    #[test]
    fn left_side_mirrors_right() {
        let a = build_default_assembly(&ModelConfig::default()).unwrap();
        let poses = forward_kinematics(&a, &a.zero_coordinates()).unwrap();
        for (l, r) in [(2, 5), (3, 6), (4, 7), (9, 12), (10, 13), (11, 14)] {
            let pl = poses[l].origin;
            let pr = poses[r].origin;
            assert_relative_eq!(pl.x, pr.x);
            assert_relative_eq!(pl.y, pr.y);
            assert_relative_eq!(pl.z, -pr.z);
        }
    }
}
