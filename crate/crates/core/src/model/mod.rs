//! Rigid-body description of the wearer and the exoskeleton.
//!
//! Both trees live in one [`ModelAssembly`]. The human lower body hangs off a
//! prescribed 6-DOF root; the exoskeleton's load support is welded to the
//! human pelvis (the tie constraint) so a single kinematic tree covers both.
//! Frames follow the convention x fore-aft, y vertical (up), z lateral
//! (pointing to the subject's right).

mod build;
pub mod config;
mod kinematics;
mod validate;

use std::ops::Range;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::muscle::MuscleActuator;
use crate::strap::StrapElement;

pub use build::build_default_assembly;
pub use config::ModelConfig;
pub use kinematics::{
    com_kinematics, forward_kinematics, kinematics, point_jacobian, ComKinematics, DofAxis,
    KinematicState, Pose, SegmentMotion,
};
pub use validate::{validate_assembly, Diagnostic, ValidationReport};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn suffix(self) -> &'static str {
        match self {
            Side::Left => "l",
            Side::Right => "r",
        }
    }

    pub fn upper(self) -> &'static str {
        match self {
            Side::Left => "L",
            Side::Right => "R",
        }
    }

    /// Lateral sign: the right side lies at `+z`.
    pub fn lateral_sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    Human,
    Exo,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BodySegment {
    pub name: String,
    pub subsystem: Subsystem,
    pub mass: f64,
    /// Principal inertia about the COM, in the segment frame.
    pub inertia_diag: Vec3,
    pub com_offset: Vec3,
    pub length: f64,
}

impl BodySegment {
    pub fn new(
        name: impl Into<String>,
        subsystem: Subsystem,
        mass: f64,
        inertia_diag: Vec3,
        com_offset: Vec3,
        length: f64,
    ) -> Result<Self> {
        let segment = Self {
            name: name.into(),
            subsystem,
            mass,
            inertia_diag,
            com_offset,
            length,
        };
        if let Some(problem) = segment.inertial_problem() {
            return Err(Error::invalid(segment.name.clone(), problem));
        }
        Ok(segment)
    }

    pub(crate) fn inertial_problem(&self) -> Option<String> {
        let i = &self.inertia_diag;
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Some(format!("mass must be positive, got {}", self.mass));
        }
        if i.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Some(format!(
                "inertia components must be non-negative, got {:?}",
                i.as_slice()
            ));
        }
        let tol = 1e-12 * (i.x + i.y + i.z);
        if i.x > i.y + i.z + tol || i.y > i.x + i.z + tol || i.z > i.x + i.y + tol {
            return Some("principal inertia violates the triangle inequality".to_string());
        }
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JointKind {
    Revolute,
    Spherical,
    Free,
    Fixed,
}

impl JointKind {
    pub fn dof(self) -> usize {
        match self {
            JointKind::Revolute => 1,
            JointKind::Spherical => 3,
            JointKind::Free => 6,
            JointKind::Fixed => 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JointMode {
    /// Motion prescribed from the trajectory; torques solved by inverse dynamics.
    PrescribedId,
    /// Motion integrated from applied forces.
    FreeFd,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointSpec {
    pub name: String,
    pub kind: JointKind,
    /// `None` attaches the child to the ground frame.
    pub parent: Option<usize>,
    pub child: usize,
    /// Rotation axes in order of application, each in the frame produced by
    /// the preceding rotations. Free joints translate along the parent axes
    /// before rotating.
    pub axes: Vec<Vec3>,
    /// Joint centre in the parent frame.
    pub anchor: Vec3,
    pub mode: JointMode,
    /// Optional per-DOF limits (rad); empty when unlimited.
    pub limits: Vec<(f64, f64)>,
}

/// A linear force element between two segments. Positive force pulls the
/// endpoints together.
#[derive(Clone, Debug, PartialEq)]
pub struct ActuatorSpec {
    pub name: String,
    pub endpoint_a: (usize, Vec3),
    pub endpoint_b: (usize, Vec3),
    pub force_limit: f64,
}

/// Rigid weld between the load support and the human pelvis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TieConstraint {
    pub support: usize,
    pub pelvis: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FootGeometry {
    pub ankle_height: f64,
    pub heel_length: f64,
    pub toe_length: f64,
    pub half_width: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelAssembly {
    pub segments: Vec<BodySegment>,
    pub joints: Vec<JointSpec>,
    pub actuators: Vec<ActuatorSpec>,
    pub straps: Vec<StrapElement>,
    pub muscles: Vec<MuscleActuator>,
    pub tie: TieConstraint,
    pub subject_mass: f64,
    pub gravity: Vec3,
    pub foot: FootGeometry,
    topo: Topology,
}

/// Indices derived from the joint list. Rebuilt whenever the structure changes.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Topology {
    pub joint_of: Vec<usize>,
    pub parent: Vec<Option<usize>>,
    pub dof_offset: Vec<usize>,
    pub ndof: usize,
    pub order: Vec<usize>,
    pub ancestor_dofs: Vec<Vec<usize>>,
    pub dof_names: Vec<String>,
    pub human_dofs: Range<usize>,
    pub exo_dofs: Range<usize>,
    pub controlled: [usize; 8],
}

/// Names of the eight controlled lower-extremity DOFs, in vector order.
pub const CONTROLLED_DOF_NAMES: [&str; 8] = [
    "hip_flexion_l",
    "hip_abduction_l",
    "hip_rotation_l",
    "knee_angle_l",
    "hip_flexion_r",
    "hip_abduction_r",
    "hip_rotation_r",
    "knee_angle_r",
];

impl ModelAssembly {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        segments: Vec<BodySegment>,
        joints: Vec<JointSpec>,
        actuators: Vec<ActuatorSpec>,
        straps: Vec<StrapElement>,
        muscles: Vec<MuscleActuator>,
        tie: TieConstraint,
        subject_mass: f64,
        gravity: Vec3,
        foot: FootGeometry,
    ) -> Result<Self> {
        let topo = Topology::build(&segments, &joints)?;
        Ok(Self {
            segments,
            joints,
            actuators,
            straps,
            muscles,
            tie,
            subject_mass,
            gravity,
            foot,
            topo,
        })
    }

    /// Recompute cached indices after editing `segments` or `joints`.
    pub fn rebuild(&mut self) -> Result<()> {
        self.topo = Topology::build(&self.segments, &self.joints)?;
        Ok(())
    }

    pub(crate) fn topo(&self) -> &Topology {
        &self.topo
    }

    pub fn ndof(&self) -> usize {
        self.topo.ndof
    }

    pub fn dof_names(&self) -> &[String] {
        &self.topo.dof_names
    }

    pub fn human_dofs(&self) -> Range<usize> {
        self.topo.human_dofs.clone()
    }

    pub fn exo_dofs(&self) -> Range<usize> {
        self.topo.exo_dofs.clone()
    }

    /// Indices of the eight controlled DOFs (hip ×3 and knee, per side).
    pub fn controlled_dofs(&self) -> [usize; 8] {
        self.topo.controlled
    }

    pub fn segment_index(&self, name: &str) -> Result<usize> {
        self.segments
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| Error::UnknownSegment(name.to_string()))
    }

    pub fn dof_index(&self, name: &str) -> Option<usize> {
        self.topo.dof_names.iter().position(|n| n == name)
    }

    pub fn dof_offset(&self, joint: usize) -> usize {
        self.topo.dof_offset[joint]
    }

    pub fn parent_joint(&self, segment: usize) -> usize {
        self.topo.joint_of[segment]
    }

    pub fn mass_of(&self, subsystem: Subsystem) -> f64 {
        self.segments
            .iter()
            .filter(|s| s.subsystem == subsystem)
            .map(|s| s.mass)
            .sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.segments.iter().map(|s| s.mass).sum()
    }

    pub fn is_exo_segment(&self, segment: usize) -> bool {
        self.segments[segment].subsystem == Subsystem::Exo
    }

    /// Segment-activity mask: all segments, or only the human ones.
    pub fn active_mask(&self, with_exo: bool) -> Vec<bool> {
        self.segments
            .iter()
            .map(|s| with_exo || s.subsystem == Subsystem::Human)
            .collect()
    }

    pub fn foot_segment(&self, side: Side) -> Result<usize> {
        self.segment_index(&format!("foot_{}", side.suffix()))
    }

    pub fn shank_segment(&self, side: Side) -> Result<usize> {
        self.segment_index(&format!("shank_{}", side.suffix()))
    }

    /// Subset of the human coordinates with every exo coordinate zero.
    pub fn zero_coordinates(&self) -> Vec<f64> {
        vec![0.0; self.ndof()]
    }
}

impl Topology {
    pub(crate) fn build(segments: &[BodySegment], joints: &[JointSpec]) -> Result<Self> {
        let n = segments.len();
        let mut joint_of = vec![usize::MAX; n];
        for (j, joint) in joints.iter().enumerate() {
            if joint.child >= n {
                return Err(Error::invalid(
                    &joint.name,
                    "child segment index out of range",
                ));
            }
            if joint.parent.is_some_and(|p| p >= n) {
                return Err(Error::invalid(
                    &joint.name,
                    "parent segment index out of range",
                ));
            }
            if joint_of[joint.child] != usize::MAX {
                return Err(Error::invalid(
                    &segments[joint.child].name,
                    "segment has more than one parent joint",
                ));
            }
            joint_of[joint.child] = j;
        }
        if let Some(s) = joint_of.iter().position(|&j| j == usize::MAX) {
            return Err(Error::invalid(
                &segments[s].name,
                "segment has no parent joint",
            ));
        }
        let parent: Vec<Option<usize>> = (0..n).map(|s| joints[joint_of[s]].parent).collect();

        // Topological order; a cycle leaves segments unplaced.
        let mut order = Vec::with_capacity(n);
        let mut placed = vec![false; n];
        while order.len() < n {
            let before = order.len();
            for s in 0..n {
                if !placed[s] && parent[s].is_none_or(|p| placed[p]) {
                    placed[s] = true;
                    order.push(s);
                }
            }
            if order.len() == before {
                return Err(Error::invalid("joints", "kinematic tree contains a cycle"));
            }
        }

        let mut dof_offset = Vec::with_capacity(joints.len());
        let mut ndof = 0;
        let mut dof_names = Vec::new();
        for joint in joints {
            dof_offset.push(ndof);
            ndof += joint.kind.dof();
            dof_names.extend(dof_names_for(joint));
        }

        let mut ancestor_dofs = vec![Vec::new(); n];
        for &s in &order {
            let j = joint_of[s];
            let mut dofs = parent[s]
                .map(|p| ancestor_dofs[p].clone())
                .unwrap_or_default();
            dofs.extend(dof_offset[j]..dof_offset[j] + joints[j].kind.dof());
            dofs.sort_unstable();
            ancestor_dofs[s] = dofs;
        }

        let dofs_of = |sub: Subsystem| -> Range<usize> {
            let idx: Vec<usize> = joints
                .iter()
                .enumerate()
                .filter(|(_, jt)| segments[jt.child].subsystem == sub)
                .flat_map(|(j, jt)| dof_offset[j]..dof_offset[j] + jt.kind.dof())
                .collect();
            match (idx.first(), idx.last()) {
                (Some(&a), Some(&b)) => a..b + 1,
                _ => 0..0,
            }
        };
        let human_dofs = dofs_of(Subsystem::Human);
        let exo_dofs = dofs_of(Subsystem::Exo);

        let mut controlled = [0usize; 8];
        for (slot, name) in CONTROLLED_DOF_NAMES.iter().enumerate() {
            controlled[slot] = dof_names
                .iter()
                .position(|n| n == name)
                .unwrap_or(usize::MAX);
        }

        Ok(Self {
            joint_of,
            parent,
            dof_offset,
            ndof,
            order,
            ancestor_dofs,
            dof_names,
            human_dofs,
            exo_dofs,
            controlled,
        })
    }
}

fn dof_names_for(joint: &JointSpec) -> Vec<String> {
    match joint.kind {
        JointKind::Fixed => vec![],
        JointKind::Revolute => vec![joint.name.clone()],
        JointKind::Spherical => {
            // hip_l -> hip_flexion_l, hip_abduction_l, hip_rotation_l
            let (stem, side) = joint
                .name
                .rsplit_once('_')
                .unwrap_or((joint.name.as_str(), ""));
            ["flexion", "abduction", "rotation"]
                .iter()
                .map(|c| {
                    if side.is_empty() {
                        format!("{stem}_{c}")
                    } else {
                        format!("{stem}_{c}_{side}")
                    }
                })
                .collect()
        }
        JointKind::Free => ["tx", "ty", "tz", "tilt", "list", "rotation"]
            .iter()
            .map(|c| format!("{}_{c}", joint.name))
            .collect(),
    }
}
