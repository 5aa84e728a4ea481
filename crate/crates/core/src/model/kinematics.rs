use nalgebra::{Matrix3xX, Rotation3, Unit};

use super::{JointKind, Mat3, ModelAssembly, Vec3};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub rotation: Mat3,
    pub origin: Vec3,
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            origin: Vec3::zeros(),
        }
    }

    pub fn transform_point(&self, local: &Vec3) -> Vec3 {
        self.origin + self.rotation * local
    }

    pub fn inverse_transform_point(&self, world: &Vec3) -> Vec3 {
        self.rotation.transpose() * (world - self.origin)
    }
}

/// World-frame motion of a segment frame origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentMotion {
    pub pose: Pose,
    pub omega: Vec3,
    pub alpha: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
}

impl SegmentMotion {
    fn at_rest() -> Self {
        Self {
            pose: Pose::identity(),
            omega: Vec3::zeros(),
            alpha: Vec3::zeros(),
            velocity: Vec3::zeros(),
            acceleration: Vec3::zeros(),
        }
    }

    /// Move the reference point by a world-frame offset fixed in the body.
    fn shift(&mut self, r: &Vec3) {
        self.pose.origin += r;
        self.velocity += self.omega.cross(r);
        self.acceleration += self.alpha.cross(r) + self.omega.cross(&self.omega.cross(r));
    }

    fn prismatic(&mut self, dir: &Vec3, s: f64, sd: f64, sdd: f64) {
        let r = dir * s;
        self.shift(&r);
        self.velocity += dir * sd;
        self.acceleration += 2.0 * self.omega.cross(&(dir * sd)) + dir * sdd;
    }

    fn revolute(&mut self, axis_local: &Vec3, th: f64, thd: f64, thdd: f64) -> Vec3 {
        let e = self.pose.rotation * axis_local;
        let rot = Rotation3::from_axis_angle(&Unit::new_normalize(*axis_local), th);
        self.pose.rotation *= rot.matrix();
        let w_rel = e * thd;
        self.alpha += e * thdd + self.omega.cross(&w_rel);
        self.omega += w_rel;
        e
    }

    pub fn point_position(&self, local: &Vec3) -> Vec3 {
        self.pose.transform_point(local)
    }

    pub fn point_velocity(&self, local: &Vec3) -> Vec3 {
        let r = self.pose.rotation * local;
        self.velocity + self.omega.cross(&r)
    }

    pub fn point_acceleration(&self, local: &Vec3) -> Vec3 {
        let r = self.pose.rotation * local;
        self.acceleration + self.alpha.cross(&r) + self.omega.cross(&self.omega.cross(&r))
    }
}

/// Instantaneous world axis of one generalized coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DofAxis {
    Revolute { axis: Vec3, point: Vec3 },
    Prismatic { axis: Vec3 },
}

impl DofAxis {
    /// Velocity of world point `p` per unit rate of this coordinate.
    pub fn linear_column(&self, p: &Vec3) -> Vec3 {
        match self {
            DofAxis::Revolute { axis, point } => axis.cross(&(p - point)),
            DofAxis::Prismatic { axis } => *axis,
        }
    }

    pub fn angular_column(&self) -> Vec3 {
        match self {
            DofAxis::Revolute { axis, .. } => *axis,
            DofAxis::Prismatic { .. } => Vec3::zeros(),
        }
    }
}

/// Result of one kinematic sweep over the tree.
#[derive(Clone, Debug)]
pub struct KinematicState {
    pub segments: Vec<SegmentMotion>,
    pub dof_axes: Vec<DofAxis>,
}

impl KinematicState {
    pub fn pose(&self, segment: usize) -> &Pose {
        &self.segments[segment].pose
    }

    /// 3×N linear Jacobian of a world point rigidly attached to `segment`.
    pub fn point_jacobian(
        &self,
        assembly: &ModelAssembly,
        segment: usize,
        world_point: &Vec3,
    ) -> Matrix3xX<f64> {
        let mut j = Matrix3xX::zeros(self.dof_axes.len());
        for &k in &assembly.topo().ancestor_dofs[segment] {
            j.set_column(k, &self.dof_axes[k].linear_column(world_point));
        }
        j
    }

    /// 3×N angular Jacobian of `segment`.
    pub fn angular_jacobian(&self, assembly: &ModelAssembly, segment: usize) -> Matrix3xX<f64> {
        let mut j = Matrix3xX::zeros(self.dof_axes.len());
        for &k in &assembly.topo().ancestor_dofs[segment] {
            j.set_column(k, &self.dof_axes[k].angular_column());
        }
        j
    }

    pub fn com_position(&self, assembly: &ModelAssembly, segment: usize) -> Vec3 {
        self.segments[segment].point_position(&assembly.segments[segment].com_offset)
    }

    pub fn com_velocity(&self, assembly: &ModelAssembly, segment: usize) -> Vec3 {
        self.segments[segment].point_velocity(&assembly.segments[segment].com_offset)
    }

    pub fn com_acceleration(&self, assembly: &ModelAssembly, segment: usize) -> Vec3 {
        self.segments[segment].point_acceleration(&assembly.segments[segment].com_offset)
    }

    /// World inertia tensor of `segment` about its COM.
    pub fn world_inertia(&self, assembly: &ModelAssembly, segment: usize) -> Mat3 {
        let r = &self.segments[segment].pose.rotation;
        r * Mat3::from_diagonal(&assembly.segments[segment].inertia_diag) * r.transpose()
    }
}

fn check_len(context: &'static str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::Dimension {
            context,
            expected: n,
            actual: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Trajectory(format!("non-finite entry in {context}")));
    }
    Ok(())
}

/// Positions, velocities and accelerations of every segment frame.
pub fn kinematics(
    assembly: &ModelAssembly,
    q: &[f64],
    qd: &[f64],
    qdd: &[f64],
) -> Result<KinematicState> {
    let n = assembly.ndof();
    check_len("coordinates", q, n)?;
    check_len("velocities", qd, n)?;
    check_len("accelerations", qdd, n)?;
    let topo = assembly.topo();
    let mut segments = vec![SegmentMotion::at_rest(); assembly.segments.len()];
    let mut dof_axes = vec![
        DofAxis::Prismatic {
            axis: Vec3::zeros()
        };
        n
    ];

    for &s in &topo.order {
        let j = topo.joint_of[s];
        let joint = &assembly.joints[j];
        let mut m = match topo.parent[s] {
            Some(p) => segments[p],
            None => SegmentMotion::at_rest(),
        };
        let anchor = m.pose.rotation * joint.anchor;
        m.shift(&anchor);
        let k0 = topo.dof_offset[j];
        let mut k = k0;
        if joint.kind == JointKind::Free {
            for c in 0..3 {
                let dir = m.pose.rotation.column(c).into_owned();
                m.prismatic(&dir, q[k], qd[k], qdd[k]);
                dof_axes[k] = DofAxis::Prismatic { axis: dir };
                k += 1;
            }
        }
        if matches!(
            joint.kind,
            JointKind::Free | JointKind::Spherical | JointKind::Revolute
        ) {
            let count = k0 + joint.kind.dof() - k;
            for axis in joint.axes.iter().take(count) {
                let e = m.revolute(axis, q[k], qd[k], qdd[k]);
                dof_axes[k] = DofAxis::Revolute {
                    axis: e,
                    point: m.pose.origin,
                };
                k += 1;
            }
        }
        segments[s] = m;
    }
    Ok(KinematicState { segments, dof_axes })
}

/// Per-segment world poses for coordinates `q`.
pub fn forward_kinematics(assembly: &ModelAssembly, q: &[f64]) -> Result<Vec<Pose>> {
    let zeros = vec![0.0; assembly.ndof()];
    let state = kinematics(assembly, q, &zeros, &zeros)?;
    Ok(state.segments.into_iter().map(|m| m.pose).collect())
}

/// Jacobian of a point given in a named segment's local frame.
pub fn point_jacobian(
    assembly: &ModelAssembly,
    q: &[f64],
    segment: &str,
    local_point: &Vec3,
) -> Result<Matrix3xX<f64>> {
    let s = assembly.segment_index(segment)?;
    let zeros = vec![0.0; assembly.ndof()];
    let state = kinematics(assembly, q, &zeros, &zeros)?;
    let p = state.segments[s].point_position(local_point);
    Ok(state.point_jacobian(assembly, s, &p))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComKinematics {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
}

pub fn com_kinematics(
    assembly: &ModelAssembly,
    q: &[f64],
    qd: &[f64],
    qdd: &[f64],
) -> Result<Vec<ComKinematics>> {
    let state = kinematics(assembly, q, qd, qdd)?;
    Ok((0..assembly.segments.len())
        .map(|s| ComKinematics {
            position: state.com_position(assembly, s),
            velocity: state.com_velocity(assembly, s),
            acceleration: state.com_acceleration(assembly, s),
        })
        .collect())
}
