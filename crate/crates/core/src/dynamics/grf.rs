use super::PointLoad;
use crate::error::{Error, Result};
use crate::model::{KinematicState, ModelAssembly, Side, Vec3};

pub const DEFAULT_FRICTION: f64 = 0.8;

/// Ground reaction on the stance foot.
#[derive(Clone, Debug, PartialEq)]
pub struct GrfResult {
    pub force: Vec3,
    /// Center of pressure on the ground plane; `None` in flight.
    pub cop: Option<Vec3>,
    /// Vertical free moment about the CoP (N·m).
    pub free_moment: f64,
    /// Part of the whole-body moment the foot cannot supply once the CoP is
    /// clamped to the foot (N·m, about the origin).
    pub residual_moment: Vec3,
    /// Horizontal force removed by the friction clamp (N).
    pub friction_clamp: f64,
    pub stance_foot: Option<Side>,
}

impl GrfResult {
    pub fn flight() -> Self {
        Self {
            force: Vec3::zeros(),
            cop: None,
            free_moment: 0.0,
            residual_moment: Vec3::zeros(),
            friction_clamp: 0.0,
            stance_foot: None,
        }
    }

    /// The reaction as an external load on the stance foot.
    pub fn load(&self, assembly: &ModelAssembly) -> Result<Option<PointLoad>> {
        match (self.stance_foot, self.cop) {
            (Some(side), Some(cop)) => Ok(Some(PointLoad {
                segment: assembly.foot_segment(side)?,
                point: cop,
                force: self.force,
                moment: Vec3::new(0.0, self.free_moment, 0.0),
            })),
            _ => Ok(None),
        }
    }
}

/// Net force and moment about the origin that the ground must supply to
/// produce the current motion of the active segments.
pub fn required_wrench(
    assembly: &ModelAssembly,
    kin: &KinematicState,
    active: &[bool],
) -> (Vec3, Vec3) {
    let g = assembly.gravity;
    let mut force = Vec3::zeros();
    let mut moment = Vec3::zeros();
    for s in (0..assembly.segments.len()).filter(|&s| active[s]) {
        let m = &kin.segments[s];
        let c = kin.com_position(assembly, s);
        let i_w = kin.world_inertia(assembly, s);
        let f = assembly.segments[s].mass * (kin.com_acceleration(assembly, s) - g);
        force += f;
        moment += c.cross(&f) + i_w * m.alpha + m.omega.cross(&(i_w * m.omega));
    }
    (force, moment)
}

/// Equivalent-force GRF prediction for running: the whole-system momentum
/// balance fixes the force, the horizontal moment balance fixes the CoP on
/// the ground plane, and what is left of the vertical moment is the free
/// moment. The force is clamped to the friction cone and the CoP to the foot
/// outline.
pub fn predict_grf(
    assembly: &ModelAssembly,
    kin: &KinematicState,
    contact: [bool; 2],
    active: &[bool],
    mu: f64,
) -> Result<GrfResult> {
    let side = match contact {
        [false, false] => return Ok(GrfResult::flight()),
        [true, true] => {
            return Err(Error::UnsupportedPhase(
                "both feet in stance; double support is not modeled".into(),
            ))
        }
        [true, false] => Side::Left,
        [false, true] => Side::Right,
    };
    let (mut f, h) = required_wrench(assembly, kin, active);

    let foot = assembly.foot_segment(side)?;
    let pose = kin.pose(foot);
    let ankle = Vec3::new(pose.origin.x, 0.0, pose.origin.z);
    let heading = {
        let x = pose.rotation.column(0);
        let u = Vec3::new(x[0], 0.0, x[2]);
        if u.norm() > 1e-6 {
            u.normalize()
        } else {
            Vec3::x()
        }
    };
    let lateral = Vec3::new(-heading.z, 0.0, heading.x);

    if f.y <= 0.0 {
        // The motion asks the ground to pull: the foot is unloaded.
        return Ok(GrfResult {
            force: Vec3::zeros(),
            cop: Some(ankle),
            free_moment: 0.0,
            residual_moment: h,
            friction_clamp: 0.0,
            stance_foot: Some(side),
        });
    }

    let horiz = (f.x * f.x + f.z * f.z).sqrt();
    let cap = mu * f.y;
    let mut clamp = 0.0;
    if horiz > cap {
        let s = cap / horiz;
        f.x *= s;
        f.z *= s;
        clamp = horiz - cap;
        log::debug!("friction clamp removed {clamp:.1} N of horizontal GRF");
    }

    let raw = Vec3::new(h.z / f.y, 0.0, -h.x / f.y);
    let rel = raw - ankle;
    let g = &assembly.foot;
    let along = rel.dot(&heading).clamp(-g.heel_length, g.toe_length);
    let across = rel.dot(&lateral).clamp(-g.half_width, g.half_width);
    let cop = ankle + heading * along + lateral * across;
    let arm = cop.cross(&f);
    let free_moment = h.y - arm.y;
    let residual = h - arm - Vec3::new(0.0, free_moment, 0.0);
    Ok(GrfResult {
        force: f,
        cop: Some(cop),
        free_moment,
        residual_moment: residual,
        friction_clamp: clamp,
        stance_foot: Some(side),
    })
}
