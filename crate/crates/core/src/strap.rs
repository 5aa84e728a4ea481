//! Tri-directional damped strap springs and the generalized moment-arm
//! matrices that map strap and actuator forces onto joint torques.
//!
//! Each strap pairs a point on a human segment with a point on an exo
//! segment. Their separation is resolved in the human segment frame
//! (x fore-aft, y along the limb, z lateral) and every component carries an
//! independent linear spring and damper. The 12-component force vector is
//! ordered femur-L, femur-R, tibia-L, tibia-R, each as (x, y, z); a positive
//! component pulls the human point toward the exo point along that axis.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::PointLoad;
use crate::error::{Error, Result};
use crate::lsq::min_norm_solve;
use crate::model::config::StrapConfig;
use crate::model::{kinematics, KinematicState, ModelAssembly, Vec3};

pub const STRAP_COUNT: usize = 4;
pub const STRAP_FORCE_LEN: usize = 3 * STRAP_COUNT;

#[derive(Clone, Debug, PartialEq)]
pub struct StrapElement {
    pub name: String,
    pub exo_segment: usize,
    pub exo_point: Vec3,
    pub body_segment: usize,
    pub body_point: Vec3,
    pub rest_offset: Vec3,
    pub stiffness: Vec3,
    /// Stiffness applied when a displacement component is negative.
    pub stiffness_negative: Option<Vec3>,
    pub damping: Vec3,
    pub contact_area: f64,
}

impl StrapElement {
    pub fn new(
        name: String,
        exo: (usize, Vec3),
        body: (usize, Vec3),
        rest_offset: Vec3,
        cfg: &StrapConfig,
    ) -> Result<Self> {
        let field = |f: &str| format!("straps.{name}.{f}");
        let nonneg = |v: &[f64; 3]| v.iter().all(|x| x.is_finite() && *x >= 0.0);
        if !nonneg(&cfg.stiffness) {
            return Err(Error::invalid(field("stiffness"), "must be non-negative"));
        }
        if !nonneg(&cfg.damping) {
            return Err(Error::invalid(field("damping"), "must be non-negative"));
        }
        if cfg.stiffness_negative.is_some_and(|k| !nonneg(&k)) {
            return Err(Error::invalid(
                field("stiffness_negative"),
                "must be non-negative",
            ));
        }
        if !(cfg.contact_area.is_finite() && cfg.contact_area > 0.0) {
            return Err(Error::invalid(field("contact_area"), "must be positive"));
        }
        Ok(Self {
            name,
            exo_segment: exo.0,
            exo_point: exo.1,
            body_segment: body.0,
            body_point: body.1,
            rest_offset,
            stiffness: Vec3::from(cfg.stiffness),
            stiffness_negative: cfg.stiffness_negative.map(Vec3::from),
            damping: Vec3::from(cfg.damping),
            contact_area: cfg.contact_area,
        })
    }

    /// Local force for a displacement from rest and its rate.
    pub fn local_force(&self, stretch: &Vec3, rate: &Vec3) -> Vec3 {
        Vec3::from_fn(|i, _| {
            let k = match self.stiffness_negative {
                Some(kn) if stretch[i] < 0.0 => kn[i],
                _ => self.stiffness[i],
            };
            k * stretch[i] + self.damping[i] * rate[i]
        })
    }
}

/// Strap forces for one state plus per-strap diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct SpringForceVector {
    /// 12 components in the documented ordering.
    pub values: DVector<f64>,
    /// Displacement from rest per strap, human segment frame.
    pub stretch: Vec<Vec3>,
    /// Rate of separation per strap, human segment frame.
    pub rate: Vec<Vec3>,
}

impl SpringForceVector {
    pub fn zeros() -> Self {
        Self {
            values: DVector::zeros(STRAP_FORCE_LEN),
            stretch: vec![Vec3::zeros(); STRAP_COUNT],
            rate: vec![Vec3::zeros(); STRAP_COUNT],
        }
    }

    pub fn strap(&self, i: usize) -> Vec3 {
        Vec3::new(
            self.values[3 * i],
            self.values[3 * i + 1],
            self.values[3 * i + 2],
        )
    }
}

fn check_straps(assembly: &ModelAssembly) -> Result<()> {
    if assembly.straps.len() != STRAP_COUNT {
        return Err(Error::Dimension {
            context: "strap count",
            expected: STRAP_COUNT,
            actual: assembly.straps.len(),
        });
    }
    Ok(())
}

/// Strap forces from a completed kinematic sweep.
pub fn strap_forces_from(
    assembly: &ModelAssembly,
    kin: &KinematicState,
) -> Result<SpringForceVector> {
    check_straps(assembly)?;
    let mut out = SpringForceVector::zeros();
    for (i, s) in assembly.straps.iter().enumerate() {
        let h = &kin.segments[s.body_segment];
        let e = &kin.segments[s.exo_segment];
        let ph = h.point_position(&s.body_point);
        let pe = e.point_position(&s.exo_point);
        let vh = h.point_velocity(&s.body_point);
        let ve = e.point_velocity(&s.exo_point);
        let rt = h.pose.rotation.transpose();
        let sep = pe - ph;
        let stretch = rt * sep - s.rest_offset;
        let rate = rt * ((ve - vh) - h.omega.cross(&sep));
        let f = s.local_force(&stretch, &rate);
        out.values.fixed_rows_mut::<3>(3 * i).copy_from(&f);
        out.stretch[i] = stretch;
        out.rate[i] = rate;
    }
    Ok(out)
}

/// Strap forces for combined coordinates `q` and rates `qd` (human then exo).
pub fn strap_forces(assembly: &ModelAssembly, q: &[f64], qd: &[f64]) -> Result<SpringForceVector> {
    let zeros = vec![0.0; assembly.ndof()];
    let kin = kinematics(assembly, q, qd, &zeros)?;
    strap_forces_from(assembly, &kin)
}

/// World-frame point loads a strap force vector applies to each side.
#[derive(Clone, Debug, PartialEq)]
pub struct StrapLoads {
    pub human: Vec<PointLoad>,
    pub exo: Vec<PointLoad>,
}

impl StrapLoads {
    pub fn all(&self) -> Vec<PointLoad> {
        self.human.iter().chain(self.exo.iter()).copied().collect()
    }
}

pub fn strap_loads(
    assembly: &ModelAssembly,
    kin: &KinematicState,
    forces: &DVector<f64>,
) -> StrapLoads {
    let mut human = Vec::with_capacity(STRAP_COUNT);
    let mut exo = Vec::with_capacity(STRAP_COUNT);
    for (i, s) in assembly.straps.iter().enumerate() {
        let h = &kin.segments[s.body_segment];
        let e = &kin.segments[s.exo_segment];
        let f_local = Vec3::new(forces[3 * i], forces[3 * i + 1], forces[3 * i + 2]);
        let f = h.pose.rotation * f_local;
        human.push(PointLoad::force(
            s.body_segment,
            h.point_position(&s.body_point),
            f,
        ));
        exo.push(PointLoad::force(
            s.exo_segment,
            e.point_position(&s.exo_point),
            -f,
        ));
    }
    StrapLoads { human, exo }
}

/// Generalized moment arms at one configuration.
///
/// `m_a` (6×6) maps actuator forces to exo joint torques, `m_se` (6×12) maps
/// strap forces to exo joint torques and `m_sh` (8×12) maps strap forces to
/// the controlled human joint torques.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentArmSet {
    pub m_a: DMatrix<f64>,
    pub m_se: DMatrix<f64>,
    pub m_sh: DMatrix<f64>,
}

pub fn moment_arms_from(assembly: &ModelAssembly, kin: &KinematicState) -> Result<MomentArmSet> {
    check_straps(assembly)?;
    let exo = assembly.exo_dofs();
    let ctrl = assembly.controlled_dofs();
    let n_exo = exo.len();
    let mut m_se = DMatrix::zeros(n_exo, STRAP_FORCE_LEN);
    let mut m_sh = DMatrix::zeros(ctrl.len(), STRAP_FORCE_LEN);
    for (i, s) in assembly.straps.iter().enumerate() {
        let h = &kin.segments[s.body_segment];
        let e = &kin.segments[s.exo_segment];
        let ph = h.point_position(&s.body_point);
        let pe = e.point_position(&s.exo_point);
        let jh = kin.point_jacobian(assembly, s.body_segment, &ph);
        let je = kin.point_jacobian(assembly, s.exo_segment, &pe);
        for d in 0..3 {
            let u = h.pose.rotation.column(d).into_owned();
            let col = 3 * i + d;
            for (r, &k) in ctrl.iter().enumerate() {
                m_sh[(r, col)] = jh.column(k).dot(&u);
            }
            for (r, k) in exo.clone().enumerate() {
                m_se[(r, col)] = -je.column(k).dot(&u);
            }
        }
    }

    let mut m_a = DMatrix::zeros(n_exo, assembly.actuators.len());
    for (i, act) in assembly.actuators.iter().enumerate() {
        let (sa, la) = act.endpoint_a;
        let (sb, lb) = act.endpoint_b;
        let pa = kin.segments[sa].point_position(&la);
        let pb = kin.segments[sb].point_position(&lb);
        let sep = pb - pa;
        let len = sep.norm();
        if len < 1e-9 {
            return Err(Error::DegenerateGeometry(format!(
                "actuator {} endpoints coincide",
                act.name
            )));
        }
        let n = sep / len;
        let ja = kin.point_jacobian(assembly, sa, &pa);
        let jb = kin.point_jacobian(assembly, sb, &pb);
        for (r, k) in exo.clone().enumerate() {
            m_a[(r, i)] = ja.column(k).dot(&n) - jb.column(k).dot(&n);
        }
    }
    Ok(MomentArmSet { m_a, m_se, m_sh })
}

pub fn moment_arms(assembly: &ModelAssembly, q: &[f64]) -> Result<MomentArmSet> {
    let zeros = vec![0.0; assembly.ndof()];
    let kin = kinematics(assembly, q, &zeros, &zeros)?;
    moment_arms_from(assembly, &kin)
}

/// Contact pressure per strap from its fore-aft force component (Pa).
/// Exo coordinates that best match the strap rest offsets for the human
/// coordinates `q_h`, weighted by stiffness (Gauss–Newton from `warm`).
pub fn fit_exo_posture(
    assembly: &ModelAssembly,
    q_h: &[f64],
    warm: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = assembly.exo_dofs().len();
    if q_h.len() + n != assembly.ndof() || warm.len() != n {
        return Err(Error::Dimension {
            context: "exo posture fit",
            expected: assembly.ndof(),
            actual: q_h.len() + warm.len(),
        });
    }
    let zero = vec![0.0; assembly.ndof()];
    let weights: Vec<f64> = assembly
        .straps
        .iter()
        .flat_map(|s| {
            s.stiffness
                .iter()
                .map(|k| k.max(1e-9).sqrt())
                .collect::<Vec<_>>()
        })
        .collect();
    let residual = |qe: &DVector<f64>| -> Result<DVector<f64>> {
        let q: Vec<f64> = q_h.iter().chain(qe.iter()).copied().collect();
        let kin = kinematics(assembly, &q, &zero, &zero)?;
        let f = strap_forces_from(assembly, &kin)?;
        Ok(DVector::from_iterator(
            STRAP_FORCE_LEN,
            f.stretch
                .iter()
                .flat_map(|d| d.iter().copied().collect::<Vec<_>>())
                .zip(&weights)
                .map(|(d, w)| d * w),
        ))
    };
    let mut qe = warm.clone();
    for _ in 0..30 {
        let r = residual(&qe)?;
        let mut jac = DMatrix::zeros(STRAP_FORCE_LEN, n);
        let eps = 1e-7;
        for k in 0..n {
            let mut qp = qe.clone();
            qp[k] += eps;
            jac.set_column(k, &((residual(&qp)? - &r) / eps));
        }
        let step = min_norm_solve(&jac, &(-r));
        qe += &step;
        if step.norm() < 1e-12 {
            break;
        }
    }
    Ok(qe)
}

pub fn strap_pressure(forces: &DVector<f64>, straps: &[StrapElement]) -> Result<Vec<f64>> {
    if forces.len() != 3 * straps.len() {
        return Err(Error::Dimension {
            context: "strap force vector",
            expected: 3 * straps.len(),
            actual: forces.len(),
        });
    }
    straps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if s.contact_area > 0.0 {
                Ok(forces[3 * i].abs() / s.contact_area)
            } else {
                Err(Error::invalid(
                    format!("straps.{}.contact_area", s.name),
                    "must be positive",
                ))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_default_assembly, forward_kinematics, ModelConfig};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assembly() -> ModelAssembly {
        build_default_assembly(&ModelConfig::default()).unwrap()
    }

    fn random_vec(n: usize, rng: &mut ChaCha8Rng, scale: f64) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-scale..scale)).collect()
    }

    #[test]
    fn reference_pose_is_force_free() {
        let a = assembly();
        let z = a.zero_coordinates();
        let f = strap_forces(&a, &z, &z).unwrap();
        assert!(f.values.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn fore_aft_displacement() {
        let a = assembly();
        let mut s = a.straps[0].clone();
        s.rest_offset = Vec3::zeros();
        let f = s.local_force(&Vec3::new(0.005, 0.0, 0.0), &Vec3::zeros());
        assert_relative_eq!(f.x, 800.0, epsilon = 1e-9);
        let f = s.local_force(&Vec3::zeros(), &Vec3::new(0.0, 0.1, 0.0));
        assert_relative_eq!(f.y, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn six_direction_stiffness() {
        let mut s = assembly().straps[0].clone();
        s.stiffness_negative = Some(Vec3::new(1000.0, 10.0, 10.0));
        let f = s.local_force(&Vec3::new(-0.01, 0.01, 0.0), &Vec3::zeros());
        assert_relative_eq!(f.x, -10.0);
        assert_relative_eq!(f.y, 16.0);
    }

    #[test]
    fn shared_motion_leaves_strap_relaxed() {
        // Shifting the root moves both sides together.
        let a = assembly();
        let mut q = a.zero_coordinates();
        let mut qd = a.zero_coordinates();
        q[0] = 1.3;
        q[1] = 0.9;
        q[3] = 0.2;
        qd[0] = 4.0;
        qd[3] = 1.0;
        let f = strap_forces(&a, &q, &qd).unwrap();
        assert!(f.values.iter().all(|v| v.abs() < 1e-8), "{:?}", f.values);
    }

    #[test]
    fn exo_offset_in_body_frame() {
        let a = assembly();
        let mut q = a.zero_coordinates();
        // Flex the human thigh and the exo femur together; a pure exo knee
        // offset then shows up only on the tibia strap.
        q[6] = 0.4;
        q[17] = 0.4;
        let f = strap_forces(&a, &q, &a.zero_coordinates()).unwrap();
        for i in 0..3 {
            assert!(f.values[i].abs() < 1e-8);
        }
        q[18] = 0.01;
        let f = strap_forces(&a, &q, &a.zero_coordinates()).unwrap();
        // Tibia-L x: exo point 0.20 m below the knee rotates forward.
        assert_relative_eq!(
            f.values[6],
            160_000.0 * 0.20 * 0.01_f64.sin(),
            max_relative = 1e-3
        );
    }

    #[test]
    fn moment_arms_match_virtual_work() {
        let a = assembly();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let q = random_vec(a.ndof(), &mut rng, 0.6);
            let fs = DVector::from_vec(random_vec(STRAP_FORCE_LEN, &mut rng, 500.0));
            let m = moment_arms(&a, &q).unwrap();
            let tau_se = &m.m_se * &fs;
            let tau_sh = &m.m_sh * &fs;
            let kin = kinematics(&a, &q, &a.zero_coordinates(), &a.zero_coordinates()).unwrap();
            let loads = strap_loads(&a, &kin, &fs);
            let work = |qq: &[f64], loads: &[PointLoad]| -> f64 {
                let poses = forward_kinematics(&a, qq).unwrap();
                loads
                    .iter()
                    .map(|l| {
                        let local = kin.segments[l.segment]
                            .pose
                            .inverse_transform_point(&l.point);
                        l.force.dot(&poses[l.segment].transform_point(&local))
                    })
                    .sum()
            };
            let h = 1e-6;
            let fd = |k: usize, loads: &[PointLoad]| {
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[k] += h;
                qm[k] -= h;
                (work(&qp, loads) - work(&qm, loads)) / (2.0 * h)
            };
            for (r, k) in a.exo_dofs().enumerate() {
                let g = fd(k, &loads.exo);
                assert!(
                    (g - tau_se[r]).abs() <= 1e-4 * g.abs().max(1.0),
                    "exo dof {k}: {g} vs {}",
                    tau_se[r]
                );
            }
            for (r, &k) in a.controlled_dofs().iter().enumerate() {
                let g = fd(k, &loads.human);
                assert!(
                    (g - tau_sh[r]).abs() <= 1e-4 * g.abs().max(1.0),
                    "human dof {k}"
                );
            }
        }
    }

    #[test]
    fn actuator_arms_match_length_gradient() {
        let a = assembly();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let q = random_vec(a.ndof(), &mut rng, 0.5);
        let m = moment_arms(&a, &q).unwrap();
        let length = |qq: &[f64], i: usize| {
            let poses = forward_kinematics(&a, qq).unwrap();
            let act = &a.actuators[i];
            (poses[act.endpoint_b.0].transform_point(&act.endpoint_b.1)
                - poses[act.endpoint_a.0].transform_point(&act.endpoint_a.1))
            .norm()
        };
        for i in 0..6 {
            for (r, k) in a.exo_dofs().enumerate() {
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[k] += 1e-6;
                qm[k] -= 1e-6;
                let dl = (length(&qp, i) - length(&qm, i)) / 2e-6;
                assert!((m.m_a[(r, i)] + dl).abs() < 1e-7);
            }
        }
        // Each actuator spans only its own joint.
        for r in 0..6 {
            for c in 0..6 {
                if r != c {
                    assert!(m.m_a[(r, c)].abs() < 1e-12);
                }
            }
        }
        // Pull flexes the hip, abducts the exo pelvis, flexes the knee.
        let z = moment_arms(&a, &a.zero_coordinates()).unwrap();
        assert!(z.m_a[(0, 0)] > 0.0 && z.m_a[(1, 1)] > 0.0 && z.m_a[(2, 2)] < 0.0);
    }

    #[test]
    fn moment_arms_independent_of_stiffness() {
        let a = assembly();
        let mut b = a.clone();
        for s in &mut b.straps {
            s.stiffness *= 3.0;
            s.damping *= 0.5;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let q = random_vec(a.ndof(), &mut rng, 0.5);
        assert_eq!(moment_arms(&a, &q).unwrap(), moment_arms(&b, &q).unwrap());
    }

    #[test]
    fn line_through_axis_has_zero_arm() {
        // Strap x direction at the reference pose on the femur: human point
        // lies directly below the hip, so a vertical (y) force has no
        // flexion moment.
        let a = assembly();
        let m = moment_arms(&a, &a.zero_coordinates()).unwrap();
        assert!(m.m_sh[(0, 1)].abs() < 1e-12);
        assert!(m.m_se[(1, 1)].abs() < 1e-12);
    }

    #[test]
    fn coincident_actuator_endpoints_rejected() {
        let mut a = assembly();
        let poses = forward_kinematics(&a, &a.zero_coordinates()).unwrap();
        let (sa, la) = a.actuators[1].endpoint_a;
        let world = poses[sa].transform_point(&la);
        let sb = a.actuators[1].endpoint_b.0;
        a.actuators[1].endpoint_b.1 = poses[sb].inverse_transform_point(&world);
        assert!(matches!(
            moment_arms(&a, &a.zero_coordinates()),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn pressure() {
        let a = assembly();
        let mut f = DVector::zeros(12);
        f[0] = 838.0;
        f[3] = -500.0;
        let p = strap_pressure(&f, &a.straps).unwrap();
        assert_relative_eq!(p[0], 41_900.0, epsilon = 1e-9);
        assert_relative_eq!(p[1], 25_000.0, epsilon = 1e-9);
        assert_eq!(p[2], 0.0);
        let mut straps = a.straps.clone();
        straps[2].contact_area = 0.0;
        assert!(strap_pressure(&f, &straps).is_err());
    }
}
