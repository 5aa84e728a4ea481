use nalgebra::{DMatrix, DVector};

use super::grf::GrfResult;
use super::rnea::{mass_matrix, rnea, PointLoad, RneaResult};
use crate::error::{Error, Result};
use crate::model::{kinematics, KinematicState, ModelAssembly};
use crate::strap::{moment_arms_from, strap_loads};

/// Human joint torques from one inverse-dynamics sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct HumanTorques {
    /// One entry per human DOF, root first.
    pub tau: DVector<f64>,
    /// Hip flexion/abduction/rotation and knee per leg, left then right.
    pub controlled: DVector<f64>,
    /// Full sweep, kept for intersegmental forces.
    pub rnea: RneaResult,
}

/// Inverse dynamics of the human tree under arbitrary external loads.
///
/// `active` selects which segments carry inertia; exo segments only reach the
/// human through the tie at the pelvis and through the loads passed in.
pub fn inverse_dynamics_with_loads(
    assembly: &ModelAssembly,
    kin: &KinematicState,
    loads: &[PointLoad],
    active: &[bool],
) -> HumanTorques {
    let res = rnea(assembly, kin, loads, active);
    let human = assembly.human_dofs();
    let tau = res.tau.rows(human.start, human.len()).into_owned();
    let ctrl = assembly.controlled_dofs();
    let controlled = DVector::from_iterator(ctrl.len(), ctrl.iter().map(|&k| res.tau[k]));
    HumanTorques {
        tau,
        controlled,
        rnea: res,
    }
}

/// Human inverse dynamics with the ground reaction and, optionally, the strap
/// forces `f_s` (both the human and the exo side).
pub fn inverse_dynamics_human(
    assembly: &ModelAssembly,
    kin: &KinematicState,
    grf: &GrfResult,
    f_s: &DVector<f64>,
    include_straps: bool,
    active: &[bool],
) -> Result<HumanTorques> {
    let mut loads = Vec::with_capacity(9);
    if let Some(l) = grf.load(assembly)? {
        loads.push(l);
    }
    if include_straps {
        loads.extend(strap_loads(assembly, kin, f_s).all());
    }
    Ok(inverse_dynamics_with_loads(assembly, kin, &loads, active))
}

fn exo_block(assembly: &ModelAssembly, v: &DVector<f64>) -> DVector<f64> {
    let r = assembly.exo_dofs();
    v.rows(r.start, r.len()).into_owned()
}

/// Generalized exo forces needed to realize the accelerations in `kin`
/// under `loads` (exo rows of the full inverse dynamics).
pub fn inverse_dynamics_exo(
    assembly: &ModelAssembly,
    kin: &KinematicState,
    loads: &[PointLoad],
) -> DVector<f64> {
    let active = assembly.active_mask(true);
    exo_block(assembly, &rnea(assembly, kin, loads, &active).tau)
}

/// Exo accelerations under the generalized force `q_ext` (exo rows).
///
/// `kin0` must hold the current state with zero exo accelerations; the human
/// accelerations in it drive the load support through the tie.
pub fn exo_accelerations(
    assembly: &ModelAssembly,
    kin0: &KinematicState,
    q_ext: &DVector<f64>,
) -> Result<DVector<f64>> {
    let dofs: Vec<usize> = assembly.exo_dofs().collect();
    if q_ext.len() != dofs.len() {
        return Err(Error::Dimension {
            context: "exo generalized force",
            expected: dofs.len(),
            actual: q_ext.len(),
        });
    }
    let active = assembly.active_mask(true);
    let m: DMatrix<f64> = mass_matrix(assembly, kin0, &dofs, &active);
    let bias = inverse_dynamics_exo(assembly, kin0, &[]);
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::DegenerateModel("exo mass matrix is not positive definite".into()))?;
    Ok(chol.solve(&(q_ext - bias)))
}

/// Exo forward dynamics: `M q̈ = M_A F_A + M_SE F_S − bias`.
///
/// `q`, `qd` and `qdd` are full coordinate vectors; the exo entries of `qdd`
/// are ignored.
pub fn forward_dynamics_exo(
    assembly: &ModelAssembly,
    q: &[f64],
    qd: &[f64],
    qdd: &[f64],
    f_a: &DVector<f64>,
    f_s: &DVector<f64>,
) -> Result<DVector<f64>> {
    let mut acc = qdd.to_vec();
    for k in assembly.exo_dofs() {
        acc[k] = 0.0;
    }
    let kin0 = kinematics(assembly, q, qd, &acc)?;
    let arms = moment_arms_from(assembly, &kin0)?;
    if f_a.len() != arms.m_a.ncols() {
        return Err(Error::Dimension {
            context: "actuator forces",
            expected: arms.m_a.ncols(),
            actual: f_a.len(),
        });
    }
    let q_ext = &arms.m_a * f_a + &arms.m_se * f_s;
    exo_accelerations(assembly, &kin0, &q_ext)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::config::ModelConfig;
    use crate::model::{build_default_assembly, Side, Vec3};
    use crate::strap::{moment_arms_from, strap_forces_from, STRAP_FORCE_LEN};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn standing(a: &ModelAssembly) -> Vec<f64> {
        let mut q = a.zero_coordinates();
        q[1] = 0.92;
        q
    }

    fn state(a: &ModelAssembly, seed: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = a.ndof();
        let mut q = standing(a);
        let mut qd = vec![0.0; n];
        let mut qdd = vec![0.0; n];
        for k in 3..n {
            q[k] += 0.4 * seed[k % seed.len()];
            qd[k] = 2.0 * seed[(k + 5) % seed.len()];
            qdd[k] = 10.0 * seed[(k + 11) % seed.len()];
        }
        (q, qd, qdd)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn exo_id_fd_round_trip(
            seed in prop::collection::vec(-1.0..1.0f64, 17),
            f_a in prop::collection::vec(-2000.0..2000.0f64, 6),
            f_s in prop::collection::vec(-500.0..500.0f64, 12),
        ) {
            let a = build_default_assembly(&ModelConfig::default()).unwrap();
            let (q, qd, qdd) = state(&a, &seed);
            let f_a = DVector::from_vec(f_a);
            let f_s = DVector::from_vec(f_s);
            let acc = forward_dynamics_exo(&a, &q, &qd, &qdd, &f_a, &f_s).unwrap();
            let mut full = qdd.clone();
            for (i, k) in a.exo_dofs().enumerate() {
                full[k] = acc[i];
            }
            let kin = kinematics(&a, &q, &qd, &full).unwrap();
            let arms = moment_arms_from(&a, &kin).unwrap();
            let applied = &arms.m_a * &f_a + &arms.m_se * &f_s;
            let needed = inverse_dynamics_exo(&a, &kin, &[]);
            prop_assert!((&needed - &applied).norm() <= 1e-6 * (1.0 + applied.norm()));
        }

        #[test]
        fn exo_strap_loads_match_moment_arms(
            seed in prop::collection::vec(-1.0..1.0f64, 17),
            f_s in prop::collection::vec(-500.0..500.0f64, 12),
        ) {
            let a = build_default_assembly(&ModelConfig::default()).unwrap();
            let (q, qd, qdd) = state(&a, &seed);
            let kin = kinematics(&a, &q, &qd, &qdd).unwrap();
            let f_s = DVector::from_vec(f_s);
            let arms = moment_arms_from(&a, &kin).unwrap();
            let free = inverse_dynamics_exo(&a, &kin, &[]);
            let loaded = inverse_dynamics_exo(&a, &kin, &strap_loads(&a, &kin, &f_s).exo);
            // A load on the exo lowers the torque its joints must supply.
            let diff = &free - &loaded;
            prop_assert!((&diff - &arms.m_se * &f_s).norm() <= 1e-9 * (1.0 + diff.norm()));
            let human = inverse_dynamics_with_loads(&a, &kin, &strap_loads(&a, &kin, &f_s).human, &a.active_mask(true));
            let bare = inverse_dynamics_with_loads(&a, &kin, &[], &a.active_mask(true));
            let dh = &bare.controlled - &human.controlled;
            prop_assert!((&dh - &arms.m_sh * &f_s).norm() <= 1e-9 * (1.0 + dh.norm()));
        }
    }

    #[test]
    fn reference_pose_is_equilibrium() {
        let a = build_default_assembly(&ModelConfig::default()).unwrap();
        let q = standing(&a);
        let z = vec![0.0; a.ndof()];
        let kin0 = kinematics(&a, &q, &z, &z).unwrap();
        let acc = exo_accelerations(&a, &kin0, &DVector::zeros(6)).unwrap();
        assert!(acc.norm() < 1e-9, "{acc}");
    }

    #[test]
    fn doubled_inertia_halves_response() {
        let q_ext = DVector::from_vec(vec![3.0, -5.0, 2.0, 1.0, 4.0, -2.5]);
        let mut cfg = ModelConfig::default();
        let a1 = build_default_assembly(&cfg).unwrap();
        for part in [
            &mut cfg.exo.load_support,
            &mut cfg.exo.pelvis,
            &mut cfg.exo.femur,
            &mut cfg.exo.tibia,
        ] {
            part.mass *= 2.0;
            part.inertia = part.inertia.map(|v| 2.0 * v);
        }
        let a2 = build_default_assembly(&cfg).unwrap();
        let q = standing(&a1);
        let z = vec![0.0; a1.ndof()];
        let k1 = kinematics(&a1, &q, &z, &z).unwrap();
        let k2 = kinematics(&a2, &q, &z, &z).unwrap();
        let r1 = exo_accelerations(&a1, &k1, &q_ext).unwrap();
        let r2 = exo_accelerations(&a2, &k2, &q_ext).unwrap();
        assert_relative_eq!(r2 * 2.0, r1, epsilon = 1e-9);
    }

    #[test]
    fn zero_stiffness_decouples_human() {
        let mut cfg = ModelConfig::default();
        for s in [&mut cfg.straps.femur, &mut cfg.straps.tibia] {
            s.stiffness = [0.0; 3];
            s.damping = [0.0; 3];
        }
        let a = build_default_assembly(&cfg).unwrap();
        let mut q = standing(&a);
        let mut qd = vec![0.0; a.ndof()];
        for k in a.exo_dofs() {
            q[k] = 0.3;
            qd[k] = -1.0;
        }
        let z = vec![0.0; a.ndof()];
        let kin = kinematics(&a, &q, &qd, &z).unwrap();
        let f_s = strap_forces_from(&a, &kin).unwrap();
        assert_eq!(f_s.values, DVector::zeros(STRAP_FORCE_LEN));
        let grf = crate::dynamics::GrfResult::flight();
        let with = inverse_dynamics_human(&a, &kin, &grf, &f_s.values, true, &a.active_mask(false))
            .unwrap();
        let without =
            inverse_dynamics_human(&a, &kin, &grf, &f_s.values, false, &a.active_mask(false))
                .unwrap();
        assert_eq!(with.tau, without.tau);
    }

    #[test]
    fn strap_force_on_pendulum_shank() {
        // A single fore-aft strap force f on the shank, at distance r below
        // the knee, changes the knee torque by −f·r.
        let a = build_default_assembly(&ModelConfig::default()).unwrap();
        let q = standing(&a);
        let z = vec![0.0; a.ndof()];
        let kin = kinematics(&a, &q, &z, &z).unwrap();
        let strap = a.straps.iter().position(|s| s.name == "tibia-L").unwrap();
        let s = &a.straps[strap];
        let knee = kin.pose(s.body_segment).origin;
        let point = kin.pose(s.body_segment).transform_point(&s.body_point);
        let r = knee.y - point.y;
        let f = 120.0;
        let mut f_s = DVector::zeros(STRAP_FORCE_LEN);
        f_s[3 * strap] = f;
        let active = a.active_mask(false);
        let loads = strap_loads(&a, &kin, &f_s).human;
        let base = inverse_dynamics_with_loads(&a, &kin, &[], &active);
        let loaded = inverse_dynamics_with_loads(&a, &kin, &loads, &active);
        let k = a
            .dof_index(&format!("knee_angle_{}", Side::Left.suffix()))
            .unwrap();
        // Knee extension is a positive rotation about +z; a forward push
        // below the knee extends it.
        let axis_z = Vec3::z();
        let lever = (point - knee).cross(&Vec3::new(f, 0.0, 0.0)).dot(&axis_z);
        assert_relative_eq!(lever, f * r, epsilon = 1e-12);
        assert_relative_eq!(loaded.tau[k] - base.tau[k], -f * r, epsilon = 1e-9);
    }
}
