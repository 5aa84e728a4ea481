use nalgebra::{DMatrix, DVector};

use crate::model::{DofAxis, KinematicState, ModelAssembly, Vec3};

/// External force (and optional couple) applied at a world point on a segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointLoad {
    pub segment: usize,
    pub point: Vec3,
    pub force: Vec3,
    pub moment: Vec3,
}

impl PointLoad {
    pub fn force(segment: usize, point: Vec3, force: Vec3) -> Self {
        Self {
            segment,
            point,
            force,
            moment: Vec3::zeros(),
        }
    }
}

/// Joint torques plus the net wrench each subtree receives from its parent.
#[derive(Clone, Debug, PartialEq)]
pub struct RneaResult {
    pub tau: DVector<f64>,
    /// Force transmitted from parent to each segment's subtree.
    pub subtree_force: Vec<Vec3>,
    /// Matching moment about the world origin.
    pub subtree_moment: Vec<Vec3>,
}

/// Recursive Newton–Euler inverse dynamics on the combined tree.
///
/// Segments with `active[s] == false` carry no inertia and receive no loads,
/// so their joint torques come out zero.
pub fn rnea(
    assembly: &ModelAssembly,
    kin: &KinematicState,
    loads: &[PointLoad],
    active: &[bool],
) -> RneaResult {
    let n = assembly.segments.len();
    let g = assembly.gravity;
    let mut force = vec![Vec3::zeros(); n];
    let mut moment = vec![Vec3::zeros(); n];
    for s in 0..n {
        if !active[s] {
            continue;
        }
        let seg = &assembly.segments[s];
        let m = &kin.segments[s];
        let c = kin.com_position(assembly, s);
        let a = kin.com_acceleration(assembly, s);
        let i_w = kin.world_inertia(assembly, s);
        let f = seg.mass * (a - g);
        let n_c = i_w * m.alpha + m.omega.cross(&(i_w * m.omega));
        force[s] = f;
        moment[s] = n_c + c.cross(&f);
    }
    for l in loads {
        if !active[l.segment] {
            continue;
        }
        force[l.segment] -= l.force;
        moment[l.segment] -= l.point.cross(&l.force) + l.moment;
    }

    let topo = assembly.topo();
    for &s in topo.order.iter().rev() {
        if let Some(p) = topo.parent[s] {
            let (f, mo) = (force[s], moment[s]);
            force[p] += f;
            moment[p] += mo;
        }
    }

    let mut tau = DVector::zeros(assembly.ndof());
    for s in 0..n {
        let j = topo.joint_of[s];
        let k0 = topo.dof_offset[j];
        for k in k0..k0 + assembly.joints[j].kind.dof() {
            tau[k] = match kin.dof_axes[k] {
                DofAxis::Revolute { axis, point } => {
                    axis.dot(&(moment[s] - point.cross(&force[s])))
                }
                DofAxis::Prismatic { axis } => axis.dot(&force[s]),
            };
        }
    }
    RneaResult {
        tau,
        subtree_force: force,
        subtree_moment: moment,
    }
}

/// Joint-space mass matrix restricted to `dofs`, counting only active segments.
pub fn mass_matrix(
    assembly: &ModelAssembly,
    kin: &KinematicState,
    dofs: &[usize],
    active: &[bool],
) -> DMatrix<f64> {
    let k = dofs.len();
    let mut mm = DMatrix::zeros(k, k);
    for s in 0..assembly.segments.len() {
        if !active[s] {
            continue;
        }
        let c = kin.com_position(assembly, s);
        let jv = kin.point_jacobian(assembly, s, &c);
        let jw = kin.angular_jacobian(assembly, s);
        let i_w = kin.world_inertia(assembly, s);
        let mass = assembly.segments[s].mass;
        for (a, &da) in dofs.iter().enumerate() {
            let va = jv.column(da);
            let wa = jw.column(da);
            if va.norm_squared() == 0.0 && wa.norm_squared() == 0.0 {
                continue;
            }
            for (b, &db) in dofs.iter().enumerate().skip(a) {
                let v = mass * va.dot(&jv.column(db)) + wa.dot(&(i_w * jw.column(db)));
                mm[(a, b)] += v;
                if a != b {
                    mm[(b, a)] += v;
                }
            }
        }
    }
    mm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::config::ModelConfig;
    use crate::model::{build_default_assembly, forward_kinematics, kinematics, Subsystem};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn standing(a: &ModelAssembly) -> Vec<f64> {
        let mut q = a.zero_coordinates();
        q[1] = 0.92;
        q
    }

    fn potential(a: &ModelAssembly, q: &[f64], active: &[bool]) -> f64 {
        let poses = forward_kinematics(a, q).unwrap();
        a.segments
            .iter()
            .zip(&poses)
            .zip(active)
            .filter(|(_, on)| **on)
            .map(|((s, p), _)| -s.mass * a.gravity.dot(&p.transform_point(&s.com_offset)))
            .sum()
    }

    fn random_pose(a: &ModelAssembly, seed: &[f64]) -> Vec<f64> {
        let mut q = standing(a);
        for (k, v) in seed.iter().enumerate() {
            q[3 + k] += v;
        }
        q
    }

    #[test]
    fn standing_root_carries_weight() {
        let a = build_default_assembly(&ModelConfig::default()).unwrap();
        let q = standing(&a);
        let z = vec![0.0; a.ndof()];
        let kin = kinematics(&a, &q, &z, &z).unwrap();
        let human = rnea(&a, &kin, &[], &a.active_mask(false));
        assert_relative_eq!(human.tau[1], 65.9 * 9.81, epsilon = 1e-9);
        let all = rnea(&a, &kin, &[], &a.active_mask(true));
        assert_relative_eq!(all.tau[1], (65.9 + 23.0) * 9.81, epsilon = 1e-9);
        assert_relative_eq!(
            all.subtree_force[0].y,
            a.total_mass() * 9.81,
            epsilon = 1e-9
        );
        // Exo joints hold no gravity moment in the reference pose.
        for k in a.exo_dofs() {
            assert!(all.tau[k].abs() < 1e-9, "{}", a.dof_names()[k]);
        }
    }

    #[test]
    fn inactive_exo_gets_no_torque() {
        let a = build_default_assembly(&ModelConfig::default()).unwrap();
        let mut q = standing(&a);
        q[18] = 0.4;
        let z = vec![0.0; a.ndof()];
        let kin = kinematics(&a, &q, &z, &z).unwrap();
        let r = rnea(&a, &kin, &[], &a.active_mask(false));
        assert!(a.exo_dofs().all(|k| r.tau[k] == 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn static_torques_are_potential_gradient(seed in prop::collection::vec(-0.5..0.5f64, 19)) {
            let a = build_default_assembly(&ModelConfig::default()).unwrap();
            let q = random_pose(&a, &seed);
            let z = vec![0.0; a.ndof()];
            let kin = kinematics(&a, &q, &z, &z).unwrap();
            let active = a.active_mask(true);
            let r = rnea(&a, &kin, &[], &active);
            let h = 1e-6;
            for k in 0..a.ndof() {
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[k] += h;
                qm[k] -= h;
                let grad = (potential(&a, &qp, &active) - potential(&a, &qm, &active)) / (2.0 * h);
                prop_assert!((r.tau[k] - grad).abs() < 1e-5 * (1.0 + grad.abs()), "dof {k}: {} vs {grad}", r.tau[k]);
            }
        }

        #[test]
        fn point_load_enters_as_jacobian_transpose(
            seed in prop::collection::vec(-0.5..0.5f64, 19),
            f in prop::array::uniform3(-300.0..300.0f64),
            local in prop::array::uniform3(-0.1..0.1f64),
        ) {
            let a = build_default_assembly(&ModelConfig::default()).unwrap();
            let q = random_pose(&a, &seed);
            let z = vec![0.0; a.ndof()];
            let kin = kinematics(&a, &q, &z, &z).unwrap();
            let active = a.active_mask(true);
            let seg = a.segment_index("shank_l").unwrap();
            let local = Vec3::from(local);
            let world = kin.pose(seg).transform_point(&local);
            let f = Vec3::from(f);
            let base = rnea(&a, &kin, &[], &active);
            let loaded = rnea(&a, &kin, &[PointLoad::force(seg, world, f)], &active);
            let h = 1e-6;
            for k in 0..a.ndof() {
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[k] += h;
                qm[k] -= h;
                let pp = forward_kinematics(&a, &qp).unwrap()[seg].transform_point(&local);
                let pm = forward_kinematics(&a, &qm).unwrap()[seg].transform_point(&local);
                let work = f.dot(&((pp - pm) / (2.0 * h)));
                let d = loaded.tau[k] - base.tau[k];
                prop_assert!((d + work).abs() < 1e-5 * (1.0 + work.abs()), "dof {k}: {d} vs {}", -work);
            }
        }

        #[test]
        fn mass_matrix_matches_rnea_columns(
            seed in prop::collection::vec(-0.5..0.5f64, 19),
            rates in prop::collection::vec(-2.0..2.0f64, 22),
        ) {
            let a = build_default_assembly(&ModelConfig::default()).unwrap();
            let q = random_pose(&a, &seed);
            let z = vec![0.0; a.ndof()];
            let active = a.active_mask(true);
            let kin0 = kinematics(&a, &q, &rates, &z).unwrap();
            let dofs: Vec<usize> = (0..a.ndof()).collect();
            let m = mass_matrix(&a, &kin0, &dofs, &active);
            let bias = rnea(&a, &kin0, &[], &active).tau;
            for k in 0..a.ndof() {
                let mut e = z.clone();
                e[k] = 1.0;
                let kin = kinematics(&a, &q, &rates, &e).unwrap();
                let col = rnea(&a, &kin, &[], &active).tau - &bias;
                for r in 0..a.ndof() {
                    prop_assert!((col[r] - m[(r, k)]).abs() < 1e-9 * (1.0 + m[(r, k)].abs()));
                }
            }
            prop_assert!(m.clone().cholesky().is_some());
        }
    }

    #[test]
    fn human_mass_matrix_ignores_exo() {
        let a = build_default_assembly(&ModelConfig::default()).unwrap();
        let q = standing(&a);
        let z = vec![0.0; a.ndof()];
        let kin = kinematics(&a, &q, &z, &z).unwrap();
        let m = mass_matrix(&a, &kin, &[1], &a.active_mask(false));
        assert_relative_eq!(m[(0, 0)], a.mass_of(Subsystem::Human), epsilon = 1e-12);
    }
}
