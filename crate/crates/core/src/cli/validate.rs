use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::control::ControllerKind;
use crate::dynamics::{
    energy_drift, forward_dynamics_exo, inverse_dynamics_exo, predict_grf, run_cycle, SimOptions,
    DEFAULT_FRICTION,
};
use crate::error::Result;
use crate::lsq::{bounded_least_squares, min_norm_solve};
use crate::model::{
    build_default_assembly, forward_kinematics, kinematics, ModelAssembly, ModelConfig, Subsystem,
};
use crate::motion::{synthesize_running_gait, GaitAmplitudes, GaitParams};
use crate::muscle::{moment_arm_matrix, solve_muscle_forces, DEFAULT_RESIDUAL_WEIGHT};
use crate::strap::{moment_arms, moment_arms_from, strap_loads, strap_pressure, STRAP_FORCE_LEN};

/// Outcome of one property check.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    /// Passes when `measured ≤ threshold`.
    pub fn at_most(name: &str, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            measured,
            threshold,
            passed: measured <= threshold,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<28} measured {:<12.3e} threshold {:<10.1e} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.threshold,
            self.detail
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidateOptions {
    pub seed: u64,
    /// Test hook: apply this strap's load to the exo with the wrong sign.
    pub flip_exo_strap: Option<String>,
    /// Include the checks that simulate whole gait cycles.
    pub simulate: bool,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            flip_exo_strap: None,
            simulate: true,
        }
    }
}

/// Random combined state around a standing pose.
fn random_state(a: &ModelAssembly, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = a.ndof();
    let mut q = a.zero_coordinates();
    q[1] = 0.92;
    let mut qd = vec![0.0; n];
    let mut qdd = vec![0.0; n];
    for k in 0..n {
        if k >= 3 {
            q[k] += rng.random_range(-0.4..0.4);
        }
        qd[k] = rng.random_range(-2.0..2.0);
        qdd[k] = rng.random_range(-10.0..10.0);
    }
    (q, qd, qdd)
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-scale..scale))
}

/// Standing vertical GRF without and with the exoskeleton.
pub fn static_grf(cfg: &ModelConfig) -> Result<(f64, f64)> {
    let a = build_default_assembly(cfg)?;
    let mut q = a.zero_coordinates();
    q[1] = 0.92;
    let z = vec![0.0; a.ndof()];
    let kin = kinematics(&a, &q, &z, &z)?;
    let human = predict_grf(
        &a,
        &kin,
        [true, false],
        &a.active_mask(false),
        DEFAULT_FRICTION,
    )?;
    let exo = predict_grf(
        &a,
        &kin,
        [true, false],
        &a.active_mask(true),
        DEFAULT_FRICTION,
    )?;
    Ok((human.force.y, exo.force.y))
}

pub fn check_static_grf(cfg: &ModelConfig) -> Result<Vec<CheckResult>> {
    let (h, e) = static_grf(cfg)?;
    let a = build_default_assembly(cfg)?;
    let mh = a.mass_of(Subsystem::Human);
    let ratio_expected = (mh + a.mass_of(Subsystem::Exo)) / mh;
    Ok(vec![
        CheckResult::at_most(
            "static_grf_no_exo",
            (h - mh * cfg.gravity).abs(),
            0.05,
            format!("{h:.2} N"),
        ),
        CheckResult::at_most(
            "static_grf_ratio",
            (e / h - ratio_expected).abs(),
            1e-3,
            format!("{e:.2} / {h:.2} N = {:.4}", e / h),
        ),
    ])
}

/// Finite-difference virtual work of strap loads against `M_SE` and `M_SH`.
pub fn check_virtual_work(
    a: &ModelAssembly,
    rng: &mut ChaCha8Rng,
    samples: usize,
) -> Result<CheckResult> {
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let (q, _, _) = random_state(a, rng);
        let fs = random_vec(rng, STRAP_FORCE_LEN, 500.0);
        let arms = moment_arms(a, &q)?;
        let z = vec![0.0; a.ndof()];
        let kin = kinematics(a, &q, &z, &z)?;
        let loads = strap_loads(a, &kin, &fs);
        let work = |qq: &[f64], loads: &[crate::dynamics::PointLoad]| -> Result<f64> {
            let poses = forward_kinematics(a, qq)?;
            Ok(loads
                .iter()
                .map(|l| {
                    let local = kin.segments[l.segment]
                        .pose
                        .inverse_transform_point(&l.point);
                    l.force.dot(&poses[l.segment].transform_point(&local))
                })
                .sum())
        };
        let h = 1e-6;
        let fd = |k: usize, loads: &[crate::dynamics::PointLoad]| -> Result<f64> {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[k] += h;
            qm[k] -= h;
            Ok((work(&qp, loads)? - work(&qm, loads)?) / (2.0 * h))
        };
        let tau_se = &arms.m_se * &fs;
        let tau_sh = &arms.m_sh * &fs;
        for (r, k) in a.exo_dofs().enumerate() {
            let g = fd(k, &loads.exo)?;
            worst = worst.max((g - tau_se[r]).abs() / g.abs().max(1.0));
        }
        for (r, &k) in a.controlled_dofs().iter().enumerate() {
            let g = fd(k, &loads.human)?;
            worst = worst.max((g - tau_sh[r]).abs() / g.abs().max(1.0));
        }
    }
    Ok(CheckResult::at_most(
        "moment_arm_virtual_work",
        worst,
        1e-4,
        format!("{samples} poses, relative"),
    ))
}

/// Forward dynamics of the exo followed by inverse dynamics returns the
/// applied generalized force.
pub fn check_id_fd(a: &ModelAssembly, rng: &mut ChaCha8Rng, samples: usize) -> Result<CheckResult> {
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let (q, qd, qdd) = random_state(a, rng);
        let f_a = random_vec(rng, a.actuators.len(), 2000.0);
        let f_s = random_vec(rng, STRAP_FORCE_LEN, 500.0);
        let acc = forward_dynamics_exo(a, &q, &qd, &qdd, &f_a, &f_s)?;
        let mut full = qdd.clone();
        for (i, k) in a.exo_dofs().enumerate() {
            full[k] = acc[i];
        }
        let kin = kinematics(a, &q, &qd, &full)?;
        let arms = moment_arms_from(a, &kin)?;
        let applied = &arms.m_a * &f_a + &arms.m_se * &f_s;
        let needed = inverse_dynamics_exo(a, &kin, &[]);
        worst = worst.max((&needed - &applied).norm() / (1.0 + applied.norm()));
    }
    Ok(CheckResult::at_most(
        "exo_id_fd_round_trip",
        worst,
        1e-6,
        format!("{samples} states, relative"),
    ))
}

/// Each strap pushes the human and the exo with equal and opposite forces,
/// and its exo-side load produces exactly the `M_SE` torque.
pub fn check_action_reaction(
    a: &ModelAssembly,
    rng: &mut ChaCha8Rng,
    flip: Option<&str>,
) -> Result<CheckResult> {
    let (q, qd, qdd) = random_state(a, rng);
    let kin = kinematics(a, &q, &qd, &qdd)?;
    let arms = moment_arms_from(a, &kin)?;
    let free = inverse_dynamics_exo(a, &kin, &[]);
    let mut worst = 0.0_f64;
    let mut failing = Vec::new();
    for (i, strap) in a.straps.iter().enumerate() {
        let mut fs = DVector::zeros(STRAP_FORCE_LEN);
        fs.rows_mut(3 * i, 3).copy_from(&random_vec(rng, 3, 500.0));
        let mut loads = strap_loads(a, &kin, &fs);
        if flip == Some(strap.name.as_str()) {
            loads.exo[i].force = -loads.exo[i].force;
        }
        let scale = fs.norm();
        let balance = (loads.human[i].force + loads.exo[i].force).norm() / scale;
        let torque = &free - inverse_dynamics_exo(a, &kin, &loads.exo);
        let expected = &arms.m_se * &fs;
        let arm_err = (&torque - &expected).norm() / (scale * (1.0 + arms.m_se.norm()));
        let err = balance.max(arm_err);
        if err > 1e-9 {
            failing.push(strap.name.clone());
        }
        worst = worst.max(err);
    }
    let detail = if failing.is_empty() {
        format!("{} straps", a.straps.len())
    } else {
        format!("violated by {}", failing.join(", "))
    };
    Ok(CheckResult::at_most(
        "strap_action_reaction",
        worst,
        1e-9,
        detail,
    ))
}

/// Smallest objective over a 3-variable box by repeated grid refinement
/// around the best point.
fn grid_minimum(a: &DMatrix<f64>, b: &DVector<f64>, lo: &DVector<f64>, hi: &DVector<f64>) -> f64 {
    const POINTS: usize = 21;
    assert_eq!(a.ncols(), 3, "grid search is three-dimensional");
    let a = a.clone();
    let cols: Vec<DVector<f64>> = (0..3).map(|j| a.column(j).into_owned()).collect();
    let mut center = [
        (lo[0] + hi[0]) / 2.0,
        (lo[1] + hi[1]) / 2.0,
        (lo[2] + hi[2]) / 2.0,
    ];
    let mut half = [
        (hi[0] - lo[0]) / 2.0,
        (hi[1] - lo[1]) / 2.0,
        (hi[2] - lo[2]) / 2.0,
    ];
    let axis = |c: &[f64; 3], h: &[f64; 3], i: usize| -> Vec<f64> {
        (0..POINTS)
            .map(|k| {
                (c[i] - h[i] + 2.0 * h[i] * k as f64 / (POINTS - 1) as f64).clamp(lo[i], hi[i])
            })
            .collect()
    };
    let mut best = f64::INFINITY;
    let mut r = DVector::zeros(b.len());
    for _ in 0..30 {
        let xs: Vec<Vec<f64>> = (0..3).map(|i| axis(&center, &half, i)).collect();
        let mut best_x = center;
        for &x0 in &xs[0] {
            for &x1 in &xs[1] {
                for &x2 in &xs[2] {
                    r.copy_from(b);
                    r.axpy(x0, &cols[0], -1.0);
                    r.axpy(x1, &cols[1], 1.0);
                    r.axpy(x2, &cols[2], 1.0);
                    let v = r.norm_squared();
                    if v < best {
                        best = v;
                        best_x = [x0, x1, x2];
                    }
                }
            }
        }
        center = best_x;
        half.iter_mut().for_each(|h| *h /= 3.0);
    }
    best
}

/// Bounded least squares against grid search on random 3-variable boxes.
pub fn check_bounded_lsq(rng: &mut ChaCha8Rng, problems: usize) -> CheckResult {
    let mut worst = 0.0_f64;
    for _ in 0..problems {
        let a = DMatrix::from_fn(5, 3, |_, _| rng.random_range(-1.0..1.0));
        let b = random_vec(rng, 5, 2.0);
        let lo = DVector::from_fn(3, |_, _| rng.random_range(-1.0..0.0));
        let hi = DVector::from_fn(3, |i, _| lo[i] + rng.random_range(0.1..1.5));
        let sol = bounded_least_squares(&a, &b, &lo, &hi);
        let grid = grid_minimum(&a, &b, &lo, &hi);
        worst = worst.max((sol.objective - grid).abs());
    }
    CheckResult::at_most(
        "bounded_lsq_vs_grid",
        worst,
        1e-5,
        format!("{problems} problems, objective gap"),
    )
}

/// Minimum-norm solve on full-row-rank 8×12 systems: exact fit and no
/// component in the null space.
pub fn check_min_norm(rng: &mut ChaCha8Rng, problems: usize) -> CheckResult {
    let mut worst = 0.0_f64;
    for _ in 0..problems {
        let m = DMatrix::from_fn(8, 12, |_, _| rng.random_range(-0.1..0.1));
        let tau = random_vec(rng, 8, 200.0);
        let f = min_norm_solve(&m, &tau);
        let fit = (&m * &f - &tau).norm() / tau.norm();
        let pinv = m.clone().pseudo_inverse(1e-14).expect("pseudo-inverse");
        let null = DMatrix::identity(12, 12) - &pinv * &m;
        let off = (&null * &f).norm() / f.norm();
        worst = worst.max(fit).max(off);
    }
    CheckResult::at_most(
        "min_norm_solve",
        worst,
        1e-9,
        format!("{problems} systems, relative"),
    )
}

/// Projected gradient of the muscle objective in activation space, scaled
/// by the gradient of the demand term at zero activation.
pub fn check_muscle_kkt(
    a: &ModelAssembly,
    rng: &mut ChaCha8Rng,
    problems: usize,
) -> Result<CheckResult> {
    let w = DEFAULT_RESIDUAL_WEIGHT;
    let mut worst = 0.0_f64;
    for _ in 0..problems {
        let angles: [f64; 8] = std::array::from_fn(|_| rng.random_range(-0.8..0.8));
        let tau = random_vec(rng, 8, 250.0);
        let s = solve_muscle_forces(&tau, &a.muscles, &angles, 2.0, w)?;
        let fmax = DVector::from_iterator(a.muscles.len(), a.muscles.iter().map(|m| m.f_max));
        let rd = moment_arm_matrix(&a.muscles, &angles) * DMatrix::from_diagonal(&fmax);
        let act = &s.activations;
        let g = act * 2.0 - rd.transpose() * (&tau - &rd * act) * (2.0 * w);
        let proj = DVector::from_fn(act.len(), |i, _| {
            if act[i] <= 0.0 {
                g[i].min(0.0)
            } else if act[i] >= 1.0 {
                g[i].max(0.0)
            } else {
                g[i]
            }
        });
        let scale = 1.0 + (rd.transpose() * &tau * (2.0 * w)).amax();
        worst = worst.max(proj.amax() / scale);
        if act.iter().any(|x| !(0.0..=1.0).contains(x)) {
            worst = f64::INFINITY;
        }
    }
    Ok(CheckResult::at_most(
        "muscle_qp_kkt",
        worst,
        1e-8,
        format!("{problems} problems, scaled"),
    ))
}

/// Ground impulse over one periodic cycle against body weight times the
/// cycle time, on a gait balanced for the body being simulated.
pub fn check_impulse(cfg: &ModelConfig) -> Result<Vec<CheckResult>> {
    let a = build_default_assembly(cfg)?;
    let mut out = Vec::new();
    for (kind, carry_exo) in [
        (ControllerKind::None, false),
        (ControllerKind::Passive, true),
    ] {
        let traj = synthesize_running_gait(&GaitParams {
            carry_exo,
            subject: cfg.subject.clone(),
            ..Default::default()
        })?;
        let run = run_cycle(
            &a,
            &traj,
            SimOptions {
                controller: kind,
                ..Default::default()
            },
        )?;
        out.push(CheckResult::at_most(
            &format!("impulse_balance_{kind}"),
            run.summary.impulse_error,
            0.02,
            "fraction of weight x cycle time",
        ));
    }
    Ok(out)
}

/// Explicit-integrator energy drift on an undamped strap system should
/// halve when the step halves.
pub fn energy_drift_ratio(cfg: &ModelConfig) -> Result<f64> {
    let mut cfg = cfg.clone();
    for s in [&mut cfg.straps.femur, &mut cfg.straps.tibia] {
        s.damping = [0.0; 3];
    }
    let a = build_default_assembly(&cfg)?;
    let traj = synthesize_running_gait(&GaitParams {
        amplitudes: GaitAmplitudes::zero(),
        subject: cfg.subject.clone(),
        ..Default::default()
    })?;
    let coarse = energy_drift(&a, &traj, 1e-3, 0.2)?;
    let fine = energy_drift(&a, &traj, 5e-4, 0.2)?;
    Ok(fine / coarse)
}

pub fn check_energy_drift(cfg: &ModelConfig) -> Result<CheckResult> {
    let ratio = energy_drift_ratio(cfg)?;
    Ok(CheckResult::at_most(
        "energy_drift_halving",
        (ratio - 0.5).abs(),
        0.15,
        format!("drift ratio {ratio:.3} for dt 1e-3 -> 5e-4"),
    ))
}

/// Contact pressure under a fore-aft strap force of 838 N.
pub fn check_strap_pressure(a: &ModelAssembly) -> Result<CheckResult> {
    let mut fs = DVector::zeros(STRAP_FORCE_LEN);
    fs[0] = 838.0;
    let p = strap_pressure(&fs, &a.straps)?[0];
    let expected = 838.0 / a.straps[0].contact_area;
    Ok(CheckResult::at_most(
        "strap_pressure",
        (p - expected).abs() / 1000.0,
        0.1,
        format!("{:.2} kPa", p / 1000.0),
    ))
}

/// Run every property check on the given model.
pub fn run_validation(cfg: &ModelConfig, opts: &ValidateOptions) -> Result<ValidationReport> {
    let a = build_default_assembly(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut checks = check_static_grf(cfg)?;
    checks.push(check_virtual_work(&a, &mut rng, 10)?);
    checks.push(check_id_fd(&a, &mut rng, 20)?);
    checks.push(check_action_reaction(
        &a,
        &mut rng,
        opts.flip_exo_strap.as_deref(),
    )?);
    checks.push(check_bounded_lsq(&mut rng, 200));
    checks.push(check_min_norm(&mut rng, 200));
    checks.push(check_muscle_kkt(&a, &mut rng, 200)?);
    checks.push(check_strap_pressure(&a)?);
    if opts.simulate {
        checks.extend(check_impulse(cfg)?);
        checks.push(check_energy_drift(cfg)?);
    }
    Ok(ValidationReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> ValidateOptions {
        ValidateOptions {
            simulate: false,
            ..Default::default()
        }
    }

    #[test]
    fn pristine_build_passes() {
        let r = run_validation(&ModelConfig::default(), &quick()).unwrap();
        assert!(r.all_passed(), "{r}");
        assert!(r.to_string().contains("threshold"));
    }

    #[test]
    fn flipped_strap_is_named() {
        let opts = ValidateOptions {
            flip_exo_strap: Some("tibia-R".into()),
            ..quick()
        };
        let r = run_validation(&ModelConfig::default(), &opts).unwrap();
        let c = r.get("strap_action_reaction").unwrap();
        assert!(!c.passed);
        assert!(
            c.detail.contains("tibia-R") && !c.detail.contains("femur"),
            "{}",
            c.detail
        );
        assert!(!r.all_passed());
    }

    #[test]
    fn grid_finds_interior_minimum() {
        let a = DMatrix::identity(3, 3);
        let b = DVector::from_vec(vec![0.3, -0.2, 0.1]);
        let lo = DVector::from_element(3, -1.0);
        let hi = DVector::from_element(3, 1.0);
        assert!(grid_minimum(&a, &b, &lo, &hi) < 1e-20);
        let hi = DVector::from_element(3, 0.0);
        assert!((grid_minimum(&a, &b, &lo, &hi) - 0.1).abs() < 1e-15);
    }
}
