use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::grf::{predict_grf, GrfResult, DEFAULT_FRICTION};
use super::solve::{exo_accelerations, inverse_dynamics_human};
use crate::control::{mac_step, mic_step, passive_controller, ControllerKind, ControllerOutput};
use crate::error::{Error, Result};
use crate::model::{kinematics, JointKind, KinematicState, ModelAssembly, Side, Subsystem};
use crate::motion::GaitTrajectory;
use crate::muscle::{
    controlled_angles, knee_axial_reaction, solve_muscle_forces, MuscleSolution, DEFAULT_EXPONENT,
    DEFAULT_RESIDUAL_WEIGHT,
};
use crate::strap::{
    fit_exo_posture, moment_arms_from, strap_forces_from, strap_pressure, SpringForceVector,
    STRAP_FORCE_LEN,
};

/// Which torque MAC asks the straps to supply.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MacDemand {
    /// Inverse dynamics without the strap loads: the whole demand.
    #[default]
    ExcludeStraps,
    /// The muscle demand including the current strap contribution.
    IncludeStraps,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimOptions {
    pub dt: f64,
    pub cycles: usize,
    pub friction: f64,
    pub controller: ControllerKind,
    pub mac_demand: MacDemand,
    pub muscle_exponent: f64,
    pub muscle_weight: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            cycles: 2,
            friction: DEFAULT_FRICTION,
            controller: ControllerKind::Passive,
            mac_demand: MacDemand::default(),
            muscle_exponent: DEFAULT_EXPONENT,
            muscle_weight: DEFAULT_RESIDUAL_WEIGHT,
        }
    }
}

impl SimOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= 5e-3) {
            return Err(Error::config(
                "dt",
                format!("{} outside (0, 0.005] s", self.dt),
            ));
        }
        if self.cycles < 1 {
            return Err(Error::config("cycles", "must be at least 1"));
        }
        if !(self.friction.is_finite() && self.friction > 0.0) {
            return Err(Error::config("friction", "must be positive"));
        }
        Ok(())
    }
}

/// Exo state carried between steps.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationState {
    pub t: f64,
    pub q_exo: DVector<f64>,
    pub qd_exo: DVector<f64>,
    /// Exo accelerations from the previous step, used for GRF prediction.
    pub qdd_exo: DVector<f64>,
}

/// Everything recorded for one step.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationFrame {
    pub t: f64,
    pub gait_pct: f64,
    pub grf: GrfResult,
    /// Human torques with ground and strap loads (muscle demand).
    pub tau: DVector<f64>,
    /// Controlled-DOF torques without strap loads.
    pub tau_unassisted: DVector<f64>,
    pub strap: SpringForceVector,
    pub pressure: Vec<f64>,
    pub control: ControllerOutput,
    pub muscle: MuscleSolution,
    /// Axial knee reaction, left then right (negative = compression).
    pub knee_reaction: [f64; 2],
    pub q_exo: DVector<f64>,
    pub qdd_exo: DVector<f64>,
}

/// Per-step driver for one scenario.
pub struct Simulator<'a> {
    assembly: &'a ModelAssembly,
    traj: &'a GaitTrajectory,
    opts: SimOptions,
    columns: Vec<usize>,
    active: Vec<bool>,
    limits: DVector<f64>,
    exo_limits: Vec<(usize, f64, f64, String)>,
}

impl<'a> Simulator<'a> {
    pub fn new(
        assembly: &'a ModelAssembly,
        traj: &'a GaitTrajectory,
        opts: SimOptions,
    ) -> Result<Self> {
        opts.validate()?;
        let human = assembly.human_dofs();
        let columns = assembly.dof_names()[human]
            .iter()
            .map(|n| {
                traj.column(n)
                    .ok_or_else(|| Error::Trajectory(format!("missing coordinate column `{n}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let with_exo = opts.controller.has_exo();
        let mut exo_limits = Vec::new();
        for (j, joint) in assembly.joints.iter().enumerate() {
            if assembly.segments[joint.child].subsystem == Subsystem::Exo
                && joint.kind == JointKind::Revolute
            {
                if let Some(&(lo, hi)) = joint.limits.first() {
                    exo_limits.push((assembly.dof_offset(j), lo, hi, joint.name.clone()));
                }
            }
        }
        Ok(Self {
            assembly,
            traj,
            columns,
            active: assembly.active_mask(with_exo),
            limits: DVector::from_iterator(
                assembly.actuators.len(),
                assembly.actuators.iter().map(|a| a.force_limit),
            ),
            exo_limits,
            opts,
        })
    }

    pub fn options(&self) -> &SimOptions {
        &self.opts
    }

    pub fn with_exo(&self) -> bool {
        self.opts.controller.has_exo()
    }

    fn n_exo(&self) -> usize {
        self.assembly.exo_dofs().len()
    }

    /// Human coordinates, rates, accelerations and contact flags at `t`.
    fn human_motion(&self, t: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, [bool; 2])> {
        let s = self.traj.sample(t)?;
        let pick = |v: &[f64]| self.columns.iter().map(|&c| v[c]).collect::<Vec<_>>();
        Ok((pick(&s.q), pick(&s.qd), pick(&s.qdd), s.contact))
    }

    fn combined(human: &[f64], exo: &DVector<f64>) -> Vec<f64> {
        human.iter().copied().chain(exo.iter().copied()).collect()
    }

    /// Exo posture that best matches the strap rest offsets.
    pub fn fit_exo(&self, q_h: &[f64], warm: &DVector<f64>) -> Result<DVector<f64>> {
        fit_exo_posture(self.assembly, q_h, warm)
    }

    /// Exo state at `t` matched to the human posture, with rates from a
    /// central difference of neighbouring fits.
    pub fn initial_state(&self, t: f64) -> Result<SimulationState> {
        let n = self.n_exo();
        let zeros = DVector::zeros(n);
        if !self.with_exo() {
            return Ok(SimulationState {
                t,
                q_exo: zeros.clone(),
                qd_exo: zeros.clone(),
                qdd_exo: zeros,
            });
        }
        let h = 1e-4;
        let q0 = self.fit_exo(&self.human_motion(t)?.0, &zeros)?;
        let qm = self.fit_exo(&self.human_motion(t - h)?.0, &q0)?;
        let qp = self.fit_exo(&self.human_motion(t + h)?.0, &q0)?;
        Ok(SimulationState {
            t,
            q_exo: q0,
            qd_exo: (qp - qm) / (2.0 * h),
            qdd_exo: zeros,
        })
    }

    fn controller(
        &self,
        kin: &KinematicState,
        f_s: &DVector<f64>,
        tau_req: &DVector<f64>,
    ) -> Result<ControllerOutput> {
        match self.opts.controller {
            ControllerKind::None | ControllerKind::Passive => Ok(passive_controller()),
            ControllerKind::Mic => {
                let arms = moment_arms_from(self.assembly, kin)?;
                mic_step(&arms.m_a, &arms.m_se, f_s, &self.limits)
            }
            ControllerKind::Mac => {
                let arms = moment_arms_from(self.assembly, kin)?;
                mac_step(&arms.m_sh, &arms.m_se, &arms.m_a, tau_req, &self.limits)
            }
        }
    }

    /// Advance one step of length `dt`.
    pub fn step(&self, state: &SimulationState) -> Result<(SimulationFrame, SimulationState)> {
        let a = self.assembly;
        let dt = self.opts.dt;
        let with_exo = self.with_exo();
        let (qh, qdh, qddh, contact) = self.human_motion(state.t)?;
        let q = Self::combined(&qh, &state.q_exo);
        let qd = Self::combined(&qdh, &state.qd_exo);
        let zero_exo = DVector::zeros(self.n_exo());
        let qdd_lag = Self::combined(&qddh, &state.qdd_exo);
        let qdd0 = Self::combined(&qddh, &zero_exo);

        // Exo accelerations lag one step in the GRF balance.
        let kin_lag = kinematics(a, &q, &qd, &qdd_lag)?;
        let kin0 = kinematics(a, &q, &qd, &qdd0)?;

        let strap = if with_exo {
            strap_forces_from(a, &kin0)?
        } else {
            SpringForceVector::zeros()
        };
        let grf = predict_grf(a, &kin_lag, contact, &self.active, self.opts.friction)?;

        let unassisted =
            inverse_dynamics_human(a, &kin_lag, &grf, &strap.values, false, &self.active)?;
        let assisted = if with_exo {
            inverse_dynamics_human(a, &kin_lag, &grf, &strap.values, true, &self.active)?
        } else {
            unassisted.clone()
        };
        let control = if self.opts.controller == ControllerKind::Mac {
            // The demand must not see last step's exo accelerations: they were
            // produced by the previous command and would close a one-step loop.
            let grf0 = predict_grf(a, &kin0, contact, &self.active, self.opts.friction)?;
            let include = self.opts.mac_demand == MacDemand::IncludeStraps;
            let demand =
                inverse_dynamics_human(a, &kin0, &grf0, &strap.values, include, &self.active)?;
            self.controller(&kin0, &strap.values, &demand.controlled)?
        } else {
            self.controller(&kin0, &strap.values, &DVector::zeros(0))?
        };

        let (qdd_exo, q_next, qd_next) = if with_exo {
            let arms = moment_arms_from(a, &kin0)?;
            let q_ext = &arms.m_a * &control.force + &arms.m_se * &strap.values;
            let acc = exo_accelerations(a, &kin0, &q_ext)?;
            let qd_next = &state.qd_exo + &acc * dt;
            let q_next = &state.q_exo + &qd_next * dt;
            (acc, q_next, qd_next)
        } else {
            (zero_exo.clone(), zero_exo.clone(), zero_exo.clone())
        };
        for (k, lo, hi, name) in &self.exo_limits {
            let v = q_next[k - a.exo_dofs().start];
            if v < *lo || v > *hi {
                log::warn!(
                    "t = {:.4}: {name} at {v:.3} rad outside [{lo}, {hi}]",
                    state.t
                );
            }
        }

        let angles = controlled_angles(a, &q);
        let muscle = solve_muscle_forces(
            &assisted.controlled,
            &a.muscles,
            &angles,
            self.opts.muscle_exponent,
            self.opts.muscle_weight,
        )?;
        let mut knee_reaction = [0.0; 2];
        for side in Side::BOTH {
            let shank = a.shank_segment(side)?;
            knee_reaction[side.index()] = knee_axial_reaction(
                a,
                &kin_lag,
                side,
                &assisted.rnea.subtree_force[shank],
                &muscle.forces,
                &a.muscles,
            )?;
        }
        let pressure = strap_pressure(&strap.values, &a.straps)?;
        let period = self.traj.cycle_duration;
        let gait_pct = (state.t - self.traj.start()).rem_euclid(period) / period * 100.0;

        let frame = SimulationFrame {
            t: state.t,
            gait_pct,
            grf,
            tau: assisted.tau,
            tau_unassisted: unassisted.controlled,
            strap,
            pressure,
            control,
            muscle,
            knee_reaction,
            q_exo: state.q_exo.clone(),
            qdd_exo: qdd_exo.clone(),
        };
        let next = SimulationState {
            t: state.t + dt,
            q_exo: q_next,
            qd_exo: qd_next,
            qdd_exo,
        };
        Ok((frame, next))
    }

    pub fn steps_per_cycle(&self) -> usize {
        (self.traj.cycle_duration / self.opts.dt - 1e-9).ceil() as usize
    }

    /// Simulate `cycles` gait cycles from the trajectory start, dropping the
    /// first one as a transient when more than one is requested.
    pub fn run(&self) -> Result<SimulationRun> {
        let spc = self.steps_per_cycle();
        let total = spc * self.opts.cycles;
        let discard = if self.opts.cycles > 1 { spc } else { 0 };
        let mut state = self.initial_state(self.traj.start())?;
        let mut frames = Vec::with_capacity(total - discard);
        for k in 0..total {
            let (frame, next) = self.step(&state).map_err(|e| Error::Step {
                step: k,
                source: Box::new(e),
            })?;
            if k >= discard {
                frames.push(frame);
            }
            state = next;
        }
        let summary = CycleSummary::from_frames(
            self.assembly,
            self.opts.controller,
            &frames,
            self.opts.dt,
            self.traj.cycle_duration,
            &self.active,
        );
        Ok(SimulationRun {
            controller: self.opts.controller,
            steps_per_cycle: spc,
            frames,
            summary,
        })
    }
}

/// Retained frames plus their summary.
#[derive(Clone, Debug)]
pub struct SimulationRun {
    pub controller: ControllerKind,
    pub steps_per_cycle: usize,
    pub frames: Vec<SimulationFrame>,
    pub summary: CycleSummary,
}

pub fn run_cycle(
    assembly: &ModelAssembly,
    traj: &GaitTrajectory,
    opts: SimOptions,
) -> Result<SimulationRun> {
    Simulator::new(assembly, traj, opts)?.run()
}

/// Peak and aggregate quantities over the retained frames. Torque peaks
/// use the left leg.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleSummary {
    pub controller: ControllerKind,
    pub peak_hip_flexion: f64,
    pub peak_hip_extension: f64,
    pub peak_hip_abduction: f64,
    pub peak_hip_rotation: f64,
    pub peak_knee_extension: f64,
    pub peak_grf_vertical: f64,
    pub peak_grf_horizontal: f64,
    /// RMS over all frames of the 12 strap force components.
    pub strap_rms: f64,
    pub peak_strap_pressure: f64,
    pub peak_actuator_force: f64,
    pub peak_activation: f64,
    pub peak_activations: Vec<f64>,
    /// Largest compressive knee reaction magnitude over both legs.
    pub peak_knee_compression: f64,
    /// `‖∫(GRF + weight) dt‖` over the last cycle over `weight·cycle time`.
    pub impulse_error: f64,
    /// Mean vertical GRF over the last cycle divided by the weight.
    pub mean_vertical_grf_ratio: f64,
    pub max_friction_clamp: f64,
}

impl CycleSummary {
    pub fn from_frames(
        assembly: &ModelAssembly,
        controller: ControllerKind,
        frames: &[SimulationFrame],
        dt: f64,
        period: f64,
        active: &[bool],
    ) -> Self {
        let idx = |name: &str| {
            let k = assembly.dof_index(name).expect("human DOF");
            k - assembly.human_dofs().start
        };
        let (hf, ha, hr, kn) = (
            idx("hip_flexion_l"),
            idx("hip_abduction_l"),
            idx("hip_rotation_l"),
            idx("knee_angle_l"),
        );
        let max =
            |f: &dyn Fn(&SimulationFrame) -> f64| frames.iter().map(f).fold(0.0_f64, f64::max);
        let n_musc = assembly.muscles.len();
        let mut peak_activations = vec![0.0; n_musc];
        let mut sq = 0.0;
        for fr in frames {
            sq += fr.strap.values.norm_squared();
            for (p, a) in peak_activations
                .iter_mut()
                .zip(fr.muscle.activations.iter())
            {
                *p = f64::max(*p, *a);
            }
        }
        let strap_rms = if frames.is_empty() {
            0.0
        } else {
            (sq / (frames.len() * STRAP_FORCE_LEN) as f64).sqrt()
        };

        let mass: f64 = assembly
            .segments
            .iter()
            .zip(active)
            .filter(|(_, a)| **a)
            .map(|(s, _)| s.mass)
            .sum();
        let weight = mass * assembly.gravity;
        let spc = (period / dt - 1e-9).ceil() as usize;
        let last = &frames[frames.len().saturating_sub(spc)..];
        let impulse = last.iter().fold(nalgebra::Vector3::zeros(), |acc, f| {
            acc + (f.grf.force + weight) * dt
        });
        let scale = weight.norm() * period;
        let mean_fy = last.iter().map(|f| f.grf.force.y).sum::<f64>() / last.len().max(1) as f64;

        Self {
            controller,
            peak_hip_flexion: max(&|f| f.tau[hf]),
            peak_hip_extension: max(&|f| -f.tau[hf]),
            peak_hip_abduction: max(&|f| f.tau[ha]),
            peak_hip_rotation: max(&|f| f.tau[hr].abs()),
            peak_knee_extension: max(&|f| f.tau[kn]),
            peak_grf_vertical: max(&|f| f.grf.force.y),
            peak_grf_horizontal: max(&|f| (f.grf.force.x.powi(2) + f.grf.force.z.powi(2)).sqrt()),
            strap_rms,
            peak_strap_pressure: max(&|f| f.pressure.iter().copied().fold(0.0, f64::max)),
            peak_actuator_force: max(&|f| f.control.force.amax()),
            peak_activation: peak_activations.iter().copied().fold(0.0, f64::max),
            peak_activations,
            peak_knee_compression: max(&|f| -f.knee_reaction[0].min(f.knee_reaction[1])),
            impulse_error: impulse.norm() / scale,
            mean_vertical_grf_ratio: mean_fy / weight.norm(),
            max_friction_clamp: max(&|f| f.grf.friction_clamp),
        }
    }

    /// The five torque peaks in table order.
    pub fn torque_peaks(&self) -> [(&'static str, f64); 5] {
        [
            ("hip_flexion", self.peak_hip_flexion),
            ("hip_extension", self.peak_hip_extension),
            ("hip_abduction", self.peak_hip_abduction),
            ("hip_rotation", self.peak_hip_rotation),
            ("knee_extension", self.peak_knee_extension),
        ]
    }
}

/// Exo kinetic + gravitational energy plus the elastic energy in the straps.
pub fn exo_mechanical_energy(
    assembly: &ModelAssembly,
    kin: &KinematicState,
    springs: &SpringForceVector,
) -> f64 {
    let mut e = 0.0;
    for s in (0..assembly.segments.len()).filter(|&s| assembly.is_exo_segment(s)) {
        let seg = &assembly.segments[s];
        let v = kin.com_velocity(assembly, s);
        let w = kin.segments[s].omega;
        e += 0.5 * seg.mass * v.norm_squared() + 0.5 * w.dot(&(kin.world_inertia(assembly, s) * w));
        e -= seg.mass * assembly.gravity.dot(&kin.com_position(assembly, s));
    }
    for (s, d) in assembly.straps.iter().zip(&springs.stretch) {
        for i in 0..3 {
            let k = match s.stiffness_negative {
                Some(kn) if d[i] < 0.0 => kn[i],
                _ => s.stiffness[i],
            };
            e += 0.5 * k * d[i] * d[i];
        }
    }
    e
}

impl Simulator<'_> {
    /// Exo mechanical energy of a state, including strap elastic energy.
    pub fn state_energy(&self, s: &SimulationState) -> Result<f64> {
        let a = self.assembly;
        let (qh, qdh, _, _) = self.human_motion(s.t)?;
        let q = Self::combined(&qh, &s.q_exo);
        let qd = Self::combined(&qdh, &s.qd_exo);
        let kin = kinematics(a, &q, &qd, &vec![0.0; a.ndof()])?;
        let springs = strap_forces_from(a, &kin)?;
        Ok(exo_mechanical_energy(a, &kin, &springs))
    }
}

/// Largest exo energy excursion over `horizon` seconds of passive motion
/// started from a perturbed fitted posture.
pub fn energy_drift(
    assembly: &ModelAssembly,
    traj: &GaitTrajectory,
    dt: f64,
    horizon: f64,
) -> Result<f64> {
    let sim = Simulator::new(
        assembly,
        traj,
        SimOptions {
            dt,
            ..Default::default()
        },
    )?;
    let mut s = sim.initial_state(traj.start())?;
    s.q_exo[1] += 0.02;
    s.q_exo[5] -= 0.03;
    let e0 = sim.state_energy(&s)?;
    let mut worst = 0.0_f64;
    for _ in 0..(horizon / dt).round() as usize {
        s = sim.step(&s)?.1;
        worst = worst.max((sim.state_energy(&s)? - e0).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_default_assembly;
    use crate::model::config::ModelConfig;
    use crate::motion::{synthesize_running_gait, GaitAmplitudes, GaitParams};
    use approx::assert_relative_eq;

    fn standing_gait() -> GaitTrajectory {
        synthesize_running_gait(&GaitParams {
            amplitudes: GaitAmplitudes::zero(),
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn energy_drift_halves_with_step() {
        let mut cfg = ModelConfig::default();
        for s in [&mut cfg.straps.femur, &mut cfg.straps.tibia] {
            s.damping = [0.0; 3];
        }
        let a = build_default_assembly(&cfg).unwrap();
        let traj = standing_gait();
        let coarse = energy_drift(&a, &traj, 1e-3, 0.2).unwrap();
        let fine = energy_drift(&a, &traj, 5e-4, 0.2).unwrap();
        assert!(coarse > 0.0);
        let ratio = fine / coarse;
        assert!(
            (ratio - 0.5).abs() <= 0.15,
            "ratio {ratio} ({fine} / {coarse})"
        );
    }

    #[test]
    fn standing_keeps_exo_at_rest() {
        let a = build_default_assembly(&ModelConfig::default()).unwrap();
        let traj = standing_gait();
        let run = run_cycle(
            &a,
            &traj,
            SimOptions {
                cycles: 1,
                ..Default::default()
            },
        )
        .unwrap();
        for f in &run.frames {
            assert!(f.q_exo.norm() < 1e-9);
            assert!(f.strap.values.norm() < 1e-6);
            assert_relative_eq!(f.grf.force.y, a.total_mass() * 9.81, epsilon = 1e-6);
        }
        assert!(run.summary.impulse_error < 1e-9);
    }

    #[test]
    fn first_cycle_is_dropped() {
        let a = build_default_assembly(&ModelConfig::default()).unwrap();
        let traj = standing_gait();
        let one = run_cycle(
            &a,
            &traj,
            SimOptions {
                cycles: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let three = run_cycle(
            &a,
            &traj,
            SimOptions {
                cycles: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(one.frames.len(), one.steps_per_cycle);
        assert_eq!(three.frames.len(), 2 * three.steps_per_cycle);
        assert_relative_eq!(
            three.frames[0].t,
            three.steps_per_cycle as f64 * 1e-3,
            epsilon = 1e-9
        );
        assert_eq!(
            one.steps_per_cycle,
            (traj.cycle_duration / 1e-3 - 1e-9).ceil() as usize
        );
    }

    #[test]
    fn repeated_runs_are_identical() {
        let a = build_default_assembly(&ModelConfig::default()).unwrap();
        let traj = synthesize_running_gait(&GaitParams::default()).unwrap();
        for controller in [ControllerKind::Mic, ControllerKind::Mac] {
            let opts = SimOptions {
                controller,
                cycles: 1,
                ..Default::default()
            };
            let r1 = run_cycle(&a, &traj, opts.clone()).unwrap();
            let r2 = run_cycle(&a, &traj, opts).unwrap();
            assert_eq!(r1.frames, r2.frames);
            assert_eq!(r1.summary, r2.summary);
        }
    }

    #[test]
    fn no_exo_has_idle_exo() {
        let a = build_default_assembly(&ModelConfig::default()).unwrap();
        let traj = synthesize_running_gait(&GaitParams::default()).unwrap();
        let run = run_cycle(
            &a,
            &traj,
            SimOptions {
                controller: ControllerKind::None,
                cycles: 1,
                ..Default::default()
            },
        )
        .unwrap();
        for f in &run.frames {
            assert_eq!(f.strap.values.norm(), 0.0);
            assert_eq!(f.control.force.norm(), 0.0);
            assert_eq!(
                f.tau.rows(6, 4).into_owned(),
                f.tau_unassisted.rows(0, 4).into_owned()
            );
        }
    }

    #[test]
    fn actuator_limits_hold() {
        let a = build_default_assembly(&ModelConfig::default()).unwrap();
        let traj = synthesize_running_gait(&GaitParams::default()).unwrap();
        let run = run_cycle(
            &a,
            &traj,
            SimOptions {
                controller: ControllerKind::Mac,
                cycles: 1,
                ..Default::default()
            },
        )
        .unwrap();
        for f in &run.frames {
            assert!(f.control.force.amax() <= 4000.0);
            assert!(f.muscle.forces.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn bad_options_rejected() {
        for opts in [
            SimOptions {
                dt: 0.0,
                ..Default::default()
            },
            SimOptions {
                dt: 0.01,
                ..Default::default()
            },
            SimOptions {
                cycles: 0,
                ..Default::default()
            },
            SimOptions {
                friction: -1.0,
                ..Default::default()
            },
        ] {
            assert!(matches!(opts.validate(), Err(Error::Config { .. })));
        }
    }
}
