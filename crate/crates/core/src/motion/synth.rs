//! Synthetic treadmill running gait.
//!
//! The whole-body center of mass follows acceleration profiles built from
//! sine pulses during each stance and pure gravity in flight, so its path is
//! exactly ballistic whenever no foot is on the ground; the pelvis is placed
//! so the limbs land the center of mass on that path. Stance legs are placed by
//! planar inverse kinematics with the foot rolling heel to toe on a belt
//! moving backward at running speed; swing legs blend from the toe-off
//! posture back to the touchdown posture with a flexion bump. Each leg angle
//! is then smoothed by a truncated Fourier series, so the stance foot slips
//! slightly where the raw waveform has kinks. Left touchdown is at `t = 0`.

use std::cell::RefCell;
use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::trajectory::{ContactSchedule, GaitTrajectory};
use super::HUMAN_DOF_NAMES;
use crate::error::{Error, Result};
use crate::model::config::{ModelConfig, SubjectConfig};
use crate::model::{
    build_default_assembly, forward_kinematics, Mat3, ModelAssembly, Side, Subsystem, Vec3,
};
use crate::strap::fit_exo_posture;

/// Shape parameters of the synthetic gait. All zero gives static standing.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GaitAmplitudes {
    /// Ankle ahead of the hip at touchdown (m).
    pub touchdown_reach: f64,
    /// Knee flexion at touchdown (rad, positive = flexed).
    pub touchdown_knee_flexion: f64,
    /// Foot pitch (toes up) at heel strike (rad).
    pub heel_strike_pitch: f64,
    /// Foot pitch (toes down) at toe-off (rad).
    pub toe_off_pitch: f64,
    /// Extra knee flexion at mid-swing (rad).
    pub swing_knee_flexion: f64,
    /// Extra hip flexion at mid-swing (rad).
    pub swing_hip_flexion: f64,
    /// Peak fore-aft pelvis acceleration in stance (m/s²).
    pub fore_aft_surge: f64,
    /// Peak lateral pelvis acceleration in stance (m/s²).
    pub lateral_sway: f64,
    pub hip_abduction: f64,
    pub hip_rotation: f64,
    pub pelvis_tilt: f64,
    pub pelvis_list: f64,
    pub pelvis_rotation: f64,
}

impl Default for GaitAmplitudes {
    fn default() -> Self {
        Self {
            touchdown_reach: 0.25,
            touchdown_knee_flexion: 0.25,
            heel_strike_pitch: 0.2,
            toe_off_pitch: 0.8,
            swing_knee_flexion: 1.2,
            swing_hip_flexion: 0.3,
            fore_aft_surge: 6.0,
            lateral_sway: 1.0,
            hip_abduction: 0.08,
            hip_rotation: 0.08,
            pelvis_tilt: 0.03,
            pelvis_list: 0.05,
            pelvis_rotation: 0.08,
        }
    }
}

impl GaitAmplitudes {
    pub fn zero() -> Self {
        Self {
            touchdown_reach: 0.0,
            touchdown_knee_flexion: 0.0,
            heel_strike_pitch: 0.0,
            toe_off_pitch: 0.0,
            swing_knee_flexion: 0.0,
            swing_hip_flexion: 0.0,
            fore_aft_surge: 0.0,
            lateral_sway: 0.0,
            hip_abduction: 0.0,
            hip_rotation: 0.0,
            pelvis_tilt: 0.0,
            pelvis_list: 0.0,
            pelvis_rotation: 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::zero()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GaitParams {
    /// Belt speed (m/s).
    pub speed: f64,
    /// Stride frequency (Hz); one stride holds a left and a right step.
    pub cadence: f64,
    /// Stance duration per foot as a fraction of the stride.
    pub stance_fraction: f64,
    /// Knots per second in the emitted trajectory.
    pub sample_rate: f64,
    /// Required peak-to-peak vertical excursion of the body's center of mass
    /// (m). Left unset, it follows from the ballistic flight constraint.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertical_excursion: Option<f64>,
    pub amplitudes: GaitAmplitudes,
    /// Body dimensions and mass distribution the gait is built for.
    pub subject: SubjectConfig,
    /// Balance the body as worn with the default exoskeleton, whose posture
    /// follows the legs through the straps, instead of the subject alone.
    pub carry_exo: bool,
}

impl Default for GaitParams {
    fn default() -> Self {
        Self {
            speed: 3.96,
            cadence: 1.45,
            stance_fraction: 0.3,
            sample_rate: 2000.0,
            vertical_excursion: None,
            amplitudes: GaitAmplitudes::default(),
            subject: SubjectConfig::default(),
            carry_exo: false,
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum PulseShape {
    /// `A sin(π τ / D)`
    Half,
    /// `A sin(2π τ / D)`
    Full,
}

#[derive(Clone, Copy, Debug)]
struct Pulse {
    start: f64,
    duration: f64,
    amp: f64,
    shape: PulseShape,
}

impl Pulse {
    /// Contributions to acceleration, velocity and position at time `t`.
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        let (a, d) = (self.amp, self.duration);
        let tau = t - self.start;
        if tau <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let k = match self.shape {
            PulseShape::Half => PI / d,
            PulseShape::Full => 2.0 * PI / d,
        };
        if tau < d {
            let acc = a * (k * tau).sin();
            let vel = a / k * (1.0 - (k * tau).cos());
            let pos = a / k * (tau - (k * tau).sin() / k);
            (acc, vel, pos)
        } else {
            let v_end = a / k * (1.0 - (k * d).cos());
            let p_end = a / k * (d - (k * d).sin() / k);
            (0.0, v_end, p_end + v_end * (tau - d))
        }
    }
}

/// Periodic 1-D motion: constant acceleration plus pulses.
#[derive(Clone, Debug)]
struct Profile {
    period: f64,
    c: f64,
    pulses: Vec<Pulse>,
    v0: f64,
    x0: f64,
}

impl Profile {
    fn new(period: f64, c: f64, pulses: Vec<Pulse>) -> Result<Self> {
        let mut p = Self {
            period,
            c,
            pulses,
            v0: 0.0,
            x0: 0.0,
        };
        let (_, v_end, x_end) = p.raw(period);
        let drift = v_end;
        if drift.abs() > 1e-9 * (1.0 + c.abs() * period) {
            return Err(Error::Synthesis(format!(
                "pelvis velocity not periodic (drift {drift:.3e} m/s)"
            )));
        }
        p.v0 = -x_end / period;
        Ok(p)
    }

    /// Acceleration, velocity, position with zero initial conditions.
    fn raw(&self, t: f64) -> (f64, f64, f64) {
        let mut out = (self.c, self.c * t, 0.5 * self.c * t * t);
        for p in &self.pulses {
            let (a, v, x) = p.eval(t);
            out.0 += a;
            out.1 += v;
            out.2 += x;
        }
        out
    }

    /// Position, velocity, acceleration at any time.
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        let tl = t.rem_euclid(self.period);
        let (a, v, x) = self.raw(tl);
        (self.x0 + self.v0 * tl + x, self.v0 + v, a)
    }

    fn mean(&self) -> f64 {
        let n = 2000;
        (0..n)
            .map(|i| self.eval(self.period * i as f64 / n as f64).0)
            .sum::<f64>()
            / n as f64
    }
}

fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
}

fn rot_z(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn rot_x(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn rot_y(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// Truncated real Fourier series over one period.
#[derive(Clone, Debug)]
struct Fourier {
    w: f64,
    mean: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Fourier {
    /// Least-squares fit of `harmonics` harmonics to `values` sampled
    /// uniformly over one period (first sample at phase 0).
    fn fit(values: &[f64], period: f64, harmonics: usize) -> Self {
        let n = values.len() as f64;
        let w = 2.0 * PI / period;
        let mean = values.iter().sum::<f64>() / n;
        let (mut cos, mut sin) = (Vec::with_capacity(harmonics), Vec::with_capacity(harmonics));
        for k in 1..=harmonics {
            let (mut c, mut s) = (0.0, 0.0);
            for (i, v) in values.iter().enumerate() {
                let ph = 2.0 * PI * (k * i) as f64 / n;
                c += v * ph.cos();
                s += v * ph.sin();
            }
            cos.push(2.0 * c / n);
            sin.push(2.0 * s / n);
        }
        Self { w, mean, cos, sin }
    }

    fn zero(period: f64) -> Self {
        Self::fit(&[0.0], period, 0)
    }

    fn eval(&self, t: f64) -> f64 {
        let mut v = self.mean;
        for (k, (c, s)) in self.cos.iter().zip(&self.sin).enumerate() {
            let ph = (k + 1) as f64 * self.w * t;
            v += c * ph.cos() + s * ph.sin();
        }
        v
    }
}

/// Harmonics kept when smoothing the leg waveforms.
const LEG_HARMONICS: usize = 12;
/// Harmonics used for the limb part of the center of mass.
const COM_HARMONICS: usize = 40;
/// Grid used to fit the leg waveforms.
const LEG_GRID: usize = 720;

/// Sagittal leg angles: hip flexion, knee angle (negative = flexed), ankle.
type LegAngles = [f64; 3];

struct Synth<'a> {
    p: &'a GaitParams,
    period: f64,
    ts: f64,
    x: Profile,
    y: Profile,
    z: Profile,
    /// Center of mass relative to the pelvis origin, smoothed.
    com_offset: [Fourier; 3],
    legs: Vec<Vec<Fourier>>,
    model: &'a ModelAssembly,
    /// Mass whose center follows the target profile.
    carried_mass: f64,
    /// Last exo posture fit, reused as the next starting point.
    exo_warm: RefCell<DVector<f64>>,
}

impl Synth<'_> {
    fn pelvis_angles(&self, t: f64) -> [f64; 3] {
        let a = &self.p.amplitudes;
        let w = 2.0 * PI / self.period;
        [
            a.pelvis_tilt * (2.0 * w * t).sin(),
            a.pelvis_list * (2.0 * w * t + 0.5 * PI).sin(),
            a.pelvis_rotation * (w * t).sin(),
        ]
    }

    fn com_target(&self, t: f64) -> Vec3 {
        Vec3::new(self.x.eval(t).0, self.y.eval(t).0, self.z.eval(t).0)
    }

    fn pelvis_pose(&self, t: f64) -> (Mat3, Vec3) {
        let [tilt, list, rot] = self.pelvis_angles(t);
        let r = rot_z(tilt) * rot_x(list) * rot_y(rot);
        let c = &self.com_offset;
        let off = Vec3::new(c[0].eval(t), c[1].eval(t), c[2].eval(t));
        (r, self.com_target(t) - off)
    }

    /// Human center of mass relative to the pelvis origin for the leg and
    /// pelvis angles at `t`.
    fn limb_com_offset(&self, t: f64) -> Result<Vec3> {
        let mut q = vec![0.0; self.model.ndof()];
        let angles = self.angles(t);
        q[3..16].copy_from_slice(&angles);
        if self.p.carry_exo {
            let human = self.model.human_dofs().len();
            let qe = fit_exo_posture(self.model, &q[..human], &self.exo_warm.borrow())?;
            q[human..].copy_from_slice(qe.as_slice());
            *self.exo_warm.borrow_mut() = qe;
        }
        let poses = forward_kinematics(self.model, &q)?;
        let mut sum = Vec3::zeros();
        for (seg, pose) in self.model.segments.iter().zip(&poses) {
            if self.p.carry_exo || seg.subsystem == Subsystem::Human {
                sum += seg.mass * pose.transform_point(&seg.com_offset);
            }
        }
        Ok(sum / self.carried_mass)
    }

    fn fit_com_offset(&mut self) -> Result<()> {
        let mut cols = vec![Vec::with_capacity(LEG_GRID); 3];
        for i in 0..LEG_GRID {
            let c = self.limb_com_offset(self.period * i as f64 / LEG_GRID as f64)?;
            for j in 0..3 {
                cols[j].push(c[j]);
            }
        }
        self.com_offset = [0, 1, 2].map(|j| Fourier::fit(&cols[j], self.period, COM_HARMONICS));
        Ok(())
    }

    fn hip_world(&self, side: Side, t: f64) -> (Mat3, Vec3) {
        let (r, o) = self.pelvis_pose(t);
        let hip = Vec3::new(
            0.0,
            0.0,
            side.lateral_sign() * self.p.subject.hip_half_width,
        );
        (r, o + r * hip)
    }

    fn touchdown_time(side: Side, period: f64) -> f64 {
        match side {
            Side::Left => 0.0,
            Side::Right => 0.5 * period,
        }
    }

    fn foot_pitch(&self, s: f64) -> f64 {
        let a = &self.p.amplitudes;
        let (s_flat, s_heel) = (0.15, 0.45);
        if s < s_flat {
            a.heel_strike_pitch * (1.0 - smoothstep(s / s_flat))
        } else if s < s_heel {
            0.0
        } else {
            // Still rolling at toe-off: the ankle sweeps forward over the toe.
            let u = (s - s_heel) / (1.0 - s_heel);
            -a.toe_off_pitch * u * u * u * (2.0 - u)
        }
    }

    /// Ankle position relative to the heel contact point for foot pitch `psi`.
    fn ankle_from_heel(&self, psi: f64) -> (f64, f64) {
        let g = &self.p.subject;
        let (h, a, toe) = (g.heel_length, g.ankle_height, g.toe_length);
        let (s, c) = psi.sin_cos();
        if psi >= 0.0 {
            (h * c - a * s, h * s + a * c)
        } else {
            (h + toe - toe * c - a * s, -toe * s + a * c)
        }
    }

    /// Stance leg angles at `tau` seconds after touchdown (`0 ≤ tau ≤ Ts`).
    fn stance(&self, side: Side, td: f64, tau: f64) -> Result<LegAngles> {
        let g = &self.p.subject;
        let a = &self.p.amplitudes;
        let (l1, l2) = (g.thigh_length, g.shank_length);

        let (_, hip_td) = self.hip_world(side, td);
        let psi_td = self.foot_pitch(0.0);
        let (ax0, _) = self.ankle_from_heel(psi_td);
        let heel0 = hip_td.x + a.touchdown_reach - ax0;

        let t = td + tau;
        let psi = self.foot_pitch(tau / self.ts);
        let (ax, ay) = self.ankle_from_heel(psi);
        let heel = heel0 - self.p.speed * tau;
        let (r, hip) = self.hip_world(side, t);
        let ankle = Vec3::new(heel + ax, ay, hip.z);
        let d = r.transpose() * (ankle - hip);
        let (dx, dy) = (d.x, d.y);
        let reach = (dx * dx + dy * dy).sqrt();
        if reach >= l1 + l2 - 1e-6 {
            return Err(Error::Synthesis(format!(
                "stance foot out of reach at t = {t:.4} s ({reach:.4} m > {:.4} m leg)",
                l1 + l2
            )));
        }
        let cos_k = ((reach * reach - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)).clamp(-1.0, 1.0);
        let knee = -cos_k.acos();
        let phi = dx.atan2(-dy);
        let hip_flex = phi - (l2 * knee.sin()).atan2(l1 + l2 * knee.cos());
        let tilt = self.pelvis_angles(t)[0];
        let ankle_angle = psi - tilt - hip_flex - knee;
        Ok([hip_flex, knee, ankle_angle])
    }

    /// Unsmoothed leg waveform: stance inverse kinematics, then a swing
    /// blend from toe-off back to the touchdown posture.
    fn leg_target(&self, side: Side, t: f64) -> Result<LegAngles> {
        let td = Self::touchdown_time(side, self.period);
        let tau = (t - td).rem_euclid(self.period);
        if tau <= self.ts {
            return self.stance(side, td, tau);
        }
        let u = (tau - self.ts) / (self.period - self.ts);
        let start = self.stance(side, td, self.ts)?;
        let end = self.stance(side, td, 0.0)?;
        let blend = smoothstep(u);
        let bump = 64.0 * u.powi(3) * (1.0 - u).powi(3);
        let mut out = [0.0; 3];
        for j in 0..3 {
            out[j] = start[j] + (end[j] - start[j]) * blend;
        }
        out[0] += self.p.amplitudes.swing_hip_flexion * bump;
        out[1] -= self.p.amplitudes.swing_knee_flexion * bump;
        Ok(out)
    }

    fn fit_legs(&mut self) -> Result<()> {
        let mut legs = Vec::with_capacity(2);
        for side in Side::BOTH {
            let mut cols = vec![Vec::with_capacity(LEG_GRID); 3];
            for i in 0..LEG_GRID {
                let v = self.leg_target(side, self.period * i as f64 / LEG_GRID as f64)?;
                for j in 0..3 {
                    cols[j].push(v[j]);
                }
            }
            legs.push(
                cols.iter()
                    .map(|c| Fourier::fit(c, self.period, LEG_HARMONICS))
                    .collect(),
            );
        }
        self.legs = legs;
        Ok(())
    }

    fn leg(&self, side: Side, t: f64) -> LegAngles {
        let f = &self.legs[side.index()];
        [f[0].eval(t), f[1].eval(t), f[2].eval(t)]
    }

    fn hip_secondary(&self, side: Side, t: f64) -> (f64, f64) {
        let a = &self.p.amplitudes;
        let td = Self::touchdown_time(side, self.period);
        let phase = 2.0 * PI * (t - td) / self.period + 0.5 * PI - PI * self.ts / self.period;
        (-a.hip_abduction * phase.sin(), a.hip_rotation * phase.sin())
    }

    /// Pelvis rotations and leg angles (coordinates 3..16).
    fn angles(&self, t: f64) -> [f64; 13] {
        let mut q = [0.0; 13];
        q[..3].copy_from_slice(&self.pelvis_angles(t));
        for side in Side::BOTH {
            let [hf, knee, ankle] = self.leg(side, t);
            let (abd, rot) = self.hip_secondary(side, t);
            let k = 3 + 5 * side.index();
            q[k..k + 5].copy_from_slice(&[hf, abd, rot, knee, ankle]);
        }
        q
    }

    /// Full human coordinates. The pelvis is placed so the whole-body center
    /// of mass follows the target profile exactly.
    fn coordinates(&self, t: f64) -> Result<Vec<f64>> {
        let com = self.com_target(t) - self.limb_com_offset(t)?;
        let mut q = vec![com.x, com.y, com.z];
        q.extend(self.angles(t));
        Ok(q)
    }
}

fn check_params(p: &GaitParams) -> Result<()> {
    if !(p.stance_fraction > 0.0 && p.stance_fraction <= 0.5) {
        return Err(Error::Synthesis(format!(
            "stance fraction {} outside (0, 0.5]; running has no double stance",
            p.stance_fraction
        )));
    }
    if !(p.cadence.is_finite() && p.cadence > 0.0) {
        return Err(Error::Synthesis("cadence must be positive".into()));
    }
    if !(p.speed.is_finite() && p.speed >= 0.0) {
        return Err(Error::Synthesis("speed must be non-negative".into()));
    }
    if !(p.sample_rate.is_finite() && p.sample_rate * (1.0 / p.cadence) >= 16.0) {
        return Err(Error::Synthesis("sample rate too low for one cycle".into()));
    }
    Ok(())
}

fn sample_times(period: f64, rate: f64) -> Vec<f64> {
    let n = (period * rate).round().max(16.0) as usize;
    (0..=n).map(|i| period * i as f64 / n as f64).collect()
}

fn standing(p: &GaitParams, period: f64) -> Result<GaitTrajectory> {
    let times = sample_times(period, p.sample_rate);
    let mut q = vec![0.0; 16];
    q[1] = p.subject.thigh_length + p.subject.shank_length + p.subject.ankle_height;
    let samples = vec![q; times.len()];
    GaitTrajectory::new(
        HUMAN_DOF_NAMES.iter().map(|s| s.to_string()).collect(),
        times,
        samples,
        period,
        true,
        ContactSchedule {
            left: vec![(0.0, 1.0)],
            right: vec![],
        },
    )
}

/// Generate one periodic stride of treadmill running.
pub fn synthesize_running_gait(p: &GaitParams) -> Result<GaitTrajectory> {
    check_params(p)?;
    let period = 1.0 / p.cadence;
    if p.amplitudes.is_zero() {
        return standing(p, period);
    }
    let ts = p.stance_fraction * period;
    let half = 0.5 * period;
    let g = 9.81;
    let a = &p.amplitudes;

    let pulse = |start: f64, amp: f64, shape| Pulse {
        start,
        duration: ts,
        amp,
        shape,
    };
    // Vertical: stance pulses cancel gravity on average; flight is free fall.
    let lift = g * period * PI / (4.0 * ts);
    let y = Profile::new(
        period,
        -g,
        vec![
            pulse(0.0, lift, PulseShape::Half),
            pulse(half, lift, PulseShape::Half),
        ],
    )?;
    let x = Profile::new(
        period,
        0.0,
        vec![
            pulse(0.0, -a.fore_aft_surge, PulseShape::Full),
            pulse(half, -a.fore_aft_surge, PulseShape::Full),
        ],
    )?;
    let mut z = Profile::new(
        period,
        0.0,
        vec![
            pulse(0.0, a.lateral_sway, PulseShape::Half),
            pulse(half, -a.lateral_sway, PulseShape::Half),
        ],
    )?;
    z.x0 = -z.mean();

    let (ymin, ymax) = (0..2000).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
        let v = y.eval(period * i as f64 / 2000.0).0;
        (lo.min(v), hi.max(v))
    });
    if let Some(req) = p.vertical_excursion {
        if (req - (ymax - ymin)).abs() > 1e-3 {
            return Err(Error::Synthesis(format!(
                "vertical excursion {req:.4} m is not ballistic; flight phases with this contact schedule give {:.4} m",
                ymax - ymin
            )));
        }
    }

    let subject = &p.subject;
    let (l1, l2) = (subject.thigh_length, subject.shank_length);
    let kt = a.touchdown_knee_flexion;
    let leg_td = (l1 * l1 + l2 * l2 + 2.0 * l1 * l2 * kt.cos()).sqrt();
    if a.touchdown_reach.abs() >= leg_td {
        return Err(Error::Synthesis(
            "touchdown reach exceeds leg length".into(),
        ));
    }
    let model = build_default_assembly(&ModelConfig {
        subject: subject.clone(),
        ..Default::default()
    })
    .map_err(|e| Error::Synthesis(format!("subject model: {e}")))?;
    let mut synth = Synth {
        p,
        period,
        ts,
        x,
        y,
        z,
        com_offset: [0, 1, 2].map(|_| Fourier::zero(period)),
        legs: Vec::new(),
        carried_mass: if p.carry_exo {
            model.mass_of(Subsystem::Human) + model.mass_of(Subsystem::Exo)
        } else {
            model.mass_of(Subsystem::Human)
        },
        exo_warm: RefCell::new(DVector::zeros(model.exo_dofs().len())),
        model: &model,
    };
    let (_, ankle_td_y) = synth.ankle_from_heel(synth.foot_pitch(0.0));
    let hip_td = ankle_td_y + (leg_td * leg_td - a.touchdown_reach.powi(2)).sqrt();
    // The pelvis follows the center of mass minus the limb offset, which in
    // turn depends on the legs; a few fixed-point passes settle both.
    for _ in 0..4 {
        // Height chosen so the touchdown leg has the requested knee flexion.
        let pelvis_td = synth.pelvis_pose(0.0).1.y;
        synth.y.x0 += hip_td - pelvis_td;
        synth.fit_legs()?;
        synth.fit_com_offset()?;
    }
    synth.fit_legs()?;

    let times = sample_times(period, p.sample_rate);
    let mut samples = Vec::with_capacity(times.len());
    for &t in &times[..times.len() - 1] {
        samples.push(synth.coordinates(t)?);
    }
    samples.push(samples[0].clone());

    for (name, col, lo, hi) in [
        ("hip_flexion_l", 6, -1.2, 2.2),
        ("knee_angle_l", 9, -2.6, 0.05),
        ("ankle_angle_l", 10, -1.2, 1.0),
    ] {
        for s in &samples {
            if !(lo..=hi).contains(&s[col]) {
                return Err(Error::Synthesis(format!(
                    "{name} reaches {:.3} rad, outside [{lo}, {hi}]",
                    s[col]
                )));
            }
        }
    }

    GaitTrajectory::new(
        HUMAN_DOF_NAMES.iter().map(|s| s.to_string()).collect(),
        times,
        samples,
        period,
        true,
        ContactSchedule {
            left: vec![(0.0, p.stance_fraction)],
            right: vec![(0.5, 0.5 + p.stance_fraction)],
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fourier_recovers_band_limited_signal() {
        let period = 0.7;
        let f = |t: f64| {
            0.3 + 0.5 * (2.0 * PI * t / period).cos() - 0.2 * (6.0 * PI * t / period).sin()
        };
        let vals: Vec<f64> = (0..64).map(|i| f(period * i as f64 / 64.0)).collect();
        let fit = Fourier::fit(&vals, period, 5);
        for k in 0..50 {
            let t = 0.0137 * k as f64;
            assert_relative_eq!(fit.eval(t), f(t), epsilon = 1e-12);
        }
    }

    #[test]
    fn pulses_integrate() {
        for shape in [PulseShape::Half, PulseShape::Full] {
            let p = Pulse {
                start: 0.1,
                duration: 0.2,
                amp: 3.0,
                shape,
            };
            let h = 1e-5;
            for t in [0.15, 0.25, 0.31, 0.5] {
                let (a, v, x) = p.eval(t);
                assert_relative_eq!(
                    (p.eval(t + h).2 - p.eval(t - h).2) / (2.0 * h),
                    v,
                    epsilon = 1e-7
                );
                assert_relative_eq!(
                    (p.eval(t + h).1 - p.eval(t - h).1) / (2.0 * h),
                    a,
                    epsilon = 1e-6
                );
                let _ = x;
            }
        }
    }

    #[test]
    fn default_gait_is_valid() {
        let traj = synthesize_running_gait(&GaitParams::default()).unwrap();
        assert_eq!(traj.names.len(), 16);
        for k in 0..400 {
            let t = traj.cycle_duration * k as f64 / 400.0;
            let c = traj.sample(t).unwrap().contact;
            assert!(!(c[0] && c[1]));
        }
    }

    fn human_com(model: &ModelAssembly, q_h: &[f64]) -> Vec3 {
        let mut q = vec![0.0; model.ndof()];
        q[..16].copy_from_slice(q_h);
        let poses = forward_kinematics(model, &q).unwrap();
        let mut sum = Vec3::zeros();
        for (seg, pose) in model.segments.iter().zip(&poses) {
            if seg.subsystem == Subsystem::Human {
                sum += seg.mass * pose.transform_point(&seg.com_offset);
            }
        }
        sum / model.mass_of(Subsystem::Human)
    }

    #[test]
    fn flight_is_ballistic() {
        let p = GaitParams::default();
        let traj = synthesize_running_gait(&p).unwrap();
        let model = build_default_assembly(&ModelConfig::default()).unwrap();
        let period = traj.cycle_duration;
        let h = period / (period * p.sample_rate).round();
        let first = (p.stance_fraction * period / h).ceil() as usize + 2;
        let last = (0.5 * period / h).floor() as usize - 2;
        // Second differences at the knots are exact for a parabola.
        for k in (first..last).step_by(7) {
            let c: Vec<Vec3> = (0..3)
                .map(|j| {
                    let s = traj.sample((k + j - 1) as f64 * h).unwrap();
                    assert_eq!(s.contact, [false, false]);
                    human_com(&model, &s.q)
                })
                .collect();
            let acc = (c[2] - 2.0 * c[1] + c[0]) / (h * h);
            assert!(
                (acc - Vec3::new(0.0, -9.81, 0.0)).norm() < 1e-6,
                "k={k} acc={acc:?}"
            );
        }
    }

    #[test]
    fn seam_is_periodic() {
        let traj = synthesize_running_gait(&GaitParams::default()).unwrap();
        let a = traj.sample(0.0).unwrap();
        let b = traj.sample(traj.cycle_duration - 1e-12).unwrap();
        for k in 0..16 {
            assert!((a.q[k] - b.q[k]).abs() < 1e-6);
            assert!((a.qd[k] - b.qd[k]).abs() < 1e-6 * (1.0 + a.qd[k].abs()));
        }
    }

    #[test]
    fn zero_amplitudes_stand_still() {
        let p = GaitParams {
            amplitudes: GaitAmplitudes::zero(),
            ..Default::default()
        };
        let traj = synthesize_running_gait(&p).unwrap();
        for k in 0..50 {
            let s = traj.sample(k as f64 * 0.013).unwrap();
            assert_eq!(s.contact, [true, false]);
            assert!(s.qd.iter().chain(&s.qdd).all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn long_stance_rejected() {
        let p = GaitParams {
            stance_fraction: 0.6,
            ..Default::default()
        };
        assert!(matches!(
            synthesize_running_gait(&p),
            Err(Error::Synthesis(_))
        ));
    }

    #[test]
    fn non_ballistic_excursion_rejected() {
        let p = GaitParams {
            vertical_excursion: Some(0.01),
            ..Default::default()
        };
        assert!(matches!(
            synthesize_running_gait(&p),
            Err(Error::Synthesis(_))
        ));
    }
}
