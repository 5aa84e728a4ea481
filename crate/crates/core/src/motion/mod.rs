//! Prescribed human motion: trajectory storage, spline sampling and a
//! synthetic running-gait generator.

mod spline;
mod synth;
mod trajectory;

pub use spline::CubicSpline;
pub use synth::{synthesize_running_gait, GaitAmplitudes, GaitParams};
pub use trajectory::{
    load_trajectory, parse_trajectory, ContactSchedule, GaitTrajectory, MotionSample,
};

/// Human coordinate names in model order.
pub const HUMAN_DOF_NAMES: [&str; 16] = [
    "pelvis_tx",
    "pelvis_ty",
    "pelvis_tz",
    "pelvis_tilt",
    "pelvis_list",
    "pelvis_rotation",
    "hip_flexion_l",
    "hip_abduction_l",
    "hip_rotation_l",
    "knee_angle_l",
    "ankle_angle_l",
    "hip_flexion_r",
    "hip_abduction_r",
    "hip_rotation_r",
    "knee_angle_r",
    "ankle_angle_r",
];
