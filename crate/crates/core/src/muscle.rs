//! Static muscle-force optimization over the controlled hip and knee DOFs and
//! the tibiofemoral axial reaction.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lsq::bounded_least_squares;
use crate::model::config::MuscleConfig;
use crate::model::{KinematicState, ModelAssembly, Side, Vec3};

/// Rows of one leg's block in the 8-vector: hip flexion, abduction, rotation, knee.
pub const LEG_DOFS: usize = 4;
const KNEE_ROW: usize = 3;

pub const DEFAULT_EXPONENT: f64 = 2.0;
pub const DEFAULT_RESIDUAL_WEIGHT: f64 = 100.0;

#[derive(Clone, Debug, PartialEq)]
pub struct MuscleActuator {
    pub name: String,
    pub side: Side,
    pub f_max: f64,
    /// Moment arms at zero joint angle over the leg's four DOFs (m).
    pub moment_arms: [f64; LEG_DOFS],
    /// Linear change of each moment arm with its joint angle (m/rad).
    pub moment_arm_slopes: [f64; LEG_DOFS],
    /// Angle between the line of action at the knee and the tibia axis (rad).
    pub knee_line_angle: Option<f64>,
}

impl MuscleActuator {
    pub fn from_config(cfg: &MuscleConfig, side: Side) -> Result<Self> {
        let name = format!("{}_{}", cfg.name, side.suffix());
        if !(cfg.f_max.is_finite() && cfg.f_max > 0.0) {
            return Err(Error::invalid(
                format!("muscles.{}.f_max", cfg.name),
                "must be positive",
            ));
        }
        let m = Self {
            name,
            side,
            f_max: cfg.f_max,
            moment_arms: cfg.moment_arms.as_array(),
            moment_arm_slopes: cfg.moment_arm_slopes.as_array(),
            knee_line_angle: cfg.knee_line_angle_deg.map(f64::to_radians),
        };
        if m.spanned_dofs().is_empty() {
            return Err(Error::invalid(
                format!("muscles.{}.moment_arms", cfg.name),
                "spans no DOF",
            ));
        }
        Ok(m)
    }

    fn offset(&self) -> usize {
        LEG_DOFS * self.side.index()
    }

    /// Indices into the 8-vector of the DOFs this muscle crosses.
    pub fn spanned_dofs(&self) -> Vec<usize> {
        (0..LEG_DOFS)
            .filter(|&j| self.moment_arms[j] != 0.0 || self.moment_arm_slopes[j] != 0.0)
            .map(|j| self.offset() + j)
            .collect()
    }

    pub fn crosses_knee(&self) -> bool {
        self.moment_arms[KNEE_ROW] != 0.0 || self.moment_arm_slopes[KNEE_ROW] != 0.0
    }

    /// Signed moment arm about 8-vector DOF `dof` at joint angles `angles`.
    pub fn moment_arm(&self, dof: usize, angles: &[f64; 8]) -> f64 {
        let off = self.offset();
        if dof < off || dof >= off + LEG_DOFS {
            return 0.0;
        }
        let j = dof - off;
        self.moment_arms[j] + self.moment_arm_slopes[j] * angles[dof]
    }

    /// Musculotendon length relative to the reference pose. A positive moment
    /// arm shortens the muscle as its joint angle grows.
    pub fn length_change(&self, angles: &[f64; 8]) -> f64 {
        let off = self.offset();
        -(0..LEG_DOFS)
            .map(|j| {
                let q = angles[off + j];
                self.moment_arms[j] * q + 0.5 * self.moment_arm_slopes[j] * q * q
            })
            .sum::<f64>()
    }
}

/// Extract the controlled joint angles from combined coordinates.
pub fn controlled_angles(assembly: &ModelAssembly, q: &[f64]) -> [f64; 8] {
    let idx = assembly.controlled_dofs();
    std::array::from_fn(|i| q[idx[i]])
}

/// 8×n matrix; column `i` holds muscle `i`'s moment arms.
pub fn moment_arm_matrix(muscles: &[MuscleActuator], angles: &[f64; 8]) -> DMatrix<f64> {
    DMatrix::from_fn(8, muscles.len(), |r, c| muscles[c].moment_arm(r, angles))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MuscleSolution {
    pub forces: DVector<f64>,
    pub activations: DVector<f64>,
    /// Demand minus muscle torque over the 8 controlled DOFs.
    pub residual: DVector<f64>,
    pub objective: f64,
    /// Gradient of the objective in activation space projected onto [0, 1].
    pub projected_gradient: f64,
}

/// Minimize `Σ aᵢ^p + w·CᵀC` with `C = τ − R f`, `f = a ∘ f_max`, `0 ≤ a ≤ 1`.
/// Only `p = 2` is supported.
pub fn solve_muscle_forces(
    tau_demand: &DVector<f64>,
    muscles: &[MuscleActuator],
    angles: &[f64; 8],
    p: f64,
    w: f64,
) -> Result<MuscleSolution> {
    if p != 2.0 {
        return Err(Error::Unsupported(format!(
            "activation exponent {p}; only 2 is implemented"
        )));
    }
    if !(w.is_finite() && w > 0.0) {
        return Err(Error::invalid(
            "muscle residual weight",
            format!("must be positive, got {w}"),
        ));
    }
    if tau_demand.len() != 8 {
        return Err(Error::Dimension {
            context: "muscle demand torque",
            expected: 8,
            actual: tau_demand.len(),
        });
    }
    let n = muscles.len();
    let r = moment_arm_matrix(muscles, angles);
    let fmax = DVector::from_iterator(n, muscles.iter().map(|m| m.f_max));
    let rd = &r * DMatrix::from_diagonal(&fmax);
    let sw = w.sqrt();
    let mut a = DMatrix::zeros(n + 8, n);
    a.view_mut((0, 0), (n, n)).fill_with_identity();
    a.view_mut((n, 0), (8, n)).copy_from(&(&rd * sw));
    let mut b = DVector::zeros(n + 8);
    b.rows_mut(n, 8).copy_from(&(tau_demand * sw));
    let sol = bounded_least_squares(&a, &b, &DVector::zeros(n), &DVector::from_element(n, 1.0));

    let activations = sol.x;
    let forces = activations.component_mul(&fmax);
    let residual = tau_demand - &r * &forces;
    let objective = activations.norm_squared() + w * residual.norm_squared();
    Ok(MuscleSolution {
        forces,
        activations,
        residual,
        objective,
        projected_gradient: sol.projected_gradient,
    })
}

/// Axial tibiofemoral reaction on one knee (negative = compression).
///
/// `intersegmental` is the force the thigh exerts on the shank subtree from
/// inverse dynamics. Each knee-crossing muscle adds `−f cos θ`, with `θ` its
/// line-of-action angle to the tibia axis.
pub fn knee_axial_reaction(
    assembly: &ModelAssembly,
    kin: &KinematicState,
    side: Side,
    intersegmental: &Vec3,
    forces: &DVector<f64>,
    muscles: &[MuscleActuator],
) -> Result<f64> {
    let shank = assembly.shank_segment(side)?;
    let axis = kin.segments[shank].pose.rotation.column(1).into_owned();
    let muscle_part: f64 = muscles
        .iter()
        .zip(forces.iter())
        .filter(|(m, _)| m.side == side && m.crosses_knee())
        .map(|(m, f)| -f * m.knee_line_angle.unwrap_or(0.0).cos())
        .sum();
    Ok(intersegmental.dot(&axis) + muscle_part)
}
