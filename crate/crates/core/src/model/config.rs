//! Model parameter file schema.
//!
//! The file is TOML. Every field has a default, so an empty file yields the
//! reference model: the nominal exoskeleton masses and inertias, nominal strap
//! stiffness and damping, and a 65.9 kg subject. Geometry is given for the
//! right side (`+z`) and mirrored across the sagittal plane for the left.
//!
//! Anchor coordinates of straps and actuators are estimates read off the
//! design drawings; treat them as tunable.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub gravity: f64,
    pub subject: SubjectConfig,
    pub exo: ExoConfig,
    pub straps: StrapsConfig,
    pub actuators: ActuatorsConfig,
    /// Per-leg muscle templates, instantiated once for each side.
    pub muscles: Vec<MuscleConfig>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            gravity: 9.81,
            subject: SubjectConfig::default(),
            exo: ExoConfig::default(),
            straps: StrapsConfig::default(),
            actuators: ActuatorsConfig::default(),
            muscles: default_muscles(),
        }
    }
}

impl ModelConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("model", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        toml::from_str(&text).map_err(|e| Error::config(path.display().to_string(), e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("model config serializes")
    }
}

/// Optional overrides for a rigid segment's inertial properties.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentOverride {
    pub mass: Option<f64>,
    pub inertia: Option<[f64; 3]>,
    pub com: Option<[f64; 3]>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SubjectConfig {
    pub mass: f64,
    /// Half distance between the hip joint centres.
    pub hip_half_width: f64,
    pub thigh_length: f64,
    pub shank_length: f64,
    /// Ankle joint centre height above the sole.
    pub ankle_height: f64,
    /// Sole extent behind and ahead of the ankle.
    pub heel_length: f64,
    pub toe_length: f64,
    pub foot_half_width: f64,
    pub trunk_length: f64,
    /// Keyed by segment name (`pelvis`, `hat`, `thigh_l`, ...).
    pub overrides: BTreeMap<String, SegmentOverride>,
}

impl Default for SubjectConfig {
    fn default() -> Self {
        Self {
            mass: 65.9,
            hip_half_width: 0.085,
            thigh_length: 0.42,
            shank_length: 0.43,
            ankle_height: 0.07,
            heel_length: 0.06,
            toe_length: 0.20,
            foot_half_width: 0.05,
            trunk_length: 0.70,
            overrides: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExoPartConfig {
    pub mass: f64,
    pub inertia: [f64; 3],
    pub com: [f64; 3],
    pub length: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ExoConfig {
    pub load_support: ExoPartConfig,
    pub pelvis: ExoPartConfig,
    pub femur: ExoPartConfig,
    pub tibia: ExoPartConfig,
    /// Exo-pelvis joint anchor in the load-support frame (right side).
    pub pelvis_joint_anchor: [f64; 3],
    /// Exo-pelvis joint axis (right side); positive rotation abducts.
    pub pelvis_joint_axis: [f64; 3],
    /// Exo-hip joint anchor in the exo-pelvis frame.
    pub hip_joint_anchor: [f64; 3],
    pub hip_joint_axis: [f64; 3],
    /// Exo-knee joint anchor in the exo-femur frame.
    pub knee_joint_anchor: [f64; 3],
    pub knee_joint_axis: [f64; 3],
    pub pelvis_joint_limits: [f64; 2],
    pub hip_joint_limits: [f64; 2],
    pub knee_joint_limits: [f64; 2],
}

impl Default for ExoConfig {
    fn default() -> Self {
        Self {
            load_support: ExoPartConfig {
                mass: 3.0,
                inertia: [0.150, 0.050, 0.110],
                com: [-0.15, 0.10, 0.0],
                length: 0.30,
            },
            pelvis: ExoPartConfig {
                mass: 5.0,
                inertia: [0.0181, 0.0311, 0.0172],
                com: [0.0, -0.06, 0.0],
                length: 0.12,
            },
            femur: ExoPartConfig {
                mass: 3.0,
                inertia: [0.0640, 0.0011, 0.0640],
                com: [0.0, -0.21, 0.0],
                length: 0.42,
            },
            tibia: ExoPartConfig {
                mass: 2.0,
                inertia: [0.0420, 0.0007, 0.0420],
                com: [0.0, -0.18, 0.0],
                length: 0.40,
            },
            pelvis_joint_anchor: [-0.02, 0.12, 0.17],
            pelvis_joint_axis: [-1.0, 0.0, 0.0],
            hip_joint_anchor: [0.02, -0.12, 0.0],
            hip_joint_axis: [0.0, 0.0, 1.0],
            knee_joint_anchor: [0.0, -0.42, 0.0],
            knee_joint_axis: [0.0, 0.0, 1.0],
            pelvis_joint_limits: [-0.6, 0.6],
            hip_joint_limits: [-1.0, 2.2],
            knee_joint_limits: [-2.6, 0.2],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StrapConfig {
    pub stiffness: [f64; 3],
    pub damping: [f64; 3],
    /// Separate stiffness for negative displacements (six-direction element).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stiffness_negative: Option<[f64; 3]>,
    /// Attachment on the human segment, in its frame (right side).
    pub body_point: [f64; 3],
    /// Attachment on the exo segment; defaults to the point coincident with
    /// `body_point` in the assembled reference pose.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exo_point: Option<[f64; 3]>,
    pub contact_area: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct StrapsConfig {
    pub femur: StrapConfig,
    pub tibia: StrapConfig,
}

impl Default for StrapsConfig {
    fn default() -> Self {
        let nominal = |body_point| StrapConfig {
            stiffness: [160_000.0, 1_600.0, 1_600.0],
            damping: [400.0, 40.0, 40.0],
            stiffness_negative: None,
            body_point,
            exo_point: None,
            contact_area: 0.02,
        };
        Self {
            femur: nominal([0.0, -0.25, 0.07]),
            tibia: nominal([0.0, -0.20, 0.06]),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ActuatorConfig {
    /// Endpoint on the proximal segment, in its frame (right side).
    pub proximal_point: [f64; 3],
    /// Endpoint on the distal segment, in its frame (right side).
    pub distal_point: [f64; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ActuatorsConfig {
    pub force_limit: f64,
    /// Load support to exo-pelvis.
    pub pelvis: ActuatorConfig,
    /// Exo-pelvis to exo-femur.
    pub hip: ActuatorConfig,
    /// Exo-femur to exo-tibia.
    pub knee: ActuatorConfig,
}

impl Default for ActuatorsConfig {
    fn default() -> Self {
        Self {
            force_limit: 4000.0,
            pelvis: ActuatorConfig {
                proximal_point: [-0.02, 0.18, 0.06],
                distal_point: [0.0, 0.06, 0.0],
            },
            hip: ActuatorConfig {
                proximal_point: [0.09, -0.02, 0.0],
                distal_point: [0.07, -0.15, 0.0],
            },
            knee: ActuatorConfig {
                proximal_point: [-0.07, -0.22, 0.0],
                distal_point: [-0.07, -0.10, 0.0],
            },
        }
    }
}

/// Signed moment arms over one leg's four controlled DOFs
/// (hip flexion, hip abduction, hip rotation, knee extension).
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct LegMomentArms {
    pub hip_flexion: f64,
    pub hip_abduction: f64,
    pub hip_rotation: f64,
    pub knee: f64,
}

impl LegMomentArms {
    pub fn as_array(&self) -> [f64; 4] {
        [
            self.hip_flexion,
            self.hip_abduction,
            self.hip_rotation,
            self.knee,
        ]
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MuscleConfig {
    pub name: String,
    pub f_max: f64,
    pub moment_arms: LegMomentArms,
    /// Rate of change of each moment arm with its joint angle (m/rad).
    #[serde(default)]
    pub moment_arm_slopes: LegMomentArms,
    /// Angle between the muscle's line of action at the knee and the tibia axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knee_line_angle_deg: Option<f64>,
}

/// Order-of-magnitude physiological defaults for the six hip/knee muscles.
pub fn default_muscles() -> Vec<MuscleConfig> {
    let m = |name: &str, f_max, arms: [f64; 4], knee_angle: Option<f64>| MuscleConfig {
        name: name.to_string(),
        f_max,
        moment_arms: LegMomentArms {
            hip_flexion: arms[0],
            hip_abduction: arms[1],
            hip_rotation: arms[2],
            knee: arms[3],
        },
        moment_arm_slopes: LegMomentArms::default(),
        knee_line_angle_deg: knee_angle,
    };
    vec![
        m(
            "biceps_femoris_lh",
            1800.0,
            [-0.06, 0.0, 0.0, -0.03],
            Some(15.0),
        ),
        m(
            "biceps_femoris_sh",
            800.0,
            [0.0, 0.0, 0.0, -0.03],
            Some(15.0),
        ),
        m("gluteus_maximus", 3500.0, [-0.07, 0.02, -0.02, 0.0], None),
        m(
            "rectus_femoris",
            1500.0,
            [0.04, 0.0, 0.0, 0.045],
            Some(20.0),
        ),
        m(
            "vastus_lateralis",
            4500.0,
            [0.0, 0.0, 0.0, 0.045],
            Some(20.0),
        ),
        m(
            "vastus_medialis",
            3000.0,
            [0.0, 0.0, 0.0, 0.045],
            Some(20.0),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(
            ModelConfig::from_toml_str("").unwrap(),
            ModelConfig::default()
        );
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ModelConfig::default();
        let back = ModelConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_override() {
        let cfg = ModelConfig::from_toml_str("[exo.femur]\nmass = 4.0\ninertia = [0.07, 0.001, 0.07]\ncom = [0.0, -0.2, 0.0]\nlength = 0.42\n").unwrap();
        assert_eq!(cfg.exo.femur.mass, 4.0);
        assert_eq!(cfg.exo.tibia.mass, 2.0);
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(ModelConfig::from_toml_str("[subject]\nheight = 2.0\n").is_err());
    }
}
