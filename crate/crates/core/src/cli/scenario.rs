use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control::ControllerKind;
use crate::dynamics::{MacDemand, SimOptions, DEFAULT_FRICTION};
use crate::error::{Error, Result};
use crate::model::{build_default_assembly, ModelAssembly, ModelConfig};
use crate::motion::{load_trajectory, synthesize_running_gait, GaitParams, GaitTrajectory};

/// One simulation scenario as read from a TOML file.
///
/// Relative paths resolve against the directory holding the scenario file.
/// Without a `trajectory` the motion is synthesized from `[gait]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Model parameter file; the reference model when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    /// Trajectory CSV; overrides `[gait]` when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<PathBuf>,
    pub controller: ControllerKind,
    pub dt: f64,
    pub cycles: usize,
    pub friction: f64,
    pub mac_demand: MacDemand,
    pub output: PathBuf,
    /// Seed for every randomized step; the simulation itself is deterministic.
    pub seed: u64,
    pub gait: GaitParams,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            model: None,
            trajectory: None,
            controller: ControllerKind::Passive,
            dt: 1e-3,
            cycles: 2,
            friction: DEFAULT_FRICTION,
            mac_demand: MacDemand::default(),
            output: PathBuf::from("out"),
            seed: 0,
            gait: GaitParams::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

/// Scenario inputs resolved into a model and a trajectory.
pub struct LoadedScenario {
    pub config: ScenarioConfig,
    pub assembly: ModelAssembly,
    pub trajectory: GaitTrajectory,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| toml_error("scenario", &e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config(
                path.display().to_string(),
                format!("cannot read scenario file: {e}"),
            )
        })?;
        let mut cfg: Self =
            toml::from_str(&text).map_err(|e| toml_error(&path.display().to_string(), &e))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output)
    }

    pub fn sim_options(&self) -> SimOptions {
        SimOptions {
            dt: self.dt,
            cycles: self.cycles,
            friction: self.friction,
            controller: self.controller,
            mac_demand: self.mac_demand,
            ..SimOptions::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sim_options().validate()
    }

    pub fn model_config(&self) -> Result<ModelConfig> {
        match &self.model {
            Some(p) => ModelConfig::load(&self.resolve(p)),
            None => Ok(ModelConfig::default()),
        }
    }

    pub fn trajectory(&self) -> Result<GaitTrajectory> {
        match &self.trajectory {
            Some(p) => {
                let path = self.resolve(p);
                if !path.is_file() {
                    return Err(Error::config(
                        "trajectory",
                        format!("file not found: {}", path.display()),
                    ));
                }
                load_trajectory(&path)
            }
            None => synthesize_running_gait(&self.gait),
        }
    }

    /// Validate and build everything a run needs.
    pub fn load_inputs(&self) -> Result<LoadedScenario> {
        self.validate()?;
        let assembly = build_default_assembly(&self.model_config()?)?;
        let trajectory = self.trajectory()?;
        Ok(LoadedScenario {
            config: self.clone(),
            assembly,
            trajectory,
        })
    }
}

fn toml_error(file: &str, e: &toml::de::Error) -> Error {
    // The message carries the offending key and location.
    Error::config(file, e.message().to_string() + &span_hint(e))
}

fn span_hint(e: &toml::de::Error) -> String {
    match e.span() {
        Some(s) => format!(" (bytes {}..{})", s.start, s.end),
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(
            ScenarioConfig::from_toml_str("").unwrap(),
            ScenarioConfig::default()
        );
    }

    #[test]
    fn round_trip() {
        let mut cfg = ScenarioConfig::default();
        cfg.controller = ControllerKind::Mac;
        cfg.trajectory = Some("gait.csv".into());
        cfg.gait.stance_fraction = 0.35;
        let back = ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_key_names_field() {
        let e = ScenarioConfig::from_toml_str("dtt = 0.001").unwrap_err();
        assert!(e.to_string().contains("dtt"), "{e}");
        let e = ScenarioConfig::from_toml_str("[gait]\nspeeed = 3.0").unwrap_err();
        assert!(e.to_string().contains("speeed"), "{e}");
    }

    #[test]
    fn bad_step_rejected() {
        let cfg = ScenarioConfig::from_toml_str("dt = 0.01").unwrap();
        let e = cfg.validate().unwrap_err();
        assert!(e.to_string().contains("`dt`"), "{e}");
        let cfg = ScenarioConfig::from_toml_str("cycles = 0").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn controller_aliases() {
        let cfg = ScenarioConfig::from_toml_str("controller = \"no-exo\"").unwrap();
        assert_eq!(cfg.controller, ControllerKind::None);
    }

    #[test]
    fn missing_trajectory_names_path() {
        let cfg = ScenarioConfig {
            trajectory: Some("/nonexistent/gait.csv".into()),
            ..Default::default()
        };
        let e = cfg.trajectory().unwrap_err();
        assert!(matches!(e, Error::Config { .. }));
        assert!(e.to_string().contains("/nonexistent/gait.csv"));
    }
}
