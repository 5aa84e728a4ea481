//! Co-simulation of a human runner wearing a strapped lower-limb exoskeleton.
//!
//! Human joints follow a prescribed gait (inverse dynamics) while the
//! exoskeleton joints evolve under actuator and strap forces (forward
//! dynamics). The two trees couple through tri-directional strap springs.

pub mod cli;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod lsq;
pub mod model;
pub mod motion;
pub mod muscle;
pub mod strap;

pub use error::{Error, Result};
