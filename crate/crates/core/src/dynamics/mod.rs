//! Hybrid inverse/forward dynamics: ground reaction prediction, human
//! inverse dynamics, exoskeleton forward dynamics and the step loop.

mod grf;
mod rnea;
mod sim;
mod solve;

pub use grf::{predict_grf, required_wrench, GrfResult, DEFAULT_FRICTION};
pub use rnea::{mass_matrix, rnea, PointLoad, RneaResult};
pub use sim::{
    energy_drift, exo_mechanical_energy, run_cycle, CycleSummary, MacDemand, SimOptions,
    SimulationFrame, SimulationRun, SimulationState, Simulator,
};
pub use solve::{
    exo_accelerations, forward_dynamics_exo, inverse_dynamics_exo, inverse_dynamics_human,
    inverse_dynamics_with_loads, HumanTorques,
};
