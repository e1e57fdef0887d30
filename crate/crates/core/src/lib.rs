//! Dynamics, steady states and entanglement of two radiatively coupled
//! V-type three-level atoms.

pub mod dynamics;
pub mod entanglement;
pub mod linalg;
pub mod model;
pub mod steadystate;
pub mod sweep;
pub mod validation;

pub use dynamics::{analytic_pumpless, integrate, relaxation_time, Trajectory};
pub use entanglement::{negativity, negativity_generic};
pub use model::{BasisState, Preset, ReducedState, SystemParams};
pub use steadystate::{steady_analytic, steady_numeric, SteadyState};
pub use sweep::{find_optimal_pump, sweep_distance, sweep_pump, Optimum, SweepTable};
