//! Divergence-free stirring flows and a pseudospectral integrator for the
//! advection–diffusion equation on the periodic box.

mod io;
mod kinds;
mod solver;

pub use io::{read_snapshot, write_diagnostics, write_snapshot};
pub use kinds::{make_flow, max_divergence, Flow, FlowKind, FlowSpec};
pub use solver::{
    diffusion_exact, evolve, step, variance_balance_check, Observer, SimConfig, Snapshot, Solver, Trajectory,
};
