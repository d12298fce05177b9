//! Boundary conditions and the explicit time integration of the flow.

mod bc;
mod run;
mod solver;

pub use bc::{data_norms, BcMode, BoundaryCondition, BoundaryData, DataNorms, Extension, MAX_FOURIER_MODES};
pub use run::{run, DiagnosticsConfig, Record, Trajectory};
pub use solver::{FlowState, Integrator, SolverConfig, StepInfo};
pub(crate) use solver::Operator;
