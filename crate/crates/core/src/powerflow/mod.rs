//! Measurement equations and AC power flow.

pub mod equations;
pub mod newton;

pub use equations::MeasurementModel;
pub use newton::{solve_power_flow, PowerFlowOptions, PowerFlowSolution};
