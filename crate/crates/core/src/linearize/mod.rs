//! Steady-state trim and numerical linearisation.

pub mod field;
pub mod jacobian;
pub mod model;
pub mod pipeline;
pub mod trim;

pub use field::{wrap_angle, VectorField};
pub use jacobian::{fd_step, jacobian_linearize, jacobians};
pub use pipeline::{trim_and_linearize, Linearization};
pub use model::{extract_channel, AnalysisChannel, LinearModel, SisoPath};
pub use trim::{
    available_power, find_operating_point, find_operating_point_from, initial_guess,
    OperatingPoint, TrimTargets, OPERATING_POINT_FORMAT_VERSION, TRIM_TOLERANCE,
};
