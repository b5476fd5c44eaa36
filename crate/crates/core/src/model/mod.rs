//! Nonlinear per-unit farm model: grid equivalent, machines, drivetrains,
//! turbines and collector network.

pub mod bases;
pub mod config;
pub mod drivetrain;
pub mod farm;
pub mod grid;
pub mod layout;
pub mod machine;
pub mod network;
pub mod turbine;

pub use bases::{BaseRatings, PuBases};
pub use config::FarmConfig;
pub use drivetrain::{drivetrain_derivatives, DrivetrainParams, DrivetrainSi, DrivetrainState};
pub use farm::{
    assemble_farm_ode, FarmInputs, FarmOde, InputTag, LoopSignal, OutputTag, PlantSignal,
    UnitSignal,
};
pub use grid::{grid_derivatives, GridParams, GridState};
pub use layout::StateLayout;
pub use machine::{dfig_derivatives, electrical_torque, DfigParams, DfigState};
pub use network::{Branch, NetworkTopology};
pub use turbine::{cp_coefficient, mechanical_power, TurbineParams};
