//! Controller hierarchy of each unit and its single-loop reconfigurations.

pub mod baseline;
pub mod loops;
pub mod pi;
pub mod set;
pub mod targets;
pub mod tf;
pub mod vsm;

pub use baseline::{baseline_controllers, decoupled_margins, design_plant, DesignPlant};
pub use loops::{LoopId, LoopRef};
pub use pi::{two_dof_pi_output, PiGains, TwoDofPi};
pub use set::{reconfigure_one_dof, ControllerSet, UnitControllers, VirtualImpedance, VoltageFeedback};
pub use targets::{spec_for, specs_from_toml, specs_to_toml, LoopSpec};
pub use tf::Tf;
pub use vsm::{vsmp_dynamics, vsmq_dynamics, DampingPath, VsmpBlock, VsmpParams, VsmqParams};
