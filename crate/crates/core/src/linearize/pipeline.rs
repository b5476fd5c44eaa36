use crate::control::ControllerSet;
use crate::error::Result;
use crate::linearize::jacobian::jacobian_linearize;
use crate::linearize::model::LinearModel;
use crate::linearize::trim::{find_operating_point, OperatingPoint, TrimTargets};
use crate::model::{FarmConfig, FarmOde};

/// A farm with its trimmed operating point and the linear model there.
#[derive(Debug, Clone)]
pub struct Linearization {
    pub ode: FarmOde,
    pub op: OperatingPoint,
    pub lin: LinearModel,
}

/// Assembles, trims at the configured targets and linearises.
pub fn trim_and_linearize(config: &FarmConfig, controllers: &ControllerSet) -> Result<Linearization> {
    let ode = FarmOde::new(config, controllers)?;
    let op = find_operating_point(&ode, &TrimTargets::from_config(config))?;
    let lin = jacobian_linearize(&ode, &op.x, &op.inputs)?;
    Ok(Linearization { ode, op, lin })
}
