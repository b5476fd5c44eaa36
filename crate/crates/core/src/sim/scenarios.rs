//! The two large-signal benchmark scenarios.

use crate::control::ControllerSet;
use crate::error::Result;
use crate::linearize::trim_and_linearize;
use crate::linearize::{find_operating_point, TrimTargets};
use crate::model::{FarmConfig, FarmOde};
use crate::sim::integrate::{integrate, Channel, Event, IntegratorSettings, Scenario};
use crate::sim::series::TimeSeries;

pub const EVENT_TIME_S: f64 = 1.0;
pub const PREF_STEP_PU: f64 = 0.2;
pub const DIP_DEPTH_PU: f64 = 0.2;
pub const DIP_LENGTH_S: f64 = 0.5;

fn channels(unit: &str) -> Vec<Channel> {
    let mut c: Vec<Channel> = ["speed_diff", "udc", "igsc_d", "igsc_q", "p", "q", "v"]
        .iter()
        .map(|s| Channel::new(s, &format!("{unit}.{s}")))
        .collect();
    c.push(Channel::new("p_set", &format!("{unit}.p_set")));
    c.push(Channel::new("grid_voltage", "grid.voltage"));
    c.push(Channel::new("p_pcc", "plant.p_pcc"));
    c.push(Channel::new("v_pcc", "plant.v_pcc"));
    c.push(Channel::new("freq_dev", "plant.freq_dev"));
    c
}

/// `+0.2` pu on the first unit's active-power reference at 1 s.
pub fn pref_step(unit: &str) -> Scenario {
    Scenario {
        name: "pref_step".into(),
        duration_s: 6.0,
        events: vec![Event { time_s: EVENT_TIME_S, target: format!("{unit}.p_set"), change: PREF_STEP_PU }],
        channels: channels(unit),
        integrator: IntegratorSettings::default(),
    }
}

/// Grid source magnitude drops 0.2 pu at 1 s for 0.5 s.
pub fn voltage_dip(unit: &str) -> Scenario {
    Scenario {
        name: "voltage_dip".into(),
        duration_s: 4.0,
        events: vec![
            Event { time_s: EVENT_TIME_S, target: "grid.voltage".into(), change: -DIP_DEPTH_PU },
            Event { time_s: EVENT_TIME_S + DIP_LENGTH_S, target: "grid.voltage".into(), change: DIP_DEPTH_PU },
        ],
        channels: channels(unit),
        integrator: IntegratorSettings::default(),
    }
}

pub fn builtin(name: &str, config: &FarmConfig) -> Option<Scenario> {
    let unit = config.units.first()?.name.clone();
    match name {
        "pref_step" => Some(pref_step(&unit)),
        "voltage_dip" => Some(voltage_dip(&unit)),
        _ => None,
    }
}

/// Trims the farm under `controllers` and runs the scenario from there.
pub fn run_scenario(config: &FarmConfig, controllers: &ControllerSet, scenario: &Scenario) -> Result<TimeSeries> {
    let ode = FarmOde::new(config, controllers)?;
    let op = find_operating_point(&ode, &TrimTargets::from_config(config))?;
    integrate(&ode, &op.x, &op.inputs, scenario)
}

/// Runs both sets and overlays them with `trd_` and `frd_` prefixes.
pub fn compare_scenario(
    config: &FarmConfig,
    trd: &ControllerSet,
    frd: &ControllerSet,
    scenario: &Scenario,
) -> Result<TimeSeries> {
    let (a, b) = rayon::join(
        || run_scenario(config, trd, scenario),
        || run_scenario(config, frd, scenario),
    );
    TimeSeries::overlay(&a?, "trd_", &b?, "frd_")
}

/// Closed-loop stability of the farm under `controllers`.
pub fn is_small_signal_stable(config: &FarmConfig, controllers: &ControllerSet) -> Result<bool> {
    Ok(trim_and_linearize(config, controllers)?.lin.is_stable())
}
