//! Time-domain validation: linear step responses and nonlinear scenarios.

pub mod integrate;
pub mod linear;
pub mod scenarios;
pub mod series;

pub use integrate::{
    integrate, rk4_step, terminal_state, Channel, Event, IntegratorSettings, Scenario, BLOW_UP,
};
pub use linear::{
    envelope_deviation, output_step_response, second_order_template, step_response, step_response_linear, template_of,
};
pub use scenarios::{
    builtin, compare_scenario, pref_step, run_scenario, voltage_dip, DIP_DEPTH_PU, DIP_LENGTH_S,
    EVENT_TIME_S, PREF_STEP_PU,
};
pub use series::TimeSeries;
