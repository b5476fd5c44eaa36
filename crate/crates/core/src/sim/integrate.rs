//! Fixed-step fourth-order Runge-Kutta integration with scheduled input events.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FarmInputs, FarmOde};
use crate::sim::series::TimeSeries;

/// States with magnitude above this abort the run.
pub const BLOW_UP: f64 = 1e6;

/// One classical RK4 step of `ẋ = f(x)`.
pub fn rk4_step<F>(f: &mut F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>> + ?Sized,
{
    let shift = |k: &[f64], a: f64| -> Vec<f64> { x.iter().zip(k).map(|(x, k)| x + a * k).collect() };
    let k1 = f(x)?;
    let k2 = f(&shift(&k1, 0.5 * h))?;
    let k3 = f(&shift(&k2, 0.5 * h))?;
    let k4 = f(&shift(&k3, h))?;
    Ok((0..x.len())
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    pub dt: f64,
    /// Samples are stored every `record_every` steps.
    #[serde(default = "one")]
    pub record_every: usize,
}

fn one() -> usize {
    1
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self { dt: 50e-6, record_every: 20 }
    }
}

/// Additive change of one exogenous input, addressed by its input name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time_s: f64,
    pub target: String,
    pub change: f64,
}

/// Recorded quantity: an output, input or state of the model under an alias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub name: String,
    pub signal: String,
}

impl Channel {
    pub fn new(name: &str, signal: &str) -> Self {
        Self { name: name.into(), signal: signal.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub duration_s: f64,
    #[serde(default, rename = "event")]
    pub events: Vec<Event>,
    #[serde(rename = "channel")]
    pub channels: Vec<Channel>,
    #[serde(default)]
    pub integrator: IntegratorSettings,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("scenario `{}`: {m}", self.name)));
        let s = &self.integrator;
        if !(s.dt > 0.0 && s.dt.is_finite()) || s.record_every == 0 {
            return bad("dt must be positive and record_every nonzero".into());
        }
        if !(self.duration_s > 0.0) {
            return bad("duration must be positive".into());
        }
        if self.events.windows(2).any(|w| w[1].time_s < w[0].time_s) {
            return bad("events must be time-ordered".into());
        }
        for e in &self.events {
            if !(e.time_s >= 0.0 && e.time_s <= self.duration_s) {
                return bad(format!("event at {} s outside the run", e.time_s));
            }
            let steps = e.time_s / s.dt;
            if (steps - steps.round()).abs() > 1e-6 {
                return bad(format!("event at {} s is not on a step boundary", e.time_s));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text)
            .map_err(|e| Error::Parse { what: "scenario".into(), message: e.to_string() })?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    pub fn n_steps(&self) -> usize {
        (self.duration_s / self.integrator.dt).round() as usize
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        let ratio = self.integrator.dt / dt;
        self.integrator.dt = dt;
        self.integrator.record_every = ((self.integrator.record_every as f64 * ratio).round() as usize).max(1);
        self
    }
}

#[derive(Debug, Clone, Copy)]
enum Source {
    Output(usize),
    Input(usize),
    State(usize),
}

fn resolve(ode: &FarmOde, signal: &str) -> Result<Source> {
    let units = &ode.unit_names;
    if let Some(i) = ode.output_tags().iter().position(|t| t.name(units) == signal) {
        return Ok(Source::Output(i));
    }
    if let Some(i) = ode.input_tags().iter().position(|t| t.name(units) == signal) {
        return Ok(Source::Input(i));
    }
    ode.layout.get(signal).map(Source::State).ok_or_else(|| Error::MissingTag(signal.to_string()))
}

fn input_slot(ode: &FarmOde, target: &str) -> Result<usize> {
    match resolve(ode, target)? {
        Source::Input(i) => Ok(i),
        _ => Err(Error::Config(format!("event target `{target}` is not an input"))),
    }
}

/// Integrates from `(x0, u0)` through the scenario's events.
pub fn integrate(ode: &FarmOde, x0: &[f64], u0: &FarmInputs, scenario: &Scenario) -> Result<TimeSeries> {
    scenario.validate()?;
    let n = ode.n_units();
    let sources: Vec<Source> = scenario.channels.iter().map(|c| resolve(ode, &c.signal)).collect::<Result<_>>()?;
    let slots: Vec<usize> = scenario.events.iter().map(|e| input_slot(ode, &e.target)).collect::<Result<_>>()?;
    let dt = scenario.integrator.dt;
    let every = scenario.integrator.record_every;
    let event_steps: Vec<usize> = scenario.events.iter().map(|e| (e.time_s / dt).round() as usize).collect();

    let mut u = u0.to_vec();
    let mut x = x0.to_vec();
    let mut out = TimeSeries::new(
        0.0,
        dt * every as f64,
        scenario.channels.iter().map(|c| c.name.clone()).collect(),
    );
    let mut next_event = 0;
    let record = |x: &[f64], u: &[f64], out: &mut TimeSeries| -> Result<()> {
        let inputs = FarmInputs::from_slice(n, u);
        let y = if sources.iter().any(|s| matches!(s, Source::Output(_))) {
            ode.outputs(x, &inputs)?
        } else {
            Vec::new()
        };
        let row: Vec<f64> = sources
            .iter()
            .map(|s| match *s {
                Source::Output(i) => y[i],
                Source::Input(i) => u[i],
                Source::State(i) => x[i],
            })
            .collect();
        out.push(&row);
        Ok(())
    };
    let total = scenario.n_steps();
    for step in 0..=total {
        while next_event < event_steps.len() && event_steps[next_event] == step {
            u[slots[next_event]] += scenario.events[next_event].change;
            next_event += 1;
        }
        if step % every == 0 {
            record(&x, &u, &mut out)?;
        }
        if step == total {
            break;
        }
        let inputs = FarmInputs::from_slice(n, &u);
        let mut f = |x: &[f64]| ode.derivative(x, &inputs);
        let time = step as f64 * dt;
        let next = rk4_step(&mut f, &x, dt).map_err(|_| Error::BlowUp { time })?;
        if next.iter().any(|v| !v.is_finite() || v.abs() > BLOW_UP) {
            return Err(Error::BlowUp { time });
        }
        x = next;
    }
    Ok(out)
}

/// Terminal state after integrating without recording.
pub fn terminal_state(ode: &FarmOde, x0: &[f64], u0: &FarmInputs, scenario: &Scenario) -> Result<Vec<f64>> {
    scenario.validate()?;
    let dt = scenario.integrator.dt;
    let slots: Vec<usize> = scenario.events.iter().map(|e| input_slot(ode, &e.target)).collect::<Result<_>>()?;
    let event_steps: Vec<usize> = scenario.events.iter().map(|e| (e.time_s / dt).round() as usize).collect();
    let mut u = u0.to_vec();
    let mut x = x0.to_vec();
    let mut next_event = 0;
    for step in 0..scenario.n_steps() {
        while next_event < event_steps.len() && event_steps[next_event] == step {
            u[slots[next_event]] += scenario.events[next_event].change;
            next_event += 1;
        }
        let inputs = FarmInputs::from_slice(ode.n_units(), &u);
        let mut f = |x: &[f64]| ode.derivative(x, &inputs);
        x = rk4_step(&mut f, &x, dt).map_err(|_| Error::BlowUp { time: step as f64 * dt })?;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn linear_system_matches_matrix_exponential() {
        let a = DMatrix::from_row_slice(3, 3, &[-1.0, 2.0, 0.0, -2.0, -1.0, 0.5, 0.0, 0.0, -3.0]);
        let x0 = DVector::from_vec(vec![1.0, -0.5, 2.0]);
        let h = 1e-3;
        let mut f = |x: &[f64]| Ok((&a * DVector::from_column_slice(x)).as_slice().to_vec());
        let mut x = x0.as_slice().to_vec();
        for _ in 0..2000 {
            x = rk4_step(&mut f, &x, h).unwrap();
        }
        let exact = (&a * 2.0).exp() * x0;
        for (u, v) in x.iter().zip(exact.iter()) {
            assert!((u - v).abs() < 1e-8, "{u} vs {v}");
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let mut f = |x: &[f64]| Ok(vec![x[1], -x[0] - 0.1 * x[1] * x[1] * x[1]]);
        let run = |f: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>, h: f64, n: usize| {
            let mut x = vec![1.0, 0.0];
            for _ in 0..n {
                x = rk4_step(f, &x, h).unwrap();
            }
            x
        };
        let a = run(&mut f, 0.02, 100);
        let b = run(&mut f, 0.01, 200);
        let c = run(&mut f, 0.005, 400);
        let ratio = (a[0] - b[0]).abs() / (b[0] - c[0]).abs();
        assert!((ratio - 16.0).abs() < 1.5, "{ratio}");
    }

    #[test]
    fn scenario_validation() {
        let mut s = Scenario {
            name: "x".into(),
            duration_s: 1.0,
            events: vec![Event { time_s: 0.5, target: "grid.voltage".into(), change: -0.2 }],
            channels: vec![Channel::new("v", "grid.voltage")],
            integrator: IntegratorSettings::default(),
        };
        assert!(s.validate().is_ok());
        assert_eq!(Scenario::from_toml(&s.to_toml()).unwrap(), s);
        s.events[0].time_s = 0.500_01;
        assert!(s.validate().is_err());
        s.events[0].time_s = 2.0;
        assert!(s.validate().is_err());
        let halved = Scenario { events: vec![], ..s }.with_dt(25e-6);
        assert_eq!(halved.integrator.record_every, 40);
    }
}
