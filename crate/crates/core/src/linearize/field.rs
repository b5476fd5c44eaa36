use crate::error::Result;
use crate::model::{FarmInputs, FarmOde};

/// A vector field `ẋ = f(x, u)` with outputs `y = h(x, u)` on flat vectors.
pub trait VectorField: Sync {
    fn n_states(&self) -> usize;
    fn n_inputs(&self) -> usize;
    fn n_outputs(&self) -> usize;
    fn eval(&self, x: &[f64], u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)>;

    fn is_angle(&self, _i: usize) -> bool {
        false
    }

    fn state_name(&self, i: usize) -> String {
        format!("x{i}")
    }
}

impl VectorField for FarmOde {
    fn n_states(&self) -> usize {
        FarmOde::n_states(self)
    }

    fn n_inputs(&self) -> usize {
        FarmOde::n_inputs(self)
    }

    fn n_outputs(&self) -> usize {
        FarmOde::n_outputs(self)
    }

    fn eval(&self, x: &[f64], u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let inputs = FarmInputs::from_slice(self.n_units(), u);
        self.derivative_and_outputs(x, &inputs)
    }

    fn is_angle(&self, i: usize) -> bool {
        self.layout.is_angle(i)
    }

    fn state_name(&self, i: usize) -> String {
        self.layout.names()[i].clone()
    }
}

/// `(−π, π]`
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut w = a % (2.0 * PI);
    if w <= -PI {
        w += 2.0 * PI;
    } else if w > PI {
        w -= 2.0 * PI;
    }
    w
}
