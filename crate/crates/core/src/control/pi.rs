use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Gains of a set-point weighted PI law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiGains {
    pub kp: f64,
    pub ki: f64,
    #[serde(default = "unit_weight")]
    pub b: f64,
}

fn unit_weight() -> f64 {
    1.0
}

impl PiGains {
    pub fn new(kp: f64, ki: f64) -> Self {
        Self { kp, ki, b: 1.0 }
    }
}

/// `u = K_p (b r − y) + x`, `ẋ = K_i (r − y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoDofPi<T> {
    pub kp: T,
    pub ki: T,
    pub b: T,
    pub integrator: T,
    pub limits: Option<(T, T)>,
}

impl<T: Scalar> TwoDofPi<T> {
    pub fn new(kp: T, ki: T, b: T) -> Self {
        Self { kp, ki, b, integrator: T::zero(), limits: None }
    }

    pub fn from_gains(g: &PiGains) -> Self {
        Self::new(T::lit(g.kp), T::lit(g.ki), T::lit(g.b))
    }

    pub fn output(&self, r: T, y: T) -> T {
        two_dof_pi_output(self.kp, self.b, self.integrator, r, y)
    }

    pub fn integrator_rate(&self, r: T, y: T) -> T {
        self.ki * (r - y)
    }

    /// Forward-Euler update of the integrator with optional clamping.
    pub fn advance(&mut self, r: T, y: T, dt: T) {
        let mut x = self.integrator + dt * self.integrator_rate(r, y);
        if let Some((lo, hi)) = self.limits {
            x = x.max(lo).min(hi);
        }
        self.integrator = x;
    }
}

#[inline]
pub fn two_dof_pi_output<T: Scalar>(kp: T, b: T, integrator: T, r: T, y: T) -> T {
    kp * (b * r - y) + integrator
}
