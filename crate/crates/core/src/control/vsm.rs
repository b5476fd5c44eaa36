//! Virtual synchronous machine outer loops.
//!
//! The virtual shaft realises `C(s) = (1 + s D_d)/(1 + s τ)`, `τ = 2H/D_p`, with
//! a single state `w`: `x = (w + D_d u_D)/τ`, `ẇ = e − x`. In the error-fed
//! position `u_D = e`; in the power-only position `u_D = −P/ω_s0`, which keeps
//! the feedback path identical and drops the derivative action on the set point.
//! The speed deviation is `(x + d)/D_p`.

use serde::{Deserialize, Serialize};

use crate::control::tf::Tf;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DampingPath {
    #[default]
    ErrorFed,
    PowerOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VsmpParams {
    /// Virtual inertia, s.
    pub h: f64,
    pub d_p: f64,
    pub d_d: f64,
    #[serde(default = "one")]
    pub omega_s0: f64,
    #[serde(default)]
    pub damping_path: DampingPath,
}

fn one() -> f64 {
    1.0
}

impl VsmpParams {
    pub fn tau(&self) -> f64 {
        2.0 * self.h / self.d_p
    }

    pub fn one_dof<T: Scalar>(&self) -> Tf<T> {
        Tf::lead_lag(T::lit(self.d_d), T::lit(self.tau()))
    }
}

/// Runtime virtual-shaft block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VsmpBlock<T> {
    pub tau: T,
    pub d_d: T,
    pub d_p: T,
    pub omega_s0: T,
    pub path: DampingPath,
}

impl<T: Scalar> VsmpBlock<T> {
    pub fn new(p: &VsmpParams) -> Self {
        Self {
            tau: T::lit(p.tau()),
            d_d: T::lit(p.d_d),
            d_p: T::lit(p.d_p),
            omega_s0: T::lit(p.omega_s0),
            path: p.damping_path,
        }
    }

    fn damping_input(&self, e: T, p: T) -> T {
        match self.path {
            DampingPath::ErrorFed => e,
            DampingPath::PowerOnly => -p / self.omega_s0,
        }
    }

    /// Power error scaled by the nominal speed.
    pub fn error(&self, p_ref: T, p: T) -> T {
        (p_ref - p) / self.omega_s0
    }

    /// Controller output `x`.
    pub fn output(&self, w: T, p_ref: T, p: T) -> T {
        let e = self.error(p_ref, p);
        (w + self.d_d * self.damping_input(e, p)) / self.tau
    }

    pub fn state_rate(&self, w: T, p_ref: T, p: T) -> T {
        self.error(p_ref, p) - self.output(w, p_ref, p)
    }

    /// Speed deviation for a given controller output and additive disturbance.
    pub fn speed_deviation(&self, x: T, d: T) -> T {
        (x + d) / self.d_p
    }
}

/// One evaluation of the virtual shaft: `(ẇ, Δω)`.
pub fn vsmp_dynamics<T: Scalar>(block: &VsmpBlock<T>, w: T, p_ref: T, p: T) -> (T, T) {
    let x = block.output(w, p_ref, p);
    (block.error(p_ref, p) - x, block.speed_deviation(x, T::zero()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VsmqParams {
    pub k_q: f64,
    pub d_q: f64,
    #[serde(default)]
    pub q_set: f64,
    #[serde(default = "one")]
    pub v_set: f64,
}

impl VsmqParams {
    /// Loop error `(Q* + D_q V*) − (Q + D_q V)`.
    pub fn error<T: Scalar>(&self, q: T, v: T) -> T {
        T::lit(self.q_set + self.d_q * self.v_set) - (q + T::lit(self.d_q) * v)
    }

    pub fn one_dof<T: Scalar>(&self) -> Tf<T> {
        Tf::gain(T::lit(self.k_q))
    }
}

/// `dψ_vd/dt = ω_b K_q e`.
pub fn vsmq_dynamics<T: Scalar>(k_q: T, error: T, omega_b: T) -> T {
    omega_b * k_q * error
}
