//! Closed-form compensator synthesis at a target crossover.

use num_complex::Complex;

use crate::control::{LoopSpec, PiGains, VsmpParams};
use crate::scalar::{db_to_mag, mag_to_db, wrap_deg};

/// Plant reading at the target crossover and the compensator contribution it calls for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapingReadout {
    /// Plant magnitude at the target crossover, dB.
    pub a_p_db: f64,
    /// Plant phase at the target crossover, deg.
    pub phi_p_deg: f64,
    /// Required controller gain, dB.
    pub delta_a_db: f64,
    /// Required controller phase, deg.
    pub delta_phi_deg: f64,
}

impl ShapingReadout {
    pub fn new(a_p_db: f64, phi_p_deg: f64, target: &LoopSpec) -> Self {
        Self {
            a_p_db,
            phi_p_deg,
            delta_a_db: -a_p_db,
            delta_phi_deg: wrap_deg(target.phi_m_deg - (180.0 + phi_p_deg)),
        }
    }

    /// Reads a complex plant value.
    pub fn from_plant(p: Complex<f64>, target: &LoopSpec) -> Self {
        Self::new(mag_to_db(p.norm()), p.arg().to_degrees(), target)
    }

    /// Controller value the readout asks for.
    pub fn required(&self) -> Complex<f64> {
        Complex::from_polar(db_to_mag(self.delta_a_db), self.delta_phi_deg.to_radians())
    }
}

/// Why a synthesis step failed.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ShapingError {
    #[error("PI cannot provide phase lead (required {0:.3} deg)")]
    PhaseLead(f64),
    #[error("target unreachable with PI (required {0:.3} deg)")]
    Unreachable(f64),
    #[error("VSMP shaping needs {bound} (required gain {gain:.4}, phase {phase:.3} deg)")]
    VsmpBound { bound: &'static str, gain: f64, phase: f64 },
    #[error("plant magnitude vanishes at the target crossover")]
    NoReadout,
}

/// PI gains with `C(jω_o)` equal to the required gain and phase. `b` is kept from `keep_b`.
pub fn pi_loopshape(r: &ShapingReadout, target: &LoopSpec, keep_b: f64) -> Result<PiGains, ShapingError> {
    let dphi = r.delta_phi_deg;
    if dphi > 0.0 {
        return Err(ShapingError::PhaseLead(dphi));
    }
    if dphi <= -90.0 {
        return Err(ShapingError::Unreachable(dphi));
    }
    let mag = db_to_mag(r.delta_a_db);
    let rad = dphi.to_radians();
    Ok(PiGains { kp: mag * rad.cos(), ki: -target.omega_o * mag * rad.sin(), b: keep_b })
}

/// `(H, D_d)` such that `(1 + jω_o D_d)/(1 + jω_o 2H/D_p)` equals the required value.
/// Returns the updated parameters; `h_floor` resolves the degenerate unit-gain case.
pub fn vsmp_loopshape(
    r: &ShapingReadout,
    target: &LoopSpec,
    current: &VsmpParams,
    h_floor: f64,
) -> Result<VsmpParams, ShapingError> {
    let c = r.required();
    let w = target.omega_o;
    let bound = |bound| ShapingError::VsmpBound { bound, gain: c.norm(), phase: r.delta_phi_deg };
    let tau;
    let d_d;
    if (c - 1.0).norm() < 1e-12 {
        tau = 2.0 * h_floor / current.d_p;
        d_d = tau;
    } else {
        if c.im == 0.0 {
            return Err(bound("a nonzero phase contribution"));
        }
        tau = (c.re - 1.0) / (w * c.im);
        d_d = (c.im + w * tau * c.re) / w;
    }
    if !(tau > 0.0) {
        return Err(bound("H > 0"));
    }
    if !(d_d >= 0.0) {
        return Err(bound("D_d >= 0"));
    }
    Ok(VsmpParams { h: tau * current.d_p / 2.0, d_d, ..*current })
}

/// Gain-only crossover placement.
pub fn vsmq_loopshape(plant: Complex<f64>) -> Result<f64, ShapingError> {
    let m = plant.norm();
    if !(m > 0.0 && m.is_finite()) {
        return Err(ShapingError::NoReadout);
    }
    Ok(1.0 / m)
}
