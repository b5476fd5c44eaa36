//! Doubly-fed induction machine in a rotating dq frame, per unit.
//!
//! Space vectors are complex numbers `d + jq`. Currents follow the motor
//! convention (positive into the windings).

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DfigParams<T> {
    pub r_s: T,
    pub r_r: T,
    pub l_s: T,
    pub l_r: T,
    pub l_m: T,
    pub c_dc: T,
    pub u_dc_nom: T,
    /// Grid-side converter filter resistance.
    pub filter_r: T,
    /// Grid-side converter filter inductance.
    pub filter_l: T,
    pub pole_pairs: u32,
}

impl<T: Scalar> DfigParams<T> {
    /// `L_s L_r − L_M²`.
    pub fn sigma(&self) -> T {
        self.l_s * self.l_r - self.l_m * self.l_m
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma() > T::zero()) {
            return Err(Error::Config("inductance matrix is singular (L_s L_r <= L_M^2)".into()));
        }
        if self.r_s < T::zero() || self.r_r < T::zero() || self.filter_r < T::zero() {
            return Err(Error::Config("resistances must be nonnegative".into()));
        }
        if !(self.c_dc > T::zero() && self.u_dc_nom > T::zero() && self.filter_l > T::zero()) {
            return Err(Error::Config("DC link and filter parameters must be positive".into()));
        }
        Ok(())
    }

    /// `(i_s, i_r)` from `(ψ_s, ψ_r)`.
    pub fn currents(&self, psi_s: Complex<T>, psi_r: Complex<T>) -> (Complex<T>, Complex<T>) {
        let sig = self.sigma();
        (
            (psi_s * self.l_r - psi_r * self.l_m) / sig,
            (psi_r * self.l_s - psi_s * self.l_m) / sig,
        )
    }

    /// `(ψ_s, ψ_r)` from `(i_s, i_r)`.
    pub fn fluxes(&self, i_s: Complex<T>, i_r: Complex<T>) -> (Complex<T>, Complex<T>) {
        (
            i_s * self.l_s + i_r * self.l_m,
            i_s * self.l_m + i_r * self.l_r,
        )
    }
}

/// Scale between `Re(v i*)` and per-unit power.
#[inline]
pub fn power_scale<T: Scalar>() -> T {
    T::one() / T::lit(3.0).sqrt()
}

/// `Re(v i*) / √3`
#[inline]
pub fn active_power<T: Scalar>(v: Complex<T>, i: Complex<T>) -> T {
    (v * i.conj()).re * power_scale::<T>()
}

/// `Im(v i*) / √3`
#[inline]
pub fn reactive_power<T: Scalar>(v: Complex<T>, i: Complex<T>) -> T {
    (v * i.conj()).im * power_scale::<T>()
}

pub fn electrical_torque<T: Scalar>(i_s: Complex<T>, i_r: Complex<T>, l_m: T) -> T {
    power_scale::<T>() * l_m * (i_s * i_r.conj()).im
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DfigState<T> {
    pub psi_s: Complex<T>,
    pub psi_r: Complex<T>,
    pub u_dc: T,
    /// Filter current in the converter frame, generator convention.
    pub i_gsc: Complex<T>,
    /// Local frame angle relative to the common frame, rad.
    pub delta: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxDerivatives<T> {
    pub psi_s: Complex<T>,
    pub psi_r: Complex<T>,
}

/// Flux derivatives in a frame rotating at `omega_s` (pu), rotor at `omega_m` (pu electrical).
#[allow(clippy::too_many_arguments)]
pub fn dfig_derivatives<T: Scalar>(
    params: &DfigParams<T>,
    psi_s: Complex<T>,
    psi_r: Complex<T>,
    v_s: Complex<T>,
    v_r: Complex<T>,
    omega_s: T,
    omega_m: T,
    omega_b: T,
) -> Result<FluxDerivatives<T>> {
    if !(params.sigma() > T::zero()) {
        return Err(Error::Config("inductance matrix is singular".into()));
    }
    let (i_s, i_r) = params.currents(psi_s, psi_r);
    let j = Complex::new(T::zero(), T::one());
    Ok(FluxDerivatives {
        psi_s: (v_s - i_s * params.r_s - j * psi_s * omega_s) * omega_b,
        psi_r: (v_r - i_r * params.r_r - j * psi_r * (omega_s - omega_m)) * omega_b,
    })
}
