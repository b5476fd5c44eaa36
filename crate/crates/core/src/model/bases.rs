//! Per-unit base quantities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Raw ratings from which every base is derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseRatings {
    /// Phase-to-phase RMS voltage, V.
    pub voltage_v: f64,
    /// RMS current, A.
    pub current_a: f64,
    /// Nominal electrical frequency, Hz.
    pub frequency_hz: f64,
    pub pole_pairs: u32,
    /// DC-link base voltage, V.
    pub dc_voltage_v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PuBases<T> {
    pub v_b: T,
    pub i_b: T,
    pub s_b: T,
    pub z_b: T,
    pub omega_b: T,
    pub psi_b: T,
    pub l_b: T,
    pub omega_mb: T,
    pub t_eb: T,
    pub j_b: T,
    pub u_dcb: T,
    pub i_dcb: T,
    pub z_dcb: T,
    pub c_dcb: T,
}

impl<T: Scalar> PuBases<T> {
    pub fn from_ratings(r: &BaseRatings) -> Result<Self> {
        let positive = r.voltage_v > 0.0
            && r.current_a > 0.0
            && r.frequency_hz > 0.0
            && r.pole_pairs > 0
            && r.dc_voltage_v > 0.0;
        if !positive {
            return Err(Error::Config("base ratings must be strictly positive".into()));
        }
        let v_b = T::lit(r.voltage_v);
        let i_b = T::lit(r.current_a);
        let s_b = T::lit(3.0).sqrt() * v_b * i_b;
        let z_b = v_b / i_b;
        let omega_b = T::lit(2.0) * T::PI() * T::lit(r.frequency_hz);
        let omega_mb = omega_b / T::lit(r.pole_pairs as f64);
        let t_eb = s_b / omega_mb;
        let u_dcb = T::lit(r.dc_voltage_v);
        let i_dcb = s_b / u_dcb;
        let z_dcb = u_dcb / i_dcb;
        Ok(Self {
            v_b,
            i_b,
            s_b,
            z_b,
            omega_b,
            psi_b: v_b / omega_b,
            l_b: z_b / omega_b,
            omega_mb,
            t_eb,
            j_b: t_eb / omega_b,
            u_dcb,
            i_dcb,
            z_dcb,
            c_dcb: T::one() / (omega_b * z_dcb),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratings() -> BaseRatings {
        BaseRatings {
            voltage_v: 690.0,
            current_a: 1760.0,
            frequency_hz: 50.0,
            pole_pairs: 2,
            dc_voltage_v: 1200.0,
        }
    }

    #[test]
    fn tabulated_bases() {
        let b = PuBases::<f64>::from_ratings(&ratings()).unwrap();
        assert!((b.s_b / 1e6 - 2.1).abs() < 0.01);
        assert!((b.z_b - 0.392).abs() < 0.001);
        assert!((b.i_dcb - 1750.0).abs() < 3.0);
        assert!((b.z_dcb - 0.686).abs() < 0.002);
        assert!((b.l_b - b.z_b / b.omega_b).abs() < 1e-15);
        assert!((b.omega_mb - b.omega_b / 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_zero_rating() {
        let mut r = ratings();
        r.current_a = 0.0;
        assert!(PuBases::<f64>::from_ratings(&r).is_err());
    }
}
