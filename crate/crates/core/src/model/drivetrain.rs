//! Two-mass drivetrain.

use crate::model::bases::PuBases;
use crate::scalar::Scalar;

/// Physical drivetrain data (SI, generator-side referred).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DrivetrainSi {
    /// kg m²
    pub j_t: f64,
    /// N m s/rad
    pub d_t: f64,
    /// N m/rad
    pub k_tg: f64,
    /// N m s/rad
    pub d_tg: f64,
    /// kg m²
    pub j_g: f64,
    /// N m s/rad
    pub d_g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrivetrainParams<T> {
    pub h_t: T,
    pub h_gen: T,
    pub k_tg: T,
    pub d_t: T,
    pub d_gen: T,
    pub d_tg: T,
    /// Spring-equation frequency scale, rad/s.
    pub omega_b: T,
    pub si: DrivetrainSi,
}

impl<T: Scalar> DrivetrainParams<T> {
    pub fn from_si(si: DrivetrainSi, bases: &PuBases<T>) -> Self {
        let wm2 = bases.omega_mb * bases.omega_mb;
        let sb = bases.s_b;
        let two = T::lit(2.0);
        Self {
            h_t: T::lit(si.j_t) * wm2 / (two * sb),
            h_gen: T::lit(si.j_g) * wm2 / (two * sb),
            k_tg: T::lit(si.k_tg) * bases.omega_mb / sb,
            d_t: T::lit(si.d_t) * wm2 / sb,
            d_gen: T::lit(si.d_g) * wm2 / sb,
            d_tg: T::lit(si.d_tg) * wm2 / sb,
            omega_b: bases.omega_b,
            si,
        }
    }

    /// Undamped torsional frequency, rad/s.
    pub fn torsional_frequency(&self) -> T {
        let two = T::lit(2.0);
        (self.omega_b * self.k_tg * (T::one() / (two * self.h_t) + T::one() / (two * self.h_gen)))
            .sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DrivetrainState<T> {
    pub omega_t: T,
    pub omega_r: T,
    pub t_tg: T,
}

/// Returns the time derivatives packed in a [`DrivetrainState`].
pub fn drivetrain_derivatives<T: Scalar>(
    x: &DrivetrainState<T>,
    t_m: T,
    t_e: T,
    p: &DrivetrainParams<T>,
) -> DrivetrainState<T> {
    let two = T::lit(2.0);
    let slip = x.omega_t - x.omega_r;
    DrivetrainState {
        omega_t: (t_m - p.d_t * x.omega_t - x.t_tg - p.d_tg * slip) / (two * p.h_t),
        t_tg: p.omega_b * p.k_tg * slip,
        omega_r: (x.t_tg + t_e - p.d_gen * x.omega_r + p.d_tg * slip) / (two * p.h_gen),
    }
}
