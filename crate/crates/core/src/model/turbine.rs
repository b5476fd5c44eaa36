//! Aerodynamic rotor: power coefficient and extracted power.

use crate::model::bases::PuBases;
use crate::scalar::Scalar;

/// Quartic power-coefficient fit, ascending powers of the tip-speed ratio.
pub const CP_QUARTIC: [f64; 5] = [-0.4958, 0.2776, -0.02561, 8.7047e-4, -1.1331e-5];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurbineParams<T> {
    /// kg/m³
    pub air_density: T,
    /// m
    pub blade_radius: T,
    /// deg; the fit already corresponds to this fixed value
    pub pitch_deg: T,
    /// Generator speed over blade speed.
    pub gear_ratio: T,
    pub cp: [T; 5],
}

impl<T: Scalar> TurbineParams<T> {
    pub fn cp(&self, lambda: T) -> T {
        horner(&self.cp, lambda)
    }

    /// `ω_t` in pu of generator-side mechanical base speed.
    pub fn tip_speed_ratio(&self, wind_speed: T, omega_t: T, bases: &PuBases<T>) -> T {
        omega_t * bases.omega_mb * self.blade_radius / (self.gear_ratio * wind_speed)
    }
}

fn horner<T: Scalar>(c: &[T; 5], x: T) -> T {
    c.iter().rev().fold(T::zero(), |acc, &k| acc * x + k)
}

/// The benchmark quartic.
pub fn cp_coefficient<T: Scalar>(lambda: T) -> T {
    horner(&CP_QUARTIC.map(T::lit), lambda)
}

/// Extracted power in machine pu.
pub fn mechanical_power<T: Scalar>(
    wind_speed: T,
    omega_t: T,
    params: &TurbineParams<T>,
    bases: &PuBases<T>,
) -> T {
    let lambda = params.tip_speed_ratio(wind_speed, omega_t, bases);
    let area = T::PI() * params.blade_radius * params.blade_radius;
    T::lit(0.5) * params.air_density * area * params.cp(lambda) * wind_speed.powi(3) / bases.s_b
}

/// Tip-speed ratio maximising the quartic, by golden-section search on `[lo, hi]`.
pub fn optimal_tip_speed_ratio<T: Scalar>(params: &TurbineParams<T>, lo: T, hi: T) -> T {
    let g = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if params.cp(c) > params.cp(d) {
            b = d;
        } else {
            a = c;
        }
    }
    (a + b) / T::lit(2.0)
}
