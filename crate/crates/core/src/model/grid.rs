//! Equivalent external grid: governor, second-order turbine lag and swing equation.

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridParams<T> {
    /// Lumped inertia constant, s.
    pub h_sys: T,
    /// Governor time constant, s.
    pub tau_g: T,
    pub d_eq: T,
    pub turbine_zeta: T,
    /// rad/s
    pub turbine_wn: T,
    pub p_m_star: T,
}

/// `p_m` is the turbine output; `turbine_rate` is its time derivative.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GridState<T> {
    pub freq_dev: T,
    pub governor_power: T,
    pub p_m: T,
    pub turbine_rate: T,
}

/// `p_g` is the electrical power delivered by the equivalent generator.
pub fn grid_derivatives<T: Scalar>(x: &GridState<T>, p_g: T, p: &GridParams<T>) -> GridState<T> {
    let half_d = p.d_eq / T::lit(2.0) * x.freq_dev;
    let wn2 = p.turbine_wn * p.turbine_wn;
    GridState {
        governor_power: (p.p_m_star - x.governor_power - half_d) / p.tau_g,
        p_m: x.turbine_rate,
        turbine_rate: wn2 * (x.governor_power - x.p_m)
            - T::lit(2.0) * p.turbine_zeta * p.turbine_wn * x.turbine_rate,
        freq_dev: (x.p_m - p_g - half_d) / (T::lit(2.0) * p.h_sys),
    }
}

/// Steady frequency deviation for a constant electrical load.
pub fn steady_freq_dev<T: Scalar>(p_g: T, p: &GridParams<T>) -> T {
    (p.p_m_star - p_g) / p.d_eq
}
