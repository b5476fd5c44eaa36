//! Collector network: series R–L feeders and the grid Thevenin branch.

use crate::scalar::Scalar;

/// Series branch `r + j f l`, where `f` is the frame speed in pu.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch<T> {
    pub r: T,
    pub l: T,
}

impl<T: Scalar> Branch<T> {
    pub fn from_magnitude(z: T, x_over_r: T) -> Self {
        let r = z / (T::one() + x_over_r * x_over_r).sqrt();
        Self { r, l: r * x_over_r }
    }

    /// Impedance magnitude at nominal frequency.
    pub fn magnitude(&self) -> T {
        self.r.hypot(self.l)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology<T> {
    /// One feeder per unit, machine base.
    pub feeders: Vec<Branch<T>>,
    /// Grid equivalent on machine base.
    pub grid: Branch<T>,
    pub grid_voltage: T,
}

impl<T: Scalar> NetworkTopology<T> {
    /// Grid branch on machine base for a plant of `n_units` machines.
    pub fn grid_branch(scr: T, x_over_r: T, n_units: usize) -> Branch<T> {
        let n = T::lit(n_units.max(1) as f64);
        Branch::from_magnitude(T::one() / (T::lit(3.0).sqrt() * n * scr), x_over_r)
    }

    /// Short-circuit ratio on plant base.
    pub fn scr(&self) -> T {
        let n = T::lit(self.feeders.len().max(1) as f64);
        T::one() / (T::lit(3.0).sqrt() * n * self.grid.magnitude())
    }
}
