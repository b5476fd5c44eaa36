//! Flat state vector layout with named entries.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub const GRID_STATES: usize = 4;
pub const G_FREQ: usize = 0;
pub const G_GOV: usize = 1;
pub const G_PM: usize = 2;
pub const G_RATE: usize = 3;

pub const UNIT_STATES: usize = 18;
pub const U_PSI_SD: usize = 0;
pub const U_PSI_SQ: usize = 1;
pub const U_PSI_RD: usize = 2;
pub const U_PSI_RQ: usize = 3;
pub const U_UDC: usize = 4;
pub const U_IGD: usize = 5;
pub const U_IGQ: usize = 6;
pub const U_DELTA: usize = 7;
pub const U_OMEGA_T: usize = 8;
pub const U_OMEGA_R: usize = 9;
pub const U_TTG: usize = 10;
pub const U_W: usize = 11;
pub const U_PSI_V: usize = 12;
pub const U_X_RSCD: usize = 13;
pub const U_X_RSCQ: usize = 14;
pub const U_X_VDC: usize = 15;
pub const U_X_GSCD: usize = 16;
pub const U_X_GSCQ: usize = 17;

const GRID_NAMES: [&str; GRID_STATES] = ["freq_dev", "governor_power", "p_m", "turbine_rate"];

const UNIT_NAMES: [&str; UNIT_STATES] = [
    "psi_sd", "psi_sq", "psi_rd", "psi_rq", "u_dc", "i_gsc_d", "i_gsc_q", "delta", "omega_t",
    "omega_r", "t_tg", "vsmp_w", "psi_vd", "x_rscd", "x_rscq", "x_vdc", "x_gscd", "x_gscq",
];

/// Grid block first, then one block of [`UNIT_STATES`] per unit.
#[derive(Debug, Clone, PartialEq)]
pub struct StateLayout {
    names: Vec<String>,
    index: HashMap<String, usize>,
    n_units: usize,
}

impl StateLayout {
    pub fn new(unit_names: &[String]) -> Result<Self> {
        let mut names: Vec<String> = GRID_NAMES.iter().map(|s| format!("grid.{s}")).collect();
        for u in unit_names {
            names.extend(UNIT_NAMES.iter().map(|s| format!("{u}.{s}")));
        }
        let mut index = HashMap::with_capacity(names.len());
        for (k, n) in names.iter().enumerate() {
            if index.insert(n.clone(), k).is_some() {
                return Err(Error::IndexCollision(n.clone()));
            }
        }
        Ok(Self { names, index, n_units: unit_names.len() })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn unit(&self, k: usize, local: usize) -> usize {
        GRID_STATES + k * UNIT_STATES + local
    }

    /// True for states that are angles.
    pub fn is_angle(&self, i: usize) -> bool {
        i >= GRID_STATES && (i - GRID_STATES) % UNIT_STATES == U_DELTA
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_is_sum_of_blocks() {
        let names: Vec<String> = (1..=4).map(|k| format!("DFIG{k}")).collect();
        let l = StateLayout::new(&names).unwrap();
        assert_eq!(l.len(), GRID_STATES + 4 * UNIT_STATES);
        assert_eq!(l.get("DFIG3.delta"), Some(l.unit(2, U_DELTA)));
        assert!(l.is_angle(l.unit(1, U_DELTA)));
        assert!(!l.is_angle(l.unit(1, U_OMEGA_R)));
    }

    #[test]
    fn duplicate_unit_name_collides() {
        let names = vec!["A".to_string(), "A".to_string()];
        assert!(matches!(StateLayout::new(&names), Err(Error::IndexCollision(_))));
    }
}
