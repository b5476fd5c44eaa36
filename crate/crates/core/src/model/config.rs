//! Farm configuration file.

use serde::{Deserialize, Serialize};

use crate::control::{LoopId, LoopSpec, VoltageFeedback};
use crate::error::{Error, Result};
use crate::model::bases::{BaseRatings, PuBases};
use crate::model::drivetrain::{DrivetrainParams, DrivetrainSi};
use crate::model::grid::GridParams;
use crate::model::machine::DfigParams;
use crate::model::network::{Branch, NetworkTopology};
use crate::model::turbine::TurbineParams;

pub const CONFIG_FORMAT_VERSION: u32 = 1;

/// The checked-in benchmark configuration.
pub const BENCHMARK_TOML: &str = include_str!("../../config/benchmark.toml");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MachineConfig {
    pub r_s: f64,
    pub r_r: f64,
    pub l_s: f64,
    pub l_r: f64,
    pub l_m: f64,
    pub c_dc: f64,
    pub u_dc_nom: f64,
    pub filter_r: f64,
    pub filter_l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurbineConfig {
    pub air_density: f64,
    pub blade_radius_m: f64,
    pub pitch_deg: f64,
    pub gear_ratio: f64,
    pub cp: [f64; 5],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub voltage_pu: f64,
    pub scr: f64,
    pub x_over_r: f64,
    pub inertia_s: f64,
    pub governor_tau_s: f64,
    pub damping: f64,
    pub turbine_zeta: f64,
    pub turbine_wn: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VsmConfig {
    pub droop_p: f64,
    pub droop_q: f64,
    pub q_set: f64,
    pub v_set: f64,
    pub virtual_r: f64,
    pub virtual_l: f64,
    #[serde(default)]
    pub feedback: VoltageFeedback,
    pub inertia_floor_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingTargets {
    /// Power delivered to the grid, plant base.
    pub p_grid_pu: f64,
    /// Generator speed held by the trim, pu.
    pub rotor_speed_pu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitConfig {
    pub name: String,
    pub feeder_z_pu: f64,
    pub feeder_x_over_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarmConfig {
    pub format_version: u32,
    pub name: String,
    pub bases: BaseRatings,
    pub machine: MachineConfig,
    pub drivetrain: DrivetrainSi,
    pub turbine: TurbineConfig,
    pub grid: GridConfig,
    pub vsm: VsmConfig,
    pub operating_point: OperatingTargets,
    #[serde(rename = "unit", default)]
    pub units: Vec<UnitConfig>,
    #[serde(rename = "spec", default)]
    pub specs: Vec<LoopSpec>,
}

impl FarmConfig {
    pub fn benchmark() -> Self {
        Self::from_toml(BENCHMARK_TOML).expect("benchmark config is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: FarmConfig = toml::from_str(text)
            .map_err(|e| Error::Parse { what: "farm config".into(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn n_units(&self) -> usize {
        self.units.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.format_version != CONFIG_FORMAT_VERSION {
            return bad("unsupported config format version");
        }
        PuBases::<f64>::from_ratings(&self.bases)?;
        self.dfig_params().validate()?;
        let t = &self.turbine;
        if !(t.blade_radius_m > 0.0 && t.air_density > 0.0 && t.gear_ratio > 0.0) {
            return bad("turbine radius, density and gear ratio must be positive");
        }
        let g = &self.grid;
        if !(g.inertia_s > 0.0 && g.governor_tau_s > 0.0 && g.damping >= 0.0) {
            return bad("grid requires H > 0, tau > 0, D >= 0");
        }
        if !(g.scr > 0.0 && g.x_over_r > 0.0 && g.turbine_wn > 0.0 && g.turbine_zeta > 0.0) {
            return bad("grid SCR, X/R and turbine lag parameters must be positive");
        }
        let v = &self.vsm;
        if !(v.droop_p > 0.0 && v.droop_q >= 0.0 && v.virtual_r >= 0.0 && v.virtual_l >= 0.0) {
            return bad("VSM droops and virtual impedance must be nonnegative");
        }
        if self.units.iter().any(|u| !(u.feeder_z_pu > 0.0 && u.feeder_x_over_r > 0.0)) {
            return bad("feeder impedances must be positive");
        }
        let mut names: Vec<_> = self.units.iter().map(|u| u.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.units.len() {
            return bad("unit names must be unique");
        }
        if self.specs.iter().any(|s| !s.is_valid()) {
            return bad("loop specs require 0 < phi_m < 180 and omega_o > 0");
        }
        Ok(())
    }

    pub fn pu_bases(&self) -> PuBases<f64> {
        PuBases::from_ratings(&self.bases).expect("validated")
    }

    pub fn dfig_params(&self) -> DfigParams<f64> {
        let m = &self.machine;
        DfigParams {
            r_s: m.r_s,
            r_r: m.r_r,
            l_s: m.l_s,
            l_r: m.l_r,
            l_m: m.l_m,
            c_dc: m.c_dc,
            u_dc_nom: m.u_dc_nom,
            filter_r: m.filter_r,
            filter_l: m.filter_l,
            pole_pairs: self.bases.pole_pairs,
        }
    }

    pub fn drivetrain_params(&self) -> DrivetrainParams<f64> {
        DrivetrainParams::from_si(self.drivetrain, &self.pu_bases())
    }

    pub fn turbine_params(&self) -> TurbineParams<f64> {
        let t = &self.turbine;
        TurbineParams {
            air_density: t.air_density,
            blade_radius: t.blade_radius_m,
            pitch_deg: t.pitch_deg,
            gear_ratio: t.gear_ratio,
            cp: t.cp,
        }
    }

    pub fn grid_params(&self, p_m_star: f64) -> GridParams<f64> {
        let g = &self.grid;
        GridParams {
            h_sys: g.inertia_s,
            tau_g: g.governor_tau_s,
            d_eq: g.damping,
            turbine_zeta: g.turbine_zeta,
            turbine_wn: g.turbine_wn,
            p_m_star,
        }
    }

    pub fn network(&self) -> NetworkTopology<f64> {
        NetworkTopology {
            feeders: self
                .units
                .iter()
                .map(|u| Branch::from_magnitude(u.feeder_z_pu, u.feeder_x_over_r))
                .collect(),
            grid: NetworkTopology::grid_branch(self.grid.scr, self.grid.x_over_r, self.units.len()),
            grid_voltage: self.grid.voltage_pu,
        }
    }

    pub fn spec(&self, id: LoopId) -> Option<&LoopSpec> {
        crate::control::spec_for(&self.specs, id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_parses_and_round_trips() {
        let c = FarmConfig::benchmark();
        assert_eq!(c.n_units(), 4);
        assert_eq!(c.specs.len(), 7);
        let back = FarmConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn benchmark_feeders_and_scr() {
        let c = FarmConfig::benchmark();
        let net = c.network();
        let z: Vec<f64> = net.feeders.iter().map(|b| b.magnitude()).collect();
        for (got, want) in z.iter().zip([0.06, 0.06, 0.12, 0.12]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((net.scr() - c.grid.scr).abs() / c.grid.scr < 0.01);
    }

    #[test]
    fn cp_matches_quartic() {
        let c = FarmConfig::benchmark();
        assert_eq!(c.turbine.cp, crate::model::turbine::CP_QUARTIC);
    }

    #[test]
    fn malformed_is_parse_error() {
        let e = FarmConfig::from_toml("format_version = \"x\"").unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
    }
}
