use serde::{Deserialize, Serialize};

use crate::control::loops::LoopId;
use crate::control::pi::PiGains;
use crate::control::tf::Tf;
use crate::control::vsm::{VsmpParams, VsmqParams};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const CONTROLLER_FORMAT_VERSION: u32 = 1;

/// Voltage the virtual impedance compares against the virtual EMF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VoltageFeedback {
    /// `jω_s0·ψ_s` from the stator-flux estimate.
    #[default]
    StatorFlux,
    /// Measured terminal voltage.
    Terminal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtualImpedance {
    pub r: f64,
    pub l: f64,
    #[serde(default)]
    pub feedback: VoltageFeedback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitControllers {
    pub vsmp: VsmpParams,
    pub vsmq: VsmqParams,
    pub rsc_d: PiGains,
    pub rsc_q: PiGains,
    pub vdc: PiGains,
    pub gsc_d: PiGains,
    pub gsc_q: PiGains,
    pub virtual_impedance: VirtualImpedance,
}

impl UnitControllers {
    pub fn pi(&self, id: LoopId) -> Option<&PiGains> {
        match id {
            LoopId::RscD => Some(&self.rsc_d),
            LoopId::RscQ => Some(&self.rsc_q),
            LoopId::Vdc => Some(&self.vdc),
            LoopId::GscD => Some(&self.gsc_d),
            LoopId::GscQ => Some(&self.gsc_q),
            _ => None,
        }
    }

    pub fn pi_mut(&mut self, id: LoopId) -> Option<&mut PiGains> {
        match id {
            LoopId::RscD => Some(&mut self.rsc_d),
            LoopId::RscQ => Some(&mut self.rsc_q),
            LoopId::Vdc => Some(&mut self.vdc),
            LoopId::GscD => Some(&mut self.gsc_d),
            LoopId::GscQ => Some(&mut self.gsc_q),
            _ => None,
        }
    }

    /// Copies the parameters of one loop from another unit.
    pub fn copy_loop_from(&mut self, other: &UnitControllers, id: LoopId) {
        match id {
            LoopId::Vsmp => self.vsmp = other.vsmp,
            LoopId::Vsmq => self.vsmq = other.vsmq,
            pi => *self.pi_mut(pi).unwrap() = *other.pi(pi).unwrap(),
        }
    }

    fn validate(&self, unit: usize) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("unit {}: {what}", unit + 1)));
        let v = &self.vsmp;
        if !(v.h > 0.0 && v.d_p > 0.0 && v.d_d >= 0.0 && v.omega_s0 > 0.0) {
            return bad("VSMP requires H > 0, D_p > 0, D_d >= 0");
        }
        if !(self.vsmq.k_q > 0.0) {
            return bad("VSMQ requires K_q > 0");
        }
        if self.virtual_impedance.r < 0.0 || self.virtual_impedance.l < 0.0 {
            return bad("virtual impedance must be nonnegative");
        }
        if self.virtual_impedance.r == 0.0 && self.virtual_impedance.l == 0.0 {
            return bad("virtual impedance must be nonzero");
        }
        for id in LoopId::ALL.into_iter().filter(|l| l.is_pi()) {
            let g = self.pi(id).unwrap();
            if !(g.kp.is_finite() && g.ki.is_finite() && g.b.is_finite()) {
                return bad("non-finite PI gain");
            }
        }
        Ok(())
    }
}

/// Controller parameters for every unit of the farm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerSet {
    pub format_version: u32,
    pub label: String,
    #[serde(rename = "unit")]
    pub units: Vec<UnitControllers>,
}

impl ControllerSet {
    pub fn validate(&self) -> Result<()> {
        if self.format_version != CONTROLLER_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported controller file version {}",
                self.format_version
            )));
        }
        self.units.iter().enumerate().try_for_each(|(k, u)| u.validate(k))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let set: ControllerSet = toml::from_str(text)
            .map_err(|e| Error::Parse { what: "controller set".into(), message: e.to_string() })?;
        set.validate()?;
        Ok(set)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("controller set serialises")
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = label.to_string();
        self
    }
}

/// The 1-DOF controller used for loop analysis of `id` on `unit`.
pub fn reconfigure_one_dof<T: Scalar>(set: &ControllerSet, unit: usize, id: LoopId) -> Result<Tf<T>> {
    let u = set
        .units
        .get(unit)
        .ok_or_else(|| Error::Config(format!("no unit {}", unit + 1)))?;
    Ok(match id {
        LoopId::Vsmp => u.vsmp.one_dof(),
        LoopId::Vsmq => u.vsmq.one_dof(),
        pi => {
            let g = u.pi(pi).unwrap();
            Tf::pi(T::lit(g.kp), T::lit(g.ki))
        }
    })
}

/// Same as [`reconfigure_one_dof`] but takes the loop label.
pub fn reconfigure_one_dof_by_name<T: Scalar>(
    set: &ControllerSet,
    unit: usize,
    name: &str,
) -> Result<Tf<T>> {
    reconfigure_one_dof(set, unit, name.parse()?)
}
