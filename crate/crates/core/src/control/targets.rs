use serde::{Deserialize, Serialize};

use crate::control::loops::LoopId;

/// Design targets of one loop: closed-loop template and open-loop margins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopSpec {
    #[serde(rename = "loop")]
    pub loop_id: LoopId,
    pub phi_m_deg: f64,
    pub omega_o: f64,
    #[serde(default)]
    pub settling_time_s: Option<f64>,
    #[serde(default)]
    pub zeta: Option<f64>,
    #[serde(default)]
    pub omega_n: Option<f64>,
}

impl LoopSpec {
    pub fn is_valid(&self) -> bool {
        self.phi_m_deg > 0.0 && self.phi_m_deg < 180.0 && self.omega_o > 0.0
    }
}

/// Looks up the target of a loop.
pub fn spec_for(specs: &[LoopSpec], id: LoopId) -> Option<&LoopSpec> {
    specs.iter().find(|s| s.loop_id == id)
}

#[derive(Serialize, Deserialize)]
struct SpecFile {
    #[serde(rename = "spec")]
    specs: Vec<LoopSpec>,
}

/// Reads a list of `[[spec]]` tables.
pub fn specs_from_toml(text: &str) -> crate::error::Result<Vec<LoopSpec>> {
    let f: SpecFile = toml::from_str(text)
        .map_err(|e| crate::error::Error::Parse { what: "loop specs".into(), message: e.to_string() })?;
    if let Some(s) = f.specs.iter().find(|s| !s.is_valid()) {
        return Err(crate::error::Error::Config(format!("invalid target for {}", s.loop_id)));
    }
    Ok(f.specs)
}

pub fn specs_to_toml(specs: &[LoopSpec]) -> String {
    toml::to_string(&SpecFile { specs: specs.to_vec() }).expect("specs serialise")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_file_round_trip() {
        let s = vec![LoopSpec {
            loop_id: LoopId::Vdc,
            phi_m_deg: 65.5,
            omega_o: 109.9,
            settling_time_s: Some(0.08),
            zeta: Some(0.707),
            omega_n: None,
        }];
        assert_eq!(specs_from_toml(&specs_to_toml(&s)).unwrap(), s);
        assert!(specs_from_toml("[[spec]]\nloop = \"VDC\"\nphi_m_deg = 190.0\nomega_o = 1.0\n").is_err());
    }
}
