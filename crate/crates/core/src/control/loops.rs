use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The seven control loops of one unit, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LoopId {
    #[serde(rename = "VSMP")]
    Vsmp,
    #[serde(rename = "VSMQ")]
    Vsmq,
    #[serde(rename = "RSCd")]
    RscD,
    #[serde(rename = "RSCq")]
    RscQ,
    #[serde(rename = "VDC")]
    Vdc,
    #[serde(rename = "GSCd")]
    GscD,
    #[serde(rename = "GSCq")]
    GscQ,
}

impl LoopId {
    pub const ALL: [LoopId; 7] = [
        LoopId::Vsmp,
        LoopId::Vsmq,
        LoopId::RscD,
        LoopId::RscQ,
        LoopId::Vdc,
        LoopId::GscD,
        LoopId::GscQ,
    ];

    /// Tie-break order for the redesign sequence.
    pub const TIE_BREAK: [LoopId; 7] = [
        LoopId::GscQ,
        LoopId::GscD,
        LoopId::RscD,
        LoopId::RscQ,
        LoopId::Vsmp,
        LoopId::Vsmq,
        LoopId::Vdc,
    ];

    pub const COUNT: usize = 7;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            LoopId::Vsmp => "VSMP",
            LoopId::Vsmq => "VSMQ",
            LoopId::RscD => "RSCd",
            LoopId::RscQ => "RSCq",
            LoopId::Vdc => "VDC",
            LoopId::GscD => "GSCd",
            LoopId::GscQ => "GSCq",
        }
    }

    pub fn is_pi(self) -> bool {
        !matches!(self, LoopId::Vsmp | LoopId::Vsmq)
    }

    pub fn is_current_loop(self) -> bool {
        matches!(self, LoopId::RscD | LoopId::RscQ | LoopId::GscD | LoopId::GscQ)
    }

    pub fn tie_rank(self) -> usize {
        Self::TIE_BREAK.iter().position(|&l| l == self).unwrap()
    }
}

impl fmt::Display for LoopId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for LoopId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LoopId::ALL
            .into_iter()
            .find(|l| l.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownLoop(s.to_string()))
    }
}

/// A loop on a specific unit (zero-based unit index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LoopRef {
    pub unit: usize,
    pub loop_id: LoopId,
}

impl LoopRef {
    pub fn new(unit: usize, loop_id: LoopId) -> Self {
        Self { unit, loop_id }
    }

    /// Flat index `unit * 7 + loop`.
    pub fn flat(self) -> usize {
        self.unit * LoopId::COUNT + self.loop_id.index()
    }

    pub fn from_flat(k: usize) -> Self {
        Self { unit: k / LoopId::COUNT, loop_id: LoopId::ALL[k % LoopId::COUNT] }
    }
}

impl fmt::Display for LoopRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DFIG{}.{}", self.unit + 1, self.loop_id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        for l in LoopId::ALL {
            assert_eq!(l.label().parse::<LoopId>().unwrap(), l);
        }
        assert!("PLL".parse::<LoopId>().is_err());
    }

    #[test]
    fn flat_round_trip() {
        for k in 0..28 {
            assert_eq!(LoopRef::from_flat(k).flat(), k);
        }
    }
}
