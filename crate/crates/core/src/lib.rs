//! Small-signal analysis and coordinated loop-shaping of a wind farm of
//! doubly-fed induction generators under virtual-synchronous-machine control.

pub mod control;
pub mod error;
pub mod freqresp;
pub mod interaction;
pub mod linearize;
pub mod model;
pub mod redesign;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision instances of the generic types.
pub type FrequencyResponseF64 = freqresp::FrequencyResponse<f64>;
pub type MarginResultF64 = freqresp::MarginResult<f64>;
pub type LoopMarginsF64 = freqresp::LoopMargins<f64>;
pub type TfF64 = control::Tf<f64>;
pub type PuBasesF64 = model::PuBases<f64>;
pub type DfigParamsF64 = model::DfigParams<f64>;
pub type DrivetrainParamsF64 = model::DrivetrainParams<f64>;
pub type TurbineParamsF64 = model::TurbineParams<f64>;
pub type GridParamsF64 = model::GridParams<f64>;
pub type NetworkTopologyF64 = model::NetworkTopology<f64>;
