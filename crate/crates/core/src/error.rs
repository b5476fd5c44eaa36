use thiserror::Error;

use crate::control::LoopId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error in {what}: {message}")]
    Parse { what: String, message: String },

    #[error("network admittance is singular: {0}")]
    SingularNetwork(String),

    #[error("state index collision: {0}")]
    IndexCollision(String),

    #[error("infeasible target: {0}")]
    InfeasibleTarget(String),

    #[error("trim did not converge after {iterations} iterations (best residual {best_residual:.3e})")]
    TrimFailed { iterations: usize, best_residual: f64 },

    #[error("non-finite vector field while perturbing `{state}`")]
    NonFinite { state: String },

    #[error("missing analysis tag: {0}")]
    MissingTag(String),

    #[error("unknown loop id `{0}`")]
    UnknownLoop(String),

    #[error("no gain crossover in the evaluated band")]
    NoCrossover,

    #[error("time step {dt:e} s too coarse for fastest mode {fastest:.1} rad/s; use dt <= {suggested:e} s")]
    StepTooCoarse { dt: f64, fastest: f64, suggested: f64 },

    #[error("state blow-up at t = {time:.6} s")]
    BlowUp { time: f64 },

    #[error("loop synthesis failed for {loop_id} (unit {unit}, iteration {iteration}): {reason}")]
    Synthesis {
        loop_id: LoopId,
        unit: usize,
        iteration: usize,
        reason: String,
    },

    #[error("{0}")]
    Shaping(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
