//! Loop interaction from impulse perturbation-rejection signals.

pub mod correlation;
pub mod impulse;
pub mod indices;

pub use correlation::{correlation_matrix, directional_correlation, trapezoid, InteractionMatrix};
pub use impulse::{check_step, impulse_rejection, impulse_rejection_set, ImpulseSettings, RejectionSignals};
pub use indices::{averaged_influence, influence_indices, redesign_sequence, LoopIndices};
