//! Coordinated loop-shaping redesign.

pub mod coordinated;
pub mod shaping;

pub use coordinated::{
    coordinated_redesign, plant_at, spec_errors, structural_classes, use_template_references, PassMargins, RedesignOptions,
    RedesignReport, SynthesisRecord,
};
pub use shaping::{
    pi_loopshape, vsmp_loopshape, vsmq_loopshape, ShapingError, ShapingReadout,
};
