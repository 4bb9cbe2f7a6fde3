//! Parametric template and obturator, virtual needles, collision-based needle
//! selection and the plan data model.
//!
//! Model frame: the template's superior surface is the plane `z = 0`, the
//! plate occupies `z ∈ [−thickness, 0]`, hole axes run along `−z` (the
//! insertion direction) and the plate center is the origin. Row `A` is the
//! row at largest `y`; columns are numbered from 1 at smallest `x`.

mod config;
mod holes;
mod model;
mod needles;
mod plan;

pub use config::{LandmarkFeature, TemplateConfig};
pub use holes::{hole_grid, hole_label, Hole};
pub use model::{obturator_mesh, superior_surface_points, template_mesh};
pub use needles::{
    intersection_span, needle_geometry, needle_hits, select_needles, NeedleSegment, MIN_NEEDLE_RADIUS,
    SPAN_RESOLUTION,
};
pub use plan::{IcpSummary, LandmarkPair, NeedleState, Plan, Provenance, PLAN_SCHEMA_VERSION};

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ApplicatorError {
    #[error("invalid template config: {0}")]
    InvalidConfig(String),
    #[error("needle depth must be positive, got {0} mm")]
    NonPositiveDepth(f64),
    #[error("unknown hole id {0:?}")]
    UnknownHole(String),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
}
