//! Interference detection between triangle meshes with OBB trees.
//!
//! Trees are built top-down by recursive subdivision until each leaf holds a
//! single triangle. A query descends both trees together, pruning pairs of
//! boxes that a separating-axis test proves disjoint, and resolves leaf
//! pairs with an exact triangle-triangle test.

mod collide;
mod obb;
mod tree;
mod tritri;

pub use collide::{collide, CollisionMode, CollisionReport};
pub use obb::{fit_obb, obb_disjoint, Obb};
pub use tree::{build_obb_tree, ObbNode, ObbTree};
pub use tritri::tri_tri_intersect;

/// Uniform slack (mm) for box containment and separating-axis degeneracy.
pub const EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CollisionError {
    #[error("cannot build an OBB tree over a mesh without triangles")]
    EmptyMesh,
}
