//! Computational core for template-guided interstitial brachytherapy planning.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO. It covers the
//! geometry of the procedure end to end:
//!
//! * [`geom`]: vectors, unit quaternions, rigid transforms, indexed triangle
//!   meshes and planar mesh sections.
//! * [`registration`]: closed-form absolute orientation from corresponded
//!   landmarks, an exact KD-tree and point-to-point ICP refinement.
//! * [`volume`]: scalar volumes with a voxel-center world mapping, ROI
//!   cropping, threshold point extraction and Marching Cubes.
//! * [`collision`]: OBB trees, separating-axis box tests, triangle-triangle
//!   intersection and dual-tree interference queries.
//! * [`applicator`]: the parametric template/obturator model, virtual needles,
//!   collision-based needle selection and the plan data model.
//!
//! File formats, the synthetic phantom, the pipeline, the HTTP service and the
//! CLI live in the companion `brachyplan` crate.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod applicator;
pub mod collision;
pub mod geom;
pub mod linalg;
pub(crate) mod math;
pub mod registration;
pub mod volume;

pub use geom::{Axis, Mat3, PointCloud, RigidTransform, TriangleMesh, UnitQuaternion, Vec3};
