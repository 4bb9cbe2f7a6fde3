//! Vectors, rotations, rigid transforms, meshes and planar sections.

mod contour;
mod triangulate;
mod mesh;
mod rotation;
pub mod shapes;
mod transform;
mod vec3;

pub use contour::{mesh_plane_contours, Axis, Polyline, SlicePlane, JOIN_TOLERANCE};
pub use mesh::{Aabb, PointCloud, TriangleMesh, VertexWelder, DEGENERATE_AREA};
pub use rotation::{quat_to_matrix, Mat3, UnitQuaternion, UNIT_TOLERANCE};
pub use triangulate::{signed_area, triangulate, TriangulateError};
pub use transform::{compose, invert, transform_points, RigidTransform};
pub use vec3::Vec3;

/// Errors raised by geometric constructors.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeomError {
    #[error("quaternion norm {norm} is not 1 within tolerance")]
    InvalidRotation { norm: f64 },
    #[error("rotation axis has zero length")]
    ZeroAxis,
    #[error("non-finite value")]
    NonFinite,
    #[error("vertex {index} has a non-finite coordinate")]
    NonFiniteVertex { index: usize },
    #[error("triangle {triangle} references vertex {index} but the mesh has {vertex_count}")]
    IndexOutOfRange { triangle: usize, index: usize, vertex_count: usize },
}
