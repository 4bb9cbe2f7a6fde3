use alloc::vec;
use alloc::vec::Vec;

use super::{RigidTransform, TriangleMesh, Vec3, VertexWelder};

/// Endpoints closer than this (mm) are joined into one chain vertex.
pub const JOIN_TOLERANCE: f64 = 1e-6;

/// Orthogonal anatomical plane families in RAS coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Axis {
    /// Constant z (superior–inferior).
    Axial,
    /// Constant x (right–left).
    Sagittal,
    /// Constant y (anterior–posterior).
    Coronal,
}

impl Axis {
    /// World coordinate index that is held constant on the plane.
    pub fn normal_index(self) -> usize {
        match self {
            Axis::Sagittal => 0,
            Axis::Coronal => 1,
            Axis::Axial => 2,
        }
    }

    /// World coordinate indices used as in-plane (u, v).
    pub fn plane_indices(self) -> [usize; 2] {
        match self {
            Axis::Axial => [0, 1],
            Axis::Sagittal => [1, 2],
            Axis::Coronal => [0, 2],
        }
    }

    pub fn project(self, p: Vec3) -> [f64; 2] {
        let [u, v] = self.plane_indices();
        [p[u], p[v]]
    }

    pub fn parse(s: &str) -> Option<Axis> {
        match s {
            "axial" => Some(Axis::Axial),
            "sagittal" => Some(Axis::Sagittal),
            "coronal" => Some(Axis::Coronal),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Axial => "axial",
            Axis::Sagittal => "sagittal",
            Axis::Coronal => "coronal",
        }
    }
}

/// Plane `coordinate[axis] == offset`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlicePlane {
    pub axis: Axis,
    pub offset: f64,
}

/// Chain of in-plane points. Closed chains do not repeat their first point.
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

impl Polyline {
    pub fn length(&self) -> f64 {
        let seg = |a: &[f64; 2], b: &[f64; 2]| crate::math::hypot(a[0] - b[0], a[1] - b[1]);
        let open: f64 = self.points.windows(2).map(|w| seg(&w[0], &w[1])).sum();
        match (self.closed, self.points.first(), self.points.last()) {
            (true, Some(f), Some(l)) if self.points.len() > 1 => open + seg(l, f),
            _ => open,
        }
    }
}

/// Sections `mesh`, placed in the world by `pose`, with `plane`.
///
/// Vertices exactly on the plane are treated as lying on its positive side,
/// which keeps every crossing on a proper edge and the chains consistent.
pub fn mesh_plane_contours(mesh: &TriangleMesh, pose: &RigidTransform, plane: SlicePlane) -> Vec<Polyline> {
    let axis = plane.axis.normal_index();
    let world: Vec<Vec3> = mesh.vertices.iter().map(|&v| pose.apply(v)).collect();
    let dist: Vec<f64> = world.iter().map(|p| p[axis] - plane.offset).collect();

    let mut welder = VertexWelder::new(JOIN_TOLERANCE);
    let mut points: Vec<Vec3> = Vec::new();
    let mut segments: Vec<[u32; 2]> = Vec::new();
    for tri in &mesh.triangles {
        let idx = tri.map(|i| i as usize);
        let pos = idx.map(|i| dist[i] >= 0.0);
        if pos[0] == pos[1] && pos[1] == pos[2] {
            continue;
        }
        let mut ends = [0u32; 2];
        let mut n = 0;
        for k in 0..3 {
            let (a, b) = (idx[k], idx[(k + 1) % 3]);
            if pos[k] != pos[(k + 1) % 3] {
                let t = dist[a] / (dist[a] - dist[b]);
                let mut p = world[a].lerp(world[b], t);
                match axis {
                    0 => p.x = plane.offset,
                    1 => p.y = plane.offset,
                    _ => p.z = plane.offset,
                }
                let id = welder.insert(p);
                if id as usize == points.len() {
                    points.push(p);
                }
                ends[n] = id;
                n += 1;
            }
        }
        if ends[0] != ends[1] {
            segments.push(ends);
        }
    }
    chain_segments(&points, &segments, plane.axis)
}

fn chain_segments(points: &[Vec3], segments: &[[u32; 2]], axis: Axis) -> Vec<Polyline> {
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); points.len()];
    for (s, seg) in segments.iter().enumerate() {
        incident[seg[0] as usize].push(s);
        incident[seg[1] as usize].push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();

    let walk = |start: usize, used: &mut Vec<bool>| -> Vec<usize> {
        let mut chain = vec![start];
        let mut at = start;
        while let Some(&s) = incident[at].iter().find(|&&s| !used[s]) {
            used[s] = true;
            let [a, b] = segments[s];
            at = if a as usize == at { b as usize } else { a as usize };
            chain.push(at);
        }
        chain
    };

    // Open chains start at odd-degree nodes; whatever remains forms loops.
    let odd: Vec<usize> = (0..points.len()).filter(|&p| incident[p].len() % 2 == 1).collect();
    for start in odd {
        if incident[start].iter().any(|&s| !used[s]) {
            let chain = walk(start, &mut used);
            out.push(to_polyline(points, &chain, axis));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            let chain = walk(segments[s][0] as usize, &mut used);
            out.push(to_polyline(points, &chain, axis));
        }
    }
    out
}

fn to_polyline(points: &[Vec3], chain: &[usize], axis: Axis) -> Polyline {
    let closed = chain.len() > 2 && chain.first() == chain.last();
    let take = if closed { chain.len() - 1 } else { chain.len() };
    Polyline { points: chain[..take].iter().map(|&i| axis.project(points[i])).collect(), closed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{shapes, UnitQuaternion};
    use crate::math;

    #[test]
    fn cube_section_is_unit_square() {
        let cube = shapes::box_mesh(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0));
        let plane = SlicePlane { axis: Axis::Axial, offset: 0.5 };
        let c = mesh_plane_contours(&cube, &RigidTransform::IDENTITY, plane);
        assert_eq!(c.len(), 1);
        assert!(c[0].closed);
        assert!((c[0].length() - 4.0).abs() < 1e-12);
        for p in &c[0].points {
            assert!(p[0] >= -1e-12 && p[0] <= 1.0 + 1e-12 && p[1] >= -1e-12 && p[1] <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn missing_plane_gives_nothing() {
        let cube = shapes::box_mesh(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0));
        for axis in [Axis::Axial, Axis::Sagittal, Axis::Coronal] {
            let c = mesh_plane_contours(&cube, &RigidTransform::IDENTITY, SlicePlane { axis, offset: 7.0 });
            assert!(c.is_empty());
        }
    }

    #[test]
    fn sphere_section_is_near_circle() {
        let sphere = shapes::uv_sphere(Vec3::ZERO, 10.0, 16, 17);
        assert_eq!(sphere.triangle_count(), 512);
        for axis in [Axis::Axial, Axis::Sagittal, Axis::Coronal] {
            let c = mesh_plane_contours(&sphere, &RigidTransform::IDENTITY, SlicePlane { axis, offset: 0.0 });
            assert_eq!(c.len(), 1, "{axis:?}");
            assert!(c[0].closed);
            for p in &c[0].points {
                let r = math::sqrt(p[0] * p[0] + p[1] * p[1]);
                assert!((r - 10.0).abs() < 0.5, "{axis:?} r = {r}");
            }
        }
    }

    #[test]
    fn open_mesh_gives_open_chain() {
        let mesh = TriangleMesh::new(
            alloc::vec![Vec3::new(0.0, 0.0, -1.0), Vec3::new(1.0, 0.0, -1.0), Vec3::new(0.0, 0.0, 1.0)],
            alloc::vec![[0, 1, 2]],
        )
        .unwrap();
        let c = mesh_plane_contours(&mesh, &RigidTransform::IDENTITY, SlicePlane { axis: Axis::Axial, offset: 0.0 });
        assert_eq!(c.len(), 1);
        assert!(!c[0].closed);
        assert!((c[0].length() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn length_is_invariant_under_in_plane_motion() {
        let sphere = shapes::uv_sphere(Vec3::new(3.0, -1.0, 2.0), 8.0, 20, 13);
        let plane = SlicePlane { axis: Axis::Axial, offset: 3.3 };
        let base: f64 = mesh_plane_contours(&sphere, &RigidTransform::IDENTITY, plane).iter().map(Polyline::length).sum();
        for (angle, shift) in [(0.3, Vec3::new(5.0, -7.0, 0.0)), (2.1, Vec3::new(-40.0, 11.0, 0.0))] {
            let pose = RigidTransform::new(UnitQuaternion::from_axis_angle(Vec3::Z, angle).unwrap(), shift);
            let moved: f64 = mesh_plane_contours(&sphere, &pose, plane).iter().map(Polyline::length).sum();
            assert!(((moved - base) / base).abs() < 1e-6);
        }
    }
}
