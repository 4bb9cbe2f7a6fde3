//! Procedural closed meshes used for devices, needles and test geometry.

use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{TriangleMesh, Vec3};
use crate::math;

/// Axis-aligned box with outward-facing triangles (12 triangles).
pub fn box_mesh(min: Vec3, max: Vec3) -> TriangleMesh {
    let v = |i: usize| {
        Vec3::new(
            if i & 1 == 0 { min.x } else { max.x },
            if i & 2 == 0 { min.y } else { max.y },
            if i & 4 == 0 { min.z } else { max.z },
        )
    };
    let vertices = (0..8).map(v).collect();
    let triangles = alloc::vec![
        [0, 2, 1], [1, 2, 3], // z = min
        [4, 5, 6], [5, 7, 6], // z = max
        [0, 1, 4], [1, 5, 4], // y = min
        [2, 6, 3], [3, 6, 7], // y = max
        [0, 4, 2], [2, 4, 6], // x = min
        [1, 3, 5], [3, 7, 5], // x = max
    ];
    TriangleMesh { vertices, triangles, normals: None }
}

/// Latitude/longitude sphere with vertices on the sphere surface.
/// Produces `2 · slices · (stacks − 1)` outward-facing triangles.
pub fn uv_sphere(center: Vec3, radius: f64, slices: usize, stacks: usize) -> TriangleMesh {
    let slices = slices.max(3);
    let stacks = stacks.max(2);
    let mut vertices = Vec::with_capacity(2 + slices * (stacks - 1));
    vertices.push(center + Vec3::Z * radius);
    for i in 1..stacks {
        let phi = PI * i as f64 / stacks as f64;
        let (sp, cp) = (math::sin(phi), math::cos(phi));
        for j in 0..slices {
            let theta = 2.0 * PI * j as f64 / slices as f64;
            vertices.push(center + Vec3::new(sp * math::cos(theta), sp * math::sin(theta), cp) * radius);
        }
    }
    vertices.push(center - Vec3::Z * radius);
    let south = (vertices.len() - 1) as u32;
    let ring = |i: usize, j: usize| (1 + (i - 1) * slices + j % slices) as u32;

    let mut triangles = Vec::with_capacity(2 * slices * (stacks - 1));
    for j in 0..slices {
        triangles.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for i in 1..stacks - 1 {
        for j in 0..slices {
            let (a, b) = (ring(i, j), ring(i, j + 1));
            let (c, d) = (ring(i + 1, j), ring(i + 1, j + 1));
            triangles.push([a, c, d]);
            triangles.push([a, d, b]);
        }
    }
    for j in 0..slices {
        triangles.push([south, ring(stacks - 1, j + 1), ring(stacks - 1, j)]);
    }
    TriangleMesh { vertices, triangles, normals: None }
}

/// Closed `sides`-gon prism from `start` along unit `direction` for `length`.
/// Polygon vertices sit at exactly `radius` from the axis (inscribed
/// convention). Caps are fanned from their first vertex, so the mesh has
/// `4 · sides − 4` triangles and is watertight.
pub fn prism(start: Vec3, direction: Vec3, length: f64, radius: f64, sides: usize) -> TriangleMesh {
    let sides = sides.max(3);
    let axis = direction.normalized().unwrap_or(Vec3::Z);
    let u = axis.any_orthogonal();
    let v = axis.cross(u);
    let end = start + axis * length;
    let mut vertices = Vec::with_capacity(2 * sides);
    for base in [start, end] {
        for k in 0..sides {
            let a = 2.0 * PI * k as f64 / sides as f64;
            vertices.push(base + (u * math::cos(a) + v * math::sin(a)) * radius);
        }
    }
    let n = sides as u32;
    let mut triangles = Vec::with_capacity(4 * sides - 4);
    for k in 1..n - 1 {
        triangles.push([0, k + 1, k]);
        triangles.push([n, n + k, n + k + 1]);
    }
    for k in 0..n {
        let k1 = (k + 1) % n;
        triangles.push([k, k1, n + k1]);
        triangles.push([k, n + k1, n + k]);
    }
    TriangleMesh { vertices, triangles, normals: None }
}
