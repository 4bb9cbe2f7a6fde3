use super::EPSILON;
use crate::geom::{RigidTransform, TriangleMesh, Vec3};
use crate::linalg::symmetric_eigen;
use alloc::vec::Vec;

/// Oriented bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Obb {
    pub center: Vec3,
    /// Right-handed orthonormal axes.
    pub axes: [Vec3; 3],
    pub half_extents: Vec3,
}

impl Obb {
    pub fn volume(&self) -> f64 {
        8.0 * self.half_extents.x * self.half_extents.y * self.half_extents.z
    }

    /// True when `p` lies inside the box, allowing `slack` on every face.
    pub fn contains(&self, p: Vec3, slack: f64) -> bool {
        let d = p - self.center;
        (0..3).all(|k| d.dot(self.axes[k]).abs() <= self.half_extents[k] + slack)
    }

    pub fn corners(&self) -> [Vec3; 8] {
        core::array::from_fn(|c| {
            let s = |bit: usize| if c & (1 << bit) == 0 { -1.0 } else { 1.0 };
            self.center
                + self.axes[0] * (s(0) * self.half_extents.x)
                + self.axes[1] * (s(1) * self.half_extents.y)
                + self.axes[2] * (s(2) * self.half_extents.z)
        })
    }
}

/// Fits a box to the vertices of the listed triangles. Axes are the
/// eigenvectors of the covariance of the distinct vertices referenced by the
/// subset; extents come from the extreme projections. A subset whose vertices
/// all coincide gets world axes.
pub fn fit_obb(mesh: &TriangleMesh, triangles: &[u32]) -> Obb {
    let mut ids: Vec<u32> = triangles.iter().flat_map(|&t| mesh.triangles[t as usize]).collect();
    ids.sort_unstable();
    ids.dedup();
    let verts = || ids.iter().map(|&i| mesh.vertices[i as usize]);
    let n = ids.len().max(1) as f64;
    let mean = verts().sum::<Vec3>() / n;
    let mut cov = [[0.0; 3]; 3];
    for p in verts() {
        let d = (p - mean).to_array();
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += d[i] * d[j];
            }
        }
    }
    let trace = cov[0][0] + cov[1][1] + cov[2][2];
    let axes = if trace > 0.0 && trace.is_finite() {
        let e = symmetric_eigen(cov);
        let a0 = Vec3::from_array(e.vectors[0]);
        let a1 = Vec3::from_array(e.vectors[1]);
        [a0, a1, a0.cross(a1)]
    } else {
        [Vec3::X, Vec3::Y, Vec3::Z]
    };
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in verts() {
        for k in 0..3 {
            let s = p.dot(axes[k]);
            lo[k] = lo[k].min(s);
            hi[k] = hi[k].max(s);
        }
    }
    if triangles.is_empty() {
        return Obb { center: Vec3::ZERO, axes, half_extents: Vec3::ZERO };
    }
    let center = (0..3).map(|k| axes[k] * (0.5 * (lo[k] + hi[k]))).sum();
    let half_extents = Vec3::new(0.5 * (hi[0] - lo[0]), 0.5 * (hi[1] - lo[1]), 0.5 * (hi[2] - lo[2]));
    Obb { center, axes, half_extents }
}

/// Separating-axis test over the 15 candidate axes (three face normals of
/// each box and the nine edge cross products). `rel` maps `b`'s frame into
/// `a`'s. Returns `true` when a separating axis exists with a gap larger than
/// [`EPSILON`]; cross-product axes shorter than [`EPSILON`] are skipped.
pub fn obb_disjoint(a: &Obb, b: &Obb, rel: &RigidTransform) -> bool {
    let b_axes = b.axes.map(|v| rel.apply_vector(v));
    let t = rel.apply(b.center) - a.center;

    let separated = |axis: Vec3, len: f64| {
        let ra: f64 = (0..3).map(|k| a.half_extents[k] * axis.dot(a.axes[k]).abs()).sum();
        let rb: f64 = (0..3).map(|k| b.half_extents[k] * axis.dot(b_axes[k]).abs()).sum();
        t.dot(axis).abs() > ra + rb + EPSILON * len
    };

    if a.axes.iter().any(|&l| separated(l, 1.0)) || b_axes.iter().any(|&l| separated(l, 1.0)) {
        return true;
    }
    for ea in &a.axes {
        for eb in &b_axes {
            let l = ea.cross(*eb);
            let len = l.norm();
            if len >= EPSILON && separated(l, len) {
                return true;
            }
        }
    }
    false
}
