use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{GeomError, RigidTransform, Vec3};
use crate::math;

/// Triangles with area at or below this (mm²) are considered degenerate.
pub const DEGENERATE_AREA: f64 = 1e-12;

/// Ordered list of points in millimeters.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Option<Vec3> {
        (!self.points.is_empty()).then(|| self.points.iter().copied().sum::<Vec3>() / self.points.len() as f64)
    }
}

impl From<Vec<Vec3>> for PointCloud {
    fn from(points: Vec<Vec3>) -> Self {
        Self::new(points)
    }
}

/// Axis-aligned bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn from_points<I: IntoIterator<Item = Vec3>>(points: I) -> Option<Aabb> {
        let mut it = points.into_iter();
        let first = it.next()?;
        Some(it.fold(Aabb { min: first, max: first }, |b, p| Aabb {
            min: b.min.component_min(p),
            max: b.max.component_max(p),
        }))
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }
}

/// Indexed triangle mesh.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    /// Optional per-triangle unit normals, parallel to `triangles`.
    pub normals: Option<Vec<Vec3>>,
}

impl TriangleMesh {
    /// Builds a mesh after checking that every index is in range and every
    /// coordinate is finite. Degenerate triangles are kept; see
    /// [`TriangleMesh::drop_degenerate`].
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<Self, GeomError> {
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(GeomError::NonFiniteVertex { index: i });
        }
        let n = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&i| i as usize >= n) {
                return Err(GeomError::IndexOutOfRange { triangle: t, index: bad as usize, vertex_count: n });
            }
        }
        Ok(Self { vertices, triangles, normals: None })
    }

    /// Builds a mesh from a triangle soup, merging vertices closer than
    /// `tolerance` into one index. Returns the mesh and the number of
    /// degenerate triangles that were dropped.
    pub fn from_soup(facets: &[[Vec3; 3]], tolerance: f64) -> Result<(Self, usize), GeomError> {
        let mut welder = VertexWelder::new(tolerance);
        let mut triangles = Vec::with_capacity(facets.len());
        for (f, facet) in facets.iter().enumerate() {
            if let Some(i) = facet.iter().position(|v| !v.is_finite()) {
                return Err(GeomError::NonFiniteVertex { index: 3 * f + i });
            }
            triangles.push(facet.map(|v| welder.insert(v)));
        }
        let mut mesh = Self { vertices: welder.into_vertices(), triangles, normals: None };
        let dropped = mesh.drop_degenerate();
        Ok((mesh, dropped))
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    #[inline]
    pub fn triangle(&self, t: usize) -> [Vec3; 3] {
        self.triangles[t].map(|i| self.vertices[i as usize])
    }

    /// Unnormalized normal `(b − a) × (c − a)`; its length is twice the area.
    pub fn face_cross(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.triangle(t);
        (b - a).cross(c - a)
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * self.face_cross(t).norm()
    }

    pub fn face_normal(&self, t: usize) -> Option<Vec3> {
        self.face_cross(t).normalized()
    }

    /// Removes triangles with repeated indices or area ≤ [`DEGENERATE_AREA`]
    /// and returns how many were removed. Normals are kept in step.
    pub fn drop_degenerate(&mut self) -> usize {
        let keep: Vec<bool> = (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.triangles[t];
                a != b && b != c && a != c && self.triangle_area(t) > DEGENERATE_AREA
            })
            .collect();
        let before = self.triangles.len();
        let mut k = keep.iter();
        self.triangles.retain(|_| *k.next().unwrap());
        if let Some(normals) = self.normals.as_mut() {
            let mut k = keep.iter();
            normals.retain(|_| *k.next().unwrap());
        }
        before - self.triangles.len()
    }

    pub fn bounds(&self) -> Option<Aabb> {
        Aabb::from_points(self.vertices.iter().copied())
    }

    /// Signed enclosed volume (positive for outward-oriented closed meshes).
    pub fn signed_volume(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.triangle(t);
                a.dot(b.cross(c)) / 6.0
            })
            .sum()
    }

    /// Generalized winding number of the surface around `p`: close to 1
    /// inside an outward-oriented closed mesh and 0 outside.
    pub fn winding_number(&self, p: Vec3) -> f64 {
        let mut total = 0.0;
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.triangle(t).map(|v| v - p);
            let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
            let num = a.dot(b.cross(c));
            let den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
            total += 2.0 * math::atan2(num, den);
        }
        total / (4.0 * core::f64::consts::PI)
    }

    pub fn transformed(&self, t: &RigidTransform) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|&v| t.apply(v)).collect(),
            triangles: self.triangles.clone(),
            normals: self.normals.as_ref().map(|n| n.iter().map(|&v| t.apply_vector(v)).collect()),
        }
    }

    /// Appends `other`, re-indexing its triangles.
    pub fn append(&mut self, other: &TriangleMesh) {
        let base = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles.extend(other.triangles.iter().map(|t| t.map(|i| i + base)));
        self.normals = None;
    }

    /// Reverses the winding of every triangle.
    pub fn flip_orientation(&mut self) {
        for t in &mut self.triangles {
            t.swap(1, 2);
        }
        if let Some(n) = self.normals.as_mut() {
            n.iter_mut().for_each(|v| *v = -*v);
        }
    }

    /// Undirected edge → number of incident triangles.
    pub fn edge_incidence(&self) -> BTreeMap<(u32, u32), usize> {
        let mut edges = BTreeMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        edges
    }

    /// True when every edge is shared by exactly two triangles.
    pub fn is_closed_manifold(&self) -> bool {
        !self.triangles.is_empty() && self.edge_incidence().values().all(|&c| c == 2)
    }

    /// `V − E + F`, counting only vertices referenced by a triangle.
    pub fn euler_characteristic(&self) -> i64 {
        let mut used = alloc::vec![false; self.vertices.len()];
        for t in &self.triangles {
            for &i in t {
                used[i as usize] = true;
            }
        }
        let v = used.iter().filter(|&&u| u).count() as i64;
        let e = self.edge_incidence().len() as i64;
        v - e + self.triangles.len() as i64
    }
}

/// Merges points that fall within a tolerance of an earlier point.
#[derive(Debug)]
pub struct VertexWelder {
    tolerance: f64,
    cells: BTreeMap<(i64, i64, i64), Vec<u32>>,
    vertices: Vec<Vec3>,
}

impl VertexWelder {
    pub fn new(tolerance: f64) -> Self {
        Self { tolerance: tolerance.max(f64::MIN_POSITIVE), cells: BTreeMap::new(), vertices: Vec::new() }
    }

    fn cell(&self, p: Vec3) -> (i64, i64, i64) {
        let q = |c: f64| crate::math::floor(c / self.tolerance) as i64;
        (q(p.x), q(p.y), q(p.z))
    }

    /// Returns the index of an existing vertex within tolerance of `p`, or
    /// inserts `p`.
    pub fn insert(&mut self, p: Vec3) -> u32 {
        let (cx, cy, cz) = self.cell(p);
        let tol2 = self.tolerance * self.tolerance;
        let mut best: Option<u32> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.cells.get(&(cx + dx, cy + dy, cz + dz)) {
                        for &i in ids {
                            if self.vertices[i as usize].distance_squared(p) <= tol2 {
                                best = Some(best.map_or(i, |b| b.min(i)));
                            }
                        }
                    }
                }
            }
        }
        if let Some(i) = best {
            return i;
        }
        let i = self.vertices.len() as u32;
        self.vertices.push(p);
        self.cells.entry((cx, cy, cz)).or_default().push(i);
        i
    }

    pub fn into_vertices(self) -> Vec<Vec3> {
        self.vertices
    }
}
