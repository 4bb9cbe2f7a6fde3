use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::mc_tables::TRI_TABLE;
use super::ScalarVolume;
use crate::geom::{TriangleMesh, Vec3};

/// Cell corner offsets in case-index bit order.
const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

/// Cell edges as corner pairs, in table order.
const EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Lattice edge carrying an isosurface vertex: the vertex sits at
/// `from + t · (to − from)` in index space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeEdge {
    pub from: [usize; 3],
    pub to: [usize; 3],
    pub t: f64,
}

/// Isosurface with the lattice edge behind each vertex.
#[derive(Clone, Debug)]
pub struct IsoSurface {
    pub mesh: TriangleMesh,
    pub vertex_edges: Vec<LatticeEdge>,
}

/// Marching Cubes isosurface of `vol` at `iso`, in world coordinates.
pub fn marching_cubes(vol: &ScalarVolume, iso: f64) -> TriangleMesh {
    extract_isosurface(vol, iso).mesh
}

/// Marching Cubes with the classic 256-case table.
///
/// Crossing vertices are linearly interpolated along cell edges and shared
/// between neighboring cells through an edge-keyed map, so the output is
/// indexed rather than a soup. Triangles face toward lower sample values.
/// Ambiguous faces are resolved as the table dictates; no disambiguation is
/// attempted.
pub fn extract_isosurface(vol: &ScalarVolume, iso: f64) -> IsoSurface {
    let [nx, ny, nz] = vol.dims();
    let mut edge_vertex: BTreeMap<(usize, u8), u32> = BTreeMap::new();
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut vertex_edges: Vec<LatticeEdge> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    if nx < 2 || ny < 2 || nz < 2 || !iso.is_finite() {
        return IsoSurface { mesh: TriangleMesh::default(), vertex_edges };
    }

    // Table winding faces toward lower values on a right-handed lattice.
    let mirrored = vol.directions().determinant() < 0.0;

    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let mut values = [0.0; 8];
                let mut case = 0usize;
                for (c, off) in CORNERS.iter().enumerate() {
                    values[c] = vol.value(i + off[0], j + off[1], k + off[2]);
                    if values[c] < iso {
                        case |= 1 << c;
                    }
                }
                if case == 0 || case == 255 {
                    continue;
                }
                let row = &TRI_TABLE[case];
                let mut cell_vertex = [u32::MAX; 12];
                for tri in row.chunks_exact(3).take_while(|t| t[0] >= 0) {
                    let mut ids = [0u32; 3];
                    for (slot, &e) in ids.iter_mut().zip(tri) {
                        let e = e as usize;
                        if cell_vertex[e] == u32::MAX {
                            let [a, b] = EDGES[e];
                            let pa = [i + CORNERS[a][0], j + CORNERS[a][1], k + CORNERS[a][2]];
                            let pb = [i + CORNERS[b][0], j + CORNERS[b][1], k + CORNERS[b][2]];
                            // Key on the lower endpoint and the edge's axis.
                            let (lo, hi, vlo, vhi) =
                                if pa <= pb { (pa, pb, values[a], values[b]) } else { (pb, pa, values[b], values[a]) };
                            let axis = (0..3).find(|&d| lo[d] != hi[d]).unwrap_or(0) as u8;
                            let key = (vol.linear_index(lo[0], lo[1], lo[2]), axis);
                            cell_vertex[e] = *edge_vertex.entry(key).or_insert_with(|| {
                                let t = (iso - vlo) / (vhi - vlo);
                                let f = |d: usize| lo[d] as f64 + t * (hi[d] as f64 - lo[d] as f64);
                                vertices.push(vol.index_to_world(Vec3::new(f(0), f(1), f(2))));
                                vertex_edges.push(LatticeEdge { from: lo, to: hi, t });
                                (vertices.len() - 1) as u32
                            });
                        }
                        *slot = cell_vertex[e];
                    }
                    triangles.push(if mirrored { [ids[0], ids[2], ids[1]] } else { ids });
                }
            }
        }
    }
    IsoSurface { mesh: TriangleMesh { vertices, triangles, normals: None }, vertex_edges }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::VoxelType;

    #[test]
    fn constant_volume_is_empty() {
        let v = ScalarVolume::from_fn([4, 4, 4], Vec3::new(1.0, 1.0, 1.0), Vec3::ZERO, VoxelType::F32, |_, _, _| 3.0)
            .unwrap();
        for iso in [2.0, 3.0, 4.0] {
            assert!(marching_cubes(&v, iso).is_empty());
        }
    }

    #[test]
    fn single_hot_voxel_gives_closed_octahedron() {
        let v = ScalarVolume::from_fn([3, 3, 3], Vec3::new(1.0, 1.0, 1.0), Vec3::ZERO, VoxelType::F32, |i, j, k| {
            if (i, j, k) == (1, 1, 1) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let m = marching_cubes(&v, 0.5);
        assert_eq!(m.vertex_count(), 6);
        assert_eq!(m.triangle_count(), 8);
        assert!(m.is_closed_manifold());
        assert_eq!(m.euler_characteristic(), 2);
        // Faces point away from the hot voxel (toward lower values).
        assert!(m.signed_volume() > 0.0);
        let c = Vec3::new(1.0, 1.0, 1.0);
        for t in 0..m.triangle_count() {
            let [a, b, d] = m.triangle(t);
            let centroid = (a + b + d) / 3.0;
            assert!(m.face_cross(t).dot(centroid - c) > 0.0);
        }
    }

    #[test]
    fn mirrored_frame_keeps_orientation() {
        let flip = crate::geom::Mat3::from_rows([[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let base = ScalarVolume::from_fn([3, 3, 3], Vec3::new(1.0, 1.0, 1.0), Vec3::ZERO, VoxelType::F32, |i, j, k| {
            ((i, j, k) == (1, 1, 1)) as u8 as f64
        })
        .unwrap();
        let v = ScalarVolume::new(base.dims(), base.spacing(), base.origin(), flip, base.data().clone()).unwrap();
        assert!(marching_cubes(&v, 0.5).signed_volume() > 0.0);
    }
}
