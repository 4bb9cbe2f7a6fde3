use alloc::vec::Vec;

use super::{fit_obb, CollisionError, Obb};
use crate::geom::{TriangleMesh, Vec3};

#[derive(Clone, Debug)]
pub enum ObbNode {
    Leaf { obb: Obb, triangle: u32 },
    Internal { obb: Obb, children: [u32; 2] },
}

impl ObbNode {
    pub fn obb(&self) -> &Obb {
        match self {
            ObbNode::Leaf { obb, .. } | ObbNode::Internal { obb, .. } => obb,
        }
    }
}

/// Binary OBB hierarchy over a mesh, one triangle per leaf. Node 0 is the
/// root.
#[derive(Clone, Debug)]
pub struct ObbTree {
    mesh: TriangleMesh,
    nodes: Vec<ObbNode>,
}

/// Builds the tree top-down. Each node's triangles are split by centroid
/// against the mean centroid projection on the box's longest axis; a split
/// that leaves one side empty is replaced by a median split.
pub fn build_obb_tree(mesh: &TriangleMesh) -> Result<ObbTree, CollisionError> {
    ObbTree::new(mesh.clone())
}

impl ObbTree {
    pub fn new(mesh: TriangleMesh) -> Result<Self, CollisionError> {
        if mesh.triangles.is_empty() {
            return Err(CollisionError::EmptyMesh);
        }
        let centroids: Vec<Vec3> = (0..mesh.triangle_count())
            .map(|t| {
                let [a, b, c] = mesh.triangle(t);
                (a + b + c) / 3.0
            })
            .collect();
        let mut nodes = Vec::with_capacity(2 * mesh.triangle_count() - 1);
        let mut all: Vec<u32> = (0..mesh.triangle_count() as u32).collect();
        build(&mesh, &centroids, &mut all, &mut nodes);
        Ok(Self { mesh, nodes })
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn nodes(&self) -> &[ObbNode] {
        &self.nodes
    }

    pub fn root(&self) -> &ObbNode {
        &self.nodes[0]
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, ObbNode::Leaf { .. })).count()
    }

    /// Number of nodes on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = alloc::vec![(0u32, 1usize)];
        while let Some((n, d)) = stack.pop() {
            best = best.max(d);
            if let ObbNode::Internal { children, .. } = &self.nodes[n as usize] {
                stack.extend(children.iter().map(|&c| (c, d + 1)));
            }
        }
        best
    }

    /// Triangles under `node`, in traversal order.
    pub fn subtree_triangles(&self, node: usize) -> Vec<u32> {
        let mut out = Vec::new();
        let mut stack = alloc::vec![node as u32];
        while let Some(n) = stack.pop() {
            match &self.nodes[n as usize] {
                ObbNode::Leaf { triangle, .. } => out.push(*triangle),
                ObbNode::Internal { children, .. } => stack.extend(children.iter().rev()),
            }
        }
        out
    }
}

fn build(mesh: &TriangleMesh, centroids: &[Vec3], tris: &mut [u32], nodes: &mut Vec<ObbNode>) -> u32 {
    let obb = fit_obb(mesh, tris);
    let id = nodes.len() as u32;
    if tris.len() == 1 {
        nodes.push(ObbNode::Leaf { obb, triangle: tris[0] });
        return id;
    }
    let h = obb.half_extents;
    let axis = obb.axes[if h.x >= h.y && h.x >= h.z {
        0
    } else if h.y >= h.z {
        1
    } else {
        2
    }];
    let key = |t: u32| centroids[t as usize].dot(axis);
    let mean = tris.iter().map(|&t| key(t)).sum::<f64>() / tris.len() as f64;

    let mut split = partition(tris, |t| key(t) < mean);
    if split == 0 || split == tris.len() {
        tris.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
        split = tris.len() / 2;
    }
    nodes.push(ObbNode::Leaf { obb, triangle: u32::MAX });
    let (lhs, rhs) = tris.split_at_mut(split);
    let left = build(mesh, centroids, lhs, nodes);
    let right = build(mesh, centroids, rhs, nodes);
    nodes[id as usize] = ObbNode::Internal { obb, children: [left, right] };
    id
}

/// Stable in-place partition; returns the count of elements satisfying `pred`.
fn partition(items: &mut [u32], pred: impl Fn(u32) -> bool) -> usize {
    let (yes, no): (Vec<u32>, Vec<u32>) = items.iter().partition(|&&t| pred(t));
    let n = yes.len();
    items[..n].copy_from_slice(&yes);
    items[n..].copy_from_slice(&no);
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::shapes;
    use alloc::vec;

    #[test]
    fn empty_mesh_is_rejected() {
        assert_eq!(build_obb_tree(&TriangleMesh::default()).unwrap_err(), CollisionError::EmptyMesh);
    }

    #[test]
    fn one_triangle_is_one_leaf() {
        let tri = TriangleMesh::new(vec![Vec3::ZERO, Vec3::X, Vec3::Y], vec![[0, 1, 2]]).unwrap();
        let tree = build_obb_tree(&tri).unwrap();
        assert_eq!(tree.nodes().len(), 1);
        assert!(matches!(tree.root(), ObbNode::Leaf { triangle: 0, .. }));
    }

    #[test]
    fn cube_tree_counts() {
        let tree = build_obb_tree(&shapes::box_mesh(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0))).unwrap();
        assert_eq!(tree.leaf_count(), 12);
        assert_eq!(tree.nodes().len() - tree.leaf_count(), 11);
        let mut tris = tree.subtree_triangles(0);
        tris.sort();
        assert_eq!(tris, (0..12).collect::<Vec<u32>>());
    }
}
