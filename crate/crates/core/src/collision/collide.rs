use alloc::vec::Vec;

use super::{obb_disjoint, tri_tri_intersect, ObbNode, ObbTree};
use crate::geom::RigidTransform;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CollisionMode {
    /// Stop at the first intersecting triangle pair.
    FirstContact,
    /// Report every intersecting triangle pair.
    AllPairs,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CollisionReport {
    pub intersecting: bool,
    /// `(triangle in A, triangle in B)`.
    pub contact_pairs: Vec<(u32, u32)>,
    /// Box-pair tests performed.
    pub node_tests: usize,
}

/// Interference query between two posed meshes.
///
/// Starting from the two roots, a pair of overlapping boxes is expanded by
/// replacing the larger box (by volume) with its children; on a tie, or when
/// only the second tree can descend, the second tree's children are tested
/// against the first tree's current box. Overlapping leaf pairs are settled
/// by [`tri_tri_intersect`] in A's model frame.
pub fn collide(
    a: &ObbTree,
    pose_a: &RigidTransform,
    b: &ObbTree,
    pose_b: &RigidTransform,
    mode: CollisionMode,
) -> CollisionReport {
    let rel = pose_a.inverse().compose(pose_b);
    let mut report = CollisionReport::default();
    let mut stack: Vec<(u32, u32)> = alloc::vec![(0, 0)];
    while let Some((na, nb)) = stack.pop() {
        let (node_a, node_b) = (&a.nodes()[na as usize], &b.nodes()[nb as usize]);
        report.node_tests += 1;
        if obb_disjoint(node_a.obb(), node_b.obb(), &rel) {
            continue;
        }
        match (node_a, node_b) {
            (ObbNode::Leaf { triangle: ta, .. }, ObbNode::Leaf { triangle: tb, .. }) => {
                let tri_a = a.mesh().triangle(*ta as usize);
                let tri_b = b.mesh().triangle(*tb as usize).map(|p| rel.apply(p));
                if tri_tri_intersect(&tri_a, &tri_b) {
                    report.intersecting = true;
                    report.contact_pairs.push((*ta, *tb));
                    if mode == CollisionMode::FirstContact {
                        break;
                    }
                }
            }
            (ObbNode::Internal { children, obb: oa }, ObbNode::Internal { obb: ob, .. })
                if oa.volume() > ob.volume() =>
            {
                stack.extend(children.iter().rev().map(|&c| (c, nb)));
            }
            (ObbNode::Internal { children, .. }, ObbNode::Leaf { .. }) => {
                stack.extend(children.iter().rev().map(|&c| (c, nb)));
            }
            (_, ObbNode::Internal { children, .. }) => {
                stack.extend(children.iter().rev().map(|&c| (na, c)));
            }
        }
    }
    report
}
