use alloc::vec::Vec;

use super::RegistrationError;
use crate::geom::{PointCloud, Vec3};

const LEAF_SIZE: usize = 16;

/// Result of a nearest-neighbor query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    /// Index of the point in the indexed cloud.
    pub index: usize,
    pub distance_squared: f64,
}

#[derive(Clone, Debug)]
enum Node {
    Leaf { start: u32, end: u32 },
    Split { axis: u8, value: f64, left: u32, right: u32 },
}

/// Balanced KD-tree answering exact nearest-neighbor queries over a fixed
/// cloud. Equidistant candidates resolve to the lowest point index.
#[derive(Clone, Debug)]
pub struct NnIndex {
    points: Vec<Vec3>,
    /// Point ids in leaf order, and the points in that same order.
    order: Vec<u32>,
    sorted: Vec<Vec3>,
    nodes: Vec<Node>,
}

/// Builds an [`NnIndex`]; fails on an empty cloud.
pub fn build_nn_index(cloud: &PointCloud) -> Result<NnIndex, RegistrationError> {
    NnIndex::new(cloud.points.clone())
}

impl NnIndex {
    pub fn new(points: Vec<Vec3>) -> Result<Self, RegistrationError> {
        if points.is_empty() {
            return Err(RegistrationError::EmptyCloud);
        }
        if !points.iter().all(|p| p.is_finite()) {
            return Err(RegistrationError::NonFinite);
        }
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * points.len() / LEAF_SIZE + 1);
        build(&points, &mut order, 0, &mut nodes);
        let sorted = order.iter().map(|&i| points[i as usize]).collect();
        Ok(Self { points, order, sorted, nodes })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> Vec3 {
        self.points[index]
    }

    pub fn nearest(&self, query: Vec3) -> Neighbor {
        let mut best = Neighbor { index: usize::MAX, distance_squared: f64::INFINITY };
        self.search(0, query, &mut best, [0.0; 3]);
        best
    }

    /// `offsets` holds, per axis, the distance from the query to the cell of
    /// `node`. The cell bound is summed in the same order as
    /// [`Vec3::distance_squared`], so rounding never lifts it above the
    /// distance of a point inside the cell and ties are never pruned.
    fn search(&self, node: usize, q: Vec3, best: &mut Neighbor, mut offsets: [f64; 3]) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                let (start, end) = (start as usize, end as usize);
                for (p, &i) in self.sorted[start..end].iter().zip(&self.order[start..end]) {
                    let d = p.distance_squared(q);
                    let i = i as usize;
                    if d < best.distance_squared || (d == best.distance_squared && i < best.index) {
                        *best = Neighbor { index: i, distance_squared: d };
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let axis = axis as usize;
                let diff = q[axis] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.search(near as usize, q, best, offsets);
                offsets[axis] = diff;
                let far_distance = offsets[0] * offsets[0] + offsets[1] * offsets[1] + offsets[2] * offsets[2];
                if far_distance <= best.distance_squared {
                    self.search(far as usize, q, best, offsets);
                }
            }
        }
    }
}

fn build(points: &[Vec3], order: &mut [u32], offset: usize, nodes: &mut Vec<Node>) -> u32 {
    let id = nodes.len() as u32;
    if order.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf { start: offset as u32, end: (offset + order.len()) as u32 });
        return id;
    }
    let mut lo = points[order[0] as usize];
    let mut hi = lo;
    for &i in order.iter() {
        lo = lo.component_min(points[i as usize]);
        hi = hi.component_max(points[i as usize]);
    }
    let ext = hi - lo;
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        points[a as usize][axis].total_cmp(&points[b as usize][axis]).then(a.cmp(&b))
    });
    let value = points[order[mid] as usize][axis];
    nodes.push(Node::Split { axis: axis as u8, value, left: 0, right: 0 });
    let (lhs, rhs) = order.split_at_mut(mid);
    let left = build(points, lhs, offset, nodes);
    let right = build(points, rhs, offset + mid, nodes);
    nodes[id as usize] = Node::Split { axis: axis as u8, value, left, right };
    id
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn linear_scan(points: &[Vec3], q: Vec3) -> Neighbor {
        let mut best = Neighbor { index: usize::MAX, distance_squared: f64::INFINITY };
        for (i, p) in points.iter().enumerate() {
            let d = p.distance_squared(q);
            if d < best.distance_squared {
                best = Neighbor { index: i, distance_squared: d };
            }
        }
        best
    }

    #[test]
    fn empty_cloud_is_rejected() {
        assert_eq!(build_nn_index(&PointCloud::default()).unwrap_err(), RegistrationError::EmptyCloud);
    }

    #[test]
    fn single_point() {
        let idx = build_nn_index(&PointCloud::new(vec![Vec3::new(1.0, 2.0, 3.0)])).unwrap();
        for q in [Vec3::ZERO, Vec3::new(-100.0, 5.0, 1e6)] {
            assert_eq!(idx.nearest(q).index, 0);
        }
    }

    #[test]
    fn lattice_points_have_zero_distance() {
        let mut pts = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                for k in 0..10 {
                    pts.push(Vec3::new(i as f64, j as f64, k as f64));
                }
            }
        }
        let idx = NnIndex::new(pts.clone()).unwrap();
        for (i, p) in pts.iter().enumerate().step_by(37) {
            let n = idx.nearest(*p);
            assert_eq!(n.distance_squared, 0.0);
            assert_eq!(n.index, i);
        }
        // Equidistant from (0,0,0) and (1,0,0): lowest index wins.
        let n = idx.nearest(Vec3::new(0.5, 0.0, 0.0));
        assert_eq!(n.index, 0);
    }

    #[test]
    fn matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let pts: Vec<Vec3> = (0..5000)
            .map(|_| Vec3::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)))
            .collect();
        let idx = NnIndex::new(pts.clone()).unwrap();
        for _ in 0..500 {
            let q = Vec3::new(rng.random_range(-60.0..60.0), rng.random_range(-60.0..60.0), rng.random_range(-60.0..60.0));
            assert_eq!(idx.nearest(q), linear_scan(&pts, q));
        }
    }
}
