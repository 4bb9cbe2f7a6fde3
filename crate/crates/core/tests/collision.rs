mod common;

use std::collections::BTreeSet;

use brachyplan_core::collision::{
    build_obb_tree, collide, fit_obb, obb_disjoint, tri_tri_intersect, CollisionMode, Obb, ObbNode, ObbTree,
};
use brachyplan_core::geom::{shapes, RigidTransform, TriangleMesh, Vec3};
use proptest::prelude::*;
use rand::Rng;

// ---------- box overlap: vertex-enumeration LP oracle ----------

/// Half-spaces `n·x <= d` bounding a box inflated by `delta`.
fn halfspaces(b: &Obb, pose: &RigidTransform, delta: f64) -> Vec<(Vec3, f64)> {
    let c = pose.apply(b.center);
    let mut out = Vec::new();
    for k in 0..3 {
        let a = pose.apply_vector(b.axes[k]);
        let h = b.half_extents[k] + delta;
        out.push((a, a.dot(c) + h));
        out.push((-a, -a.dot(c) + h));
    }
    out
}

fn solve3(rows: [Vec3; 3], rhs: [f64; 3]) -> Option<Vec3> {
    let det = rows[0].dot(rows[1].cross(rows[2]));
    if det.abs() < 1e-12 {
        return None;
    }
    let c0 = rows[1].cross(rows[2]);
    let c1 = rows[2].cross(rows[0]);
    let c2 = rows[0].cross(rows[1]);
    Some((c0 * rhs[0] + c1 * rhs[1] + c2 * rhs[2]) / det)
}

/// A bounded polyhedron is non-empty iff one of its vertices (intersection
/// of three constraint planes) satisfies every constraint.
fn polytope_feasible(h: &[(Vec3, f64)]) -> bool {
    let n = h.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let Some(x) = solve3([h[i].0, h[j].0, h[k].0], [h[i].1, h[j].1, h[k].1]) else {
                    continue;
                };
                if h.iter().all(|(a, d)| a.dot(x) <= d + 1e-9) {
                    return true;
                }
            }
        }
    }
    false
}

fn random_obb(rng: &mut impl Rng) -> Obb {
    let r = common::rotation(rng).to_matrix();
    Obb {
        center: common::vec_in(rng, 3.0),
        axes: [r.col(0), r.col(1), r.col(2)],
        half_extents: Vec3::new(rng.random_range(0.1..2.0), rng.random_range(0.1..2.0), rng.random_range(0.1..2.0)),
    }
}

#[test]
fn separating_axis_matches_lp_feasibility() {
    let mut rng = common::rng(11);
    let guard = 1e-6;
    let (mut overlap, mut apart, mut skipped) = (0, 0, 0);
    for _ in 0..10_000 {
        let a = random_obb(&mut rng);
        let b = random_obb(&mut rng);
        let rel = common::transform(&mut rng, 2.0);
        let disjoint = obb_disjoint(&a, &b, &rel);

        let id = RigidTransform::IDENTITY;
        let mut shrunk = halfspaces(&a, &id, -guard);
        shrunk.extend(halfspaces(&b, &rel, -guard));
        let mut grown = halfspaces(&a, &id, guard);
        grown.extend(halfspaces(&b, &rel, guard));

        if polytope_feasible(&shrunk) {
            assert!(!disjoint, "overlapping boxes reported disjoint: {a:?} {b:?} {rel:?}");
            overlap += 1;
        } else if !polytope_feasible(&grown) {
            assert!(disjoint, "separated boxes reported overlapping: {a:?} {b:?} {rel:?}");
            apart += 1;
        } else {
            skipped += 1;
        }
    }
    assert!(overlap > 1000 && apart > 1000, "{overlap} {apart}");
    assert!(skipped < 10, "{skipped}");
}

// ---------- triangle pairs: edge-crossing oracle ----------

fn orient(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> f64 {
    (b - a).cross(c - a).dot(d - a)
}

/// Edge `p q` against triangle `t`, for configurations in general position.
/// Returns `None` when any deciding determinant is within `band` of zero
/// relative to the lengths involved.
fn segment_crosses(p: Vec3, q: Vec3, t: &[Vec3; 3], band: f64) -> Option<bool> {
    let n = (t[1] - t[0]).cross(t[2] - t[0]).norm();
    let sp = orient(t[0], t[1], t[2], p) / n;
    let sq = orient(t[0], t[1], t[2], q) / n;
    if sp.abs() < band || sq.abs() < band {
        return None;
    }
    let mut sides = [0.0; 3];
    for e in 0..3 {
        let (a, b) = (t[e], t[(e + 1) % 3]);
        let s = orient(p, q, a, b) / ((q - p).norm() * (b - a).norm());
        if s.abs() < band {
            return None;
        }
        sides[e] = s;
    }
    Some(sp * sq < 0.0 && (sides.iter().all(|&s| s > 0.0) || sides.iter().all(|&s| s < 0.0)))
}

fn edge_oracle(v: &[Vec3; 3], u: &[Vec3; 3], band: f64) -> Option<bool> {
    let mut hit = false;
    for (tri, other) in [(v, u), (u, v)] {
        for e in 0..3 {
            hit |= segment_crosses(tri[e], tri[(e + 1) % 3], other, band)?;
        }
    }
    Some(hit)
}

#[test]
fn triangle_test_matches_edge_crossing_oracle() {
    let mut rng = common::rng(12);
    let (mut hits, mut misses, mut skipped) = (0, 0, 0);
    for _ in 0..10_000 {
        let v: [Vec3; 3] = std::array::from_fn(|_| common::vec_in(&mut rng, 1.0));
        let u: [Vec3; 3] = std::array::from_fn(|_| common::vec_in(&mut rng, 1.0));
        let Some(expect) = edge_oracle(&v, &u, 1e-9) else {
            skipped += 1;
            continue;
        };
        assert_eq!(tri_tri_intersect(&v, &u), expect, "{v:?} {u:?}");
        assert_eq!(tri_tri_intersect(&u, &v), expect);
        if expect {
            hits += 1
        } else {
            misses += 1
        }
    }
    assert!(hits > 1000 && misses > 1000, "{hits} {misses}");
    assert!(skipped < 10, "{skipped}");
}

#[test]
fn shared_vertex_and_edge_touch() {
    let mut rng = common::rng(13);
    for _ in 0..1000 {
        let a: [Vec3; 3] = std::array::from_fn(|_| common::vec_in(&mut rng, 1.0));
        let mut b: [Vec3; 3] = std::array::from_fn(|_| common::vec_in(&mut rng, 1.0));
        b[0] = a[0];
        assert!(tri_tri_intersect(&a, &b));
        b[1] = a[1];
        assert!(tri_tri_intersect(&a, &b));
    }
}

// ---------- trees and queries ----------

fn random_soup(rng: &mut impl Rng, count: usize, spread: f64) -> TriangleMesh {
    let mut verts = Vec::new();
    let mut tris = Vec::new();
    while tris.len() < count {
        let c = common::vec_in(rng, spread);
        let p: [Vec3; 3] = std::array::from_fn(|_| c + common::vec_in(rng, 1.5));
        if (p[1] - p[0]).cross(p[2] - p[0]).norm() < 1e-3 {
            continue;
        }
        let base = verts.len() as u32;
        verts.extend(p);
        tris.push([base, base + 1, base + 2]);
    }
    TriangleMesh::new(verts, tris).unwrap()
}

fn random_mesh(rng: &mut impl Rng) -> TriangleMesh {
    match rng.random_range(0..3) {
        0 => {
            let slices = rng.random_range(3..=10);
            let stacks = rng.random_range(2..=10);
            shapes::uv_sphere(Vec3::ZERO, rng.random_range(1.0..5.0), slices, stacks)
        }
        1 => {
            let h = Vec3::new(rng.random_range(0.5..4.0), rng.random_range(0.5..4.0), rng.random_range(0.5..4.0));
            shapes::box_mesh(-h, h)
        }
        _ => {
            let n = rng.random_range(1..=200);
            random_soup(rng, n, 3.0)
        }
    }
}

fn brute_force(a: &TriangleMesh, pa: &RigidTransform, b: &TriangleMesh, pb: &RigidTransform) -> BTreeSet<(u32, u32)> {
    let ta: Vec<_> = (0..a.triangle_count()).map(|t| a.triangle(t).map(|p| pa.apply(p))).collect();
    let tb: Vec<_> = (0..b.triangle_count()).map(|t| b.triangle(t).map(|p| pb.apply(p))).collect();
    let mut out = BTreeSet::new();
    for (i, x) in ta.iter().enumerate() {
        for (j, y) in tb.iter().enumerate() {
            if tri_tri_intersect(x, y) {
                out.insert((i as u32, j as u32));
            }
        }
    }
    out
}

fn pairs(tree_a: &ObbTree, pa: &RigidTransform, tree_b: &ObbTree, pb: &RigidTransform) -> (bool, BTreeSet<(u32, u32)>) {
    let r = collide(tree_a, pa, tree_b, pb, CollisionMode::AllPairs);
    assert_eq!(r.intersecting, !r.contact_pairs.is_empty());
    let set: BTreeSet<_> = r.contact_pairs.iter().copied().collect();
    assert_eq!(set.len(), r.contact_pairs.len(), "duplicate contact pair");
    (r.intersecting, set)
}

#[test]
fn collide_matches_brute_force() {
    let (mut hits, mut misses) = (0, 0);
    for seed in 0..200 {
        let mut rng = common::rng(1000 + seed);
        let a = random_mesh(&mut rng);
        let b = random_mesh(&mut rng);
        let pa = common::transform(&mut rng, 10.0);
        let mut pb = common::transform(&mut rng, 1.0);
        pb.translation = pa.translation + common::vec_in(&mut rng, 6.0);
        let (ta, tb) = (build_obb_tree(&a).unwrap(), build_obb_tree(&b).unwrap());

        let expect = brute_force(&a, &pa, &b, &pb);
        let first = collide(&ta, &pa, &tb, &pb, CollisionMode::FirstContact);
        assert_eq!(first.intersecting, !expect.is_empty(), "seed {seed}");
        assert!(first.contact_pairs.len() <= 1);
        let (flag, set) = pairs(&ta, &pa, &tb, &pb);
        assert_eq!(flag, !expect.is_empty(), "seed {seed}");
        assert_eq!(set, expect, "seed {seed}");

        let swapped = collide(&tb, &pb, &ta, &pa, CollisionMode::FirstContact);
        assert_eq!(swapped.intersecting, flag, "seed {seed}");

        let g = common::transform(&mut rng, 50.0);
        let (gflag, gset) = pairs(&ta, &g.compose(&pa), &tb, &g.compose(&pb));
        assert_eq!(gflag, flag);
        assert_eq!(gset, set);

        if flag {
            hits += 1
        } else {
            misses += 1
        }
    }
    assert!(hits > 40 && misses > 40, "{hits} {misses}");
}

fn check_tree_invariants(tree: &ObbTree) {
    let mesh = tree.mesh();
    assert_eq!(tree.leaf_count(), mesh.triangle_count());
    assert_eq!(tree.nodes().len(), 2 * mesh.triangle_count() - 1);
    let mut all = tree.subtree_triangles(0);
    all.sort();
    assert_eq!(all, (0..mesh.triangle_count() as u32).collect::<Vec<_>>());

    for (i, node) in tree.nodes().iter().enumerate() {
        let tris = tree.subtree_triangles(i);
        for &t in &tris {
            for p in mesh.triangle(t as usize) {
                assert!(node.obb().contains(p, 1e-9), "node {i} misses a vertex of {t}");
            }
        }
        let axes = node.obb().axes;
        for j in 0..3 {
            for k in 0..3 {
                let d = axes[j].dot(axes[k]) - if j == k { 1.0 } else { 0.0 };
                assert!(d.abs() < 1e-9);
            }
        }
        if let ObbNode::Internal { children, .. } = node {
            let mut l = tree.subtree_triangles(children[0] as usize);
            let r = tree.subtree_triangles(children[1] as usize);
            assert!(!l.is_empty() && !r.is_empty());
            l.extend(r);
            l.sort();
            let mut own = tris.clone();
            own.sort();
            assert_eq!(l, own);
        }
    }
}

#[test]
fn tree_invariants_on_random_meshes() {
    for seed in 0..30 {
        let mut rng = common::rng(2000 + seed);
        check_tree_invariants(&build_obb_tree(&random_mesh(&mut rng)).unwrap());
    }
}

#[test]
fn sphere_tree_depth_is_bounded() {
    let sphere = shapes::uv_sphere(Vec3::ZERO, 10.0, 50, 51);
    assert_eq!(sphere.triangle_count(), 5000);
    let tree = build_obb_tree(&sphere).unwrap();
    check_tree_invariants(&tree);
    let bound = 3.0 * (5000f64).log2();
    assert!((tree.depth() as f64) <= bound, "depth {}", tree.depth());
}

#[test]
fn distant_cubes_stop_at_root() {
    let cube = build_obb_tree(&shapes::box_mesh(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0))).unwrap();
    let r = collide(
        &cube,
        &RigidTransform::IDENTITY,
        &cube,
        &RigidTransform::from_translation(Vec3::new(10.0, 0.0, 0.0)),
        CollisionMode::AllPairs,
    );
    assert!(!r.intersecting);
    assert!(r.node_tests <= 3);
}

fn arb_transform() -> impl Strategy<Value = RigidTransform> {
    (any::<u64>(), 0.0..20.0f64).prop_map(|(seed, shift)| common::transform(&mut common::rng(seed), shift))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fitted_box_contains_subset(seed in any::<u64>(), n in 1usize..60, take in 1usize..60) {
        let mut rng = common::rng(seed);
        let mesh = random_soup(&mut rng, n, 4.0);
        let subset: Vec<u32> = (0..n.min(take) as u32).collect();
        let obb = fit_obb(&mesh, &subset);
        for &t in &subset {
            for p in mesh.triangle(t as usize) {
                prop_assert!(obb.contains(p, 1e-9));
            }
        }
    }

    #[test]
    fn box_test_is_symmetric(seed in any::<u64>(), rel in arb_transform()) {
        let mut rng = common::rng(seed);
        let a = random_obb(&mut rng);
        let b = random_obb(&mut rng);
        prop_assert_eq!(obb_disjoint(&a, &b, &rel), obb_disjoint(&b, &a, &rel.inverse()));
    }

    #[test]
    fn collide_is_symmetric_and_equivariant(seed in any::<u64>(), g in arb_transform()) {
        let mut rng = common::rng(seed);
        let a = build_obb_tree(&random_mesh(&mut rng)).unwrap();
        let b = build_obb_tree(&random_mesh(&mut rng)).unwrap();
        let pa = common::transform(&mut rng, 3.0);
        let pb = common::transform(&mut rng, 3.0);
        let (flag, set) = pairs(&a, &pa, &b, &pb);
        let (sflag, sset) = pairs(&b, &pb, &a, &pa);
        prop_assert_eq!(flag, sflag);
        prop_assert_eq!(&sset.iter().map(|&(x, y)| (y, x)).collect::<BTreeSet<_>>(), &set);
        let (gflag, gset) = pairs(&a, &g.compose(&pa), &b, &g.compose(&pb));
        prop_assert_eq!(gflag, flag);
        prop_assert_eq!(gset, set);
    }
}
