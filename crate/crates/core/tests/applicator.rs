mod common;

use brachyplan_core::applicator::{
    hole_grid, intersection_span, select_needles, Hole, TemplateConfig,
};
use brachyplan_core::collision::{build_obb_tree, ObbTree};
use brachyplan_core::geom::{shapes, RigidTransform, Vec3};
use rand::Rng;

const SLICES: usize = 40;

fn tumor(center: Vec3, radius: f64) -> ObbTree {
    build_obb_tree(&shapes::uv_sphere(center, radius, SLICES, SLICES + 1)).unwrap()
}

/// Largest gap between the tessellated sphere plus needle prism and their
/// smooth counterparts.
fn tessellation_band(config: &TemplateConfig, radius: f64) -> f64 {
    let a = std::f64::consts::PI / SLICES as f64;
    let sphere = radius * (1.0 - a.cos() * a.cos());
    let needle = config.needle_radius * (1.0 - (std::f64::consts::PI / config.needle_sides as f64).cos());
    sphere + needle + 0.02
}

fn axis_distance(hole: &Hole, pose: &RigidTransform, depth: f64, center: Vec3) -> f64 {
    let a = pose.apply(hole.entry);
    let b = pose.apply(hole.entry + hole.direction * depth);
    let ab = b - a;
    let t = ((center - a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0);
    (a + ab * t).distance(center)
}

struct Placement {
    pose: RigidTransform,
    center: Vec3,
    radius: f64,
}

/// Random pose and tumor whose projection stays clear of the needle ends and
/// whose surface is not within the tessellation band of any needle.
fn placement(rng: &mut impl Rng, config: &TemplateConfig, depth: f64) -> Placement {
    loop {
        let pose = common::transform(rng, 100.0);
        let radius = rng.random_range(3.0..15.0);
        let along = rng.random_range(radius + 2.0..depth - radius - 2.0);
        let model = Vec3::new(rng.random_range(-70.0..70.0), rng.random_range(-70.0..70.0), -along);
        let center = pose.apply(model);
        let band = tessellation_band(config, radius);
        let clear = hole_grid(config).iter().all(|h| {
            (axis_distance(h, &pose, depth, center) - (radius + config.needle_radius)).abs() > band
        });
        if clear {
            return Placement { pose, center, radius };
        }
    }
}

#[test]
fn selection_matches_segment_sphere_oracle() {
    let config = TemplateConfig::default();
    let depth = 100.0;
    let mut rng = common::rng(31);
    let mut nonempty = 0;
    for _ in 0..50 {
        let p = placement(&mut rng, &config, depth);
        let tree = tumor(p.center, p.radius);
        let got = select_needles(&config, &p.pose, depth, &tree);
        let expect: Vec<String> = hole_grid(&config)
            .into_iter()
            .filter(|h| axis_distance(h, &p.pose, depth, p.center) <= p.radius + config.needle_radius)
            .map(|h| h.id)
            .collect();
        assert_eq!(got, expect);
        nonempty += usize::from(!got.is_empty());
    }
    assert!(nonempty > 25, "{nonempty}");
}

#[test]
fn span_matches_closed_form() {
    let config = TemplateConfig { obturator_hole_radius: 0.0, needle_radius: 0.0, ..TemplateConfig::default() };
    let holes = hole_grid(&config);
    let mut rng = common::rng(32);
    for _ in 0..40 {
        let hole = &holes[rng.random_range(0..holes.len())];
        let pose = common::transform(&mut rng, 50.0);
        let radius = rng.random_range(2.0..12.0);
        let along = rng.random_range(radius + 1.0..150.0);
        let center = pose.apply(hole.entry + hole.direction * along);
        let depth_max = rng.random_range(along - radius + 1.0..200.0);
        let (a, b) = intersection_span(&config, hole, &pose, depth_max, &tumor(center, radius)).unwrap();
        assert!((a - (along - radius)).abs() < 0.2, "{a} vs {}", along - radius);
        let exit = (along + radius).min(depth_max);
        assert!((b - exit).abs() < 0.2, "{b} vs {exit}");
    }
}

#[test]
fn selection_grows_with_depth_and_agrees_with_spans() {
    let config = TemplateConfig::default();
    let mut rng = common::rng(33);
    for _ in 0..6 {
        let p = placement(&mut rng, &config, 120.0);
        let tree = tumor(p.center, p.radius);
        let mut previous: Vec<String> = Vec::new();
        for depth in [20.0, 60.0, 90.0, 120.0] {
            let now = select_needles(&config, &p.pose, depth, &tree);
            assert!(previous.iter().all(|id| now.contains(id)));
            previous = now;
        }
        let holes = hole_grid(&config);
        for h in holes.iter().filter(|h| axis_distance(h, &p.pose, 120.0, p.center) < p.radius + 20.0) {
            let span = intersection_span(&config, h, &p.pose, 120.0, &tree);
            assert_eq!(span.is_some(), previous.contains(&h.id), "{}", h.id);
        }
    }
}

#[test]
fn selection_is_equivariant() {
    let config = TemplateConfig::default();
    let mut rng = common::rng(34);
    for _ in 0..5 {
        let p = placement(&mut rng, &config, 100.0);
        let mesh = shapes::uv_sphere(p.center, p.radius, SLICES, SLICES + 1);
        let base = select_needles(&config, &p.pose, 100.0, &build_obb_tree(&mesh).unwrap());
        let g = common::transform(&mut rng, 200.0);
        let moved_tree = build_obb_tree(&mesh.transformed(&g)).unwrap();
        let moved = select_needles(&config, &g.compose(&p.pose), 100.0, &moved_tree);
        assert_eq!(base, moved);
    }
}

#[test]
fn hole_grid_is_deterministic() {
    let config = TemplateConfig::default();
    assert_eq!(hole_grid(&config), hole_grid(&config.clone()));
}
