use alloc::string::String;
use alloc::vec::Vec;

use super::{hole_grid, ApplicatorError, Hole, TemplateConfig};
use crate::collision::{build_obb_tree, collide, CollisionMode, ObbTree};
use crate::geom::{shapes, RigidTransform, TriangleMesh, Vec3};

/// Radius used in place of a zero needle radius so the prism stays a valid
/// closed mesh.
pub const MIN_NEEDLE_RADIUS: f64 = 1e-3;

/// Target resolution (mm) of [`intersection_span`].
pub const SPAN_RESOLUTION: f64 = 0.1;

/// Needle axis in the model frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeedleSegment {
    pub start: Vec3,
    pub end: Vec3,
}

/// Straight needle inserted `depth` mm through `hole`, tessellated as an
/// inscribed `sides`-gon prism.
pub fn needle_geometry(
    hole: &Hole,
    depth: f64,
    radius: f64,
    sides: usize,
) -> Result<(NeedleSegment, TriangleMesh), ApplicatorError> {
    if !(depth > 0.0) || !depth.is_finite() {
        return Err(ApplicatorError::NonPositiveDepth(depth));
    }
    let segment = NeedleSegment { start: hole.entry, end: hole.entry + hole.direction * depth };
    let mesh = shapes::prism(hole.entry, hole.direction, depth, radius.max(MIN_NEEDLE_RADIUS), sides);
    Ok((segment, mesh))
}

/// Contact between the needle portion from `from` to `to` mm along the hole
/// axis (posed by `pose`) and the tumor tree (in image coordinates).
fn portion_hits(config: &TemplateConfig, hole: &Hole, pose: &RigidTransform, from: f64, to: f64, tumor: &ObbTree) -> bool {
    if !(to > from) {
        return false;
    }
    let start = Hole { entry: hole.entry + hole.direction * from, ..hole.clone() };
    let Ok((_, mesh)) = needle_geometry(&start, to - from, config.needle_radius, config.needle_sides as usize) else {
        return false;
    };
    let tree = build_obb_tree(&mesh).expect("prism has triangles");
    collide(&tree, pose, tumor, &RigidTransform::IDENTITY, CollisionMode::FirstContact).intersecting
}

/// Whether the needle through `hole` at `depth` touches the tumor surface.
pub fn needle_hits(config: &TemplateConfig, hole: &Hole, pose: &RigidTransform, depth: f64, tumor: &ObbTree) -> bool {
    portion_hits(config, hole, pose, 0.0, depth, tumor)
}

/// Ids, in label order, of holes whose needle at `depth` touches the tumor.
pub fn select_needles(config: &TemplateConfig, pose: &RigidTransform, depth: f64, tumor: &ObbTree) -> Vec<String> {
    hole_grid(config)
        .into_iter()
        .filter(|h| needle_hits(config, h, pose, depth, tumor))
        .map(|h| h.id)
        .collect()
}

/// Shallowest and deepest insertion depth (mm) at which the needle through
/// `hole` is in contact with the tumor, or `None` when the needle at
/// `depth_max` misses it.
///
/// The entry depth bisects on needle length; the exit depth bisects on the
/// start of a needle portion ending at `depth_max`. When the needle tip at
/// `depth_max` is inside the tumor the exit is `depth_max`.
pub fn intersection_span(
    config: &TemplateConfig,
    hole: &Hole,
    pose: &RigidTransform,
    depth_max: f64,
    tumor: &ObbTree,
) -> Option<(f64, f64)> {
    if !needle_hits(config, hole, pose, depth_max, tumor) {
        return None;
    }
    let tol = SPAN_RESOLUTION / 8.0;
    let (mut lo, mut hi) = (0.0, depth_max);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if needle_hits(config, hole, pose, mid, tumor) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let entry = 0.5 * (lo + hi);

    let tip = pose.apply(hole.entry + hole.direction * depth_max);
    if tumor.mesh().winding_number(tip).abs() > 0.5 {
        return Some((entry, depth_max));
    }
    let (mut lo, mut hi) = (entry.min(hi), depth_max);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if portion_hits(config, hole, pose, mid, depth_max, tumor) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some((entry, 0.5 * (lo + hi)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn on_axis_config() -> TemplateConfig {
        TemplateConfig { obturator_hole_radius: 0.0, needle_radius: 0.0, ..TemplateConfig::default() }
    }

    fn hole(config: &TemplateConfig, id: &str) -> Hole {
        hole_grid(config).into_iter().find(|h| h.id == id).unwrap()
    }

    fn ball(center: Vec3, r: f64) -> ObbTree {
        build_obb_tree(&shapes::uv_sphere(center, r, 48, 49)).unwrap()
    }

    #[test]
    fn geometry() {
        let h = Hole { id: "A1".into(), row: 0, col: 0, entry: Vec3::ZERO, direction: -Vec3::Z };
        let (seg, mesh) = needle_geometry(&h, 50.0, 1.0, 12).unwrap();
        assert_eq!(seg.end, Vec3::new(0.0, 0.0, -50.0));
        assert!(mesh.is_closed_manifold());
        let max = mesh.vertices.iter().map(|v| (v.x * v.x + v.y * v.y).sqrt()).fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-12);
        assert_eq!(needle_geometry(&h, 0.0, 1.0, 12).unwrap_err(), ApplicatorError::NonPositiveDepth(0.0));
    }

    #[test]
    fn on_axis_ball_is_selected_and_spanned() {
        let c = on_axis_config();
        let g7 = hole(&c, "G7");
        let tumor = ball(g7.entry + g7.direction * 30.0, 5.0);
        let pose = RigidTransform::IDENTITY;
        let hits = select_needles(&c, &pose, 60.0, &tumor);
        assert!(hits.iter().any(|h| h == "G7"));
        let (a, b) = intersection_span(&c, &g7, &pose, 60.0, &tumor).unwrap();
        assert!((a - 25.0).abs() < 0.1 && (b - 35.0).abs() < 0.1, "{a} {b}");
        // tip inside the ball
        let (a, b) = intersection_span(&c, &g7, &pose, 31.0, &tumor).unwrap();
        assert!((a - 25.0).abs() < 0.1 && b == 31.0);
        assert!(intersection_span(&c, &g7, &pose, 20.0, &tumor).is_none());
    }

    #[test]
    fn distant_tumor_hits_nothing() {
        let c = TemplateConfig::default();
        let tumor = ball(Vec3::new(500.0, 0.0, -40.0), 5.0);
        assert!(select_needles(&c, &RigidTransform::IDENTITY, 100.0, &tumor).is_empty());
    }
}
