//! Closed triangle–triangle intersection (Möller's interval method).

use crate::geom::Vec3;

/// Signed plane distances below this fraction of the coordinate scale are
/// snapped to zero.
const PLANE_SNAP: f64 = 1e-12;

/// `true` iff the closed triangles share at least one point.
///
/// Each triangle is first classified against the other's plane; if they
/// straddle each other, both are clipped to intervals on the planes'
/// intersection line and the intervals are compared. Coplanar pairs fall back
/// to 2D edge-crossing and containment tests.
pub fn tri_tri_intersect(v: &[Vec3; 3], u: &[Vec3; 3]) -> bool {
    let scale = 1.0 + v.iter().chain(u.iter()).map(|p| p.max_abs()).fold(0.0, f64::max);

    let n1 = (v[1] - v[0]).cross(v[2] - v[0]);
    let du = plane_distances(n1, v[0], u, scale);
    if same_strict_side(du) {
        return false;
    }
    let n2 = (u[1] - u[0]).cross(u[2] - u[0]);
    let dv = plane_distances(n2, u[0], v, scale);
    if same_strict_side(dv) {
        return false;
    }
    if du == [0.0; 3] || dv == [0.0; 3] {
        return coplanar(n1, v, u);
    }

    let dir = n1.cross(n2);
    let a = dir.abs();
    let k = if a.x >= a.y && a.x >= a.z {
        0
    } else if a.y >= a.z {
        1
    } else {
        2
    };
    let vp = v.map(|p| p[k]);
    let up = u.map(|p| p[k]);
    let (Some(i1), Some(i2)) = (interval(vp, dv), interval(up, du)) else {
        return coplanar(n1, v, u);
    };
    let (a0, a1) = (i1.0.min(i1.1), i1.0.max(i1.1));
    let (b0, b1) = (i2.0.min(i2.1), i2.0.max(i2.1));
    let slack = PLANE_SNAP * scale;
    !(a1 < b0 - slack || b1 < a0 - slack)
}

fn plane_distances(n: Vec3, origin: Vec3, pts: &[Vec3; 3], scale: f64) -> [f64; 3] {
    let len = n.norm();
    pts.map(|p| {
        let d = n.dot(p - origin);
        if d.abs() <= PLANE_SNAP * scale * len {
            0.0
        } else {
            d
        }
    })
}

fn same_strict_side(d: [f64; 3]) -> bool {
    (d[0] > 0.0 && d[1] > 0.0 && d[2] > 0.0) || (d[0] < 0.0 && d[1] < 0.0 && d[2] < 0.0)
}

/// Interval where a triangle (projected coordinates `p`, plane distances
/// `d`) meets the other triangle's plane. `None` when all distances vanish.
fn interval(p: [f64; 3], d: [f64; 3]) -> Option<(f64, f64)> {
    // A vertex lying on the plane is returned exactly.
    let cross = |a: usize, b: usize| if d[b] == 0.0 { p[b] } else { p[a] + (p[b] - p[a]) * d[a] / (d[a] - d[b]) };
    let isect = |a: usize, b: usize, c: usize| (cross(a, b), cross(a, c));
    if d[0] * d[1] > 0.0 {
        Some(isect(2, 0, 1))
    } else if d[0] * d[2] > 0.0 {
        Some(isect(1, 0, 2))
    } else if d[1] * d[2] > 0.0 || d[0] != 0.0 {
        Some(isect(0, 1, 2))
    } else if d[1] != 0.0 {
        Some(isect(1, 0, 2))
    } else if d[2] != 0.0 {
        Some(isect(2, 0, 1))
    } else {
        None
    }
}

fn coplanar(n: Vec3, v: &[Vec3; 3], u: &[Vec3; 3]) -> bool {
    let a = n.abs();
    let (i, j) = if a.x >= a.y && a.x >= a.z {
        (1, 2)
    } else if a.y >= a.z {
        (0, 2)
    } else {
        (0, 1)
    };
    let v2 = v.map(|p| [p[i], p[j]]);
    let u2 = u.map(|p| [p[i], p[j]]);
    for e in 0..3 {
        for f in 0..3 {
            if segments_intersect(v2[e], v2[(e + 1) % 3], u2[f], u2[(f + 1) % 3]) {
                return true;
            }
        }
    }
    point_in_triangle(v2[0], &u2) || point_in_triangle(u2[0], &v2)
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

fn point_in_triangle(p: [f64; 2], t: &[[f64; 2]; 3]) -> bool {
    let d = [orient(t[0], t[1], p), orient(t[1], t[2], p), orient(t[2], t[0], p)];
    let neg = d.iter().any(|&x| x < 0.0);
    let pos = d.iter().any(|&x| x > 0.0);
    !(neg && pos)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> [Vec3; 3] {
        [a.into(), b.into(), c.into()]
    }

    #[test]
    fn triangle_meets_itself() {
        let t = tri([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        assert!(tri_tri_intersect(&t, &t));
    }

    #[test]
    fn parallel_planes_do_not_meet() {
        let a = tri([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        let b = tri([0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]);
        assert!(!tri_tri_intersect(&a, &b));
    }

    #[test]
    fn piercing_and_missing() {
        let a = tri([0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 2.0, 0.0]);
        let pierce = tri([0.5, 0.5, -1.0], [0.5, 0.5, 1.0], [0.6, 0.4, 1.0]);
        assert!(tri_tri_intersect(&a, &pierce));
        assert!(tri_tri_intersect(&pierce, &a));
        let miss = tri([3.0, 3.0, -1.0], [3.0, 3.0, 1.0], [3.1, 2.9, 1.0]);
        assert!(!tri_tri_intersect(&a, &miss));
    }

    #[test]
    fn touching_counts() {
        let a = tri([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        // vertex resting on the face
        let b = tri([0.2, 0.2, 0.0], [0.2, 0.2, 1.0], [0.4, 0.1, 1.0]);
        assert!(tri_tri_intersect(&a, &b));
        // shared edge, different planes
        let c = tri([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 0.0, 1.0]);
        assert!(tri_tri_intersect(&a, &c));
    }

    #[test]
    fn coplanar_cases() {
        let a = tri([0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 2.0, 0.0]);
        let inside = tri([0.2, 0.2, 0.0], [0.5, 0.2, 0.0], [0.2, 0.5, 0.0]);
        assert!(tri_tri_intersect(&a, &inside));
        assert!(tri_tri_intersect(&inside, &a));
        let crossing = tri([1.5, -0.5, 0.0], [1.5, 1.0, 0.0], [3.0, 0.0, 0.0]);
        assert!(tri_tri_intersect(&a, &crossing));
        let apart = tri([3.0, 3.0, 0.0], [4.0, 3.0, 0.0], [3.0, 4.0, 0.0]);
        assert!(!tri_tri_intersect(&a, &apart));
    }
}
