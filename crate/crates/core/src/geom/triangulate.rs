//! Ear-clipping triangulation of simple polygons with holes.

use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TriangulateError {
    #[error("polygon ring has fewer than three vertices")]
    TooFewVertices,
    #[error("no ear found; polygon is not simple")]
    NotSimple,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

pub fn signed_area(ring: &[[f64; 2]]) -> f64 {
    let n = ring.len();
    (0..n).map(|i| cross([0.0, 0.0], ring[i], ring[(i + 1) % n])).sum::<f64>() * 0.5
}

/// Closed containment of `p` in triangle `a b c` (counter-clockwise).
fn in_triangle(p: [f64; 2], a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> bool {
    cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0
}

/// Triangulates `outer` minus `holes`. Indices refer to the concatenation of
/// `outer` followed by each hole in order. Orientation of the input rings is
/// normalized; output triangles are counter-clockwise. Holes must lie
/// strictly inside the outer ring and must not touch each other.
pub fn triangulate(outer: &[[f64; 2]], holes: &[&[[f64; 2]]]) -> Result<Vec<[u32; 3]>, TriangulateError> {
    let mut points: Vec<[f64; 2]> = Vec::new();
    let mut ring_of = |ring: &[[f64; 2]], ccw: bool| -> Result<Vec<u32>, TriangulateError> {
        if ring.len() < 3 {
            return Err(TriangulateError::TooFewVertices);
        }
        let base = points.len() as u32;
        points.extend_from_slice(ring);
        let mut ids: Vec<u32> = (base..base + ring.len() as u32).collect();
        if (signed_area(ring) > 0.0) != ccw {
            ids.reverse();
        }
        Ok(ids)
    };
    let mut poly = ring_of(outer, true)?;
    let mut hole_rings = Vec::with_capacity(holes.len());
    for h in holes {
        hole_rings.push(ring_of(h, false)?);
    }

    // Rightmost holes are bridged first so later rays see them as part of
    // the outer boundary.
    let rightmost = |ring: &Vec<u32>| {
        let mut best = 0;
        for (k, &i) in ring.iter().enumerate() {
            let (p, q) = (points[i as usize], points[ring[best] as usize]);
            if p[0] > q[0] || (p[0] == q[0] && p[1] < q[1]) {
                best = k;
            }
        }
        best
    };
    let mut order: Vec<usize> = (0..hole_rings.len()).collect();
    order.sort_by(|&a, &b| {
        let pa = points[hole_rings[a][rightmost(&hole_rings[a])] as usize][0];
        let pb = points[hole_rings[b][rightmost(&hole_rings[b])] as usize][0];
        pb.total_cmp(&pa)
    });
    for h in order {
        let ring = &hole_rings[h];
        let start = rightmost(ring);
        let m = ring[start];
        let at = bridge_target(&points, &poly, points[m as usize]).ok_or(TriangulateError::NotSimple)?;
        let mut spliced = Vec::with_capacity(poly.len() + ring.len() + 2);
        spliced.extend_from_slice(&poly[..=at]);
        spliced.extend((0..=ring.len()).map(|k| ring[(start + k) % ring.len()]));
        spliced.push(poly[at]);
        spliced.extend_from_slice(&poly[at + 1..]);
        poly = spliced;
    }
    clip_ears(&points, poly)
}

/// Position in `poly` of a vertex visible from hole vertex `m` along +x.
fn bridge_target(points: &[[f64; 2]], poly: &[u32], m: [f64; 2]) -> Option<usize> {
    let n = poly.len();
    let p = |k: usize| points[poly[k % n] as usize];
    let mut best_x = f64::INFINITY;
    let mut hit: Option<(usize, bool)> = None;
    for k in 0..n {
        let (a, b) = (p(k), p(k + 1));
        if a[1] == b[1] {
            if a[1] == m[1] {
                for (pos, q) in [(k, a), ((k + 1) % n, b)] {
                    if q[0] >= m[0] && q[0] < best_x {
                        best_x = q[0];
                        hit = Some((pos, true));
                    }
                }
            }
            continue;
        }
        // Boundary seen from the interior along +x runs upward.
        if !(a[1] <= m[1] && m[1] <= b[1]) {
            continue;
        }
        let x = a[0] + (m[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
        if x < m[0] || x >= best_x {
            continue;
        }
        best_x = x;
        hit = Some(if a[1] == m[1] {
            (k, true)
        } else if b[1] == m[1] {
            ((k + 1) % n, true)
        } else if a[0] > b[0] {
            (k, false)
        } else {
            ((k + 1) % n, false)
        });
    }
    let (pos, exact) = hit?;
    if exact {
        return Some(pos);
    }
    // Reflex vertices inside the triangle (m, i, p) could block the bridge;
    // take the one closest in angle to the ray.
    let i = [best_x, m[1]];
    let cand = p(pos);
    let (tri_a, tri_b, tri_c) = if cand[1] < m[1] { (m, cand, i) } else { (m, i, cand) };
    let mut best = pos;
    let mut best_key = (f64::INFINITY, f64::INFINITY);
    for k in 0..n {
        let q = p(k);
        let reflex = cross(p(k + n - 1), q, p(k + 1)) <= 0.0;
        if k != pos && !reflex {
            continue;
        }
        if k != pos && (q == cand || !in_triangle(q, tri_a, tri_b, tri_c)) {
            continue;
        }
        let dx = q[0] - m[0];
        let dy = q[1] - m[1];
        let key = ((dy / dx).abs(), dx * dx + dy * dy);
        if dx > 0.0 && key < best_key {
            best_key = key;
            best = k;
        }
    }
    Some(best)
}

fn clip_ears(points: &[[f64; 2]], poly: Vec<u32>) -> Result<Vec<[u32; 3]>, TriangulateError> {
    let mut ring = poly;
    let mut out = Vec::with_capacity(ring.len().saturating_sub(2));
    let pt = |i: u32| points[i as usize];
    while ring.len() > 3 {
        let n = ring.len();
        let mut clipped = false;
        for k in 0..n {
            let (ia, ib, ic) = (ring[(k + n - 1) % n], ring[k], ring[(k + 1) % n]);
            let (a, b, c) = (pt(ia), pt(ib), pt(ic));
            if cross(a, b, c) <= 0.0 {
                continue;
            }
            let blocked = ring.iter().any(|&j| {
                let q = pt(j);
                q != a && q != b && q != c && in_triangle(q, a, b, c)
            });
            if blocked {
                continue;
            }
            out.push([ia, ib, ic]);
            ring.remove(k);
            clipped = true;
            break;
        }
        if !clipped {
            // Drop collinear spikes left by bridges before giving up.
            let n = ring.len();
            let Some(k) = (0..n).find(|&k| {
                let (a, b, c) = (pt(ring[(k + n - 1) % n]), pt(ring[k]), pt(ring[(k + 1) % n]));
                cross(a, b, c) == 0.0 && a == c
            }) else {
                return Err(TriangulateError::NotSimple);
            };
            ring.remove(k);
        }
    }
    if cross(pt(ring[0]), pt(ring[1]), pt(ring[2])) > 0.0 {
        out.push([ring[0], ring[1], ring[2]]);
    }
    Ok(out)
}
