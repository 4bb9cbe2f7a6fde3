use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{hole_grid, TemplateConfig};
use crate::geom::{shapes, triangulate, PointCloud, TriangleMesh, Vec3};
use crate::math;

fn ngon(center: [f64; 2], radius: f64, sides: u32) -> Vec<[f64; 2]> {
    (0..sides)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / sides as f64;
            [center[0] + radius * math::cos(a), center[1] + radius * math::sin(a)]
        })
        .collect()
}

/// Closed plate mesh with an inscribed polygonal bore per hole and for the
/// central opening. A plate with neither is a plain box.
///
/// The superior face is triangulated region by region: one region per
/// lattice cell, except that the cells touched by the central opening form a
/// single rectangular block, and four strips cover the margin outside the
/// lattice. Neighbouring regions share the lattice corners along their
/// common sides, so after mirroring the face to `z = −thickness` and
/// extruding its boundary the mesh is watertight.
pub fn template_mesh(config: &TemplateConfig) -> TriangleMesh {
    let (hw, hh, t) = (config.plate_width / 2.0, config.plate_height / 2.0, config.plate_thickness);
    let bores = config.hole_radius > 0.0;
    let opening = config.obturator_hole_radius > 0.0;
    if !bores && !opening {
        return shapes::box_mesh(Vec3::new(-hw, -hh, -t), Vec3::new(hw, hh, 0.0));
    }
    let (cols, rows) = (config.cols as usize, config.rows as usize);
    let p = config.pitch;
    let (lx, ly) = (cols as f64 * p / 2.0, rows as f64 * p / 2.0);
    let xs: Vec<f64> = (0..=cols).map(|c| -lx + c as f64 * p).collect();
    // ys[j] runs upward; row index r maps to lattice band j = rows − 1 − r.
    let ys: Vec<f64> = (0..=rows).map(|j| -ly + j as f64 * p).collect();

    let mut bore_at: BTreeMap<(usize, usize), Vec<[f64; 2]>> = BTreeMap::new();
    if bores {
        for h in hole_grid(config) {
            let key = (h.col as usize, rows - 1 - h.row as usize);
            bore_at.insert(key, ngon([h.entry.x, h.entry.y], config.hole_radius, config.bore_sides));
        }
    }

    // Cells whose span meets the opening's bounding square form the block.
    let block = opening.then(|| {
        let r = config.obturator_hole_radius * (1.0 + 1e-9);
        let span = |edges: &[f64]| {
            let lo = (0..edges.len() - 1).find(|&i| edges[i + 1] > -r).unwrap_or(0);
            let hi = (0..edges.len() - 1).rev().find(|&i| edges[i] < r).unwrap_or(edges.len() - 2);
            (lo, hi)
        };
        (span(&xs), span(&ys))
    });

    let mut regions: Vec<(Vec<[f64; 2]>, Vec<Vec<[f64; 2]>>)> = Vec::new();
    let rect = |c0: usize, c1: usize, j0: usize, j1: usize| {
        let mut ring = Vec::new();
        ring.extend((c0..=c1).map(|c| [xs[c], ys[j0]]));
        ring.extend((j0 + 1..=j1).map(|j| [xs[c1], ys[j]]));
        ring.extend((c0..c1).rev().map(|c| [xs[c], ys[j1]]));
        ring.extend((j0 + 1..j1).rev().map(|j| [xs[c0], ys[j]]));
        ring
    };
    let in_block = |c: usize, j: usize| {
        block.is_some_and(|((c0, c1), (j0, j1))| (c0..=c1).contains(&c) && (j0..=j1).contains(&j))
    };
    for j in 0..rows {
        for c in 0..cols {
            if in_block(c, j) {
                continue;
            }
            let holes = bore_at.get(&(c, j)).cloned().into_iter().collect();
            regions.push((rect(c, c + 1, j, j + 1), holes));
        }
    }
    if let Some(((c0, c1), (j0, j1))) = block {
        let mut holes: Vec<Vec<[f64; 2]>> = Vec::new();
        holes.push(ngon([0.0, 0.0], config.obturator_hole_radius, config.bore_sides));
        for j in j0..=j1 {
            for c in c0..=c1 {
                if let Some(b) = bore_at.get(&(c, j)) {
                    holes.push(b.clone());
                }
            }
        }
        regions.push((rect(c0, c1 + 1, j0, j1 + 1), holes));
    }

    // Margin strips: top and bottom span the full width, left and right fit
    // between them.
    let (mx, my) = (hw > lx, hh > ly);
    if my {
        let mut top = Vec::new();
        if mx {
            top.push([-hw, ly]);
        }
        top.extend(xs.iter().map(|&x| [x, ly]));
        if mx {
            top.push([hw, ly]);
        }
        top.extend([[hw, hh], [-hw, hh]]);
        regions.push((top, Vec::new()));

        let mut bottom = alloc::vec![[-hw, -hh], [hw, -hh]];
        if mx {
            bottom.push([hw, -ly]);
        }
        bottom.extend(xs.iter().rev().map(|&x| [x, -ly]));
        if mx {
            bottom.push([-hw, -ly]);
        }
        regions.push((bottom, Vec::new()));
    }
    if mx {
        let mut left = alloc::vec![[-hw, -ly]];
        left.extend(ys.iter().map(|&y| [-lx, y]));
        left.push([-hw, ly]);
        regions.push((left, Vec::new()));

        let mut right = alloc::vec![[hw, -ly], [hw, ly]];
        right.extend(ys.iter().rev().map(|&y| [lx, y]));
        regions.push((right, Vec::new()));
    }

    // Weld the superior face by exact coordinates.
    let mut ids: BTreeMap<(u64, u64), u32> = BTreeMap::new();
    let mut top: Vec<[f64; 2]> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    for (outer, holes) in &regions {
        let refs: Vec<&[[f64; 2]]> = holes.iter().map(|h| h.as_slice()).collect();
        let local = triangulate(outer, &refs).expect("template regions are simple polygons");
        let flat: Vec<[f64; 2]> = outer.iter().chain(holes.iter().flatten()).copied().collect();
        for tri in local {
            faces.push(tri.map(|i| {
                let q = flat[i as usize];
                *ids.entry((q[0].to_bits(), q[1].to_bits())).or_insert_with(|| {
                    top.push(q);
                    (top.len() - 1) as u32
                })
            }));
        }
    }

    let n = top.len() as u32;
    let mut vertices: Vec<Vec3> = top.iter().map(|q| Vec3::new(q[0], q[1], 0.0)).collect();
    vertices.extend(top.iter().map(|q| Vec3::new(q[0], q[1], -t)));
    let mut triangles = Vec::with_capacity(faces.len() * 4);
    let mut edges: BTreeMap<(u32, u32), i32> = BTreeMap::new();
    for f in &faces {
        triangles.push(*f);
        triangles.push([f[0] + n, f[2] + n, f[1] + n]);
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            *edges.entry((a.min(b), a.max(b))).or_insert(0) += if a < b { 1 } else { -1 };
        }
    }
    // Edges used once are on the boundary; their direction keeps the face on
    // the left, so the wall quad faces outward.
    for f in &faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            if edges[&key].abs() == 1 {
                triangles.push([a, a + n, b + n]);
                triangles.push([a, b + n, b]);
            }
        }
    }
    TriangleMesh { vertices, triangles, normals: None }
}

/// Inscribed polygonal cylinder through the central opening, from the
/// superior surface along `−z` for the obturator length.
pub fn obturator_mesh(config: &TemplateConfig) -> TriangleMesh {
    shapes::prism(
        Vec3::ZERO,
        -Vec3::Z,
        config.obturator_length,
        config.obturator_radius,
        config.bore_sides as usize,
    )
}

/// Model-frame reference points for ICP: `points_per_hole` per hole, the
/// first being the hole entry on the superior plane and the rest evenly
/// spaced down the hole axis to the plate thickness.
///
/// Image points are voxels filling the bores, so reference samples only on
/// the axis keep the closest-point pull symmetric: rim samples confined to
/// the superior plane draw the top voxel layer upward and bias the fit.
pub fn superior_surface_points(config: &TemplateConfig, points_per_hole: usize) -> PointCloud {
    let axis = points_per_hole.max(1) - 1;
    let holes = hole_grid(config);
    let mut points = Vec::with_capacity(holes.len() * (axis + 1));
    for h in &holes {
        points.push(h.entry);
        for k in 1..=axis {
            points.push(h.entry + h.direction * (config.plate_thickness * k as f64 / axis as f64));
        }
    }
    PointCloud::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polygon_area(r: f64, n: u32) -> f64 {
        0.5 * n as f64 * r * r * math::sin(2.0 * PI / n as f64)
    }

    #[test]
    fn undrilled_plate_is_a_box() {
        let c = TemplateConfig { hole_radius: 0.0, obturator_hole_radius: 0.0, ..TemplateConfig::default() };
        let m = template_mesh(&c);
        assert_eq!(m.triangle_count(), 12);
        assert!((m.signed_volume() - 140.0 * 140.0 * 20.0).abs() < 1e-6);
    }

    #[test]
    fn default_plate_is_watertight_with_bores() {
        let c = TemplateConfig::default();
        let m = template_mesh(&c);
        assert!(m.is_closed_manifold());
        let genus = hole_grid(&c).len() as i64 + 1;
        assert_eq!(m.euler_characteristic(), 2 - 2 * genus);
        let bores = hole_grid(&c).len() as f64 * polygon_area(c.hole_radius, c.bore_sides)
            + polygon_area(c.obturator_hole_radius, c.bore_sides);
        let expect = (140.0 * 140.0 - bores) * 20.0;
        assert!((m.signed_volume() - expect).abs() < 1e-6 * expect, "{} {}", m.signed_volume(), expect);
        let b = m.bounds().unwrap();
        assert_eq!(b.min, Vec3::new(-70.0, -70.0, -20.0));
        assert_eq!(b.max, Vec3::new(70.0, 70.0, 0.0));
    }

    #[test]
    fn variants_stay_watertight() {
        let base = TemplateConfig::default();
        let configs = [
            TemplateConfig { obturator_hole_radius: 0.0, ..base.clone() },
            TemplateConfig { hole_radius: 0.0, ..base.clone() },
            TemplateConfig { rows: 4, cols: 7, plate_width: 70.0, plate_height: 50.0, ..base.clone() },
            TemplateConfig { obturator_hole_radius: 14.5, bore_sides: 7, ..base.clone() },
            TemplateConfig { rows: 2, cols: 3, obturator_hole_radius: 0.0, plate_width: 30.0, plate_height: 20.0, ..base },
        ];
        for c in &configs {
            let m = template_mesh(c);
            assert!(m.is_closed_manifold(), "{c:?}");
            assert!(m.signed_volume() > 0.0);
            let n = hole_grid(c).len() as f64;
            let open = if c.hole_radius > 0.0 { n * polygon_area(c.hole_radius, c.bore_sides) } else { 0.0 }
                + if c.obturator_hole_radius > 0.0 { polygon_area(c.obturator_hole_radius, c.bore_sides) } else { 0.0 };
            let expect = (c.plate_width * c.plate_height - open) * c.plate_thickness;
            assert!((m.signed_volume() - expect).abs() < 1e-6 * expect);
        }
    }

    #[test]
    fn obturator_is_inscribed_prism() {
        let c = TemplateConfig::default();
        let m = obturator_mesh(&c);
        let expect = polygon_area(c.obturator_radius, c.bore_sides) * c.obturator_length;
        assert!((m.signed_volume() - expect).abs() < 1e-9);
    }

    #[test]
    fn surface_points() {
        let c = TemplateConfig::default();
        let n = hole_grid(&c).len();
        let one = superior_surface_points(&c, 1);
        assert_eq!(one.len(), n);
        for (p, h) in one.points.iter().zip(hole_grid(&c)) {
            assert_eq!(*p, h.entry);
        }
        let many = superior_surface_points(&c, 9);
        assert_eq!(many.len(), 9 * n);
        assert!(many.points.iter().all(|p| p.z <= 0.0 && p.z >= -c.plate_thickness));
    }
}
