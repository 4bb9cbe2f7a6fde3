//! Synthetic ground-truth scenes: a dark volume with bright lubricant-filled
//! template holes under a known pose, plus a mid-intensity spherical tumor.

use std::collections::HashSet;

use brachyplan_core::applicator::{hole_grid, TemplateConfig};
use brachyplan_core::geom::shapes::uv_sphere;
use brachyplan_core::geom::{Aabb, Mat3};
use brachyplan_core::registration::CorrespondencePairs;
use brachyplan_core::volume::{RoiBox, ScalarVolume, VoxelData, VoxelType};
use brachyplan_core::{RigidTransform, TriangleMesh, UnitQuaternion, Vec3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum PhantomError {
    #[error("invalid phantom parameters: {0}")]
    Invalid(String),
    #[error("{0} lies outside the volume bounds")]
    OutOfBounds(&'static str),
}

/// Phantom description. The template pose maps model to image coordinates;
/// the tumor center is in image coordinates. Intensities are int16 values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomParams {
    pub config: TemplateConfig,
    pub pose: RigidTransform,
    pub dims: [usize; 3],
    pub spacing: Vec3,
    pub origin: Vec3,
    pub tumor_center: Vec3,
    pub tumor_radius: f64,
    pub background: f64,
    pub hole_intensity: f64,
    pub tumor_intensity: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    /// Longitude subdivisions of the tumor mesh (latitude uses half as many).
    pub tumor_slices: usize,
}

impl Default for PhantomParams {
    fn default() -> Self {
        let pose = RigidTransform::new(
            UnitQuaternion::from_euler_xyz(4f64.to_radians(), -3f64.to_radians(), 6f64.to_radians()),
            Vec3::new(80.0, 80.0, 110.0),
        );
        PhantomParams {
            config: TemplateConfig::default(),
            pose,
            dims: [160, 160, 130],
            spacing: Vec3::new(1.0, 1.0, 1.0),
            origin: Vec3::ZERO,
            tumor_center: pose.apply(Vec3::new(5.0, -15.0, -55.0)),
            tumor_radius: 12.0,
            background: 100.0,
            hole_intensity: 1000.0,
            tumor_intensity: 400.0,
            noise_sigma: 0.0,
            seed: 1,
            tumor_slices: 48,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PhantomScene {
    pub volume: ScalarVolume,
    pub true_pose: RigidTransform,
    pub tumor_mesh: TriangleMesh,
    pub tumor_center: Vec3,
    pub tumor_radius: f64,
    /// Landmark features of the config (model) and their posed images.
    pub landmark_truth: CorrespondencePairs,
    /// Binary tumor label map (uint8, 1 inside) on the same grid.
    pub tumor_label: ScalarVolume,
    /// Midway between the hole intensity and the brightest other tissue.
    pub threshold: f64,
    /// Index box around all hole cylinders with a 2-voxel margin.
    pub roi: RoiBox,
}

/// Ids, in label order, of holes whose needle axis segment at `depth` passes
/// within `tumor_radius + needle_radius` of the tumor center.
pub fn analytic_hits(
    config: &TemplateConfig,
    pose: &RigidTransform,
    depth: f64,
    tumor_center: Vec3,
    tumor_radius: f64,
) -> Vec<String> {
    hole_grid(config)
        .into_iter()
        .filter(|h| {
            let a = pose.apply(h.entry);
            let b = pose.apply(h.entry + h.direction * depth);
            segment_distance(a, b, tumor_center) <= tumor_radius + config.needle_radius
        })
        .map(|h| h.id)
        .collect()
}

/// Smallest `|distance − (tumor_radius + needle_radius)|` over all holes: how
/// far the scene is from flipping any analytic hit decision.
pub fn hit_clearance(config: &TemplateConfig, pose: &RigidTransform, depth: f64, tumor_center: Vec3, tumor_radius: f64) -> f64 {
    hole_grid(config)
        .into_iter()
        .map(|h| {
            let a = pose.apply(h.entry);
            let b = pose.apply(h.entry + h.direction * depth);
            (segment_distance(a, b, tumor_center) - tumor_radius - config.needle_radius).abs()
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn segment_distance(a: Vec3, b: Vec3, p: Vec3) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.norm_squared()).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

fn inside_index_box(vol: &ScalarVolume, p: Vec3) -> bool {
    let q = vol.world_to_index(p);
    let d = vol.dims();
    (0..3).all(|a| q[a] >= -1e-9 && q[a] <= (d[a] - 1) as f64 + 1e-9)
}

pub fn generate_phantom(params: &PhantomParams) -> Result<PhantomScene, PhantomError> {
    let bad = |m: &str| Err(PhantomError::Invalid(m.to_string()));
    params.config.validate().map_err(|e| PhantomError::Invalid(e.to_string()))?;
    if !(params.tumor_radius > 0.0 && params.tumor_radius.is_finite()) {
        return bad("tumor radius must be positive");
    }
    if !(params.noise_sigma >= 0.0 && params.noise_sigma.is_finite()) {
        return bad("noise sigma must be non-negative");
    }
    if params.tumor_slices < 3 {
        return bad("tumor_slices must be at least 3");
    }
    let count = params.dims.iter().product::<usize>();
    let empty = ScalarVolume::new(params.dims, params.spacing, params.origin, Mat3::IDENTITY, VoxelData::U8(vec![0; count]))
        .map_err(|e| PhantomError::Invalid(e.to_string()))?;

    let config = &params.config;
    let pose = params.pose;
    let holes = hole_grid(config);
    let t = config.plate_thickness;
    let r = config.hole_radius;

    // Every hole cylinder and the tumor ball must be covered by voxel centers.
    let mut hole_extent = Vec::new();
    for h in &holes {
        for z in [0.0, -t] {
            for (dx, dy) in [(r, 0.0), (-r, 0.0), (0.0, r), (0.0, -r)] {
                hole_extent.push(pose.apply(h.entry + Vec3::new(dx, dy, z)));
            }
        }
    }
    if !hole_extent.iter().all(|&p| inside_index_box(&empty, p)) {
        return Err(PhantomError::OutOfBounds("template"));
    }
    let c = params.tumor_center;
    let rr = params.tumor_radius;
    let ball = [Vec3::new(rr, 0.0, 0.0), Vec3::new(0.0, rr, 0.0), Vec3::new(0.0, 0.0, rr)];
    if !ball.iter().all(|&d| inside_index_box(&empty, c + d) && inside_index_box(&empty, c - d)) {
        return Err(PhantomError::OutOfBounds("tumor"));
    }

    let index = |i: usize, j: usize, k: usize| i + params.dims[0] * (j + params.dims[1] * k);
    let box_range = |pts: &[Vec3], pad: f64| -> [std::ops::RangeInclusive<usize>; 3] {
        let b = Aabb::from_points(pts.iter().map(|&p| empty.world_to_index(p))).expect("non-empty");
        [0, 1, 2].map(|a| {
            let lo = (b.min[a] - pad).floor().max(0.0) as usize;
            let hi = ((b.max[a] + pad).ceil().max(0.0) as usize).min(params.dims[a] - 1);
            lo..=hi
        })
    };

    let mut values = vec![params.background; count];
    let mut label = vec![0u8; count];
    let [ri, rj, rk] = box_range(&[c - Vec3::new(rr, rr, rr), c + Vec3::new(rr, rr, rr)], 1.0);
    for k in rk.clone() {
        for j in rj.clone() {
            for i in ri.clone() {
                if empty.voxel_center(i, j, k).distance(c) <= rr {
                    values[index(i, j, k)] = params.tumor_intensity;
                    label[index(i, j, k)] = 1;
                }
            }
        }
    }

    let present: HashSet<(i64, i64)> = holes.iter().map(|h| (h.row as i64, h.col as i64)).collect();
    let inv = pose.inverse();
    let half_cols = (config.cols - 1) as f64 / 2.0;
    let half_rows = (config.rows - 1) as f64 / 2.0;
    let roi = box_range(&hole_extent, 2.0);
    let [ri, rj, rk] = roi.clone();
    for k in rk {
        for j in rj.clone() {
            for i in ri.clone() {
                let q = inv.apply(empty.voxel_center(i, j, k));
                if q.z > 0.0 || q.z < -t {
                    continue;
                }
                let col = (q.x / config.pitch + half_cols).round();
                let row = (half_rows - q.y / config.pitch).round();
                if !present.contains(&(row as i64, col as i64)) {
                    continue;
                }
                let axis = config.hole_position(row as u32, col as u32);
                if (q.x - axis.x).hypot(q.y - axis.y) <= r {
                    values[index(i, j, k)] = params.hole_intensity;
                }
            }
        }
    }

    if params.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let normal = Normal::new(0.0, params.noise_sigma).map_err(|e| PhantomError::Invalid(e.to_string()))?;
        for v in &mut values {
            *v += normal.sample(&mut rng);
        }
    }

    let volume = empty.with_data(VoxelData::from_f64(VoxelType::I16, &values)).expect("same size");
    let tumor_label = empty.with_data(VoxelData::U8(label)).expect("same size");
    let tumor_mesh = uv_sphere(c, rr, params.tumor_slices, params.tumor_slices / 2 + 1);
    let source: Vec<Vec3> = config.landmarks.iter().map(|l| l.point).collect();
    let target = source.iter().map(|&p| pose.apply(p)).collect();
    let landmark_truth = CorrespondencePairs::new(source, target).map_err(|e| PhantomError::Invalid(e.to_string()))?;
    let [ri, rj, rk] = roi;
    Ok(PhantomScene {
        volume,
        true_pose: pose,
        tumor_mesh,
        tumor_center: c,
        tumor_radius: rr,
        landmark_truth,
        tumor_label,
        threshold: 0.5 * (params.hole_intensity + params.background.max(params.tumor_intensity)),
        roi: RoiBox { lower: [*ri.start(), *rj.start(), *rk.start()], upper: [*ri.end(), *rj.end(), *rk.end()] },
    })
}
