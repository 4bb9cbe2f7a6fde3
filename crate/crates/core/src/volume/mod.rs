//! Scalar volumes: voxel-center world mapping, ROI cropping, threshold point
//! extraction and Marching Cubes isosurfacing.

mod marching_cubes;
mod mc_tables;

use alloc::vec::Vec;

pub use marching_cubes::{extract_isosurface, marching_cubes, IsoSurface, LatticeEdge};

use crate::geom::{Mat3, PointCloud, Vec3};

/// Errors raised by volume construction and cropping.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VolumeError {
    #[error("volume dimensions must be positive, got {0:?}")]
    EmptyDims([usize; 3]),
    #[error("voxel buffer holds {got} values but dimensions need {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("voxel spacing must be finite and positive")]
    BadSpacing,
    #[error("axis directions are not orthonormal")]
    BadDirections,
    #[error("ROI {lower:?}..={upper:?} is not inside volume of size {dims:?}")]
    RoiOutOfBounds { lower: [usize; 3], upper: [usize; 3], dims: [usize; 3] },
}

/// Voxel sample type.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VoxelType {
    U8,
    I16,
    U16,
    F32,
}

impl VoxelType {
    pub fn size(self) -> usize {
        match self {
            VoxelType::U8 => 1,
            VoxelType::I16 | VoxelType::U16 => 2,
            VoxelType::F32 => 4,
        }
    }

    /// Representable range, used to clamp generated intensities.
    pub fn range(self) -> (f64, f64) {
        match self {
            VoxelType::U8 => (0.0, 255.0),
            VoxelType::I16 => (i16::MIN as f64, i16::MAX as f64),
            VoxelType::U16 => (0.0, u16::MAX as f64),
            VoxelType::F32 => (f32::MIN as f64, f32::MAX as f64),
        }
    }
}

/// Typed voxel storage in x-fastest order.
#[derive(Clone, Debug, PartialEq)]
pub enum VoxelData {
    U8(Vec<u8>),
    I16(Vec<i16>),
    U16(Vec<u16>),
    F32(Vec<f32>),
}

macro_rules! each_buffer {
    ($data:expr, $v:ident => $body:expr) => {
        match $data {
            VoxelData::U8($v) => $body,
            VoxelData::I16($v) => $body,
            VoxelData::U16($v) => $body,
            VoxelData::F32($v) => $body,
        }
    };
}

impl VoxelData {
    pub fn len(&self) -> usize {
        each_buffer!(self, v => v.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn voxel_type(&self) -> VoxelType {
        match self {
            VoxelData::U8(_) => VoxelType::U8,
            VoxelData::I16(_) => VoxelType::I16,
            VoxelData::U16(_) => VoxelType::U16,
            VoxelData::F32(_) => VoxelType::F32,
        }
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        each_buffer!(self, v => v[i] as f64)
    }

    /// Buffer of the given type from `f64` samples, rounding and clamping to
    /// the type's range for integer types.
    pub fn from_f64(kind: VoxelType, values: &[f64]) -> VoxelData {
        let (lo, hi) = kind.range();
        let clamp = |x: f64| crate::math::round(x.clamp(lo, hi));
        match kind {
            VoxelType::U8 => VoxelData::U8(values.iter().map(|&x| clamp(x) as u8).collect()),
            VoxelType::I16 => VoxelData::I16(values.iter().map(|&x| clamp(x) as i16).collect()),
            VoxelType::U16 => VoxelData::U16(values.iter().map(|&x| clamp(x) as u16).collect()),
            VoxelType::F32 => VoxelData::F32(values.iter().map(|&x| x.clamp(lo, hi) as f32).collect()),
        }
    }

    fn gather(&self, indices: impl Iterator<Item = usize>) -> VoxelData {
        match self {
            VoxelData::U8(v) => VoxelData::U8(indices.map(|i| v[i]).collect()),
            VoxelData::I16(v) => VoxelData::I16(indices.map(|i| v[i]).collect()),
            VoxelData::U16(v) => VoxelData::U16(indices.map(|i| v[i]).collect()),
            VoxelData::F32(v) => VoxelData::F32(indices.map(|i| v[i]).collect()),
        }
    }
}

/// 3D scalar grid. `origin` is the world position of the center of voxel
/// `(0, 0, 0)`; voxel `(i, j, k)` sits at
/// `origin + Σ directionₐ · spacingₐ · indexₐ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarVolume {
    dims: [usize; 3],
    spacing: Vec3,
    origin: Vec3,
    /// Columns are the unit directions of the i, j and k axes.
    directions: Mat3,
    data: VoxelData,
}

impl ScalarVolume {
    pub fn new(
        dims: [usize; 3],
        spacing: Vec3,
        origin: Vec3,
        directions: Mat3,
        data: VoxelData,
    ) -> Result<Self, VolumeError> {
        if dims.contains(&0) {
            return Err(VolumeError::EmptyDims(dims));
        }
        let expected = dims[0] * dims[1] * dims[2];
        if data.len() != expected {
            return Err(VolumeError::SizeMismatch { expected, got: data.len() });
        }
        if !(spacing.is_finite() && spacing.x > 0.0 && spacing.y > 0.0 && spacing.z > 0.0) {
            return Err(VolumeError::BadSpacing);
        }
        if !origin.is_finite() || !(directions.orthonormality_error() <= 1e-6) {
            return Err(VolumeError::BadDirections);
        }
        Ok(Self { dims, spacing, origin, directions, data })
    }

    /// Identity-oriented volume built from `f64` samples.
    pub fn from_fn(
        dims: [usize; 3],
        spacing: Vec3,
        origin: Vec3,
        kind: VoxelType,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self, VolumeError> {
        let mut values = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    values.push(f(i, j, k));
                }
            }
        }
        Self::new(dims, spacing, origin, Mat3::IDENTITY, VoxelData::from_f64(kind, &values))
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }
    pub fn spacing(&self) -> Vec3 {
        self.spacing
    }
    pub fn origin(&self) -> Vec3 {
        self.origin
    }
    pub fn directions(&self) -> Mat3 {
        self.directions
    }
    pub fn data(&self) -> &VoxelData {
        &self.data
    }
    pub fn voxel_count(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn linear_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data.get(self.linear_index(i, j, k))
    }

    /// World position of a (possibly fractional) index.
    #[inline]
    pub fn index_to_world(&self, index: Vec3) -> Vec3 {
        let scaled = Vec3::new(index.x * self.spacing.x, index.y * self.spacing.y, index.z * self.spacing.z);
        self.origin + self.directions.mul_vec(scaled)
    }

    pub fn voxel_center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.index_to_world(Vec3::new(i as f64, j as f64, k as f64))
    }

    /// Continuous index of a world point.
    pub fn world_to_index(&self, p: Vec3) -> Vec3 {
        let local = self.directions.transpose().mul_vec(p - self.origin);
        Vec3::new(local.x / self.spacing.x, local.y / self.spacing.y, local.z / self.spacing.z)
    }

    /// Global `(min, max)` sample values.
    pub fn value_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.data.len() {
            let v = self.data.get(i);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// World-space bounds of the voxel centers.
    pub fn world_bounds(&self) -> crate::geom::Aabb {
        let [nx, ny, nz] = self.dims.map(|d| (d - 1) as f64);
        let corners = (0..8).map(|c| {
            self.index_to_world(Vec3::new(
                if c & 1 == 0 { 0.0 } else { nx },
                if c & 2 == 0 { 0.0 } else { ny },
                if c & 4 == 0 { 0.0 } else { nz },
            ))
        });
        crate::geom::Aabb::from_points(corners).expect("eight corners")
    }

    /// Same geometry with replaced samples.
    pub fn with_data(&self, data: VoxelData) -> Result<Self, VolumeError> {
        Self::new(self.dims, self.spacing, self.origin, self.directions, data)
    }
}

/// Inclusive index-space box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoiBox {
    pub lower: [usize; 3],
    pub upper: [usize; 3],
}

impl RoiBox {
    pub fn full(vol: &ScalarVolume) -> Self {
        Self { lower: [0; 3], upper: vol.dims().map(|d| d - 1) }
    }

    pub fn contains(&self, i: usize, j: usize, k: usize) -> bool {
        let idx = [i, j, k];
        (0..3).all(|a| self.lower[a] <= idx[a] && idx[a] <= self.upper[a])
    }

    pub fn extent(&self) -> [usize; 3] {
        core::array::from_fn(|a| self.upper[a] - self.lower[a] + 1)
    }

    pub fn validate(&self, dims: [usize; 3]) -> Result<(), VolumeError> {
        if (0..3).all(|a| self.lower[a] <= self.upper[a] && self.upper[a] < dims[a]) {
            Ok(())
        } else {
            Err(VolumeError::RoiOutOfBounds { lower: self.lower, upper: self.upper, dims })
        }
    }
}

/// Copies the voxels inside `roi`; the origin moves so that every retained
/// voxel keeps its world position.
pub fn crop_roi(vol: &ScalarVolume, roi: &RoiBox) -> Result<ScalarVolume, VolumeError> {
    roi.validate(vol.dims())?;
    let [lx, ly, lz] = roi.lower;
    let [ux, uy, uz] = roi.upper;
    let indices = (lz..=uz).flat_map(move |k| (ly..=uy).flat_map(move |j| (lx..=ux).map(move |i| (i, j, k))));
    let data = vol.data.gather(indices.map(|(i, j, k)| vol.linear_index(i, j, k)));
    let origin = vol.voxel_center(lx, ly, lz);
    ScalarVolume::new(roi.extent(), vol.spacing, origin, vol.directions, data)
}

/// World positions of the voxel centers whose value is `≥ threshold`, in
/// index order (x fastest).
pub fn threshold_points(vol: &ScalarVolume, threshold: f64) -> PointCloud {
    let [nx, ny, nz] = vol.dims();
    let mut points = Vec::new();
    let mut n = 0;
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                if vol.data.get(n) >= threshold {
                    points.push(vol.voxel_center(i, j, k));
                }
                n += 1;
            }
        }
    }
    PointCloud::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ramp(n: usize) -> ScalarVolume {
        ScalarVolume::from_fn([n, n, n], Vec3::new(1.0, 1.0, 1.0), Vec3::ZERO, VoxelType::F32, |i, _, _| i as f64)
            .unwrap()
    }

    #[test]
    fn origin_maps_to_index_zero() {
        let v = ScalarVolume::new(
            [2, 2, 2],
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(10.0, 20.0, 30.0),
            Mat3::IDENTITY,
            VoxelData::U8(vec![0; 8]),
        )
        .unwrap();
        assert_eq!(v.voxel_center(0, 0, 0), Vec3::new(10.0, 20.0, 30.0));
    }

    #[test]
    fn world_index_roundtrip_with_oblique_axes() {
        let r = crate::geom::UnitQuaternion::from_axis_angle(Vec3::new(1.0, 1.0, 0.0), 0.4).unwrap().to_matrix();
        let v = ScalarVolume::new([3, 4, 5], Vec3::new(0.5, 0.7, 2.0), Vec3::new(-3.0, 1.0, 9.0), r, VoxelData::U8(vec![0; 60]))
            .unwrap();
        let idx = Vec3::new(1.25, 2.0, 3.5);
        assert!((v.world_to_index(v.index_to_world(idx)) - idx).max_abs() < 1e-12);
    }

    #[test]
    fn construction_errors() {
        let id = Mat3::IDENTITY;
        let one = Vec3::new(1.0, 1.0, 1.0);
        assert!(matches!(
            ScalarVolume::new([2, 2, 2], one, Vec3::ZERO, id, VoxelData::U8(vec![0; 7])),
            Err(VolumeError::SizeMismatch { expected: 8, got: 7 })
        ));
        assert!(matches!(
            ScalarVolume::new([2, 2, 2], Vec3::new(1.0, 0.0, 1.0), Vec3::ZERO, id, VoxelData::U8(vec![0; 8])),
            Err(VolumeError::BadSpacing)
        ));
        let skew = Mat3::from_rows([[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(matches!(
            ScalarVolume::new([2, 2, 2], one, Vec3::ZERO, skew, VoxelData::U8(vec![0; 8])),
            Err(VolumeError::BadDirections)
        ));
    }

    #[test]
    fn full_crop_is_identity() {
        let v = ramp(5);
        assert_eq!(crop_roi(&v, &RoiBox::full(&v)).unwrap(), v);
    }

    #[test]
    fn single_voxel_crop_keeps_world_position() {
        let v = ramp(6);
        let c = crop_roi(&v, &RoiBox { lower: [2, 3, 4], upper: [2, 3, 4] }).unwrap();
        assert_eq!(c.dims(), [1, 1, 1]);
        assert_eq!(c.voxel_center(0, 0, 0), v.voxel_center(2, 3, 4));
        assert_eq!(c.value(0, 0, 0), v.value(2, 3, 4));
    }

    #[test]
    fn crop_outside_is_rejected() {
        let v = ramp(4);
        for roi in [RoiBox { lower: [0, 0, 0], upper: [4, 1, 1] }, RoiBox { lower: [2, 0, 0], upper: [1, 1, 1] }] {
            assert!(matches!(crop_roi(&v, &roi), Err(VolumeError::RoiOutOfBounds { .. })));
        }
    }

    #[test]
    fn threshold_cases() {
        let n = 5;
        let v = ramp(n);
        assert!(threshold_points(&v, 100.0).is_empty());
        // value = i, last index = n - 1
        let slab = threshold_points(&v, (n - 1) as f64 - 0.5);
        assert_eq!(slab.len(), n * n);
        assert!(slab.points.iter().all(|p| p.x == (n - 1) as f64));
        // inclusive
        assert_eq!(threshold_points(&v, 4.0).len(), n * n);
    }
}
