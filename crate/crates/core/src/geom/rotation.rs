use core::ops::Mul;

use super::{GeomError, Vec3};
use crate::math;

/// Tolerance on `|‖q‖ − 1|` accepted when constructing a [`UnitQuaternion`].
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// Row-major 3×3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3 {
    pub rows: [[f64; 3]; 3],
}

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3 {
        rows: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub const fn from_rows(rows: [[f64; 3]; 3]) -> Self {
        Self { rows }
    }

    pub fn from_cols(c0: Vec3, c1: Vec3, c2: Vec3) -> Self {
        Self::from_rows([[c0.x, c1.x, c2.x], [c0.y, c1.y, c2.y], [c0.z, c1.z, c2.z]])
    }

    pub fn col(&self, j: usize) -> Vec3 {
        Vec3::new(self.rows[0][j], self.rows[1][j], self.rows[2][j])
    }

    pub fn row(&self, i: usize) -> Vec3 {
        Vec3::from_array(self.rows[i])
    }

    pub fn transpose(&self) -> Mat3 {
        let r = &self.rows;
        Mat3::from_rows([
            [r[0][0], r[1][0], r[2][0]],
            [r[0][1], r[1][1], r[2][1]],
            [r[0][2], r[1][2], r[2][2]],
        ])
    }

    pub fn determinant(&self) -> f64 {
        self.row(0).dot(self.row(1).cross(self.row(2)))
    }

    #[inline]
    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        let r = &self.rows;
        Vec3::new(
            r[0][0] * v.x + r[0][1] * v.y + r[0][2] * v.z,
            r[1][0] * v.x + r[1][1] * v.y + r[1][2] * v.z,
            r[2][0] * v.x + r[2][1] * v.y + r[2][2] * v.z,
        )
    }

    /// Infinity norm of `MᵀM − I`.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.transpose() * *self;
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g.rows[i][j] - target).abs());
            }
        }
        worst
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, o: Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.rows[i][k] * o.rows[k][j]).sum();
            }
        }
        Mat3::from_rows(out)
    }
}

/// Rotation stored as a unit quaternion `(w, x, y, z)` with `w ≥ 0`.
///
/// `q` and `−q` describe the same rotation; the constructor picks the
/// representative with non-negative `w` (and, when `w == 0`, a positive
/// first non-zero vector component) so equality is meaningful.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitQuaternion {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl UnitQuaternion {
    pub const IDENTITY: UnitQuaternion = UnitQuaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    /// Accepts components whose norm is within [`UNIT_TOLERANCE`] of one.
    /// The components are kept as given apart from sign canonicalization.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self, GeomError> {
        if !(w.is_finite() && x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        let norm = math::sqrt(w * w + x * x + y * y + z * z);
        if (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(GeomError::InvalidRotation { norm });
        }
        Ok(Self::canonical(w, x, y, z))
    }

    /// Normalizes an arbitrary non-zero quaternion.
    pub fn normalize(w: f64, x: f64, y: f64, z: f64) -> Result<Self, GeomError> {
        let norm = math::sqrt(w * w + x * x + y * y + z * z);
        if !norm.is_finite() {
            return Err(GeomError::NonFinite);
        }
        if norm < 1e-300 {
            return Err(GeomError::InvalidRotation { norm });
        }
        Ok(Self::canonical(w / norm, x / norm, y / norm, z / norm))
    }

    fn canonical(w: f64, x: f64, y: f64, z: f64) -> Self {
        let flip = if w != 0.0 {
            w < 0.0
        } else if x != 0.0 {
            x < 0.0
        } else if y != 0.0 {
            y < 0.0
        } else {
            z < 0.0
        };
        if flip {
            Self { w: -w, x: -x, y: -y, z: -z }
        } else {
            Self { w, x, y, z }
        }
    }

    /// Rotation of `angle` radians about `axis` (normalized internally).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Result<Self, GeomError> {
        let axis = axis.normalized().ok_or(GeomError::ZeroAxis)?;
        let (s, c) = (math::sin(angle / 2.0), math::cos(angle / 2.0));
        Self::normalize(c, axis.x * s, axis.y * s, axis.z * s)
    }

    /// Turns about the fixed X, then Y, then Z axes (radians): `Rz · Ry · Rx`.
    pub fn from_euler_xyz(rx: f64, ry: f64, rz: f64) -> Self {
        let qx = Self::from_axis_angle(Vec3::X, rx).unwrap_or(Self::IDENTITY);
        let qy = Self::from_axis_angle(Vec3::Y, ry).unwrap_or(Self::IDENTITY);
        let qz = Self::from_axis_angle(Vec3::Z, rz).unwrap_or(Self::IDENTITY);
        qz * qy * qx
    }

    /// Converts a proper rotation matrix (Shepperd's method).
    pub fn from_matrix(m: &Mat3) -> Result<Self, GeomError> {
        let r = &m.rows;
        let trace = r[0][0] + r[1][1] + r[2][2];
        let (w, x, y, z);
        if trace > r[0][0].max(r[1][1]).max(r[2][2]) {
            let s = math::sqrt(1.0 + trace) * 2.0;
            w = 0.25 * s;
            x = (r[2][1] - r[1][2]) / s;
            y = (r[0][2] - r[2][0]) / s;
            z = (r[1][0] - r[0][1]) / s;
        } else if r[0][0] >= r[1][1] && r[0][0] >= r[2][2] {
            let s = math::sqrt(1.0 + r[0][0] - r[1][1] - r[2][2]) * 2.0;
            w = (r[2][1] - r[1][2]) / s;
            x = 0.25 * s;
            y = (r[0][1] + r[1][0]) / s;
            z = (r[0][2] + r[2][0]) / s;
        } else if r[1][1] >= r[2][2] {
            let s = math::sqrt(1.0 + r[1][1] - r[0][0] - r[2][2]) * 2.0;
            w = (r[0][2] - r[2][0]) / s;
            x = (r[0][1] + r[1][0]) / s;
            y = 0.25 * s;
            z = (r[1][2] + r[2][1]) / s;
        } else {
            let s = math::sqrt(1.0 + r[2][2] - r[0][0] - r[1][1]) * 2.0;
            w = (r[1][0] - r[0][1]) / s;
            x = (r[0][2] + r[2][0]) / s;
            y = (r[1][2] + r[2][1]) / s;
            z = 0.25 * s;
        }
        Self::normalize(w, x, y, z)
    }

    #[inline]
    pub fn w(&self) -> f64 {
        self.w
    }
    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }
    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }
    #[inline]
    pub fn z(&self) -> f64 {
        self.z
    }

    /// `[w, x, y, z]`
    pub fn to_array(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn conjugate(&self) -> Self {
        Self::canonical(self.w, -self.x, -self.y, -self.z)
    }

    /// The 3×3 rotation matrix of this quaternion.
    pub fn to_matrix(&self) -> Mat3 {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        let (xx, yy, zz) = (x * x, y * y, z * z);
        let (xy, xz, yz) = (x * y, x * z, y * z);
        let (wx, wy, wz) = (w * x, w * y, w * z);
        Mat3::from_rows([
            [1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy)],
            [2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx)],
            [2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)],
        ])
    }

    /// Rotates `v` by `q v q*`.
    pub fn rotate(&self, v: Vec3) -> Vec3 {
        let u = Vec3::new(self.x, self.y, self.z);
        let t = u.cross(v) * 2.0;
        v + t * self.w + u.cross(t)
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        let v = math::sqrt(self.x * self.x + self.y * self.y + self.z * self.z);
        2.0 * math::atan2(v, self.w.abs())
    }

    /// Angle of the relative rotation `self⁻¹ · other`.
    pub fn angle_to(&self, other: &UnitQuaternion) -> f64 {
        (self.conjugate() * *other).angle()
    }
}

impl Mul for UnitQuaternion {
    type Output = UnitQuaternion;
    /// Hamilton product; `(a * b).rotate(v) == a.rotate(b.rotate(v))`.
    fn mul(self, b: UnitQuaternion) -> UnitQuaternion {
        let a = self;
        let w = a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z;
        let x = a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y;
        let y = a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x;
        let z = a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w;
        UnitQuaternion::normalize(w, x, y, z).unwrap_or(UnitQuaternion::IDENTITY)
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for UnitQuaternion {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_array().serialize(s)
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for UnitQuaternion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [w, x, y, z] = <[f64; 4]>::deserialize(d)?;
        UnitQuaternion::new(w, x, y, z).map_err(serde::de::Error::custom)
    }
}

/// Matrix form of a unit quaternion. Fails when the components are not unit
/// length within [`UNIT_TOLERANCE`].
pub fn quat_to_matrix(w: f64, x: f64, y: f64, z: f64) -> Result<Mat3, GeomError> {
    UnitQuaternion::new(w, x, y, z).map(|q| q.to_matrix())
}
