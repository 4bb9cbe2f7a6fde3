use super::{Mat3, PointCloud, UnitQuaternion, Vec3};

/// Proper rigid motion `p ↦ R·p + T`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RigidTransform {
    pub rotation: UnitQuaternion,
    pub translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl RigidTransform {
    pub const IDENTITY: RigidTransform = RigidTransform {
        rotation: UnitQuaternion::IDENTITY,
        translation: Vec3::ZERO,
    };

    pub const fn new(rotation: UnitQuaternion, translation: Vec3) -> Self {
        Self { rotation, translation }
    }

    pub const fn from_translation(t: Vec3) -> Self {
        Self::new(UnitQuaternion::IDENTITY, t)
    }

    pub const fn from_rotation(r: UnitQuaternion) -> Self {
        Self::new(r, Vec3::ZERO)
    }

    pub fn rotation_matrix(&self) -> Mat3 {
        self.rotation.to_matrix()
    }

    #[inline]
    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotation.rotate(p) + self.translation
    }

    #[inline]
    pub fn apply_vector(&self, v: Vec3) -> Vec3 {
        self.rotation.rotate(v)
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform::new(
            self.rotation * other.rotation,
            self.rotation.rotate(other.translation) + self.translation,
        )
    }

    pub fn inverse(&self) -> RigidTransform {
        let r_inv = self.rotation.conjugate();
        RigidTransform::new(r_inv, -r_inv.rotate(self.translation))
    }

    /// Row-major homogeneous 4×4 matrix.
    pub fn to_homogeneous(&self) -> [[f64; 4]; 4] {
        let m = self.rotation_matrix().rows;
        let t = self.translation;
        [
            [m[0][0], m[0][1], m[0][2], t.x],
            [m[1][0], m[1][1], m[1][2], t.y],
            [m[2][0], m[2][1], m[2][2], t.z],
            [0.0, 0.0, 0.0, 1.0],
        ]
    }

    pub fn transform_points(&self, cloud: &PointCloud) -> PointCloud {
        let m = self.rotation_matrix();
        PointCloud::new(cloud.points.iter().map(|&p| m.mul_vec(p) + self.translation).collect())
    }
}

/// Free-function form of [`RigidTransform::compose`].
pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    a.compose(b)
}

/// Free-function form of [`RigidTransform::inverse`].
pub fn invert(t: &RigidTransform) -> RigidTransform {
    t.inverse()
}

/// Applies `t` to every point, preserving order and cardinality.
pub fn transform_points(t: &RigidTransform, cloud: &PointCloud) -> PointCloud {
    t.transform_points(cloud)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::FRAC_PI_2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_transform(rng: &mut ChaCha8Rng) -> RigidTransform {
        let q = UnitQuaternion::normalize(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        )
        .unwrap();
        let t = Vec3::new(
            rng.random_range(-100.0..100.0),
            rng.random_range(-100.0..100.0),
            rng.random_range(-100.0..100.0),
        );
        RigidTransform::new(q, t)
    }

    fn hom_mul(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        out
    }

    #[test]
    fn identity_is_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = random_transform(&mut rng);
        assert_eq!(compose(&RigidTransform::IDENTITY, &t).translation, t.translation);
        assert!(compose(&RigidTransform::IDENTITY, &t).rotation.angle_to(&t.rotation) < 1e-12);
        assert_eq!(invert(&RigidTransform::IDENTITY), RigidTransform::IDENTITY);
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let t = random_transform(&mut rng);
            let id = compose(&t, &invert(&t));
            assert!(id.rotation.angle() < 1e-9);
            assert!(id.translation.max_abs() < 1e-9);
        }
    }

    #[test]
    fn translation_only_inverse_negates() {
        let t = RigidTransform::from_translation(Vec3::new(5.0, -2.0, 3.0));
        assert_eq!(invert(&t).translation, Vec3::new(-5.0, 2.0, -3.0));
    }

    #[test]
    fn compose_agrees_with_homogeneous_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (a, b) = (random_transform(&mut rng), random_transform(&mut rng));
            let expected = hom_mul(&a.to_homogeneous(), &b.to_homogeneous());
            let got = compose(&a, &b).to_homogeneous();
            for i in 0..4 {
                for j in 0..4 {
                    assert!((expected[i][j] - got[i][j]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn inverse_roundtrips_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let t = random_transform(&mut rng);
            let p = Vec3::new(
                rng.random_range(-200.0..200.0),
                rng.random_range(-200.0..200.0),
                rng.random_range(-200.0..200.0),
            );
            assert!((t.inverse().apply(t.apply(p)) - p).norm() < 1e-9);
        }
    }

    #[test]
    fn transform_points_cases() {
        let cloud = PointCloud::new(vec![Vec3::new(1.5, -2.25, 3.0), Vec3::new(0.1, 0.2, 0.3)]);
        let same = transform_points(&RigidTransform::IDENTITY, &cloud);
        for (a, b) in cloud.points.iter().zip(&same.points) {
            assert!((*a - *b).max_abs() <= 1e-15);
        }

        let shift = RigidTransform::from_translation(Vec3::new(5.0, -2.0, 3.0));
        let moved = transform_points(&shift, &PointCloud::new(vec![Vec3::ZERO]));
        assert_eq!(moved.points, vec![Vec3::new(5.0, -2.0, 3.0)]);

        let rz = RigidTransform::from_rotation(UnitQuaternion::from_axis_angle(Vec3::Z, FRAC_PI_2).unwrap());
        let out = transform_points(&rz, &PointCloud::new(vec![Vec3::X, Vec3::Y]));
        assert!((out.points[0] - Vec3::Y).max_abs() < 1e-12);
        assert!((out.points[1] - Vec3::new(-1.0, 0.0, 0.0)).max_abs() < 1e-12);
    }

    #[test]
    fn pairwise_distances_are_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_transform(&mut rng);
        let pts: alloc::vec::Vec<Vec3> = (0..50)
            .map(|_| Vec3::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)))
            .collect();
        let cloud = PointCloud::new(pts);
        let moved = t.transform_points(&cloud);
        for i in 0..cloud.len() {
            for j in 0..cloud.len() {
                let d0 = cloud.points[i].distance(cloud.points[j]);
                let d1 = moved.points[i].distance(moved.points[j]);
                assert!((d0 - d1).abs() < 1e-9);
            }
        }
    }
}
