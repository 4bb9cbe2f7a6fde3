use alloc::vec::Vec;

use super::RegistrationError;
use crate::geom::{RigidTransform, UnitQuaternion, Vec3};
use crate::linalg::symmetric_eigen;
use crate::math;

/// Source sets whose second covariance eigenvalue is at most this fraction of
/// the largest are treated as collinear.
pub const COLLINEARITY_RATIO: f64 = 1e-10;

/// Corresponded landmark pairs: `source[i]` (model frame) matches
/// `target[i]` (image frame).
#[derive(Clone, Debug, PartialEq)]
pub struct CorrespondencePairs {
    source: Vec<Vec3>,
    target: Vec<Vec3>,
}

impl CorrespondencePairs {
    /// Validates equal length, at least three pairs and a non-collinear source.
    pub fn new(source: Vec<Vec3>, target: Vec<Vec3>) -> Result<Self, RegistrationError> {
        check_inputs(&source, &target)?;
        Ok(Self { source, target })
    }

    pub fn source(&self) -> &[Vec3] {
        &self.source
    }

    pub fn target(&self) -> &[Vec3] {
        &self.target
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec3, Vec3)> + '_ {
        self.source.iter().copied().zip(self.target.iter().copied())
    }
}

fn check_inputs(source: &[Vec3], target: &[Vec3]) -> Result<(), RegistrationError> {
    if source.len() != target.len() {
        return Err(RegistrationError::LengthMismatch { source_len: source.len(), target_len: target.len() });
    }
    if source.len() < 3 {
        return Err(RegistrationError::TooFewPoints { required: 3, got: source.len() });
    }
    if !source.iter().chain(target).all(|p| p.is_finite()) {
        return Err(RegistrationError::NonFinite);
    }
    let spread = covariance_eigenvalues(source);
    if !(spread[0] > 0.0) || spread[1] <= COLLINEARITY_RATIO * spread[0] {
        return Err(RegistrationError::Degenerate("source points are coincident or collinear"));
    }
    Ok(())
}

fn centroid(points: &[Vec3]) -> Vec3 {
    points.iter().copied().sum::<Vec3>() / points.len() as f64
}

fn covariance_eigenvalues(points: &[Vec3]) -> [f64; 3] {
    let c = centroid(points);
    let mut cov = [[0.0; 3]; 3];
    for p in points {
        let d = (*p - c).to_array();
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += d[i] * d[j];
            }
        }
    }
    symmetric_eigen(cov).values
}

/// Least-squares rigid transform taking `source` onto `target`
/// (`min Σ‖tᵢ − (R·sᵢ + T)‖²`), computed in closed form from the dominant
/// eigenvector of Horn's 4×4 symmetric matrix built from the centered
/// cross-covariance. Scale is fixed at one.
pub fn fit_rigid(source: &[Vec3], target: &[Vec3]) -> Result<RigidTransform, RegistrationError> {
    check_inputs(source, target)?;
    let (cs, ct) = (centroid(source), centroid(target));

    // s[a][b] = Σ (source_a)(target_b) over centered coordinates.
    let mut s = [[0.0; 3]; 3];
    for (p, q) in source.iter().zip(target) {
        let (a, b) = ((*p - cs).to_array(), (*q - ct).to_array());
        for i in 0..3 {
            for j in 0..3 {
                s[i][j] += a[i] * b[j];
            }
        }
    }
    let [[sxx, sxy, sxz], [syx, syy, syz], [szx, szy, szz]] = s;
    let n = [
        [sxx + syy + szz, syz - szy, szx - sxz, sxy - syx],
        [syz - szy, sxx - syy - szz, sxy + syx, szx + sxz],
        [szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy],
        [sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz],
    ];
    let eig = symmetric_eigen(n);
    let [w, x, y, z] = eig.vectors[0];
    let rotation =
        UnitQuaternion::normalize(w, x, y, z).map_err(|_| RegistrationError::Degenerate("no dominant rotation"))?;
    let translation = ct - rotation.rotate(cs);
    Ok(RigidTransform::new(rotation, translation))
}

/// Closed-form absolute orientation for landmark pairs (source → target).
pub fn absolute_orientation(pairs: &CorrespondencePairs) -> Result<RigidTransform, RegistrationError> {
    fit_rigid(&pairs.source, &pairs.target)
}

/// RMS of `‖targetᵢ − t(sourceᵢ)‖` in millimeters.
pub fn fiducial_registration_error(t: &RigidTransform, pairs: &CorrespondencePairs) -> f64 {
    rms_error(t, pairs.source(), pairs.target())
}

pub(crate) fn rms_error(t: &RigidTransform, source: &[Vec3], target: &[Vec3]) -> f64 {
    if source.is_empty() {
        return 0.0;
    }
    let sum: f64 = source.iter().zip(target).map(|(s, q)| t.apply(*s).distance_squared(*q)).sum();
    math::sqrt(sum / source.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::FRAC_PI_2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tri() -> Vec<Vec3> {
        vec![Vec3::ZERO, Vec3::X, Vec3::Y]
    }

    #[test]
    fn identity_case() {
        let pairs = CorrespondencePairs::new(tri(), tri()).unwrap();
        let t = absolute_orientation(&pairs).unwrap();
        assert!(t.rotation.angle() < 1e-12);
        assert!(t.translation.max_abs() < 1e-12);
        assert!(fiducial_registration_error(&t, &pairs) < 1e-12);
    }

    #[test]
    fn pure_translation() {
        let shift = Vec3::new(5.0, -2.0, 3.0);
        let target = tri().into_iter().map(|p| p + shift).collect();
        let t = absolute_orientation(&CorrespondencePairs::new(tri(), target).unwrap()).unwrap();
        assert!(t.rotation.angle() < 1e-12);
        assert!((t.translation - shift).max_abs() < 1e-12);
    }

    #[test]
    fn quarter_turn_then_shift() {
        let truth = RigidTransform::new(
            UnitQuaternion::from_axis_angle(Vec3::Z, FRAC_PI_2).unwrap(),
            Vec3::new(1.0, 1.0, 0.0),
        );
        let target: Vec<Vec3> = tri().iter().map(|&p| truth.apply(p)).collect();
        let t = absolute_orientation(&CorrespondencePairs::new(tri(), target.clone()).unwrap()).unwrap();
        for (s, q) in tri().iter().zip(&target) {
            assert!(t.apply(*s).distance(*q) < 1e-9);
        }
    }

    #[test]
    fn input_errors() {
        assert!(matches!(
            CorrespondencePairs::new(tri(), vec![Vec3::ZERO, Vec3::X]),
            Err(RegistrationError::LengthMismatch { .. })
        ));
        assert!(matches!(
            CorrespondencePairs::new(vec![Vec3::ZERO, Vec3::X], vec![Vec3::ZERO, Vec3::X]),
            Err(RegistrationError::TooFewPoints { .. })
        ));
        let line = vec![Vec3::ZERO, Vec3::X, Vec3::X * 2.0];
        assert!(matches!(
            CorrespondencePairs::new(line.clone(), line),
            Err(RegistrationError::Degenerate(_))
        ));
        let same = vec![Vec3::X; 4];
        assert!(matches!(CorrespondencePairs::new(same.clone(), same), Err(RegistrationError::Degenerate(_))));
    }

    #[test]
    fn single_pair_fre() {
        let pairs = CorrespondencePairs { source: vec![Vec3::ZERO], target: vec![Vec3::new(0.0, 0.0, 2.0)] };
        assert!((fiducial_registration_error(&RigidTransform::IDENTITY, &pairs) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn noisy_fre_is_bounded() {
        let sigma = 0.5;
        let normal = |rng: &mut ChaCha8Rng| {
            // Box–Muller
            let (u1, u2): (f64, f64) = (rng.random_range(1e-12..1.0), rng.random());
            math::sqrt(-2.0 * libm::log(u1)) * math::cos(2.0 * core::f64::consts::PI * u2)
        };
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let source: Vec<Vec3> = (0..4)
                .map(|_| Vec3::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)))
                .collect();
            let truth = RigidTransform::new(
                UnitQuaternion::normalize(rng.random(), rng.random(), rng.random(), rng.random()).unwrap(),
                Vec3::new(rng.random(), rng.random(), rng.random()) * 20.0,
            );
            let target = source
                .iter()
                .map(|&p| truth.apply(p) + Vec3::new(normal(&mut rng), normal(&mut rng), normal(&mut rng)) * sigma)
                .collect();
            let pairs = CorrespondencePairs::new(source, target).unwrap();
            let fre = fiducial_registration_error(&absolute_orientation(&pairs).unwrap(), &pairs);
            assert!((0.0..=3.0 * sigma).contains(&fre), "seed {seed}: {fre}");
        }
    }
}
