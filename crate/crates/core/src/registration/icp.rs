use alloc::vec::Vec;

use super::{fit_rigid, NnIndex, RegistrationError};
use crate::geom::{PointCloud, RigidTransform, Vec3};

/// Stopping rules for [`icp`].
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct IcpParams {
    /// Stop once the mean square error (mm²) drops below this.
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Stop once `(previous − current) / previous` falls below this.
    pub min_relative_improvement: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self { epsilon: 1e-4, max_iterations: 100, min_relative_improvement: 1e-6 }
    }
}

impl IcpParams {
    pub fn validate(&self) -> Result<(), RegistrationError> {
        if !(self.epsilon > 0.0) {
            return Err(RegistrationError::InvalidParams("epsilon must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(RegistrationError::InvalidParams("max_iterations must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.min_relative_improvement) {
            return Err(RegistrationError::InvalidParams("min_relative_improvement must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Why ICP stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Termination {
    EpsilonReached,
    Stalled,
    MaxIterations,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IcpResult {
    /// Cumulative transform (including the initial one) taking the moving
    /// cloud into the fixed cloud's frame.
    pub transform: RigidTransform,
    /// Mean square error after each accepted iteration (mm²).
    pub mse_trace: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
}

impl IcpResult {
    pub fn final_mse(&self) -> Option<f64> {
        self.mse_trace.last().copied()
    }
}

/// Point-to-point ICP.
///
/// Each iteration pairs every moving point with its closest fixed point,
/// solves the closed-form least-squares rigid fit onto those partners,
/// applies it, and records the mean square error between the moved points
/// and their partners. A step that would raise the error (possible only
/// through rounding at convergence) is discarded and ends the run as
/// [`Termination::Stalled`], so the trace never increases.
pub fn icp(
    moving: &PointCloud,
    fixed: &NnIndex,
    init: &RigidTransform,
    params: &IcpParams,
) -> Result<IcpResult, RegistrationError> {
    params.validate()?;
    if moving.is_empty() {
        return Err(RegistrationError::EmptyCloud);
    }
    let mut current = init.transform_points(moving).points;
    let mut total = *init;
    let mut trace: Vec<f64> = Vec::new();
    let mut partners: Vec<Vec3> = Vec::with_capacity(current.len());

    let termination = loop {
        partners.clear();
        partners.extend(current.iter().map(|&p| fixed.point(fixed.nearest(p).index)));
        if partners.iter().all(|q| *q == partners[0]) {
            return Err(RegistrationError::Degenerate("closest-point set collapsed to a single point"));
        }
        let step = fit_rigid(&current, &partners)?;
        let next: Vec<Vec3> = current.iter().map(|&p| step.apply(p)).collect();
        let mse = mean_square(&next, &partners);

        let previous = trace.last().copied();
        if previous.is_some_and(|prev| mse > prev) {
            break Termination::Stalled;
        }
        trace.push(mse);
        total = step.compose(&total);
        current = next;

        if mse < params.epsilon {
            break Termination::EpsilonReached;
        }
        if let Some(prev) = previous {
            if prev - mse < params.min_relative_improvement * prev {
                break Termination::Stalled;
            }
        }
        if trace.len() >= params.max_iterations {
            break Termination::MaxIterations;
        }
    };
    Ok(IcpResult { transform: total, iterations: trace.len(), mse_trace: trace, termination })
}

fn mean_square(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p.distance_squared(*q)).sum::<f64>() / a.len() as f64
}

/// Mean over `moving` of the squared distance from `t(uᵢ)` to its nearest
/// fixed point (mm²). Zero for an empty cloud.
pub fn residual_mse(t: &RigidTransform, moving: &PointCloud, fixed: &NnIndex) -> f64 {
    if moving.is_empty() {
        return 0.0;
    }
    moving.points.iter().map(|&u| fixed.nearest(t.apply(u)).distance_squared).sum::<f64>() / moving.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registration::build_nn_index;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blob(seed: u64, n: usize) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PointCloud::new(
            (0..n)
                .map(|_| Vec3::new(rng.random_range(-30.0..30.0), rng.random_range(-20.0..20.0), rng.random_range(-10.0..10.0)))
                .collect(),
        )
    }

    #[test]
    fn identical_clouds_stop_immediately() {
        let p = blob(1, 200);
        let idx = build_nn_index(&p).unwrap();
        let r = icp(&p, &idx, &RigidTransform::IDENTITY, &IcpParams::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.mse_trace, vec![0.0]);
        assert_eq!(r.termination, Termination::EpsilonReached);
        assert!(r.transform.rotation.angle() < 1e-12);
        assert!(r.transform.translation.max_abs() < 1e-12);
    }

    #[test]
    fn huge_epsilon_stops_after_one_iteration() {
        let p = blob(2, 100);
        let idx = build_nn_index(&p).unwrap();
        let init = RigidTransform::from_translation(Vec3::new(1.0, 2.0, 3.0));
        let params = IcpParams { epsilon: 1e12, ..IcpParams::default() };
        let r = icp(&p, &idx, &init, &params).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.termination, Termination::EpsilonReached);
    }

    #[test]
    fn collapsed_partners_are_degenerate() {
        let fixed = build_nn_index(&PointCloud::new(vec![Vec3::ZERO])).unwrap();
        let err = icp(&blob(3, 10), &fixed, &RigidTransform::IDENTITY, &IcpParams::default()).unwrap_err();
        assert!(matches!(err, RegistrationError::Degenerate(_)));
    }

    #[test]
    fn bad_params() {
        let p = blob(4, 10);
        let idx = build_nn_index(&p).unwrap();
        for params in [
            IcpParams { epsilon: 0.0, ..Default::default() },
            IcpParams { max_iterations: 0, ..Default::default() },
            IcpParams { min_relative_improvement: 1.0, ..Default::default() },
        ] {
            assert!(matches!(
                icp(&p, &idx, &RigidTransform::IDENTITY, &params),
                Err(RegistrationError::InvalidParams(_))
            ));
        }
    }

    #[test]
    fn residual_cases() {
        let p = blob(5, 50);
        let idx = build_nn_index(&p).unwrap();
        assert_eq!(residual_mse(&RigidTransform::IDENTITY, &p, &idx), 0.0);

        let single = build_nn_index(&PointCloud::new(vec![Vec3::ZERO])).unwrap();
        let m = PointCloud::new(vec![Vec3::new(3.0, 4.0, 0.0)]);
        assert_eq!(residual_mse(&RigidTransform::IDENTITY, &m, &single), 25.0);
    }

    #[test]
    fn residual_matches_double_loop() {
        let fixed = blob(6, 300);
        let moving = blob(7, 120);
        let idx = build_nn_index(&fixed).unwrap();
        let t = RigidTransform::new(
            crate::geom::UnitQuaternion::from_axis_angle(Vec3::new(1.0, 2.0, 3.0), 0.3).unwrap(),
            Vec3::new(1.0, -2.0, 0.5),
        );
        let brute: f64 = moving
            .points
            .iter()
            .map(|&u| {
                let p = t.apply(u);
                fixed.points.iter().map(|q| q.distance_squared(p)).fold(f64::INFINITY, f64::min)
            })
            .sum::<f64>()
            / moving.len() as f64;
        assert!((residual_mse(&t, &moving, &idx) - brute).abs() < 1e-12);
    }
}
