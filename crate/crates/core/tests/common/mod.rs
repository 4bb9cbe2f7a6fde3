#![allow(dead_code)]

use brachyplan_core::geom::{RigidTransform, UnitQuaternion, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn vec_in(rng: &mut impl Rng, half: f64) -> Vec3 {
    Vec3::new(rng.random_range(-half..=half), rng.random_range(-half..=half), rng.random_range(-half..=half))
}

/// Uniform rotation: a normalized 4-vector drawn from the unit ball.
pub fn rotation(rng: &mut impl Rng) -> UnitQuaternion {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
        let n2: f64 = q.iter().map(|c| c * c).sum();
        if n2 > 1e-4 && n2 <= 1.0 {
            return UnitQuaternion::normalize(q[0], q[1], q[2], q[3]).unwrap();
        }
    }
}

pub fn rotation_within(rng: &mut impl Rng, max_angle: f64) -> UnitQuaternion {
    let axis = loop {
        if let Some(a) = vec_in(rng, 1.0).normalized() {
            break a;
        }
    };
    UnitQuaternion::from_axis_angle(axis, rng.random_range(-max_angle..=max_angle)).unwrap()
}

pub fn transform(rng: &mut impl Rng, max_shift: f64) -> RigidTransform {
    RigidTransform { rotation: rotation(rng), translation: vec_in(rng, max_shift) }
}
