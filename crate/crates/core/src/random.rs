//! Seeded sampling helpers. Every generator in the crate draws from a
//! `ChaCha8Rng` so runs are reproducible across platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::{DualQuaternion, Quaternion, UnitDualQuaternion};

pub type DetRng = ChaCha8Rng;

pub fn rng(seed: u64) -> DetRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for sub-task `index` of a seeded job.
pub fn derived_rng(seed: u64, index: u64) -> DetRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index + 1);
    r
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn gaussian_quaternion(rng: &mut impl Rng) -> Quaternion {
    Quaternion::new(normal(rng), normal(rng), normal(rng), normal(rng))
}

/// Uniform (Haar) random unit quaternion.
pub fn unit_quaternion(rng: &mut impl Rng) -> Quaternion {
    loop {
        if let Some(q) = gaussian_quaternion(rng).normalize() {
            return q;
        }
    }
}

/// Uniform random imaginary unit quaternion (rotation axis).
pub fn unit_axis(rng: &mut impl Rng) -> Quaternion {
    loop {
        let v = Quaternion::imaginary([normal(rng), normal(rng), normal(rng)]);
        if let Some(a) = v.normalize() {
            return a;
        }
    }
}

pub fn uniform_vec3(rng: &mut impl Rng, half_width: f64) -> [f64; 3] {
    [
        rng.random_range(-half_width..=half_width),
        rng.random_range(-half_width..=half_width),
        rng.random_range(-half_width..=half_width),
    ]
}

pub fn random_dual_quaternion(rng: &mut impl Rng) -> DualQuaternion {
    DualQuaternion::new(gaussian_quaternion(rng), gaussian_quaternion(rng))
}

pub fn random_unit_dual_quaternion(rng: &mut impl Rng, translation_scale: f64) -> UnitDualQuaternion {
    let p = Quaternion::imaginary([
        translation_scale * normal(rng),
        translation_scale * normal(rng),
        translation_scale * normal(rng),
    ]);
    UnitDualQuaternion::from_pose(unit_quaternion(rng), p).expect("sampled pose is valid")
}
