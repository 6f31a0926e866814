//! Rigid-body poses as rotation plus body-frame translation, with
//! conversions to unit dual quaternions and homogeneous matrices.

use serde::{Deserialize, Serialize};

use crate::algebra::{Quaternion, UnitDualQuaternion};
use crate::error::{Error, Result};
use crate::tolerance::TOL_NORMALIZE;

/// 4×4 homogeneous transform, row-major.
pub type Matrix4 = [[f64; 4]; 4];

/// A pose `(q, p)` with unit rotation `q` and body-frame translation `p`,
/// encoded as the unit dual quaternion `q + (ε/2)·q·p`. Its homogeneous
/// matrix is `[R(q) | R(q)·p]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    #[serde(rename = "q")]
    pub rotation: Quaternion,
    #[serde(rename = "t")]
    pub translation: [f64; 3],
}

impl Pose {
    pub const IDENTITY: Self = Self { rotation: Quaternion::ONE, translation: [0.0; 3] };

    /// Validate the rotation and normalize it within `TOL_NORMALIZE`.
    pub fn new(rotation: Quaternion, translation: [f64; 3]) -> Result<Self> {
        let n = rotation.norm();
        if !n.is_finite() || (n - 1.0).abs() > TOL_NORMALIZE {
            return Err(Error::InvalidPose(format!("rotation norm {n}")));
        }
        if translation.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidPose("non-finite translation".into()));
        }
        Ok(Self { rotation: rotation.scale(1.0 / n), translation })
    }

    pub fn validate(&self) -> Result<Self> {
        Self::new(self.rotation, self.translation)
    }

    pub fn to_udq(&self) -> Result<UnitDualQuaternion> {
        let p = self.validate()?;
        UnitDualQuaternion::from_pose(p.rotation, Quaternion::imaginary(p.translation))
    }

    pub fn from_udq(q: UnitDualQuaternion) -> Self {
        let (rotation, p) = q.to_pose();
        Self { rotation, translation: p.vector() }
    }

    pub fn to_matrix(&self) -> Matrix4 {
        let r = self.rotation.to_rotation_matrix();
        let t = self.rotation.rotate(self.translation);
        let mut m = [[0.0; 4]; 4];
        for i in 0..3 {
            m[i][..3].copy_from_slice(&r[i]);
            m[i][3] = t[i];
        }
        m[3][3] = 1.0;
        m
    }

    /// Pose of a homogeneous transform. The rotation block must be
    /// orthonormal with determinant 1 and the bottom row `(0, 0, 0, 1)`.
    pub fn from_matrix(m: &Matrix4) -> Result<Self> {
        if m[3] != [0.0, 0.0, 0.0, 1.0] {
            return Err(Error::InvalidPose(format!("bottom row {:?}", m[3])));
        }
        let r: [[f64; 3]; 3] = std::array::from_fn(|i| [m[i][0], m[i][1], m[i][2]]);
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        if worst > TOL_NORMALIZE || (det - 1.0).abs() > TOL_NORMALIZE {
            return Err(Error::InvalidPose(format!(
                "rotation block is not a rotation (orthonormality {worst:e}, det {det})"
            )));
        }
        let q = Quaternion::from_rotation_matrix(&r);
        let t = [m[0][3], m[1][3], m[2][3]];
        Ok(Self { rotation: q, translation: q.conj().rotate(t) })
    }
}

/// Product of homogeneous matrices.
pub fn matrix_mul(a: &Matrix4, b: &Matrix4) -> Matrix4 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|k| a[i][k] * b[k][j]).sum()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_unit_dual_quaternion, rng};

    #[test]
    fn matrix_round_trip() {
        let mut r = rng(3);
        for _ in 0..100 {
            let p = Pose::from_udq(random_unit_dual_quaternion(&mut r, 2.0));
            let m = p.to_matrix();
            assert_eq!(m[3], [0.0, 0.0, 0.0, 1.0]);
            let back = Pose::from_matrix(&m).unwrap();
            let q = if back.rotation.dot(p.rotation) < 0.0 { -back.rotation } else { back.rotation };
            assert!(q.max_abs_diff(p.rotation) <= 1e-12);
            for k in 0..3 {
                assert!((back.translation[k] - p.translation[k]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn half_turn_uses_pivot() {
        let p = Pose::new(Quaternion::K, [1.0, 2.0, 3.0]).unwrap();
        let back = Pose::from_matrix(&p.to_matrix()).unwrap();
        assert!(back.rotation.max_abs_diff(Quaternion::K) <= 1e-15);
    }

    #[test]
    fn product_matches_matrix_product() {
        let mut r = rng(5);
        for _ in 0..50 {
            let a = random_unit_dual_quaternion(&mut r, 1.0);
            let b = random_unit_dual_quaternion(&mut r, 1.0);
            let m = matrix_mul(&Pose::from_udq(a).to_matrix(), &Pose::from_udq(b).to_matrix());
            let ab = Pose::from_udq(a * b).to_matrix();
            for i in 0..4 {
                for j in 0..4 {
                    assert!((m[i][j] - ab[i][j]).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_matrices() {
        let mut m = Pose::IDENTITY.to_matrix();
        m[0][0] = 2.0;
        assert!(matches!(Pose::from_matrix(&m), Err(Error::InvalidPose(_))));
        let mut m = Pose::IDENTITY.to_matrix();
        m[3][0] = 1.0;
        assert!(Pose::from_matrix(&m).is_err());
        assert!(Pose::new(Quaternion::new(2.0, 0.0, 0.0, 0.0), [0.0; 3]).is_err());
    }
}
