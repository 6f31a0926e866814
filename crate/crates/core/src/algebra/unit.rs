use std::ops::Mul;

use serde::{Deserialize, Serialize};

use super::{DualQuaternion, Quaternion};
use crate::error::{Error, Result};
use crate::tolerance::{TOL_NORMALIZE, TOL_UNIT};

/// A validated unit dual quaternion, i.e. a rigid-body transform
/// `q + (ε/2)·q·p` with unit rotation `q` and body-frame translation `p`.
///
/// Constructors renormalize inputs within `TOL_NORMALIZE` of the unit
/// manifold and reject the rest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DualQuaternion", into = "DualQuaternion")]
pub struct UnitDualQuaternion(DualQuaternion);

/// Residuals of the two unit conditions: `| |q| − 1 |` and
/// `|Re(q q_d* + q_d q*)|`.
pub fn unit_residuals(q: &DualQuaternion) -> (f64, f64) {
    let n = q.std.norm();
    let cross = q.std * q.dual.conj() + q.dual * q.std.conj();
    ((n - 1.0).abs(), cross.w.abs())
}

pub fn is_unit(q: &DualQuaternion, tol: f64) -> bool {
    let (a, b) = unit_residuals(q);
    a <= tol && b <= tol
}

impl UnitDualQuaternion {
    pub const IDENTITY: Self = Self(DualQuaternion::ONE);

    /// Validate and project onto the unit manifold.
    pub fn new(q: DualQuaternion) -> Result<Self> {
        let (norm_dev, cross) = unit_residuals(&q);
        if norm_dev > TOL_NORMALIZE || cross > TOL_NORMALIZE {
            return Err(Error::NonUnit(format!(
                "| |q| - 1 | = {norm_dev:e}, |Re(q q_d* + q_d q*)| = {cross:e}"
            )));
        }
        let n = q.std.norm();
        let std = q.std.scale(1.0 / n);
        let dual = q.dual.scale(1.0 / n);
        let dual = dual - std.scale(std.dot(dual));
        Ok(Self(DualQuaternion::new(std, dual)))
    }

    pub fn from_rotation(q: Quaternion) -> Result<Self> {
        Self::from_pose(q, Quaternion::ZERO)
    }

    /// `q + (ε/2)·q·p` from a unit rotation and an imaginary body-frame
    /// translation `p`.
    pub fn from_pose(rotation: Quaternion, translation: Quaternion) -> Result<Self> {
        let n = rotation.norm();
        if (n - 1.0).abs() > TOL_NORMALIZE {
            return Err(Error::NonUnitRotation(n));
        }
        if !translation.is_imaginary(TOL_UNIT) {
            return Err(Error::NonImaginaryTranslation(translation.w));
        }
        let q = rotation.scale(1.0 / n);
        Ok(Self(DualQuaternion::new(q, (q * translation.imag()).scale(0.5))))
    }

    /// Rotation and body-frame translation `p = 2 q* q_d`.
    pub fn to_pose(self) -> (Quaternion, Quaternion) {
        let q = self.0.std;
        (q, (q.conj() * self.0.dual).scale(2.0).imag())
    }

    /// Translation in the spatial frame, `t = 2 q_d q*`.
    pub fn spatial_translation(self) -> [f64; 3] {
        (self.0.dual * self.0.std.conj()).scale(2.0).vector()
    }

    pub fn rotation(self) -> Quaternion {
        self.0.std
    }

    pub fn inner(self) -> DualQuaternion {
        self.0
    }

    pub fn conj(self) -> Self {
        Self(self.0.conj())
    }

    pub fn inverse(self) -> Self {
        self.conj()
    }

    /// Pick the representative with `w > 0`, or `w = 0` and the first
    /// nonzero of `(x, y, z)` positive. `q̂` and `−q̂` are the same transform.
    pub fn canonicalize(self) -> Self {
        if is_canonical_sign(self.0.std) {
            self
        } else {
            Self(-self.0)
        }
    }

    /// `½(θ·axis + ε·p)` with `θ ∈ [0, π]` taken from the canonical sign.
    pub fn log(self) -> DualQuaternion {
        let c = self.canonicalize();
        let (q, p) = c.to_pose();
        DualQuaternion::new(q.unit_log(), p.scale(0.5))
    }

    /// Inverse of [`UnitDualQuaternion::log`]: maps `w + w_d ε` (imaginary)
    /// to `e^w + e^w w_d ε`.
    pub fn exp(w: DualQuaternion) -> Result<Self> {
        if !w.is_imaginary(TOL_UNIT) {
            return Err(Error::NonUnit(format!(
                "exponent is not imaginary (real parts {}, {})",
                w.std.w, w.dual.w
            )));
        }
        let q = w.std.imag().exp();
        Ok(Self(DualQuaternion::new(q, q * w.dual.imag())))
    }

    /// Rotation angle of `q_a* q_b` in `[0, π]`.
    pub fn rotation_distance(self, other: Self) -> f64 {
        (self.0.std.conj() * other.0.std).rotation_angle()
    }
}

pub(crate) fn is_canonical_sign(q: Quaternion) -> bool {
    if q.w != 0.0 {
        return q.w > 0.0;
    }
    for c in [q.x, q.y, q.z] {
        if c != 0.0 {
            return c > 0.0;
        }
    }
    true
}

pub fn udq_from_pose(rotation: Quaternion, translation: Quaternion) -> Result<UnitDualQuaternion> {
    UnitDualQuaternion::from_pose(rotation, translation)
}

pub fn udq_to_pose(q: UnitDualQuaternion) -> (Quaternion, Quaternion) {
    q.to_pose()
}

pub fn udq_log(q: UnitDualQuaternion) -> DualQuaternion {
    q.log()
}

pub fn udq_exp(w: DualQuaternion) -> Result<UnitDualQuaternion> {
    UnitDualQuaternion::exp(w)
}

pub fn udq_canonicalize_sign(q: UnitDualQuaternion) -> UnitDualQuaternion {
    q.canonicalize()
}

impl Mul for UnitDualQuaternion {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self(self.0 * rhs.0)
    }
}

impl TryFrom<DualQuaternion> for UnitDualQuaternion {
    type Error = Error;
    fn try_from(q: DualQuaternion) -> Result<Self> {
        Self::new(q)
    }
}

impl From<UnitDualQuaternion> for DualQuaternion {
    fn from(q: UnitDualQuaternion) -> Self {
        q.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    const I: Quaternion = Quaternion::I;
    const J: Quaternion = Quaternion::J;
    const K: Quaternion = Quaternion::K;

    #[test]
    fn from_pose_examples() {
        let q = udq_from_pose(Quaternion::ONE, I.scale(2.0)).unwrap();
        assert_eq!(q.inner(), DualQuaternion::new(Quaternion::ONE, I));

        let q = udq_from_pose(K, Quaternion::ZERO).unwrap();
        assert_eq!(q.inner(), DualQuaternion::from_std(K));

        let r = (Quaternion::ONE + I).scale(FRAC_1_SQRT_2);
        let q = udq_from_pose(r, J).unwrap();
        let expected = DualQuaternion::new(r, (J + K).scale(FRAC_1_SQRT_2 / 2.0));
        assert!(q.inner().max_abs_diff(expected) < 1e-15);
    }

    #[test]
    fn from_pose_errors() {
        assert!(matches!(
            udq_from_pose(Quaternion::real(2.0), I),
            Err(Error::NonUnitRotation(_))
        ));
        assert!(matches!(
            udq_from_pose(Quaternion::ONE, Quaternion::ONE),
            Err(Error::NonImaginaryTranslation(_))
        ));
    }

    #[test]
    fn pose_round_trip() {
        let r = Quaternion::new(0.5, -0.1, 0.7, 0.2).normalize().unwrap();
        let p = Quaternion::imaginary([0.3, -2.0, 1.1]);
        let (r2, p2) = udq_from_pose(r, p).unwrap().to_pose();
        assert!(r2.max_abs_diff(r) < 1e-15);
        assert!(p2.max_abs_diff(p) < 1e-15);
    }

    #[test]
    fn log_examples() {
        let q = UnitDualQuaternion::new(DualQuaternion::new(Quaternion::ONE, I)).unwrap();
        assert!(udq_log(q).max_abs_diff(DualQuaternion::infinitesimal(I)) < 1e-15);

        assert_eq!(udq_log(UnitDualQuaternion::IDENTITY), DualQuaternion::ZERO);

        let q = UnitDualQuaternion::from_rotation((Quaternion::ONE + K).scale(FRAC_1_SQRT_2)).unwrap();
        let expected = DualQuaternion::from_std(K.scale(FRAC_PI_4));
        assert!(udq_log(q).max_abs_diff(expected) < 1e-15);
    }

    #[test]
    fn log_at_half_turn_uses_imaginary_axis() {
        let q = UnitDualQuaternion::from_pose(J, I).unwrap();
        let l = q.log();
        assert!(l.std.max_abs_diff(J.scale(std::f64::consts::FRAC_PI_2)) < 1e-15);
        let back = UnitDualQuaternion::exp(l).unwrap();
        assert!(back.inner().max_abs_diff(q.inner()) < 1e-15);
    }

    #[test]
    fn canonicalize_examples() {
        let neg_id = UnitDualQuaternion(-DualQuaternion::ONE);
        assert_eq!(neg_id.canonicalize(), UnitDualQuaternion::IDENTITY);

        let k = UnitDualQuaternion::from_rotation(K).unwrap();
        assert_eq!(k.canonicalize(), k);

        let q = UnitDualQuaternion::new(DualQuaternion::new(-K, I)).unwrap();
        let c = q.canonicalize();
        assert_eq!(c.inner(), DualQuaternion::new(K, -I));
        // same rigid transform
        let (r1, p1) = q.to_pose();
        let (r2, p2) = c.to_pose();
        assert_eq!(r1, -r2);
        assert!(p1.max_abs_diff(p2) < 1e-15);
        assert_eq!(c.canonicalize(), c);
    }

    #[test]
    fn constructor_normalizes_near_unit_and_rejects_far() {
        let q = DualQuaternion::new(Quaternion::real(1.0 + 5e-7), Quaternion::ZERO);
        let u = UnitDualQuaternion::new(q).unwrap();
        assert!(is_unit(&u.inner(), TOL_UNIT));
        let bad = DualQuaternion::new(Quaternion::real(1.1), Quaternion::ZERO);
        assert!(UnitDualQuaternion::new(bad).is_err());
        let bad = DualQuaternion::new(Quaternion::ONE, Quaternion::real(0.1));
        assert!(UnitDualQuaternion::new(bad).is_err());
    }

    #[test]
    fn unit_inverse_is_conjugate() {
        let q = udq_from_pose(
            Quaternion::new(0.2, 0.4, -0.8, 0.1).normalize().unwrap(),
            Quaternion::imaginary([1.0, 2.0, -0.5]),
        )
        .unwrap();
        let inv = q.inner().inverse().unwrap();
        assert!(inv.max_abs_diff(q.conj().inner()) < 1e-15);
    }

    #[test]
    fn deserialization_validates() {
        let ok: UnitDualQuaternion =
            serde_json::from_str(r#"{"std":[1.0,0.0,0.0,0.0],"dual":[0.0,0.5,0.0,0.0]}"#).unwrap();
        assert_eq!(ok.to_pose().1, I);
        let bad: std::result::Result<UnitDualQuaternion, _> =
            serde_json::from_str(r#"{"std":[2.0,0.0,0.0,0.0],"dual":[0.0,0.0,0.0,0.0]}"#);
        assert!(bad.is_err());
    }
}
