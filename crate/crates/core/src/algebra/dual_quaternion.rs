use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::{DualNumber, Quaternion};
use crate::error::{Error, Result};
use crate::tolerance::TOL_APP;

/// A dual quaternion `std + dual·ε`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DualQuaternion {
    pub std: Quaternion,
    pub dual: Quaternion,
}

impl DualQuaternion {
    pub const ZERO: Self = Self::new(Quaternion::ZERO, Quaternion::ZERO);
    pub const ONE: Self = Self::new(Quaternion::ONE, Quaternion::ZERO);

    pub const fn new(std: Quaternion, dual: Quaternion) -> Self {
        Self { std, dual }
    }

    pub const fn from_std(std: Quaternion) -> Self {
        Self::new(std, Quaternion::ZERO)
    }

    pub const fn infinitesimal(dual: Quaternion) -> Self {
        Self::new(Quaternion::ZERO, dual)
    }

    pub fn from_dual_number(d: DualNumber) -> Self {
        Self::new(Quaternion::real(d.std), Quaternion::real(d.dual))
    }

    pub fn is_appreciable(&self) -> bool {
        self.std.norm() > TOL_APP
    }

    pub fn conj(self) -> Self {
        Self::new(self.std.conj(), self.dual.conj())
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.std.scale(s), self.dual.scale(s))
    }

    /// Product with a dual number, `(a + bε)(q + q_dε) = aq + (a q_d + b q)ε`.
    pub fn scale_dual(self, d: DualNumber) -> Self {
        Self::new(
            self.std.scale(d.std),
            self.dual.scale(d.std) + self.std.scale(d.dual),
        )
    }

    /// `q̂* q̂` as a dual number: `|q|² + 2⟨q, q_d⟩ε`.
    pub fn norm_squared(self) -> DualNumber {
        let p = self.conj() * self;
        DualNumber::new(p.std.w, p.dual.w)
    }

    /// Dual-number magnitude.
    ///
    /// For appreciable `q̂` this is `|q| + (q q_d* + q_d q*)/(2|q|)·ε`,
    /// otherwise `|q_d|·ε`. The appreciability test uses `TOL_APP`.
    pub fn magnitude(self) -> DualNumber {
        let n = self.std.norm();
        if n > TOL_APP {
            let num = self.std * self.dual.conj() + self.dual * self.std.conj();
            DualNumber::new(n, num.w / (2.0 * n))
        } else {
            DualNumber::infinitesimal(self.dual.norm())
        }
    }

    /// `q̂⁻¹ = q⁻¹ − q⁻¹ q_d q⁻¹ ε`, defined for appreciable `q̂`.
    pub fn inverse(self) -> Result<Self> {
        if !self.is_appreciable() {
            return Err(Error::NotAppreciable);
        }
        let inv = self.std.inverse().ok_or(Error::NotAppreciable)?;
        Ok(Self::new(inv, -(inv * self.dual * inv)))
    }

    pub fn is_imaginary(&self, tol: f64) -> bool {
        self.std.w.abs() <= tol && self.dual.w.abs() <= tol
    }

    pub fn max_abs_diff(self, other: Self) -> f64 {
        self.std
            .max_abs_diff(other.std)
            .max(self.dual.max_abs_diff(other.dual))
    }

    /// Exponential in ε-arithmetic: `e^q + D exp(q)[q_d]·ε`, evaluated by
    /// scaling and squaring a truncated Taylor series. The dual part is
    /// linear in `q_d`, so the squaring count depends on `q` alone and the
    /// standard part never sees `q_d`.
    pub fn exp(self) -> Self {
        let n = self.std.norm();
        let squarings = if n > 0.25 { (n / 0.25).log2().ceil() as i32 } else { 0 };
        let scaled = self.scale(0.5f64.powi(squarings));
        let mut term = Self::ONE;
        let mut sum = Self::ONE;
        for k in 1..=20 {
            term = (term * scaled).scale(1.0 / k as f64);
            sum = sum + term;
        }
        for _ in 0..squarings {
            sum = sum * sum;
        }
        sum
    }

    pub fn to_coords(self) -> [f64; 8] {
        let [a, b, c, d] = self.std.to_array();
        let [e, f, g, h] = self.dual.to_array();
        [a, b, c, d, e, f, g, h]
    }
}

/// Dual-number magnitude of a dual quaternion.
pub fn dq_magnitude(q: DualQuaternion) -> DualNumber {
    q.magnitude()
}

/// Inverse of an appreciable dual quaternion.
pub fn dq_inverse(q: DualQuaternion) -> Result<DualQuaternion> {
    q.inverse()
}

impl Add for DualQuaternion {
    type Output = Self;
    fn add(self, r: Self) -> Self {
        Self::new(self.std + r.std, self.dual + r.dual)
    }
}

impl Sub for DualQuaternion {
    type Output = Self;
    fn sub(self, r: Self) -> Self {
        Self::new(self.std - r.std, self.dual - r.dual)
    }
}

impl Neg for DualQuaternion {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.std, -self.dual)
    }
}

impl Mul for DualQuaternion {
    type Output = Self;
    fn mul(self, r: Self) -> Self {
        Self::new(
            self.std * r.std,
            self.std * r.dual + self.dual * r.std,
        )
    }
}

impl fmt::Display for DualQuaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) + ({})ε", self.std, self.dual)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    const I: Quaternion = Quaternion::I;
    const K: Quaternion = Quaternion::K;

    #[test]
    fn magnitude_examples() {
        // 2 + iε: q q_d* + q_d q* = 2(−i) + i·2 = 0
        let m = DualQuaternion::new(Quaternion::real(2.0), I).magnitude();
        assert_eq!(m, DualNumber::new(2.0, 0.0));

        // (1+i) + 1ε: numerator (1+i) + (1−i) = 2, over 2√2
        let m = DualQuaternion::new(Quaternion::ONE + I, Quaternion::ONE).magnitude();
        assert!(m.approx_eq(DualNumber::new(SQRT_2, 1.0 / SQRT_2), 1e-15));

        // 0 + (3i + 4k)ε
        let m = DualQuaternion::infinitesimal(I.scale(3.0) + K.scale(4.0)).magnitude();
        assert_eq!(m, DualNumber::infinitesimal(5.0));
    }

    #[test]
    fn inverse_examples() {
        let q = DualQuaternion::new(Quaternion::ONE, I);
        let inv = q.inverse().unwrap();
        assert_eq!(inv, DualQuaternion::new(Quaternion::ONE, -I));
        assert_eq!(q * inv, DualQuaternion::ONE);

        let two = DualQuaternion::from_std(Quaternion::real(2.0));
        assert_eq!(two.inverse().unwrap(), DualQuaternion::from_std(Quaternion::real(0.5)));

        assert!(matches!(
            DualQuaternion::infinitesimal(I).inverse(),
            Err(Error::NotAppreciable)
        ));
    }

    #[test]
    fn inverse_is_two_sided() {
        let q = DualQuaternion::new(
            Quaternion::new(0.3, -1.0, 0.2, 0.5),
            Quaternion::new(1.5, 0.1, -0.7, 2.0),
        );
        let inv = q.inverse().unwrap();
        assert!((q * inv).max_abs_diff(DualQuaternion::ONE) < 1e-14);
        assert!((inv * q).max_abs_diff(DualQuaternion::ONE) < 1e-14);
    }

    #[test]
    fn squared_norm_hides_purely_dual_parts() {
        let r = DualQuaternion::infinitesimal(I);
        assert_eq!(r.norm_squared(), DualNumber::ZERO);
        assert_eq!(r.magnitude(), DualNumber::infinitesimal(1.0));
    }

    #[test]
    fn exp_matches_quaternion_exp_on_standard_part() {
        let q = DualQuaternion::new(
            Quaternion::new(0.2, 0.9, -1.4, 0.3),
            Quaternion::new(-0.1, 0.4, 0.2, 0.8),
        );
        let e = q.exp();
        assert!(e.std.max_abs_diff(q.std.exp()) < 1e-13);
        // the dual part is the directional derivative of exp
        let h = 1e-6;
        let fd = (q.std + q.dual.scale(h)).exp() - (q.std - q.dual.scale(h)).exp();
        assert!(e.dual.max_abs_diff(fd.scale(0.5 / h)) < 1e-8);
    }

    #[test]
    fn serializes_with_named_parts() {
        let q = DualQuaternion::new(Quaternion::ONE, I);
        let s = serde_json::to_string(&q).unwrap();
        assert_eq!(s, r#"{"std":[1.0,0.0,0.0,0.0],"dual":[0.0,1.0,0.0,0.0]}"#);
        let back: DualQuaternion = serde_json::from_str(&s).unwrap();
        assert_eq!(back, q);
    }
}
