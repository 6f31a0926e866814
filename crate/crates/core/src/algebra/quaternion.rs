use std::fmt;
use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::tolerance::TOL_UNIT;

/// 4×4 row-major real matrix acting on quaternion coefficient vectors
/// `[w, x, y, z]`.
pub type Mat4 = [[f64; 4]; 4];

/// A quaternion `w + x·i + y·j + z·k`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Self = Self::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Self = Self::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Self = Self::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Self = Self::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub const fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub const fn real(w: f64) -> Self {
        Self::new(w, 0.0, 0.0, 0.0)
    }

    pub const fn imaginary(v: [f64; 3]) -> Self {
        Self::new(0.0, v[0], v[1], v[2])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn vector(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn imag(self) -> Self {
        Self::new(0.0, self.x, self.y, self.z)
    }

    pub fn conj(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Euclidean inner product of the coefficient vectors, `Re(p q*)`.
    pub fn dot(self, other: Self) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    pub fn inverse(self) -> Option<Self> {
        let n2 = self.norm_squared();
        (n2 > 0.0).then(|| self.conj().scale(1.0 / n2))
    }

    pub fn normalize(self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| self.scale(1.0 / n))
    }

    pub fn is_unit(self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    pub fn is_imaginary(self, tol: f64) -> bool {
        self.w.abs() <= tol
    }

    pub fn max_abs_diff(self, other: Self) -> f64 {
        (self.w - other.w)
            .abs()
            .max((self.x - other.x).abs())
            .max((self.y - other.y).abs())
            .max((self.z - other.z).abs())
    }

    /// `cos(θ/2) + sin(θ/2)·axis` for an imaginary unit `axis`.
    pub fn from_axis_angle(theta: f64, axis: Self) -> Result<Self> {
        if !axis.is_imaginary(TOL_UNIT) || !axis.is_unit(TOL_UNIT) {
            return Err(Error::NonUnitAxis);
        }
        let (s, c) = (0.5 * theta).sin_cos();
        Ok(Self::new(c, s * axis.x, s * axis.y, s * axis.z))
    }

    /// Rotation angle in `[0, π]` and unit axis of a unit quaternion,
    /// treating `q` and `-q` as the same rotation. The axis is `i` for the
    /// identity.
    pub fn to_axis_angle(self) -> (f64, Self) {
        let q = if self.w < 0.0 { -self } else { self };
        let s = q.imag().norm();
        if s == 0.0 {
            return (0.0, Self::I);
        }
        (2.0 * s.atan2(q.w), q.imag().scale(1.0 / s))
    }

    /// Rotation angle in `[0, π]` of the rotation represented by `self`.
    pub fn rotation_angle(self) -> f64 {
        2.0 * self.imag().norm().atan2(self.w.abs())
    }

    /// Quaternion exponential.
    pub fn exp(self) -> Self {
        let v = self.imag();
        let phi = v.norm();
        let ea = self.w.exp();
        if phi == 0.0 {
            return Self::real(ea);
        }
        let (s, c) = phi.sin_cos();
        (Self::real(c) + v.scale(s / phi)).scale(ea)
    }

    /// Logarithm of a unit quaternion: `(θ/2)·axis` with `θ/2 = atan2(|Im q|, Re q)`.
    pub fn unit_log(self) -> Self {
        let v = self.imag();
        let s = v.norm();
        if s == 0.0 {
            return Self::ZERO;
        }
        v.scale(s.atan2(self.w) / s)
    }

    /// Matrix `L(p)` with `L(p)·q = p q`.
    pub fn left_matrix(self) -> Mat4 {
        let Self { w, x, y, z } = self;
        [
            [w, -x, -y, -z],
            [x, w, -z, y],
            [y, z, w, -x],
            [z, -y, x, w],
        ]
    }

    /// Matrix `R(q)` with `R(q)·p = p q`.
    pub fn right_matrix(self) -> Mat4 {
        let Self { w, x, y, z } = self;
        [
            [w, -x, -y, -z],
            [x, w, z, -y],
            [y, -z, w, x],
            [z, y, -x, w],
        ]
    }

    /// Rotate a 3-vector: `q v q*`.
    pub fn rotate(self, v: [f64; 3]) -> [f64; 3] {
        (self * Self::imaginary(v) * self.conj()).vector()
    }

    /// 3×3 rotation matrix of a unit quaternion.
    pub fn to_rotation_matrix(self) -> [[f64; 3]; 3] {
        let Self { w, x, y, z } = self;
        [
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ]
    }

    /// Unit quaternion of a rotation matrix by the largest-pivot method.
    pub fn from_rotation_matrix(m: &[[f64; 3]; 3]) -> Self {
        let trace = m[0][0] + m[1][1] + m[2][2];
        let q = if trace >= m[0][0] && trace >= m[1][1] && trace >= m[2][2] {
            let s = 2.0 * (1.0 + trace).sqrt();
            Self::new(
                0.25 * s,
                (m[2][1] - m[1][2]) / s,
                (m[0][2] - m[2][0]) / s,
                (m[1][0] - m[0][1]) / s,
            )
        } else if m[0][0] >= m[1][1] && m[0][0] >= m[2][2] {
            let s = 2.0 * (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt();
            Self::new(
                (m[2][1] - m[1][2]) / s,
                0.25 * s,
                (m[0][1] + m[1][0]) / s,
                (m[0][2] + m[2][0]) / s,
            )
        } else if m[1][1] >= m[2][2] {
            let s = 2.0 * (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt();
            Self::new(
                (m[0][2] - m[2][0]) / s,
                (m[0][1] + m[1][0]) / s,
                0.25 * s,
                (m[1][2] + m[2][1]) / s,
            )
        } else {
            let s = 2.0 * (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt();
            Self::new(
                (m[1][0] - m[0][1]) / s,
                (m[0][2] + m[2][0]) / s,
                (m[1][2] + m[2][1]) / s,
                0.25 * s,
            )
        };
        q.normalize().unwrap_or(Self::ONE)
    }
}

/// `cos(θ/2) + sin(θ/2)·axis`.
pub fn q_exp_axis_angle(theta: f64, axis: Quaternion) -> Result<Quaternion> {
    Quaternion::from_axis_angle(theta, axis)
}

pub fn mat4_mul_vec(m: &Mat4, v: [f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row.iter().zip(&v).map(|(a, b)| a * b).sum();
    }
    out
}

pub fn mat4_transpose_mul_vec(m: &Mat4, v: [f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (r, row) in m.iter().enumerate() {
        for c in 0..4 {
            out[c] += row[c] * v[r];
        }
    }
    out
}

pub fn mat4_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            out[r][c] = (0..4).map(|k| a[r][k] * b[k][c]).sum();
        }
    }
    out
}

pub fn mat4_add(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = *a;
    for r in 0..4 {
        for c in 0..4 {
            out[r][c] += b[r][c];
        }
    }
    out
}

pub fn mat4_scale(a: &Mat4, s: f64) -> Mat4 {
    let mut out = *a;
    out.iter_mut().flatten().for_each(|v| *v *= s);
    out
}

/// Matrix of quaternion conjugation.
pub const CONJ_MATRIX: Mat4 = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, -1.0, 0.0, 0.0],
    [0.0, 0.0, -1.0, 0.0],
    [0.0, 0.0, 0.0, -1.0],
];

impl Add for Quaternion {
    type Output = Self;
    fn add(self, r: Self) -> Self {
        Self::new(self.w + r.w, self.x + r.x, self.y + r.y, self.z + r.z)
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, r: Self) {
        *self = *self + r;
    }
}

impl Sub for Quaternion {
    type Output = Self;
    fn sub(self, r: Self) -> Self {
        Self::new(self.w - r.w, self.x - r.x, self.y - r.y, self.z - r.z)
    }
}

impl Neg for Quaternion {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.w, -self.x, -self.y, -self.z)
    }
}

impl Mul for Quaternion {
    type Output = Self;
    fn mul(self, q: Self) -> Self {
        let p = self;
        Self::new(
            p.w * q.w - p.x * q.x - p.y * q.y - p.z * q.z,
            p.w * q.x + p.x * q.w + p.y * q.z - p.z * q.y,
            p.w * q.y - p.x * q.z + p.y * q.w + p.z * q.x,
            p.w * q.z + p.x * q.y - p.y * q.x + p.z * q.w,
        )
    }
}

impl Mul<f64> for Quaternion {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self.scale(s)
    }
}

impl Index<usize> for Quaternion {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.w,
            1 => &self.x,
            2 => &self.y,
            3 => &self.z,
            _ => panic!("quaternion index {i} out of range"),
        }
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}i + {}j + {}k", self.w, self.x, self.y, self.z)
    }
}

// Serialized as `[w, x, y, z]`.
impl Serialize for Quaternion {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_array().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Quaternion {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        <[f64; 4]>::deserialize(d).map(Self::from_array)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    const I: Quaternion = Quaternion::I;
    const J: Quaternion = Quaternion::J;
    const K: Quaternion = Quaternion::K;

    #[test]
    fn multiplication_table() {
        assert_eq!(I * J, K);
        assert_eq!(J * I, -K);
        assert_eq!(J * K, I);
        assert_eq!(K * J, -I);
        assert_eq!(K * I, J);
        assert_eq!(I * K, -J);
        for u in [I, J, K] {
            assert_eq!(u * u, -Quaternion::ONE);
        }
        assert_eq!(I * J * K, -Quaternion::ONE);
    }

    #[test]
    fn expanded_product() {
        let p = Quaternion::ONE + I;
        let q = Quaternion::ONE + J;
        assert_eq!(p * q, Quaternion::new(1.0, 1.0, 1.0, 1.0));
        let r = Quaternion::new(0.3, -1.2, 2.0, 0.7);
        assert_eq!(r * Quaternion::ONE, r);
    }

    #[test]
    fn axis_angle_examples() {
        let q = q_exp_axis_angle(PI, K).unwrap();
        assert!(q.max_abs_diff(K) < 1e-15);
        assert_eq!(q_exp_axis_angle(0.0, I).unwrap(), Quaternion::ONE);
        let q = q_exp_axis_angle(FRAC_PI_2, K).unwrap();
        assert!(q.max_abs_diff(Quaternion::new(FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2)) < 1e-15);
        assert!(q_exp_axis_angle(1.0, Quaternion::new(0.0, 2.0, 0.0, 0.0)).is_err());
        assert!(q_exp_axis_angle(1.0, Quaternion::new(0.5, 0.5, 0.5, 0.5)).is_err());
    }

    #[test]
    fn log_inverts_axis_angle() {
        let axis = Quaternion::new(0.0, 1.0, -2.0, 0.5).normalize().unwrap();
        let q = q_exp_axis_angle(1.3, axis).unwrap();
        assert!(q.unit_log().max_abs_diff(axis.scale(0.65)) < 1e-15);
        assert!(q.unit_log().exp().max_abs_diff(q) < 1e-15);
    }

    #[test]
    fn multiplication_matrices_match_product() {
        let p = Quaternion::new(0.3, -1.2, 2.0, 0.7);
        let q = Quaternion::new(-0.5, 0.4, 0.1, -2.2);
        let pq = (p * q).to_array();
        let via_l = mat4_mul_vec(&p.left_matrix(), q.to_array());
        let via_r = mat4_mul_vec(&q.right_matrix(), p.to_array());
        for c in 0..4 {
            assert!((pq[c] - via_l[c]).abs() < 1e-14);
            assert!((pq[c] - via_r[c]).abs() < 1e-14);
        }
        let conj = mat4_mul_vec(&CONJ_MATRIX, p.to_array());
        assert_eq!(Quaternion::from_array(conj), p.conj());
    }

    #[test]
    fn rotation_matrix_round_trip_near_pi() {
        let axis = Quaternion::new(0.0, 1.0, 1.0, -0.3).normalize().unwrap();
        for theta in [0.0, 0.4, 2.0, PI - 1e-9, PI] {
            let q = q_exp_axis_angle(theta, axis).unwrap();
            let back = Quaternion::from_rotation_matrix(&q.to_rotation_matrix());
            let back = if back.dot(q) < 0.0 { -back } else { back };
            assert!(back.max_abs_diff(q) < 1e-12, "theta {theta}");
        }
    }

    #[test]
    fn serializes_as_array() {
        let q = Quaternion::new(1.0, 2.0, 3.0, 4.0);
        assert_eq!(serde_json::to_string(&q).unwrap(), "[1.0,2.0,3.0,4.0]");
        let back: Quaternion = serde_json::from_str("[1.0,2.0,3.0,4.0]").unwrap();
        assert_eq!(back, q);
    }
}
