use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use super::{DualNumber, DualQuaternion, Quaternion};

/// An ordered list of dual quaternions.
///
/// The flat real coordinate layout used by gradients and the solver is
/// `[x (4n) | x_d (4n)]`: all standard parts first, then all dual parts,
/// each quaternion as `[w, x, y, z]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DualQuaternionVector(pub Vec<DualQuaternion>);

impl DualQuaternionVector {
    pub fn new(entries: Vec<DualQuaternion>) -> Self {
        Self(entries)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![DualQuaternion::ZERO; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DualQuaternion> {
        self.0.iter()
    }

    pub fn from_parts(std: &[Quaternion], dual: &[Quaternion]) -> Self {
        assert_eq!(std.len(), dual.len());
        Self(std.iter().zip(dual).map(|(&s, &d)| DualQuaternion::new(s, d)).collect())
    }

    pub fn std_parts(&self) -> Vec<Quaternion> {
        self.0.iter().map(|q| q.std).collect()
    }

    pub fn dual_parts(&self) -> Vec<Quaternion> {
        self.0.iter().map(|q| q.dual).collect()
    }

    pub fn from_coords(coords: &[f64]) -> Self {
        assert_eq!(coords.len() % 8, 0, "coordinate vector length must be a multiple of 8");
        let n = coords.len() / 8;
        let quat = |off: usize| {
            Quaternion::new(coords[off], coords[off + 1], coords[off + 2], coords[off + 3])
        };
        Self((0..n).map(|v| DualQuaternion::new(quat(4 * v), quat(4 * n + 4 * v))).collect())
    }

    pub fn to_coords(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; 8 * n];
        for (v, q) in self.0.iter().enumerate() {
            out[4 * v..4 * v + 4].copy_from_slice(&q.std.to_array());
            out[4 * n + 4 * v..4 * n + 4 * v + 4].copy_from_slice(&q.dual.to_array());
        }
        out
    }

    /// `x̂* ŷ = Σ x̂_i* ŷ_i`.
    pub fn inner(&self, other: &Self) -> DualQuaternion {
        assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(&other.0)
            .fold(DualQuaternion::ZERO, |acc, (a, b)| acc + a.conj() * *b)
    }

    pub fn is_appreciable(&self) -> bool {
        self.0.iter().any(DualQuaternion::is_appreciable)
    }

    /// Dual-number 2-norm.
    ///
    /// With at least one appreciable entry this is the square root of
    /// `Σ |x̂_i|²` (squares in ε-arithmetic); otherwise every entry is
    /// `(x_i)_d ε` and the norm is `√(Σ |(x_i)_d|²)·ε`.
    pub fn norm2(&self) -> DualNumber {
        if self.is_appreciable() {
            let sum: DualNumber = self.0.iter().map(|q| {
                let m = q.magnitude();
                m * m
            }).sum();
            // Σ|x̂_i|² has a positive standard part here; this is the
            // first-order square root without the TOL_APP gate of `sqrt`.
            let root = sum.std.sqrt();
            DualNumber::new(root, sum.dual / (2.0 * root))
        } else {
            let s: f64 = self.0.iter().map(|q| q.dual.norm_squared()).sum();
            DualNumber::infinitesimal(s.sqrt())
        }
    }
}

/// Dual-number 2-norm of a dual quaternion vector.
pub fn dqvec_norm2(x: &DualQuaternionVector) -> DualNumber {
    x.norm2()
}

impl Index<usize> for DualQuaternionVector {
    type Output = DualQuaternion;
    fn index(&self, i: usize) -> &DualQuaternion {
        &self.0[i]
    }
}

impl IndexMut<usize> for DualQuaternionVector {
    fn index_mut(&mut self, i: usize) -> &mut DualQuaternion {
        &mut self.0[i]
    }
}

impl From<Vec<DualQuaternion>> for DualQuaternionVector {
    fn from(v: Vec<DualQuaternion>) -> Self {
        Self(v)
    }
}

impl FromIterator<DualQuaternion> for DualQuaternionVector {
    fn from_iter<I: IntoIterator<Item = DualQuaternion>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}
