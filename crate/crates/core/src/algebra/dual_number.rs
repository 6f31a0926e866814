use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance::TOL_APP;

/// A dual number `std + dual·ε` with `ε² = 0`.
///
/// Dual numbers carry a lexicographic total order: compare the standard
/// parts, break ties with the dual parts. [`DualNumber::total_cmp`] is that
/// order with exact floating comparison; use [`DualNumber::approx_eq`] in
/// tests that need slack.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DualNumber {
    pub std: f64,
    pub dual: f64,
}

impl DualNumber {
    pub const ZERO: Self = Self { std: 0.0, dual: 0.0 };
    pub const ONE: Self = Self { std: 1.0, dual: 0.0 };

    pub const fn new(std: f64, dual: f64) -> Self {
        Self { std, dual }
    }

    pub const fn real(std: f64) -> Self {
        Self { std, dual: 0.0 }
    }

    pub const fn infinitesimal(dual: f64) -> Self {
        Self { std: 0.0, dual }
    }

    pub fn is_appreciable(self) -> bool {
        self.std.abs() > TOL_APP
    }

    /// Lexicographic total order. NaN components compare by
    /// `f64::total_cmp` so the order stays total even on garbage input.
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        match self.std.partial_cmp(&other.std) {
            Some(Ordering::Equal) => {}
            Some(ord) => return ord,
            None => return self.std.total_cmp(&other.std),
        }
        self.dual
            .partial_cmp(&other.dual)
            .unwrap_or_else(|| self.dual.total_cmp(&other.dual))
    }

    pub fn min(self, other: Self) -> Self {
        if other.total_cmp(&self) == Ordering::Less {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other.total_cmp(&self) == Ordering::Greater {
            other
        } else {
            self
        }
    }

    /// Componentwise comparison with absolute tolerance `tol`.
    pub fn approx_eq(self, other: Self, tol: f64) -> bool {
        (self.std - other.std).abs() <= tol && (self.dual - other.dual).abs() <= tol
    }

    /// Square root by the first-order rule `√a + b/(2√a)·ε`.
    ///
    /// `0 + 0ε` maps to zero. A standard part within `TOL_APP` of zero with a
    /// nonzero dual part has no square root.
    pub fn sqrt(self) -> Result<Self> {
        if self.std < -TOL_APP {
            return Err(Error::NegativeStandardPart(self.std));
        }
        if self.std <= TOL_APP {
            if self.dual == 0.0 {
                return Ok(Self::ZERO);
            }
            return Err(Error::InfinitesimalSqrt(self.dual));
        }
        let root = self.std.sqrt();
        Ok(Self::new(root, self.dual / (2.0 * root)))
    }

    pub fn recip(self) -> Result<Self> {
        if !self.is_appreciable() {
            return Err(Error::NotAppreciable);
        }
        let inv = 1.0 / self.std;
        Ok(Self::new(inv, -self.dual * inv * inv))
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.std * s, self.dual * s)
    }
}

/// Free-function form of the total order.
pub fn dn_compare(p: DualNumber, q: DualNumber) -> Ordering {
    p.total_cmp(&q)
}

impl Add for DualNumber {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.std + rhs.std, self.dual + rhs.dual)
    }
}

impl Sub for DualNumber {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.std - rhs.std, self.dual - rhs.dual)
    }
}

impl Mul for DualNumber {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.std * rhs.std,
            self.std * rhs.dual + self.dual * rhs.std,
        )
    }
}

impl Neg for DualNumber {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.std, -self.dual)
    }
}

impl std::iter::Sum for DualNumber {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |acc, x| acc + x)
    }
}

impl fmt::Display for DualNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dual < 0.0 {
            write!(f, "{} - {}ε", self.std, -self.dual)
        } else {
            write!(f, "{} + {}ε", self.std, self.dual)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_breaks_ties_on_dual_part() {
        let a = DualNumber::new(1.0, 2.0);
        let b = DualNumber::new(1.0, 3.0);
        assert_eq!(dn_compare(a, b), Ordering::Less);
    }

    #[test]
    fn order_standard_part_dominates() {
        let a = DualNumber::new(0.0, 5.0);
        let b = DualNumber::new(1.0, -100.0);
        assert_eq!(dn_compare(a, b), Ordering::Less);
        assert_eq!(dn_compare(b, a), Ordering::Greater);
    }

    #[test]
    fn order_is_reflexive() {
        let a = DualNumber::new(2.0, 0.0);
        assert_eq!(dn_compare(a, a), Ordering::Equal);
    }

    #[test]
    fn min_max_follow_the_order() {
        let a = DualNumber::new(1.0, 5.0);
        let b = DualNumber::new(1.0, 3.0);
        assert_eq!(a.min(b), b);
        assert_eq!(a.max(b), a);
    }

    #[test]
    fn sqrt_examples() {
        // (2 + ε)² = 4 + 4ε
        let root = DualNumber::new(4.0, 4.0).sqrt().unwrap();
        assert_eq!(root, DualNumber::new(2.0, 1.0));
        assert_eq!(root * root, DualNumber::new(4.0, 4.0));
        assert_eq!(DualNumber::ONE.sqrt().unwrap(), DualNumber::ONE);
        assert_eq!(DualNumber::ZERO.sqrt().unwrap(), DualNumber::ZERO);
    }

    #[test]
    fn sqrt_errors() {
        assert!(matches!(
            DualNumber::new(-1.0, 0.0).sqrt(),
            Err(Error::NegativeStandardPart(_))
        ));
        assert!(matches!(
            DualNumber::infinitesimal(3.0).sqrt(),
            Err(Error::InfinitesimalSqrt(_))
        ));
    }

    #[test]
    fn product_respects_nilpotency() {
        let eps = DualNumber::infinitesimal(1.0);
        assert_eq!(eps * eps, DualNumber::ZERO);
        let p = DualNumber::new(2.0, 3.0) * DualNumber::new(5.0, 7.0);
        assert_eq!(p, DualNumber::new(10.0, 2.0 * 7.0 + 3.0 * 5.0));
    }

    #[test]
    fn recip_inverts() {
        let a = DualNumber::new(2.0, 3.0);
        let prod = a * a.recip().unwrap();
        assert!(prod.approx_eq(DualNumber::ONE, 1e-15));
        assert!(DualNumber::infinitesimal(1.0).recip().is_err());
    }
}
