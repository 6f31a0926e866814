//! Dual-quaternion-valued maps, in particular unit-valued ones, and their
//! composition with dual functions.

use std::fmt;
use std::sync::Arc;

use crate::algebra::{DualQuaternion, DualQuaternionVector, UnitDualQuaternion};
use crate::error::{Error, Result};
use crate::random::{random_dual_quaternion, rng};
use crate::tolerance::{TOL_NORMALIZE, TOL_UNIT};

use super::DualFunction;

type MapFn = dyn Fn(&DualQuaternionVector) -> DualQuaternion + Send + Sync;

/// A map from dual quaternion vectors to dual quaternions, evaluated in
/// ε-arithmetic. `standard` records whether the standard part of the output
/// depends only on the standard part of the input.
#[derive(Clone)]
pub struct DqMap {
    name: String,
    arity: usize,
    standard: bool,
    f: Arc<MapFn>,
}

impl fmt::Debug for DqMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// Number of sample points used to validate that a map is unit-valued.
const UNIT_SAMPLES: usize = 32;

impl DqMap {
    pub fn new<F>(name: &str, arity: usize, standard: bool, f: F) -> Self
    where
        F: Fn(&DualQuaternionVector) -> DualQuaternion + Send + Sync + 'static,
    {
        Self { name: name.to_string(), arity, standard, f: Arc::new(f) }
    }

    pub fn variable(var: usize, arity: usize) -> Self {
        Self::new(&format!("x{var}"), arity, true, move |x| x[var])
    }

    pub fn constant(c: DualQuaternion, arity: usize) -> Self {
        Self::new(&format!("{c}"), arity, true, move |_| c)
    }

    /// `x̂_var · |x̂_var|⁻¹`, unit-valued wherever `x̂_var` is appreciable.
    pub fn normalized(var: usize, arity: usize) -> Self {
        Self::new(&format!("x{var}/|x{var}|"), arity, true, move |x| {
            let q = x[var];
            match q.magnitude().recip() {
                Ok(inv) => q.scale_dual(inv),
                Err(_) => DualQuaternion::new(nan_quaternion(), nan_quaternion()),
            }
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_standard(&self) -> bool {
        self.standard
    }

    pub fn eval(&self, x: &DualQuaternionVector) -> DualQuaternion {
        (self.f)(x)
    }

    pub fn product(&self, other: &Self) -> Result<Self> {
        self.binary(other, "*", |a, b| a * b)
    }

    pub fn sum(&self, other: &Self) -> Result<Self> {
        self.binary(other, "+", |a, b| a + b)
    }

    pub fn conj(&self) -> Self {
        let f = self.f.clone();
        Self::new(&format!("({})*", self.name), self.arity, self.standard, move |x| f(x).conj())
    }

    fn binary(
        &self,
        other: &Self,
        op: &str,
        g: fn(DualQuaternion, DualQuaternion) -> DualQuaternion,
    ) -> Result<Self> {
        if self.arity != other.arity {
            return Err(Error::ArityMismatch(self.arity, other.arity));
        }
        let (a, b) = (self.f.clone(), other.f.clone());
        Ok(Self::new(
            &format!("({} {op} {})", self.name, other.name),
            self.arity,
            self.standard && other.standard,
            move |x| g(a(x), b(x)),
        ))
    }

    /// Check unit-valuedness on seeded random inputs.
    fn validate_unit(&self) -> Result<()> {
        let mut r = rng(0x756e_6974);
        for _ in 0..UNIT_SAMPLES {
            let x: DualQuaternionVector =
                (0..self.arity).map(|_| random_dual_quaternion(&mut r)).collect();
            let v = self.eval(&x);
            if !crate::algebra::is_unit(&v, TOL_NORMALIZE) {
                return Err(Error::NonUnitValue(format!("{self:?} evaluates to {v}")));
            }
        }
        Ok(())
    }
}

fn nan_quaternion() -> crate::algebra::Quaternion {
    crate::algebra::Quaternion::new(f64::NAN, f64::NAN, f64::NAN, f64::NAN)
}

fn nan_dq() -> DualQuaternion {
    DualQuaternion::new(nan_quaternion(), nan_quaternion())
}

/// `x̂ ↦ x̂^m` for a single variable.
pub fn make_power(m: u32) -> DqMap {
    DqMap::new(&format!("x^{m}"), 1, true, move |x| {
        (0..m).fold(DualQuaternion::ONE, |acc, _| acc * x[0])
    })
}

/// `x̂ ↦ |G(x̂)|`.
pub fn magnitude_of(g: &DqMap) -> DualFunction {
    let g = g.clone();
    let standard = g.standard;
    DualFunction::from_fn(&format!("|{g:?}|"), g.arity, standard, move |x| g.eval(x).magnitude())
}

/// `F ∘ G` for a unary `F` and a unit-valued `G`.
pub fn compose_unit(f: &DualFunction, g: &DqMap) -> Result<DualFunction> {
    if f.arity() != 1 {
        return Err(Error::ArityMismatch(f.arity(), 1));
    }
    g.validate_unit()?;
    let (f, g) = (f.clone(), g.clone());
    let standard = f.is_standard() && g.standard;
    Ok(DualFunction::from_fn(&format!("{f:?}∘{g:?}"), g.arity, standard, move |x| {
        f.eval(&DualQuaternionVector::new(vec![g.eval(x)]))
    }))
}

/// `x̂ ↦ log(G(x̂))` for a unit-valued `G`.
pub fn unit_log(g: &DqMap) -> Result<DqMap> {
    g.validate_unit()?;
    let inner = g.clone();
    Ok(DqMap::new(&format!("log({g:?})"), g.arity, g.standard, move |x| {
        UnitDualQuaternion::new(inner.eval(x)).map(UnitDualQuaternion::log).unwrap_or_else(|_| nan_dq())
    }))
}

/// `x̂ ↦ exp(G(x̂))` for an imaginary-valued `G`; the result is unit-valued.
pub fn unit_exp(g: &DqMap) -> DqMap {
    let inner = g.clone();
    DqMap::new(&format!("exp({g:?})"), g.arity, g.standard, move |x| {
        let w = inner.eval(x);
        if !w.is_imaginary(TOL_UNIT) {
            return nan_dq();
        }
        UnitDualQuaternion::exp(w).map(DualQuaternion::from).unwrap_or_else(|_| nan_dq())
    })
}

/// `x̂ ↦ e^{G(x̂)}` with the analytic dual quaternion exponential, defined
/// for every input.
pub fn exp_lift(g: &DqMap) -> DqMap {
    let inner = g.clone();
    DqMap::new(&format!("exp({g:?})"), g.arity, g.standard, move |x| inner.eval(x).exp())
}
