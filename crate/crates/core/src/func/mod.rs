//! Dual-number-valued functions of dual quaternion vectors.
//!
//! A function `f̂(x̂) = f(x, x_d) + f_d(x, x_d)·ε` is represented by its
//! exact ε-arithmetic evaluation plus, where available, a smoothed
//! surrogate with analytic gradients of both parts over the `8n` real
//! coordinates (`[x | x_d]` layout, see [`DualQuaternionVector`]).

mod check;
mod combine;
mod residual;
mod unit_map;

use std::fmt;
use std::sync::Arc;

use crate::algebra::{DualNumber, DualQuaternionVector};

pub use check::{check_standardness, gradient_check, gradient_check_with, GradientReport};
pub use combine::{combine, CombineOp};
pub use residual::{
    coordinate, magnitude, norm2_of_vars, offset_magnitude, offset_squared_magnitude,
    power_magnitude, unit_norm_constraint, Aggregate, JacobianBlock, OffsetMap, Part, PowerMap,
    ResidualFunction, ResidualMap,
};
pub(crate) use residual::accumulate;
pub use unit_map::{compose_unit, exp_lift, magnitude_of, make_power, unit_exp, unit_log, DqMap};

/// Smoothing applied to the nonsmooth magnitudes inside a function.
///
/// `mu = 0` evaluates the exact formulas. `frozen`, when present, fixes the
/// appreciable/infinitesimal branch of every internal magnitude instead of
/// deciding it from `TOL_APP` at the current point.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Smoothing {
    pub mu: f64,
    pub frozen: Option<Vec<bool>>,
}

impl Smoothing {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn with_mu(mu: f64) -> Self {
        Self { mu, frozen: None }
    }

    pub fn frozen(mu: f64, branches: Vec<bool>) -> Self {
        Self { mu, frozen: Some(branches) }
    }

    /// Restrict the frozen mask to `count` branches starting at `offset`.
    pub fn slice(&self, offset: usize, count: usize) -> Self {
        Self {
            mu: self.mu,
            frozen: self.frozen.as_ref().map(|m| m[offset..offset + count].to_vec()),
        }
    }

    pub(crate) fn branch(&self, index: usize, computed: impl FnOnce() -> bool) -> bool {
        match &self.frozen {
            Some(mask) => mask[index],
            None => computed(),
        }
    }
}

/// Value and gradients (over `8n` coordinates) of both parts.
#[derive(Clone, Debug, PartialEq)]
pub struct DualGradient {
    pub value: DualNumber,
    pub std: Vec<f64>,
    pub dual: Vec<f64>,
}

impl DualGradient {
    pub fn zeros(dim: usize) -> Self {
        Self { value: DualNumber::ZERO, std: vec![0.0; dim], dual: vec![0.0; dim] }
    }
}

/// Behaviour of a dual-number-valued function.
pub trait DualFn: Send + Sync + fmt::Debug {
    /// Number of dual quaternion variables.
    fn arity(&self) -> usize;

    /// Whether the standard part of the value depends only on the standard
    /// part of the argument.
    fn is_standard(&self) -> bool;

    /// Exact value in ε-arithmetic.
    fn eval(&self, x: &DualQuaternionVector) -> DualNumber;

    fn eval_smoothed(&self, x: &DualQuaternionVector, _s: &Smoothing) -> DualNumber {
        self.eval(x)
    }

    fn gradient(&self, _x: &DualQuaternionVector, _s: &Smoothing) -> Option<DualGradient> {
        None
    }

    /// Number of internal magnitude branches.
    fn branch_count(&self) -> usize {
        0
    }

    /// Appreciability of every internal magnitude at `x`.
    fn branches(&self, _x: &DualQuaternionVector) -> Vec<bool> {
        Vec::new()
    }

    /// Norms of the quantities whose magnitudes are smoothed when
    /// minimizing `part`. Zero entries sit exactly on a kink.
    fn kink_arguments(&self, _x: &DualQuaternionVector, _s: &Smoothing, _part: Part) -> Vec<f64> {
        Vec::new()
    }
}

/// Shared handle to a [`DualFn`].
#[derive(Clone)]
pub struct DualFunction(Arc<dyn DualFn>);

impl DualFunction {
    pub fn new(f: impl DualFn + 'static) -> Self {
        Self(Arc::new(f))
    }

    /// Function from an evaluation closure with no analytic gradient.
    pub fn from_fn<F>(name: &str, arity: usize, standard: bool, f: F) -> Self
    where
        F: Fn(&DualQuaternionVector) -> DualNumber + Send + Sync + 'static,
    {
        Self::new(ClosureFn { name: name.to_string(), arity, standard, eval: Box::new(f) })
    }

    /// Constant function.
    pub fn constant(value: DualNumber, arity: usize) -> Self {
        Self::new(Constant { value, arity })
    }

    pub fn arity(&self) -> usize {
        self.0.arity()
    }

    pub fn is_standard(&self) -> bool {
        self.0.is_standard()
    }

    pub fn eval(&self, x: &DualQuaternionVector) -> DualNumber {
        debug_assert_eq!(x.len(), self.arity());
        self.0.eval(x)
    }

    pub fn eval_smoothed(&self, x: &DualQuaternionVector, s: &Smoothing) -> DualNumber {
        self.0.eval_smoothed(x, s)
    }

    pub fn gradient(&self, x: &DualQuaternionVector, s: &Smoothing) -> Option<DualGradient> {
        self.0.gradient(x, s)
    }

    pub fn has_gradient(&self) -> bool {
        let x = DualQuaternionVector::zeros(self.arity());
        self.0.gradient(&x, &Smoothing::with_mu(1.0)).is_some()
    }

    pub fn branch_count(&self) -> usize {
        self.0.branch_count()
    }

    pub fn branches(&self, x: &DualQuaternionVector) -> Vec<bool> {
        self.0.branches(x)
    }

    pub fn kink_arguments(&self, x: &DualQuaternionVector, s: &Smoothing, part: Part) -> Vec<f64> {
        self.0.kink_arguments(x, s, part)
    }
}

impl fmt::Debug for DualFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

struct ClosureFn {
    name: String,
    arity: usize,
    standard: bool,
    eval: Box<dyn Fn(&DualQuaternionVector) -> DualNumber + Send + Sync>,
}

impl fmt::Debug for ClosureFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

impl DualFn for ClosureFn {
    fn arity(&self) -> usize {
        self.arity
    }
    fn is_standard(&self) -> bool {
        self.standard
    }
    fn eval(&self, x: &DualQuaternionVector) -> DualNumber {
        (self.eval)(x)
    }
}

#[derive(Debug)]
struct Constant {
    value: DualNumber,
    arity: usize,
}

impl DualFn for Constant {
    fn arity(&self) -> usize {
        self.arity
    }
    fn is_standard(&self) -> bool {
        true
    }
    fn eval(&self, _x: &DualQuaternionVector) -> DualNumber {
        self.value
    }
    fn gradient(&self, _x: &DualQuaternionVector, _s: &Smoothing) -> Option<DualGradient> {
        let mut g = DualGradient::zeros(8 * self.arity);
        g.value = self.value;
        Some(g)
    }
}
