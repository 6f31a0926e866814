//! Closure of dual functions under sum, product, min and max.

use std::cmp::Ordering;

use crate::algebra::{DualNumber, DualQuaternionVector};
use crate::error::{Error, Result};

use super::{DualFn, DualFunction, DualGradient, Part, Smoothing};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CombineOp {
    Sum,
    Product,
    /// Smaller value under the lexicographic total order.
    Min,
    /// Larger value under the lexicographic total order.
    Max,
}

/// `F op G` for functions of the same arity.
pub fn combine(f: &DualFunction, g: &DualFunction, op: CombineOp) -> Result<DualFunction> {
    if f.arity() != g.arity() {
        return Err(Error::ArityMismatch(f.arity(), g.arity()));
    }
    Ok(DualFunction::new(Combined { a: f.clone(), b: g.clone(), op }))
}

#[derive(Debug)]
struct Combined {
    a: DualFunction,
    b: DualFunction,
    op: CombineOp,
}

impl Combined {
    fn split(&self, s: &Smoothing) -> (Smoothing, Smoothing) {
        let na = self.a.branch_count();
        let nb = self.b.branch_count();
        (s.slice(0, na), s.slice(na, nb))
    }

    fn apply(&self, a: DualNumber, b: DualNumber) -> DualNumber {
        match self.op {
            CombineOp::Sum => a + b,
            CombineOp::Product => a * b,
            CombineOp::Min => a.min(b),
            CombineOp::Max => a.max(b),
        }
    }

    /// Whether min/max selects the first operand (ties go to the first).
    fn picks_first(&self, a: DualNumber, b: DualNumber) -> bool {
        match self.op {
            CombineOp::Min => a.total_cmp(&b) != Ordering::Greater,
            CombineOp::Max => a.total_cmp(&b) != Ordering::Less,
            _ => unreachable!(),
        }
    }
}

impl DualFn for Combined {
    fn arity(&self) -> usize {
        self.a.arity()
    }

    fn is_standard(&self) -> bool {
        self.a.is_standard() && self.b.is_standard()
    }

    fn eval(&self, x: &DualQuaternionVector) -> DualNumber {
        self.apply(self.a.eval(x), self.b.eval(x))
    }

    fn eval_smoothed(&self, x: &DualQuaternionVector, s: &Smoothing) -> DualNumber {
        let (sa, sb) = self.split(s);
        self.apply(self.a.eval_smoothed(x, &sa), self.b.eval_smoothed(x, &sb))
    }

    fn gradient(&self, x: &DualQuaternionVector, s: &Smoothing) -> Option<DualGradient> {
        let (sa, sb) = self.split(s);
        let ga = self.a.gradient(x, &sa)?;
        let gb = self.b.gradient(x, &sb)?;
        let (va, vb) = (ga.value, gb.value);
        Some(match self.op {
            CombineOp::Sum => DualGradient {
                value: va + vb,
                std: ga.std.iter().zip(&gb.std).map(|(p, q)| p + q).collect(),
                dual: ga.dual.iter().zip(&gb.dual).map(|(p, q)| p + q).collect(),
            },
            CombineOp::Product => {
                let n = ga.std.len();
                let std = (0..n).map(|i| vb.std * ga.std[i] + va.std * gb.std[i]).collect();
                let dual = (0..n)
                    .map(|i| {
                        vb.dual * ga.std[i] + va.std * gb.dual[i] + vb.std * ga.dual[i]
                            + va.dual * gb.std[i]
                    })
                    .collect();
                DualGradient { value: va * vb, std, dual }
            }
            CombineOp::Min | CombineOp::Max => {
                if self.picks_first(va, vb) {
                    ga
                } else {
                    gb
                }
            }
        })
    }

    fn branch_count(&self) -> usize {
        self.a.branch_count() + self.b.branch_count()
    }

    fn branches(&self, x: &DualQuaternionVector) -> Vec<bool> {
        let mut v = self.a.branches(x);
        v.extend(self.b.branches(x));
        v
    }

    fn kink_arguments(&self, x: &DualQuaternionVector, s: &Smoothing, part: Part) -> Vec<f64> {
        let (sa, sb) = self.split(s);
        let mut v = self.a.kink_arguments(x, &sa, part);
        v.extend(self.b.kink_arguments(x, &sb, part));
        v
    }
}
