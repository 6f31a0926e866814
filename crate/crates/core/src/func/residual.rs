//! Objectives built from dual-quaternion-valued residuals with
//! hand-derived Jacobian blocks.

use std::fmt;
use std::sync::Arc;

use crate::algebra::{
    mat4_add, mat4_mul, mat4_transpose_mul_vec, DualNumber, DualQuaternion, DualQuaternionVector, Mat4,
    Quaternion,
};

use super::{DualFn, DualFunction, DualGradient, Smoothing};

pub const IDENTITY4: Mat4 = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
];

pub const ZERO4: Mat4 = [[0.0; 4]; 4];

/// Standard or dual half of a dual quaternion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Std,
    Dual,
}

/// Derivatives of one residual `r̂ = r + r_d ε` with respect to the four
/// coordinates of one part of one variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JacobianBlock {
    pub var: usize,
    pub part: Part,
    /// `∂r / ∂(var, part)`.
    pub d_std: Mat4,
    /// `∂r_d / ∂(var, part)`.
    pub d_dual: Mat4,
}

impl JacobianBlock {
    /// Offset of this block's coordinates in the `8n` layout.
    pub fn offset(&self, n: usize) -> usize {
        match self.part {
            Part::Std => 4 * self.var,
            Part::Dual => 4 * n + 4 * self.var,
        }
    }
}

/// A family of dual-quaternion residuals `r̂_k(x̂)`.
pub trait ResidualMap: Send + Sync + fmt::Debug {
    fn arity(&self) -> usize;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn residual(&self, k: usize, x: &DualQuaternionVector) -> DualQuaternion;
    fn jacobian(&self, k: usize, x: &DualQuaternionVector) -> Vec<JacobianBlock>;
}

/// Add `J_stdᵀ g_r + J_dualᵀ g_rd` into `grad`.
pub(crate) fn accumulate(
    blocks: &[JacobianBlock],
    n: usize,
    g_r: [f64; 4],
    g_rd: [f64; 4],
    grad: &mut [f64],
) {
    for b in blocks {
        let off = b.offset(n);
        let a = mat4_transpose_mul_vec(&b.d_std, g_r);
        let c = mat4_transpose_mul_vec(&b.d_dual, g_rd);
        for i in 0..4 {
            grad[off + i] += a[i] + c[i];
        }
    }
}

fn scaled(q: Quaternion, s: f64) -> [f64; 4] {
    q.scale(s).to_array()
}

fn safe_recip(s: f64) -> f64 {
    if s > 0.0 {
        1.0 / s
    } else {
        0.0
    }
}

/// How residuals are reduced to a dual number.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregate {
    /// `Σ_k |r̂_k|`.
    SumOfMagnitudes,
    /// `‖(r̂_1, …, r̂_m)‖₂`.
    Norm2,
    /// `Σ_k r̂_k* r̂_k`, i.e. `Σ |r_k|² + 2⟨r_k, r_{d,k}⟩ε`.
    SquaredMagnitudes,
}

/// `aggregate(r̂(x̂)) + offset`.
#[derive(Clone, Debug)]
pub struct ResidualFunction {
    pub map: Arc<dyn ResidualMap>,
    pub aggregate: Aggregate,
    pub offset: DualNumber,
}

impl ResidualFunction {
    pub fn new(map: impl ResidualMap + 'static, aggregate: Aggregate) -> Self {
        Self { map: Arc::new(map), aggregate, offset: DualNumber::ZERO }
    }

    pub fn with_offset(mut self, offset: DualNumber) -> Self {
        self.offset = offset;
        self
    }

    pub fn into_function(self) -> DualFunction {
        DualFunction::new(self)
    }

    fn residuals(&self, x: &DualQuaternionVector) -> Vec<DualQuaternion> {
        (0..self.map.len()).map(|k| self.map.residual(k, x)).collect()
    }

    fn smoothed(&self, x: &DualQuaternionVector, s: &Smoothing, grad: bool) -> DualGradient {
        let n = self.map.arity();
        let mu = s.mu;
        let rs = self.residuals(x);
        let mut out = DualGradient::zeros(if grad { 8 * n } else { 0 });
        let add = |k: usize, gs_r: [f64; 4], gd_r: [f64; 4], gd_rd: [f64; 4], out: &mut DualGradient| {
            if grad {
                let blocks = self.map.jacobian(k, x);
                accumulate(&blocks, n, gs_r, [0.0; 4], &mut out.std);
                accumulate(&blocks, n, gd_r, gd_rd, &mut out.dual);
            }
        };
        match self.aggregate {
            Aggregate::SumOfMagnitudes => {
                for (k, r) in rs.iter().enumerate() {
                    let sq = r.std.norm_squared();
                    let sden = (sq + mu * mu).sqrt();
                    let inv = safe_recip(sden);
                    out.value.std += sden - mu;
                    let gs = scaled(r.std, inv);
                    if s.branch(k, || r.is_appreciable()) {
                        let ip = r.std.dot(r.dual);
                        out.value.dual += ip * inv;
                        let g_r = (r.dual.scale(inv) - r.std.scale(ip * inv * inv * inv)).to_array();
                        add(k, gs, g_r, scaled(r.std, inv), &mut out);
                    } else {
                        let t = (r.dual.norm_squared() + mu * mu).sqrt();
                        out.value.dual += t - mu;
                        add(k, gs, [0.0; 4], scaled(r.dual, safe_recip(t)), &mut out);
                    }
                }
            }
            Aggregate::Norm2 => {
                let total: f64 = rs.iter().map(|r| r.std.norm_squared()).sum();
                let sden = (total + mu * mu).sqrt();
                let inv = safe_recip(sden);
                out.value.std = sden - mu;
                let appreciable = s.branch(0, || rs.iter().any(DualQuaternion::is_appreciable));
                if appreciable {
                    let ip: f64 = rs.iter().map(|r| r.std.dot(r.dual)).sum();
                    out.value.dual = ip * inv;
                    for (k, r) in rs.iter().enumerate() {
                        let g_r = (r.dual.scale(inv) - r.std.scale(ip * inv * inv * inv)).to_array();
                        add(k, scaled(r.std, inv), g_r, scaled(r.std, inv), &mut out);
                    }
                } else {
                    let td: f64 = rs.iter().map(|r| r.dual.norm_squared()).sum();
                    let t = (td + mu * mu).sqrt();
                    out.value.dual = t - mu;
                    let tinv = safe_recip(t);
                    for (k, r) in rs.iter().enumerate() {
                        add(k, scaled(r.std, inv), [0.0; 4], scaled(r.dual, tinv), &mut out);
                    }
                }
            }
            Aggregate::SquaredMagnitudes => {
                for (k, r) in rs.iter().enumerate() {
                    out.value.std += r.std.norm_squared();
                    out.value.dual += 2.0 * r.std.dot(r.dual);
                    add(k, scaled(r.std, 2.0), scaled(r.dual, 2.0), scaled(r.std, 2.0), &mut out);
                }
            }
        }
        out.value = out.value + self.offset;
        out
    }
}

impl DualFn for ResidualFunction {
    fn arity(&self) -> usize {
        self.map.arity()
    }

    fn is_standard(&self) -> bool {
        // Residuals are built from products and sums in ε-arithmetic, whose
        // standard parts never see dual coordinates.
        true
    }

    fn eval(&self, x: &DualQuaternionVector) -> DualNumber {
        let rs = self.residuals(x);
        let v = match self.aggregate {
            Aggregate::SumOfMagnitudes => rs.iter().map(|r| r.magnitude()).sum(),
            Aggregate::Norm2 => DualQuaternionVector::new(rs).norm2(),
            Aggregate::SquaredMagnitudes => rs.iter().map(|r| r.norm_squared()).sum(),
        };
        v + self.offset
    }

    fn eval_smoothed(&self, x: &DualQuaternionVector, s: &Smoothing) -> DualNumber {
        self.smoothed(x, s, false).value
    }

    fn gradient(&self, x: &DualQuaternionVector, s: &Smoothing) -> Option<DualGradient> {
        Some(self.smoothed(x, s, true))
    }

    fn branch_count(&self) -> usize {
        match self.aggregate {
            Aggregate::SumOfMagnitudes => self.map.len(),
            Aggregate::Norm2 => 1,
            Aggregate::SquaredMagnitudes => 0,
        }
    }

    fn branches(&self, x: &DualQuaternionVector) -> Vec<bool> {
        let rs = self.residuals(x);
        match self.aggregate {
            Aggregate::SumOfMagnitudes => rs.iter().map(DualQuaternion::is_appreciable).collect(),
            Aggregate::Norm2 => vec![rs.iter().any(DualQuaternion::is_appreciable)],
            Aggregate::SquaredMagnitudes => Vec::new(),
        }
    }

    fn kink_arguments(&self, x: &DualQuaternionVector, s: &Smoothing, part: Part) -> Vec<f64> {
        let rs = self.residuals(x);
        match (self.aggregate, part) {
            (Aggregate::SquaredMagnitudes, _) => Vec::new(),
            (Aggregate::SumOfMagnitudes, Part::Std) => rs.iter().map(|r| r.std.norm()).collect(),
            (Aggregate::SumOfMagnitudes, Part::Dual) => rs
                .iter()
                .enumerate()
                .filter(|(k, r)| !s.branch(*k, || r.is_appreciable()))
                .map(|(_, r)| r.dual.norm())
                .collect(),
            (Aggregate::Norm2, Part::Std) => {
                vec![rs.iter().map(|r| r.std.norm_squared()).sum::<f64>().sqrt()]
            }
            (Aggregate::Norm2, Part::Dual) => {
                if s.branch(0, || rs.iter().any(DualQuaternion::is_appreciable)) {
                    Vec::new()
                } else {
                    vec![rs.iter().map(|r| r.dual.norm_squared()).sum::<f64>().sqrt()]
                }
            }
        }
    }
}

/// `r̂ = x̂_var^m`.
#[derive(Clone, Debug)]
pub struct PowerMap {
    pub arity: usize,
    pub var: usize,
    pub exponent: u32,
}

impl ResidualMap for PowerMap {
    fn arity(&self) -> usize {
        self.arity
    }

    fn len(&self) -> usize {
        1
    }

    fn residual(&self, _k: usize, x: &DualQuaternionVector) -> DualQuaternion {
        let v = x[self.var];
        (0..self.exponent).fold(DualQuaternion::ONE, |acc, _| acc * v)
    }

    fn jacobian(&self, _k: usize, x: &DualQuaternionVector) -> Vec<JacobianBlock> {
        let m = self.exponent as usize;
        let q = x[self.var].std;
        let qd = x[self.var].dual;
        let mut pow = vec![Quaternion::ONE; m + 1];
        for k in 1..=m {
            pow[k] = pow[k - 1] * q;
        }
        // d(x^m)[h] = Σ_k x^k h x^(m−1−k)
        let mut a = ZERO4;
        for k in 0..m {
            a = mat4_add(&a, &mat4_mul(&pow[k].left_matrix(), &pow[m - 1 - k].right_matrix()));
        }
        // Derivative of r_d = Σ_k x^k x_d x^(m−1−k) with respect to x.
        let mut b = ZERO4;
        for k in 0..m {
            let tail = pow[m - 1 - k];
            for i in 0..k {
                let right = pow[k - 1 - i] * qd * tail;
                b = mat4_add(&b, &mat4_mul(&pow[i].left_matrix(), &right.right_matrix()));
            }
            let head = pow[k] * qd;
            for i in 0..(m - 1 - k) {
                let left = head * pow[i];
                b = mat4_add(&b, &mat4_mul(&left.left_matrix(), &pow[m - 2 - k - i].right_matrix()));
            }
        }
        vec![
            JacobianBlock { var: self.var, part: Part::Std, d_std: a, d_dual: b },
            JacobianBlock { var: self.var, part: Part::Dual, d_std: ZERO4, d_dual: a },
        ]
    }
}

/// `r̂_k = x̂_{vars[k]} − ĉ_k`.
#[derive(Clone, Debug)]
pub struct OffsetMap {
    pub arity: usize,
    pub vars: Vec<usize>,
    pub offsets: Vec<DualQuaternion>,
}

impl OffsetMap {
    pub fn new(arity: usize, vars: Vec<usize>, offsets: Vec<DualQuaternion>) -> Self {
        assert_eq!(vars.len(), offsets.len());
        Self { arity, vars, offsets }
    }
}

impl ResidualMap for OffsetMap {
    fn arity(&self) -> usize {
        self.arity
    }

    fn len(&self) -> usize {
        self.vars.len()
    }

    fn residual(&self, k: usize, x: &DualQuaternionVector) -> DualQuaternion {
        x[self.vars[k]] - self.offsets[k]
    }

    fn jacobian(&self, k: usize, _x: &DualQuaternionVector) -> Vec<JacobianBlock> {
        let var = self.vars[k];
        vec![
            JacobianBlock { var, part: Part::Std, d_std: IDENTITY4, d_dual: ZERO4 },
            JacobianBlock { var, part: Part::Dual, d_std: ZERO4, d_dual: IDENTITY4 },
        ]
    }
}

/// `|x̂_var|`.
pub fn magnitude(var: usize, arity: usize) -> DualFunction {
    offset_magnitude(var, DualQuaternion::ZERO, arity)
}

/// `|x̂_var^m|`.
pub fn power_magnitude(var: usize, exponent: u32, arity: usize) -> DualFunction {
    ResidualFunction::new(PowerMap { arity, var, exponent }, Aggregate::SumOfMagnitudes)
        .into_function()
}

/// `|x̂_var − ĉ|`.
pub fn offset_magnitude(var: usize, c: DualQuaternion, arity: usize) -> DualFunction {
    ResidualFunction::new(OffsetMap::new(arity, vec![var], vec![c]), Aggregate::SumOfMagnitudes)
        .into_function()
}

/// `(x̂_var − ĉ)*(x̂_var − ĉ)`, the squared magnitude in ε-arithmetic.
pub fn offset_squared_magnitude(var: usize, c: DualQuaternion, arity: usize) -> DualFunction {
    ResidualFunction::new(OffsetMap::new(arity, vec![var], vec![c]), Aggregate::SquaredMagnitudes)
        .into_function()
}

/// `‖(x̂_v)_{v ∈ vars}‖₂`.
pub fn norm2_of_vars(vars: &[usize], arity: usize) -> DualFunction {
    let offsets = vec![DualQuaternion::ZERO; vars.len()];
    ResidualFunction::new(OffsetMap::new(arity, vars.to_vec(), offsets), Aggregate::Norm2)
        .into_function()
}

/// The unit constraint `x̂_var* x̂_var − 1 = (|x|² − 1) + 2⟨x, x_d⟩ε`.
pub fn unit_norm_constraint(var: usize, arity: usize) -> DualFunction {
    ResidualFunction::new(
        OffsetMap::new(arity, vec![var], vec![DualQuaternion::ZERO]),
        Aggregate::SquaredMagnitudes,
    )
    .with_offset(DualNumber::real(-1.0))
    .into_function()
}

/// `(x_{var,c} − target) + (x_d)_{var,c} ε`, pinning one coordinate of
/// one variable (`c` indexes `[w, x, y, z]`).
pub fn coordinate(var: usize, component: usize, target: f64, arity: usize) -> DualFunction {
    assert!(component < 4 && var < arity);
    DualFunction::new(Coordinate { var, component, target, arity })
}

#[derive(Debug)]
struct Coordinate {
    var: usize,
    component: usize,
    target: f64,
    arity: usize,
}

impl DualFn for Coordinate {
    fn arity(&self) -> usize {
        self.arity
    }

    fn is_standard(&self) -> bool {
        true
    }

    fn eval(&self, x: &DualQuaternionVector) -> DualNumber {
        let q = x[self.var];
        DualNumber::new(
            q.std.to_array()[self.component] - self.target,
            q.dual.to_array()[self.component],
        )
    }

    fn gradient(&self, x: &DualQuaternionVector, _s: &Smoothing) -> Option<DualGradient> {
        let n = self.arity;
        let mut g = DualGradient::zeros(8 * n);
        g.value = self.eval(x);
        g.std[4 * self.var + self.component] = 1.0;
        g.dual[4 * n + 4 * self.var + self.component] = 1.0;
        Some(g)
    }
}
