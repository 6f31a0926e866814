//! First-order optimality residuals with least-squares multipliers.

use nalgebra::{DMatrix, DVector};

use crate::algebra::DualQuaternionVector;
use crate::error::{Error, Result};
use crate::func::{DualFunction, DualGradient, Smoothing};

use super::EqdqoProblem;

/// Which subproblem's stationarity system to check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KktForm {
    /// `∇f + Σ λ_j ∇h_j`.
    StageOne,
    /// `∇f_d + σ∇f + Σ λ_j ∇h_j`.
    StageTwo,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KktReport {
    pub residual: f64,
    /// Multipliers of the constraint gradients, in column order.
    pub multipliers: Vec<f64>,
    /// Multiplier of `∇f` in the general Stage II system.
    pub sigma: Option<f64>,
}

/// Relative singular value below which the constraint gradients count as
/// linearly dependent.
pub const RANK_TOL: f64 = 1e-10;

fn gradient(f: &DualFunction, x: &DualQuaternionVector, s: &Smoothing) -> DualGradient {
    f.gradient(x, s).unwrap_or_else(|| super::stages::fd_gradient(f, x, s))
}

/// Stationarity residual at `point`.
///
/// For standard problems the Stage I system lives on the `x` block (`4n`
/// coordinates, constraint parts `h_j`) and the Stage II system on the
/// `x_d` block (constraint parts `(h_j)_d`); `f` does not depend on `x_d`
/// there, so `σ` drops out. General problems use all `8n` coordinates with
/// both constraint parts. Multipliers are the least-squares solution when
/// not supplied.
pub fn kkt_residual(
    problem: &EqdqoProblem,
    point: &DualQuaternionVector,
    form: KktForm,
    smoothing: &Smoothing,
    multipliers: Option<&[f64]>,
) -> Result<KktReport> {
    let n = problem.arity();
    let cons = Smoothing::with_mu(smoothing.mu);
    let gf = gradient(&problem.objective, point, smoothing);
    let gh: Vec<DualGradient> = problem.constraints.iter().map(|h| gradient(h, point, &cons)).collect();
    let (lo, hi) = match (problem.is_standard(), form) {
        (true, KktForm::StageOne) => (0, 4 * n),
        (true, KktForm::StageTwo) => (4 * n, 8 * n),
        (false, _) => (0, 8 * n),
    };
    let block = |v: &[f64]| v[lo..hi].to_vec();
    let (target, columns, has_sigma) = match (problem.is_standard(), form) {
        (true, KktForm::StageOne) => (block(&gf.std), gh.iter().map(|g| block(&g.std)).collect(), false),
        (true, KktForm::StageTwo) => (block(&gf.dual), gh.iter().map(|g| block(&g.dual)).collect(), false),
        (false, KktForm::StageOne) => {
            let cols = gh.iter().flat_map(|g| [block(&g.std), block(&g.dual)]).collect();
            (block(&gf.std), cols, false)
        }
        (false, KktForm::StageTwo) => {
            let mut cols: Vec<Vec<f64>> = vec![block(&gf.std)];
            cols.extend(gh.iter().flat_map(|g| [block(&g.std), block(&g.dual)]));
            (block(&gf.dual), cols, true)
        }
    };
    let dim = hi - lo;
    let k = columns.len();
    let g = DVector::from_vec(target);
    let lambda: DVector<f64> = match multipliers {
        Some(m) => {
            if m.len() != k {
                return Err(Error::Config(format!("expected {k} multipliers, got {}", m.len())));
            }
            DVector::from_column_slice(m)
        }
        None if k == 0 => DVector::zeros(0),
        None => {
            let a = DMatrix::from_fn(dim, k, |r, c| columns[c][r]);
            let svd = a.clone().svd(true, true);
            let smax = svd.singular_values.max();
            let smin = svd.singular_values.min();
            // In the general Stage II system `∇f` lies in the span of the
            // `∇h_j` at any Stage I KKT point, so rank deficiency is
            // expected there and the residual uses minimum-norm multipliers.
            if !has_sigma && (k > dim || smax == 0.0 || smin / smax < RANK_TOL) {
                let ratio = if smax == 0.0 { 0.0 } else { smin / smax };
                return Err(Error::DegenerateConstraintGradients(ratio));
            }
            svd.solve(&(-&g), RANK_TOL * smax).map_err(|e| Error::Config(e.to_string()))?
        }
    };
    let mut r = g.clone();
    for (c, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            r[i] += lambda[c] * v;
        }
    }
    let mut mult: Vec<f64> = lambda.iter().copied().collect();
    let sigma = if has_sigma { Some(mult.remove(0)) } else { None };
    Ok(KktReport { residual: r.norm(), multipliers: mult, sigma })
}
