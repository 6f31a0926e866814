//! Empirical standardness and finite-difference gradient checks.

use crate::algebra::{DualQuaternion, DualQuaternionVector};
use crate::random::{gaussian_quaternion, rng};

use super::{DualFunction, Smoothing};

/// Largest change of the standard part of `F` when only the dual parts of
/// the argument are resampled, over `samples` seeded random points. NaN
/// values count as an infinite deviation.
pub fn check_standardness(f: &DualFunction, samples: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let n = f.arity();
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let std: Vec<_> = (0..n).map(|_| gaussian_quaternion(&mut r)).collect();
        let mut with_dual = |std: &[crate::algebra::Quaternion]| -> DualQuaternionVector {
            std.iter().map(|&s| DualQuaternion::new(s, gaussian_quaternion(&mut r))).collect()
        };
        let a = with_dual(&std);
        let b = with_dual(&std);
        let d = (f.eval(&a).std - f.eval(&b).std).abs();
        worst = if d.is_nan() { f64::INFINITY } else { worst.max(d) };
    }
    worst
}

/// Analytic versus central-difference gradients of both parts.
#[derive(Clone, Debug)]
pub struct GradientReport {
    pub analytic_std: Vec<f64>,
    pub analytic_dual: Vec<f64>,
    pub fd_std: Vec<f64>,
    pub fd_dual: Vec<f64>,
    /// `max_i |analytic_i − fd_i| / max(1, |analytic_i|)` over both parts.
    pub max_rel_error: f64,
}

/// [`gradient_check_with`] on the exact (`μ = 0`) surrogate.
pub fn gradient_check(f: &DualFunction, point: &DualQuaternionVector, h: f64) -> Option<GradientReport> {
    gradient_check_with(f, point, h, &Smoothing::exact())
}

/// Compare analytic gradients with central differences of step `h` on the
/// smoothed surrogate. Branches are frozen at `point` so both sides see the
/// same formula. Returns `None` when `F` has no analytic gradient.
pub fn gradient_check_with(
    f: &DualFunction,
    point: &DualQuaternionVector,
    h: f64,
    smoothing: &Smoothing,
) -> Option<GradientReport> {
    let s = Smoothing {
        mu: smoothing.mu,
        frozen: Some(smoothing.frozen.clone().unwrap_or_else(|| f.branches(point))),
    };
    let g = f.gradient(point, &s)?;
    let base = point.to_coords();
    let mut fd_std = vec![0.0; base.len()];
    let mut fd_dual = vec![0.0; base.len()];
    let mut x = base.clone();
    for i in 0..base.len() {
        x[i] = base[i] + h;
        let plus = f.eval_smoothed(&DualQuaternionVector::from_coords(&x), &s);
        x[i] = base[i] - h;
        let minus = f.eval_smoothed(&DualQuaternionVector::from_coords(&x), &s);
        x[i] = base[i];
        fd_std[i] = (plus.std - minus.std) / (2.0 * h);
        fd_dual[i] = (plus.dual - minus.dual) / (2.0 * h);
    }
    let rel = |a: &[f64], b: &[f64]| {
        a.iter().zip(b).map(|(a, b)| (a - b).abs() / a.abs().max(1.0)).fold(0.0, f64::max)
    };
    let max_rel_error = rel(&g.std, &fd_std).max(rel(&g.dual, &fd_dual));
    Some(GradientReport { analytic_std: g.std, analytic_dual: g.dual, fd_std, fd_dual, max_rel_error })
}
