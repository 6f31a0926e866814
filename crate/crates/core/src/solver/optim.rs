//! Augmented Lagrangian outer loop with a BFGS inner solver on real
//! coordinate vectors.

use nalgebra::{DMatrix, DVector};

/// Value and gradient of a smooth real function.
pub type ValueGrad = (f64, Vec<f64>);

/// A smooth nonlinear program `min φ(z) s.t. c_i(z) = 0, g_k(z) ≤ 0`.
pub trait Nlp {
    fn dim(&self) -> usize;
    fn objective(&self, z: &[f64]) -> ValueGrad;
    fn equalities(&self, z: &[f64]) -> Vec<ValueGrad>;
    fn inequalities(&self, _z: &[f64]) -> Vec<ValueGrad> {
        Vec::new()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct AlSettings {
    pub tol_grad: f64,
    pub tol_feas: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

/// Multiplier state carried between warm-started runs.
#[derive(Clone, Debug, Default)]
pub struct AlState {
    pub lambda_eq: Vec<f64>,
    pub lambda_ineq: Vec<f64>,
    pub rho: f64,
}

#[derive(Clone, Debug)]
pub struct AlOutcome {
    pub z: Vec<f64>,
    pub state: AlState,
    /// `max |c_i|` and `max(0, g_k)` combined.
    pub feasibility: f64,
    /// `‖∇φ + Σλ∇c + Σν∇g‖₂` with the final multiplier estimates.
    pub stationarity: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub converged: bool,
}

const RHO_INIT: f64 = 10.0;
const RHO_MAX: f64 = 1e12;
const ARMIJO_C1: f64 = 1e-4;
const MAX_STEP: f64 = 1.0;
/// Relative change of `f` treated as rounding noise in the line search.
const ROUNDING_SLACK: f64 = 64.0 * f64::EPSILON;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

struct Lagrangian<'a, P: Nlp + ?Sized> {
    nlp: &'a P,
    state: &'a AlState,
}

impl<P: Nlp + ?Sized> Lagrangian<'_, P> {
    fn eval(&self, z: &[f64]) -> ValueGrad {
        let (mut f, mut g) = self.nlp.objective(z);
        let rho = self.state.rho;
        for ((c, gc), lam) in self.nlp.equalities(z).into_iter().zip(&self.state.lambda_eq) {
            f += lam * c + 0.5 * rho * c * c;
            axpy(lam + rho * c, &gc, &mut g);
        }
        for ((c, gc), lam) in self.nlp.inequalities(z).into_iter().zip(&self.state.lambda_ineq) {
            let t = (lam + rho * c).max(0.0);
            f += (t * t - lam * lam) / (2.0 * rho);
            axpy(t, &gc, &mut g);
        }
        (f, g)
    }
}

/// Minimize a smooth function by BFGS with backtracking Armijo search.
/// Returns the final point, its value and gradient, and the iteration count.
pub fn bfgs(
    f: &dyn Fn(&[f64]) -> ValueGrad,
    start: &[f64],
    tol_grad: f64,
    max_iter: usize,
) -> (Vec<f64>, f64, Vec<f64>, usize) {
    let n = start.len();
    let mut z = start.to_vec();
    let (mut fz, mut g) = f(&z);
    let mut h = identity(n);
    let mut iters = 0;
    while iters < max_iter && norm(&g) > tol_grad {
        let mut d = mat_vec_neg(&h, &g);
        let mut slope = dot(&g, &d);
        if slope >= 0.0 || !slope.is_finite() {
            h = identity(n);
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        let dn = norm(&d);
        if dn > MAX_STEP {
            d.iter_mut().for_each(|v| *v *= MAX_STEP / dn);
            slope *= MAX_STEP / dn;
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = z.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
            let (ft, gt) = f(&trial);
            if ft.is_finite() && ft <= fz + ARMIJO_C1 * alpha * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            // Near a minimizer the predicted decrease drops below the
            // rounding of `f`; fall back to requiring a smaller gradient.
            if ft.is_finite() && (ft - fz).abs() <= ROUNDING_SLACK * fz.abs().max(f64::MIN_POSITIVE) && norm(&gt) < norm(&g) {
                accepted = Some((trial, ft, gt));
                break;
            }
            alpha *= 0.5;
        }
        let Some((zn, fnew, gn)) = accepted else {
            break;
        };
        iters += 1;
        let s: Vec<f64> = zn.iter().zip(&z).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            if iters == 1 {
                let scale = sy / dot(&y, &y);
                h = identity(n);
                h.iter_mut().enumerate().for_each(|(i, row)| row[i] = scale);
            }
            bfgs_update(&mut h, &s, &y, sy);
        }
        let stalled = fnew >= fz && s.iter().all(|v| v.abs() <= f64::EPSILON * 4.0);
        z = zn;
        fz = fnew;
        g = gn;
        if stalled {
            break;
        }
    }
    (z, fz, g, iters)
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn mat_vec_neg(h: &[Vec<f64>], g: &[f64]) -> Vec<f64> {
    h.iter().map(|row| -dot(row, g)).collect()
}

/// Inverse-Hessian update `H ← (I − ρsyᵀ) H (I − ρysᵀ) + ρssᵀ`.
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = h.iter().map(|row| dot(row, y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

/// Measures of constraint violation and stationarity at `z`.
pub fn kkt_measures<P: Nlp + ?Sized>(nlp: &P, z: &[f64], state: &AlState) -> (f64, f64) {
    let (_, mut g) = nlp.objective(z);
    let mut feas = 0.0f64;
    for ((c, gc), lam) in nlp.equalities(z).into_iter().zip(&state.lambda_eq) {
        feas = feas.max(c.abs());
        axpy(*lam, &gc, &mut g);
    }
    for ((c, gc), lam) in nlp.inequalities(z).into_iter().zip(&state.lambda_ineq) {
        feas = feas.max(c.max(0.0));
        axpy(*lam, &gc, &mut g);
    }
    (feas, norm(&g))
}

/// First-order multiplier estimate `argmin_λ ‖∇φ + Σλ_i∇c_i‖₂` at `z`.
pub fn least_squares_multipliers<P: Nlp + ?Sized>(nlp: &P, z: &[f64]) -> Vec<f64> {
    let cons = nlp.equalities(z);
    if cons.is_empty() {
        return Vec::new();
    }
    let (_, g) = nlp.objective(z);
    let a = DMatrix::from_fn(g.len(), cons.len(), |r, c| cons[c].1[r]);
    let rhs = DVector::from_iterator(g.len(), g.iter().map(|v| -v));
    match a.svd(true, true).solve(&rhs, 1e-12) {
        Ok(l) if l.iter().all(|v| v.is_finite()) => l.iter().copied().collect(),
        _ => vec![0.0; cons.len()],
    }
}

/// Run the augmented Lagrangian method from `start`, warm-starting the
/// multipliers from `state` when its lengths match.
pub fn augmented_lagrangian<P: Nlp + ?Sized>(
    nlp: &P,
    start: &[f64],
    state: Option<AlState>,
    cfg: &AlSettings,
    mut on_outer: impl FnMut(&[f64], &AlState, f64, f64),
) -> AlOutcome {
    let m_eq = nlp.equalities(start).len();
    let m_in = nlp.inequalities(start).len();
    let mut state = match state {
        Some(s) if s.lambda_eq.len() == m_eq && s.lambda_ineq.len() == m_in => s,
        _ => AlState {
            lambda_eq: least_squares_multipliers(nlp, start),
            lambda_ineq: vec![0.0; m_in],
            rho: RHO_INIT,
        },
    };
    let mut z = start.to_vec();
    let mut inner_total = 0;
    let (mut feas, mut stat) = kkt_measures(nlp, &z, &state);
    let mut outer = 0;
    let mut converged = feas <= cfg.tol_feas && stat <= cfg.tol_grad;
    while !converged && outer < cfg.max_outer {
        outer += 1;
        let lag = Lagrangian { nlp, state: &state };
        let (zn, _, _, it) = bfgs(&|p: &[f64]| lag.eval(p), &z, cfg.tol_grad, cfg.max_inner);
        inner_total += it;
        z = zn;
        let eq = nlp.equalities(&z);
        let ineq = nlp.inequalities(&z);
        let rho = state.rho;
        for (lam, (c, _)) in state.lambda_eq.iter_mut().zip(&eq) {
            *lam += rho * c;
        }
        for (lam, (c, _)) in state.lambda_ineq.iter_mut().zip(&ineq) {
            *lam = (*lam + rho * c).max(0.0);
        }
        let prev_feas = feas;
        (feas, stat) = kkt_measures(nlp, &z, &state);
        on_outer(&z, &state, feas, stat);
        converged = feas <= cfg.tol_feas && stat <= cfg.tol_grad;
        if feas > cfg.tol_feas && feas > 0.25 * prev_feas {
            state.rho = (state.rho * 10.0).min(RHO_MAX);
        }
        // Nothing left to gain once the inner solver cannot move and the
        // constraints are met.
        if it == 0 && feas <= cfg.tol_feas {
            break;
        }
    }
    AlOutcome {
        z,
        state,
        feasibility: feas,
        stationarity: stat,
        outer_iterations: outer,
        inner_iterations: inner_total,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic;
    impl Nlp for Quadratic {
        fn dim(&self) -> usize {
            1
        }
        fn objective(&self, z: &[f64]) -> ValueGrad {
            ((z[0] - 1.0).powi(2), vec![2.0 * (z[0] - 1.0)])
        }
        fn equalities(&self, _z: &[f64]) -> Vec<ValueGrad> {
            Vec::new()
        }
    }

    /// `min |z|² s.t. |z|² = 1` in four coordinates.
    struct Sphere;
    impl Nlp for Sphere {
        fn dim(&self) -> usize {
            4
        }
        fn objective(&self, z: &[f64]) -> ValueGrad {
            (dot(z, z), z.iter().map(|v| 2.0 * v).collect())
        }
        fn equalities(&self, z: &[f64]) -> Vec<ValueGrad> {
            vec![(dot(z, z) - 1.0, z.iter().map(|v| 2.0 * v).collect())]
        }
    }

    /// `min z₀ + z₁ s.t. z₀² + z₁² ≤ 2`, optimum (−1, −1).
    struct Disk;
    impl Nlp for Disk {
        fn dim(&self) -> usize {
            2
        }
        fn objective(&self, z: &[f64]) -> ValueGrad {
            (z[0] + z[1], vec![1.0, 1.0])
        }
        fn equalities(&self, _z: &[f64]) -> Vec<ValueGrad> {
            Vec::new()
        }
        fn inequalities(&self, z: &[f64]) -> Vec<ValueGrad> {
            vec![(z[0] * z[0] + z[1] * z[1] - 2.0, vec![2.0 * z[0], 2.0 * z[1]])]
        }
    }

    const CFG: AlSettings = AlSettings { tol_grad: 1e-10, tol_feas: 1e-10, max_outer: 50, max_inner: 500 };

    #[test]
    fn unconstrained_quadratic() {
        let out = augmented_lagrangian(&Quadratic, &[5.0], None, &CFG, |_, _, _, _| {});
        assert!((out.z[0] - 1.0).abs() < 1e-8);
        assert!(out.converged);
    }

    #[test]
    fn sphere_feasible_set_is_optimal() {
        let out = augmented_lagrangian(&Sphere, &[0.3, -0.2, 0.1, 0.5], None, &CFG, |_, _, _, _| {});
        assert!((dot(&out.z, &out.z) - 1.0).abs() <= 1e-8);
        assert!(out.converged);
        // ∇φ + λ∇c = 2z + 2λz = 0 ⇒ λ = −1
        assert!((out.state.lambda_eq[0] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn inequality_constraint() {
        let out = augmented_lagrangian(&Disk, &[0.0, 0.0], None, &CFG, |_, _, _, _| {});
        assert!((out.z[0] + 1.0).abs() < 1e-7 && (out.z[1] + 1.0).abs() < 1e-7, "{:?}", out.z);
        assert!((out.state.lambda_ineq[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn bfgs_rosenbrock() {
        let f = |z: &[f64]| {
            let (a, b) = (z[0], z[1]);
            (
                (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2),
                vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)],
            )
        };
        let (z, _, _, _) = bfgs(&f, &[-1.2, 1.0], 1e-10, 2000);
        assert!((z[0] - 1.0).abs() < 1e-7 && (z[1] - 1.0).abs() < 1e-7, "{z:?}");
    }
}
