//! Built-in property suites run by `dqopt selftest`.

use std::cmp::Ordering;

use rand::Rng;

use crate::algebra::{dn_compare, DualNumber, DualQuaternion, DualQuaternionVector, Quaternion};
use crate::func::{
    check_standardness, combine, compose_unit, exp_lift, gradient_check_with, magnitude, magnitude_of,
    norm2_of_vars, offset_magnitude, unit_exp, CombineOp, DqMap, DualFunction, Smoothing,
};
use crate::random::{gaussian_quaternion, random_dual_quaternion, random_unit_dual_quaternion, rng, DetRng};
use crate::{handeye, posegraph};

/// Tolerance of the algebraic identities.
pub const ALGEBRA_TOL: f64 = 1e-10;
/// Largest accepted change of a standard part under dual perturbation.
pub const STANDARDNESS_TOL: f64 = 1e-12;
/// Largest accepted relative gradient error.
pub const GRADIENT_TOL: f64 = 1e-5;
pub const GRADIENT_STEP: f64 = 1e-5;

/// Pass and fail counts of one suite.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: usize,
    pub failed: usize,
}

impl SuiteResult {
    fn tally(name: &'static str, checks: impl IntoIterator<Item = bool>) -> Self {
        let (mut passed, mut failed) = (0, 0);
        for ok in checks {
            if ok {
                passed += 1;
            } else {
                failed += 1;
            }
        }
        Self { name, passed, failed }
    }
}

/// Conjugate and magnitude of products on `pairs` random appreciable pairs.
pub fn algebra_suite(pairs: usize, seed: u64) -> SuiteResult {
    let mut r = rng(seed);
    let checks = (0..pairs).map(|_| {
        let p = random_dual_quaternion(&mut r);
        let q = random_dual_quaternion(&mut r);
        let conj_ok = (p * q).conj().max_abs_diff(q.conj() * p.conj()) <= ALGEBRA_TOL;
        let lhs = (p * q).magnitude();
        let rhs = p.magnitude() * q.magnitude();
        conj_ok && lhs.approx_eq(rhs, ALGEBRA_TOL)
    });
    SuiteResult::tally("algebra", checks.collect::<Vec<_>>())
}

/// Draws with frequent ties in the standard part, so every order branch is hit.
fn tied_dual_number(r: &mut DetRng) -> DualNumber {
    let std = if r.random_bool(0.5) { f64::from(r.random_range(-2i32..=2)) } else { r.random_range(-2.0..2.0) };
    let dual = if r.random_bool(0.2) { 0.0 } else { r.random_range(-2.0..2.0) };
    DualNumber::new(std, dual)
}

/// Total order axioms and compatibility with addition on `triples` random triples.
pub fn order_suite(triples: usize, seed: u64) -> SuiteResult {
    let mut r = rng(seed);
    let le = |a: DualNumber, b: DualNumber| dn_compare(a, b) != Ordering::Greater;
    let checks = (0..triples).map(|_| {
        let (a, b, c) = (tied_dual_number(&mut r), tied_dual_number(&mut r), tied_dual_number(&mut r));
        let reflexive = dn_compare(a, a) == Ordering::Equal;
        let total = le(a, b) || le(b, a);
        let antisymmetric = !(le(a, b) && le(b, a)) || a == b;
        let transitive = !(le(a, b) && le(b, c)) || le(a, c);
        let reversed = dn_compare(a, b) == dn_compare(b, a).reverse();
        let additive = !le(a, b) || le(a + c, b + c);
        reflexive && total && antisymmetric && transitive && reversed && additive
    });
    SuiteResult::tally("order", checks.collect::<Vec<_>>())
}

fn random_leaf(r: &mut DetRng, arity: usize) -> DualFunction {
    let var = r.random_range(0..arity);
    let c = random_dual_quaternion(r);
    match r.random_range(0..5) {
        0 => magnitude(var, arity),
        1 => offset_magnitude(var, c, arity),
        2 => {
            let other = r.random_range(0..arity);
            let m = DqMap::variable(var, arity).product(&DqMap::variable(other, arity)).unwrap();
            magnitude_of(&m.sum(&DqMap::constant(c, arity)).unwrap())
        }
        3 => magnitude_of(&exp_lift(&DqMap::variable(var, arity).product(&DqMap::constant(c, arity)).unwrap())),
        _ => {
            // |exp(v) − c| for an imaginary v built from a unit-normalized variable.
            let w = Quaternion::imaginary([r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]);
            let v = DqMap::new("im", arity, true, move |x: &DualQuaternionVector| {
                let q = x[var];
                DualQuaternion::new(
                    Quaternion::imaginary([q.std.x, q.std.y, q.std.z]),
                    Quaternion::imaginary([q.dual.x, q.dual.y, q.dual.z]) + w,
                )
            });
            compose_unit(&offset_magnitude(0, c, 1), &unit_exp(&v)).unwrap()
        }
    }
}

/// A random composition of standard magnitudes under sum, product, min and max.
pub fn random_tree(r: &mut DetRng, arity: usize, depth: usize) -> DualFunction {
    if depth == 0 || r.random_bool(0.3) {
        return random_leaf(r, arity);
    }
    let a = random_tree(r, arity, depth - 1);
    let b = random_tree(r, arity, depth - 1);
    let op = [CombineOp::Sum, CombineOp::Product, CombineOp::Min, CombineOp::Max][r.random_range(0..4)];
    combine(&a, &b, op).unwrap()
}

/// Standardness of `trees` random trees and both application objectives.
pub fn standardness_suite(trees: usize, samples: usize, seed: u64) -> SuiteResult {
    let mut r = rng(seed);
    let mut fs: Vec<DualFunction> = (0..trees)
        .map(|_| {
            let arity = r.random_range(1..4);
            random_tree(&mut r, arity, 3)
        })
        .collect();
    fs.extend(application_objectives(seed));
    let checks = fs.iter().enumerate().map(|(i, f)| {
        f.is_standard() && check_standardness(f, samples, seed.wrapping_add(i as u64)) <= STANDARDNESS_TOL
    });
    SuiteResult::tally("standardness", checks.collect::<Vec<_>>())
}

/// Noisy hand-eye objectives of both models and a noisy pose-graph objective.
pub fn application_objectives(seed: u64) -> Vec<DualFunction> {
    let axxb = handeye::generate_synthetic(handeye::Model::Axxb, 5, 0.01, 0.01, seed).unwrap();
    let axyb = handeye::generate_synthetic(handeye::Model::Axyb, 6, 0.01, 0.01, seed).unwrap();
    let graph = posegraph::generate_cycle_graph(6, 2, 0.01, 0.01, seed).unwrap();
    vec![
        handeye::objective(&axxb).unwrap(),
        handeye::objective(&axyb).unwrap(),
        posegraph::build_pgo(&graph).unwrap().objective,
    ]
}

/// Toy objectives with analytic gradients.
pub fn toy_objectives() -> Vec<DualFunction> {
    let c = DualQuaternion::new(Quaternion::new(2.0, 0.0, 0.0, 0.0), Quaternion::new(0.0, 1.0, -1.0, 0.5));
    vec![magnitude(0, 1), offset_magnitude(0, c, 1), norm2_of_vars(&[0, 1], 2)]
}

fn random_point(r: &mut DetRng, arity: usize, unit: bool) -> DualQuaternionVector {
    (0..arity)
        .map(|_| if unit { random_unit_dual_quaternion(r, 1.0).inner() } else {
            DualQuaternion::new(gaussian_quaternion(r), gaussian_quaternion(r))
        })
        .collect()
}

/// Relative gradient error of each function at `points` random points on
/// the surrogate with smoothing `mu`.
pub fn gradient_errors(fs: &[DualFunction], points: usize, mu: f64, unit: bool, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let s = Smoothing::with_mu(mu);
    let mut out = Vec::new();
    for f in fs {
        for _ in 0..points {
            let x = random_point(&mut r, f.arity(), unit);
            let rep = gradient_check_with(f, &x, GRADIENT_STEP, &s);
            out.push(rep.map_or(f64::INFINITY, |g| g.max_rel_error));
        }
    }
    out
}

/// Gradient checks of the toy and application objectives.
pub fn gradient_suite(points: usize, seed: u64) -> SuiteResult {
    let mut errors = gradient_errors(&toy_objectives(), points, 0.0, false, seed);
    errors.extend(gradient_errors(&application_objectives(seed), points, 1e-3, true, seed));
    SuiteResult::tally("gradient", errors.into_iter().map(|e| e <= GRADIENT_TOL).collect::<Vec<_>>())
}

/// All suites at their default sizes.
pub fn run_all(seed: u64) -> Vec<SuiteResult> {
    vec![
        algebra_suite(1000, seed),
        standardness_suite(50, 100, seed),
        gradient_suite(10, seed),
        order_suite(1000, seed),
    ]
}
