use dqopt::algebra::{DualNumber, DualQuaternion, DualQuaternionVector, Quaternion};
use dqopt::func::{magnitude, offset_magnitude, offset_squared_magnitude, unit_norm_constraint, DualFunction};
use dqopt::solver::{
    kkt_residual, solve_eqdqo, solve_stage1, solve_stage2, EqdqoProblem, KktForm, SolverConfig,
};
use dqopt::func::Smoothing;

fn c_hat() -> DualQuaternion {
    DualQuaternion::new(Quaternion::ONE, Quaternion::new(0.0, 1.0, 0.0, 0.0))
}

fn toy() -> EqdqoProblem {
    EqdqoProblem::new(offset_magnitude(0, c_hat(), 1), vec![unit_norm_constraint(0, 1)]).unwrap()
}

fn sign_aligned(x: DualQuaternion) -> DualQuaternion {
    if x.std.w < 0.0 {
        -x
    } else {
        x
    }
}

#[test]
fn toy_offset_magnitude_two_stage() {
    let cfg = SolverConfig { restarts: 4, ..Default::default() };
    let report = solve_eqdqo(&toy(), &cfg).unwrap();
    assert!(report.stage1_value.abs() <= 1e-8, "L^I = {}", report.stage1_value);
    assert!(report.stage2_value.abs() <= 1e-6, "stage2 = {}", report.stage2_value);
    let x = sign_aligned(report.solution[0]);
    assert!(x.max_abs_diff(c_hat()) <= 1e-6, "x = {x}");
    assert!(report.feasibility.max() <= cfg.tol_feas);
}

#[test]
fn toy_stage1_then_stage2() {
    let cfg = SolverConfig { restarts: 2, ..Default::default() };
    let p = toy();
    let s1 = solve_stage1(&p, &cfg).unwrap();
    assert!(s1.value.abs() <= 1e-8);
    let report = solve_stage2(&p, &s1, &cfg).unwrap();
    assert!(report.stage2_value.abs() <= 1e-6);
}

#[test]
fn unconstrained_magnitude_minimum_is_zero() {
    let p = EqdqoProblem::new(offset_squared_magnitude(0, DualQuaternion::ZERO, 1), vec![]).unwrap();
    let cfg = SolverConfig { restarts: 2, ..Default::default() };
    let report = solve_eqdqo(&p, &cfg).unwrap();
    assert!(report.stage1_value.abs() <= 1e-8);
    assert!(report.solution[0].std.norm() <= 1e-4);
}

#[test]
fn constant_objective_returns_feasible_point() {
    let f = DualFunction::constant(DualNumber::new(3.0, -2.0), 1);
    let p = EqdqoProblem::new(f, vec![unit_norm_constraint(0, 1)]).unwrap();
    let cfg = SolverConfig { restarts: 2, ..Default::default() };
    let report = solve_eqdqo(&p, &cfg).unwrap();
    assert_eq!(report.stage1_value, 3.0);
    assert_eq!(report.stage2_value, -2.0);
    assert!(report.feasibility.max() <= cfg.tol_feas);
}

#[test]
fn general_path_agrees_on_toy() {
    let cfg = SolverConfig { restarts: 4, ..Default::default() };
    let report = solve_eqdqo(&toy().as_general(), &cfg).unwrap();
    assert!(report.stage1_value.abs() <= 1e-8);
    assert!(report.stage2_value.abs() <= 1e-6, "stage2 = {}", report.stage2_value);
}

#[test]
fn toy_kkt_multiplier() {
    let c = DualQuaternion::from_std(Quaternion::real(2.0));
    let p = EqdqoProblem::new(offset_squared_magnitude(0, c, 1), vec![unit_norm_constraint(0, 1)]).unwrap();
    let x = DualQuaternionVector::new(vec![DualQuaternion::ONE]);
    let k = kkt_residual(&p, &x, KktForm::StageOne, &Smoothing::exact(), None).unwrap();
    assert!((k.multipliers[0] - 1.0).abs() <= 1e-6, "λ = {:?}", k.multipliers);
    assert!(k.residual <= 1e-8);
}

#[test]
fn solve_is_deterministic() {
    let cfg = SolverConfig { restarts: 3, seed: 11, ..Default::default() };
    let a = solve_eqdqo(&toy(), &cfg).unwrap();
    let b = solve_eqdqo(&toy(), &cfg).unwrap();
    assert_eq!(a.solution, b.solution);
    assert_eq!(a.stage2_value, b.stage2_value);
    let threaded = SolverConfig { threads: 3, ..cfg };
    let c = solve_eqdqo(&toy(), &threaded).unwrap();
    assert_eq!(a.solution, c.solution);
}

#[test]
fn magnitude_is_standard_problem() {
    let p = EqdqoProblem::new(magnitude(0, 1), vec![unit_norm_constraint(0, 1)]).unwrap();
    assert!(p.is_standard());
}
