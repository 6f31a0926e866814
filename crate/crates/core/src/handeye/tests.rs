use super::*;
use crate::algebra::{dn_compare, DualNumber};
use crate::pose::{matrix_mul, Matrix4};
use crate::random::random_unit_dual_quaternion;
use std::cmp::Ordering;

fn matrix_inverse(m: &Matrix4) -> Matrix4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = m[j][i];
        }
        out[i][3] = -(0..3).map(|k| m[k][i] * m[k][3]).sum::<f64>();
    }
    out[3][3] = 1.0;
    out
}

fn max_diff(a: &Matrix4, b: &Matrix4) -> f64 {
    (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).map(|(i, j)| (a[i][j] - b[i][j]).abs()).fold(0.0, f64::max)
}

fn pose_pair(seed: u64) -> (Pose, Pose) {
    let mut r = rng(seed);
    (
        Pose::from_udq(random_unit_dual_quaternion(&mut r, 1.0)),
        Pose::from_udq(random_unit_dual_quaternion(&mut r, 1.0)),
    )
}

fn axxb(a: Vec<Pose>, b: Vec<Pose>) -> HandEyeDataset {
    HandEyeDataset { model: Model::Axxb, a, b, ground_truth: None, generator: None }
}

fn x_of(d: &HandEyeDataset) -> DualQuaternion {
    d.ground_truth.unwrap().x.to_udq().unwrap().inner()
}

fn y_of(d: &HandEyeDataset) -> DualQuaternion {
    d.ground_truth.unwrap().y.unwrap().to_udq().unwrap().inner()
}

#[test]
fn relative_motion_matches_matrix_product() {
    for seed in 0..20 {
        let (a1, a2) = pose_pair(seed);
        let (b1, b2) = pose_pair(seed + 100);
        let d = axxb(vec![a1, a2], vec![b1, b2]);
        let (a, b) = relative_motions(&d).unwrap()[0];
        let want_a = matrix_mul(&a2.to_matrix(), &matrix_inverse(&a1.to_matrix()));
        let want_b = matrix_mul(&matrix_inverse(&b2.to_matrix()), &b1.to_matrix());
        let got_a = Pose::from_udq(UnitDualQuaternion::new(a).unwrap()).to_matrix();
        let got_b = Pose::from_udq(UnitDualQuaternion::new(b).unwrap()).to_matrix();
        assert!(max_diff(&got_a, &want_a) <= 1e-10);
        assert!(max_diff(&got_b, &want_b) <= 1e-10);
        assert!(a.std.w >= 0.0 && b.std.w >= 0.0);
    }
}

#[test]
fn relative_motion_from_identity_and_no_motion() {
    let (t, _) = pose_pair(1);
    let d = axxb(vec![Pose::IDENTITY, t], vec![Pose::IDENTITY, Pose::IDENTITY]);
    let (a, b) = relative_motions(&d).unwrap()[0];
    assert!(a.max_abs_diff(t.to_udq().unwrap().canonicalize().inner()) <= 1e-15);
    assert_eq!(b, DualQuaternion::ONE);
    let d = axxb(vec![t, t], vec![t, t]);
    let (a, _) = relative_motions(&d).unwrap()[0];
    assert!(a.max_abs_diff(DualQuaternion::ONE) <= 1e-15);
}

#[test]
fn relative_motions_need_two_poses() {
    let d = axxb(vec![Pose::IDENTITY], vec![Pose::IDENTITY]);
    assert!(matches!(relative_motions(&d), Err(Error::TooFewMotions { .. })));
    let d = axxb(vec![Pose::IDENTITY; 2], vec![Pose::IDENTITY; 2]);
    assert!(matches!(build_axxb(&d), Err(Error::TooFewMotions { needed: 2, got: 1 })));
}

#[test]
fn noiseless_objectives_vanish_at_truth() {
    for seed in 0..5 {
        let d = generate_synthetic(Model::Axxb, 5, 0.0, 0.0, seed).unwrap();
        let f = objective(&d).unwrap();
        let v = f.eval(&DualQuaternionVector::new(vec![x_of(&d)]));
        assert!(v.std.abs() <= 1e-12 && v.dual.abs() <= 1e-12, "{v:?}");

        let d = generate_synthetic(Model::Axyb, 5, 0.0, 0.0, seed).unwrap();
        let f = objective(&d).unwrap();
        let v = f.eval(&DualQuaternionVector::new(vec![x_of(&d), y_of(&d)]));
        assert!(v.std.abs() <= 1e-12 && v.dual.abs() <= 1e-12, "{v:?}");
    }
}

#[test]
fn objective_at_identity_is_positive() {
    let d = generate_synthetic(Model::Axxb, 3, 0.0, 0.0, 4).unwrap();
    let motions = relative_motions(&d).unwrap();
    // One term by hand: |â − b̂| at x̂ = 1.
    let (a, b) = motions[0];
    let first = (a - b).magnitude();
    let v = objective(&d).unwrap().eval(&DualQuaternionVector::new(vec![DualQuaternion::ONE]));
    assert!(first.std > 0.0);
    assert!(v.std >= first.std);

    let d = generate_synthetic(Model::Axyb, 4, 0.0, 0.0, 4).unwrap();
    let one = DualQuaternionVector::new(vec![DualQuaternion::ONE; 2]);
    assert!(objective(&d).unwrap().eval(&one).std > 0.0);
}

#[test]
fn unit_constraint_vanishes_on_unit_points() {
    let d = generate_synthetic(Model::Axyb, 4, 0.0, 0.0, 2).unwrap();
    let p = build(&d).unwrap();
    let mut r = rng(8);
    for _ in 0..20 {
        let x = DualQuaternionVector::new(vec![
            random_unit_dual_quaternion(&mut r, 3.0).inner(),
            random_unit_dual_quaternion(&mut r, 3.0).inner(),
        ]);
        for h in &p.constraints {
            let v = h.eval(&x);
            assert!(v.std.abs() <= 1e-14 && v.dual.abs() <= 1e-14);
        }
    }
    assert!(p.is_standard());
}

#[test]
fn known_y_reduction_recovers_x() {
    let d = generate_synthetic(Model::Axyb, 5, 0.0, 0.0, 3).unwrap();
    let y = d.ground_truth.unwrap().y.unwrap().to_udq().unwrap();
    let cfg = SolverConfig { restarts: 4, ..Default::default() };
    let reduced = solve_eqdqo(&build_axyb_known_y(&d, y).unwrap(), &cfg).unwrap();
    let full = solve_eqdqo(&build_axyb(&d).unwrap(), &cfg).unwrap();
    let ex = |s: DualQuaternion| transform_error(&d.ground_truth.unwrap().x, s).unwrap();
    let (a, b) = (ex(reduced.solution[0]), ex(full.solution[0]));
    assert!((a.rotation - b.rotation).abs() <= 1e-8);
    assert!((a.translation - b.translation).abs() <= 1e-8);
    assert!(a.rotation <= 1e-8 && a.translation <= 1e-8);
}

#[test]
fn generator_is_deterministic_and_spread() {
    for model in [Model::Axxb, Model::Axyb] {
        for seed in 0..10 {
            let a = generate_synthetic(model, 4, 0.01, 0.01, seed).unwrap();
            let b = generate_synthetic(model, 4, 0.01, 0.01, seed).unwrap();
            assert_eq!(a.to_json(), b.to_json());
            assert_eq!(HandEyeDataset::from_json(&a.to_json()).unwrap().to_json(), a.to_json());
            assert!(axis_spread(&a).unwrap() >= MIN_AXIS_SPREAD);
            assert!(degeneracy_warning(&a).unwrap().is_none());
        }
    }
    assert_ne!(
        generate_synthetic(Model::Axxb, 4, 0.0, 0.0, 1).unwrap().to_json(),
        generate_synthetic(Model::Axxb, 4, 0.0, 0.0, 2).unwrap().to_json()
    );
}

#[test]
fn generator_rejects_bad_arguments() {
    assert!(matches!(generate_synthetic(Model::Axxb, 1, 0.0, 0.0, 0), Err(Error::TooFewMotions { .. })));
    assert!(matches!(generate_synthetic(Model::Axyb, 2, 0.0, 0.0, 0), Err(Error::TooFewMotions { .. })));
    assert!(generate_synthetic(Model::Axxb, 3, -1.0, 0.0, 0).is_err());
    assert!(generate_synthetic(Model::Axxb, 3, f64::NAN, 0.0, 0).is_err());
}

#[test]
fn parallel_axes_are_flagged() {
    let rot = |t: f64| Pose::new(Quaternion::from_axis_angle(t, Quaternion::K).unwrap(), [t, 0.0, 0.0]).unwrap();
    let d = axxb(vec![rot(0.0), rot(0.5), rot(1.2), rot(2.0)], vec![Pose::IDENTITY; 4]);
    assert!(axis_spread(&d).unwrap() < 1e-12);
    let w = degeneracy_warning(&d).unwrap().unwrap();
    assert!(w.contains("degenerate"));
}

#[test]
fn evaluation_handles_truth_and_double_cover() {
    let d = generate_synthetic(Model::Axyb, 4, 0.0, 0.0, 6).unwrap();
    let (x, y) = (x_of(&d), y_of(&d));
    let e = evaluate_solution(&d, x, Some(y)).unwrap();
    assert!(e.max_rotation() <= 1e-12 && e.max_translation() <= 1e-12);
    let e = evaluate_solution(&d, -x, Some(-y)).unwrap();
    assert!(e.max_rotation() <= 1e-12 && e.max_translation() <= 1e-12);
}

#[test]
fn evaluation_measures_known_rotation() {
    let d = generate_synthetic(Model::Axxb, 3, 0.0, 0.0, 6).unwrap();
    let truth = d.ground_truth.unwrap().x;
    let bump = Quaternion::from_axis_angle(1e-3, Quaternion::K).unwrap();
    let est = Pose::new(truth.rotation * bump, truth.translation).unwrap();
    let e = evaluate_solution(&d, est.to_udq().unwrap().inner(), None).unwrap();
    assert!((e.x.rotation - 1e-3).abs() <= 1e-9, "{}", e.x.rotation);
    assert!(e.x.translation <= 1e-12);
    assert!(e.y.is_none());
}

#[test]
fn evaluation_needs_ground_truth() {
    let d = axxb(vec![Pose::IDENTITY; 3], vec![Pose::IDENTITY; 3]);
    assert!(matches!(evaluate_solution(&d, DualQuaternion::ONE, None), Err(Error::NoGroundTruth)));
}

#[test]
fn objective_ignores_term_order() {
    let d = generate_synthetic(Model::Axyb, 6, 0.05, 0.05, 9).unwrap();
    let mut perm = d.clone();
    let order = [3, 0, 5, 1, 4, 2];
    perm.a = order.iter().map(|&i| d.a[i]).collect();
    perm.b = order.iter().map(|&i| d.b[i]).collect();
    let mut r = rng(10);
    for _ in 0..10 {
        let x = DualQuaternionVector::new(vec![
            random_unit_dual_quaternion(&mut r, 1.0).inner(),
            random_unit_dual_quaternion(&mut r, 1.0).inner(),
        ]);
        let mut terms: Vec<DualNumber> = {
            let map = axyb_map(&d, None).unwrap();
            (0..6).map(|k| crate::func::ResidualMap::residual(&map, k, &x).magnitude()).collect()
        };
        let sum = |t: &[DualNumber]| t.iter().fold(DualNumber::ZERO, |a, &b| a + b);
        let forward = sum(&terms);
        terms.sort_by(|a, b| a.total_cmp(b));
        let sorted = sum(&terms);
        let a = objective(&d).unwrap().eval(&x);
        let b = objective(&perm).unwrap().eval(&x);
        assert!((a.std - b.std).abs() <= 1e-14 && (a.dual - b.dual).abs() <= 1e-14);
        assert!((forward.std - sorted.std).abs() <= 1e-14);
        assert_eq!(dn_compare(a, b), dn_compare(b, a).reverse());
    }
}

#[test]
fn squared_magnitudes_hide_dual_residuals() {
    // A residual with zero standard part: |r̂|² = 0 exactly, |r̂| = |r_d|ε.
    let r = DualQuaternion::infinitesimal(Quaternion::new(0.0, 0.3, 0.0, 0.4));
    assert_eq!(r.norm_squared(), DualNumber::ZERO);
    assert_eq!(r.magnitude(), DualNumber::new(0.0, 0.5));
    assert_eq!(dn_compare(r.magnitude(), DualNumber::ZERO), Ordering::Greater);
    assert_eq!(dn_compare(r.norm_squared(), DualNumber::ZERO), Ordering::Equal);
}

#[test]
fn dataset_json_shape() {
    let d = generate_synthetic(Model::Axyb, 3, 0.0, 0.0, 1).unwrap();
    let v: serde_json::Value = serde_json::from_str(&d.to_json()).unwrap();
    assert_eq!(v["model"], "axyb");
    assert_eq!(v["A"][0]["q"].as_array().unwrap().len(), 4);
    assert_eq!(v["B"][0]["t"].as_array().unwrap().len(), 3);
    assert!(v["ground_truth"]["Y"].is_object());
    let bad = d.to_json().replace("\"model\"", "\"modle\"");
    assert!(HandEyeDataset::from_json(&bad).is_err());
    let mut short = d.clone();
    short.b.pop();
    assert!(short.validate().is_err());
}

#[test]
fn generator_terminates_for_every_sign_of_y() {
    // Some seeds draw ŷ with (y x*)_w < 0, which used to leave no valid A_i.
    for seed in 0..2000 {
        let d = generate_synthetic(Model::Axyb, 6, 0.01, 0.01, seed).unwrap();
        assert!(d.b.iter().all(|b| b.rotation.w > 0.0));
    }
}
