//! Hand-eye calibration `AX = XB` and hand-eye/robot-world calibration
//! `AX = YB` as standard dual quaternion programs with magnitude (not
//! squared) residual objectives.

mod maps;

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{DualQuaternion, DualQuaternionVector, Quaternion, UnitDualQuaternion};
use crate::error::{Error, Result};
use crate::func::{unit_norm_constraint, Aggregate, DualFunction, ResidualFunction};
use crate::pose::Pose;
use crate::random::{normal, rng, unit_axis, unit_quaternion, DetRng};
use crate::solver::{solve_eqdqo, EqdqoProblem, SolveReport, SolverConfig};

pub use maps::{AxxbMap, AxybMap};

/// Smallest pairwise angle between two relative rotation axes for a
/// motion set to count as non-degenerate.
pub const MIN_AXIS_SPREAD: f64 = 0.3;

/// Rotations smaller than this carry no usable axis.
const MIN_AXIS_ROTATION: f64 = 1e-6;

/// Relative rotation angles drawn by the generator, in radians.
const MOTION_ANGLE: (f64, f64) = (0.3, 2.0);

/// Scale of generated translations.
const TRANSLATION_SCALE: f64 = 0.5;

/// Smallest real part allowed for generated `AX = YB` measurements, so that
/// the sign-canonical `â_i` and `b̂_i` stay consistent under small noise.
const MIN_REAL_PART: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Axxb,
    Axyb,
}

impl std::str::FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "axxb" => Ok(Model::Axxb),
            "axyb" => Ok(Model::Axyb),
            other => Err(Error::Config(format!("unknown model {other:?} (expected axxb or axyb)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    #[serde(rename = "X")]
    pub x: Pose,
    #[serde(rename = "Y", default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Pose>,
}

/// Settings a synthetic dataset was generated with.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorInfo {
    pub motions: usize,
    pub noise_rot: f64,
    pub noise_trans: f64,
    pub seed: u64,
}

/// Pose measurements. For `AX = XB` the lists are the `n + 1` sequential
/// poses whose consecutive pairs give `n` relative motions; for `AX = YB`
/// they are `n` paired poses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandEyeDataset {
    pub model: Model,
    #[serde(rename = "A")]
    pub a: Vec<Pose>,
    #[serde(rename = "B")]
    pub b: Vec<Pose>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruth>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorInfo>,
}

impl HandEyeDataset {
    pub fn from_json(text: &str) -> Result<Self> {
        let d: Self = serde_json::from_str(text)?;
        d.validate()?;
        Ok(d)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("dataset serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.len() != self.b.len() {
            return Err(Error::InvalidPose(format!(
                "A has {} poses but B has {}",
                self.a.len(),
                self.b.len()
            )));
        }
        for p in self.a.iter().chain(&self.b) {
            p.validate()?;
        }
        if let Some(gt) = &self.ground_truth {
            gt.x.validate()?;
            if let Some(y) = gt.y {
                y.validate()?;
            }
            if self.model == Model::Axyb && gt.y.is_none() {
                return Err(Error::InvalidPose("AX=YB ground truth needs Y".into()));
            }
        }
        Ok(())
    }
}

fn udq(p: &Pose) -> Result<DualQuaternion> {
    Ok(p.to_udq()?.canonicalize().inner())
}

/// Relative motions `A^{(i)} = A_{i+1} A_i⁻¹` and `B^{(i)} = B_{i+1}⁻¹ B_i`
/// as sign-canonical unit dual quaternions.
pub fn relative_motions(d: &HandEyeDataset) -> Result<Vec<(DualQuaternion, DualQuaternion)>> {
    if d.model != Model::Axxb {
        return Err(Error::Config("relative motions are defined for AX=XB datasets".into()));
    }
    d.validate()?;
    if d.a.len() < 2 {
        return Err(Error::TooFewMotions { needed: 1, got: d.a.len().saturating_sub(1) });
    }
    (0..d.a.len() - 1)
        .map(|i| {
            let a0 = d.a[i].to_udq()?;
            let a1 = d.a[i + 1].to_udq()?;
            let b0 = d.b[i].to_udq()?;
            let b1 = d.b[i + 1].to_udq()?;
            Ok(((a1 * a0.conj()).canonicalize().inner(), (b1.conj() * b0).canonicalize().inner()))
        })
        .collect()
}

fn axxb_map(d: &HandEyeDataset) -> Result<AxxbMap> {
    let motions = relative_motions(d)?;
    if motions.len() < 2 {
        return Err(Error::TooFewMotions { needed: 2, got: motions.len() });
    }
    let (a, b) = motions.into_iter().unzip();
    Ok(AxxbMap { a, b })
}

fn axyb_map(d: &HandEyeDataset, fixed_y: Option<DualQuaternion>) -> Result<AxybMap> {
    if d.model != Model::Axyb {
        return Err(Error::Config("expected an AX=YB dataset".into()));
    }
    d.validate()?;
    if d.a.len() < 3 {
        return Err(Error::TooFewMotions { needed: 3, got: d.a.len() });
    }
    let a = d.a.iter().map(udq).collect::<Result<_>>()?;
    let b = d.b.iter().map(udq).collect::<Result<_>>()?;
    Ok(AxybMap { a, b, fixed_y })
}

/// `min Σ_i |â^{(i)} x̂ − x̂ b̂^{(i)}|  s.t. |x̂|² = 1`.
pub fn build_axxb(d: &HandEyeDataset) -> Result<EqdqoProblem> {
    let map = axxb_map(d)?;
    let tie = Arc::new(map.clone());
    let f = ResidualFunction::new(map, Aggregate::SumOfMagnitudes).into_function();
    Ok(EqdqoProblem::new(f, vec![unit_norm_constraint(0, 1)])?.with_tie_break(tie))
}

/// `min Σ_i |â_i x̂ − ŷ b̂_i|  s.t. |x̂|² = 1, |ŷ|² = 1`.
pub fn build_axyb(d: &HandEyeDataset) -> Result<EqdqoProblem> {
    let map = axyb_map(d, None)?;
    let tie = Arc::new(map.clone());
    let f = ResidualFunction::new(map, Aggregate::SumOfMagnitudes).into_function();
    let cons = vec![unit_norm_constraint(0, 2), unit_norm_constraint(1, 2)];
    Ok(EqdqoProblem::new(f, cons)?.with_tie_break(tie))
}

/// The `AX = YB` objective with `Ŷ` substituted, a one-variable problem in
/// `x̂`.
pub fn build_axyb_known_y(d: &HandEyeDataset, y: UnitDualQuaternion) -> Result<EqdqoProblem> {
    let map = axyb_map(d, Some(y.inner()))?;
    let tie = Arc::new(map.clone());
    let f = ResidualFunction::new(map, Aggregate::SumOfMagnitudes).into_function();
    Ok(EqdqoProblem::new(f, vec![unit_norm_constraint(0, 1)])?.with_tie_break(tie))
}

/// The objective of either model.
pub fn build(d: &HandEyeDataset) -> Result<EqdqoProblem> {
    match d.model {
        Model::Axxb => build_axxb(d),
        Model::Axyb => build_axyb(d),
    }
}

/// The objective of either model as a bare function.
pub fn objective(d: &HandEyeDataset) -> Result<DualFunction> {
    Ok(build(d)?.objective)
}

/// Rotation axes of the motions that drive identifiability: the relative
/// motions of `A` for both models.
fn motion_axes(d: &HandEyeDataset) -> Result<Vec<Quaternion>> {
    let mut axes = Vec::new();
    for w in d.a.windows(2) {
        let r = w[1].to_udq()?.rotation() * w[0].to_udq()?.rotation().conj();
        let (theta, axis) = r.to_axis_angle();
        if theta > MIN_AXIS_ROTATION {
            axes.push(axis);
        }
    }
    Ok(axes)
}

/// Largest pairwise angle between relative rotation axes, as lines, in
/// `[0, π/2]`. Zero when fewer than two axes exist.
pub fn axis_spread(d: &HandEyeDataset) -> Result<f64> {
    let axes = motion_axes(d)?;
    let mut best = 0.0f64;
    for i in 0..axes.len() {
        for j in i + 1..axes.len() {
            let c = axes[i].dot(axes[j]).abs().min(1.0);
            best = best.max(c.acos());
        }
    }
    Ok(best)
}

/// A warning when the motion axes are (nearly) parallel, in which case
/// the calibration is not identifiable.
pub fn degeneracy_warning(d: &HandEyeDataset) -> Result<Option<String>> {
    let spread = axis_spread(d)?;
    Ok((spread < MIN_AXIS_SPREAD).then(|| {
        format!("degenerate motions: largest pairwise axis angle {spread:.4} rad < {MIN_AXIS_SPREAD} rad")
    }))
}

fn random_pose(r: &mut DetRng, scale: f64) -> UnitDualQuaternion {
    let p = [scale * normal(r), scale * normal(r), scale * normal(r)];
    UnitDualQuaternion::from_pose(unit_quaternion(r), Quaternion::imaginary(p)).expect("valid pose")
}

fn random_motion(r: &mut DetRng) -> UnitDualQuaternion {
    let theta = MOTION_ANGLE.0 + (MOTION_ANGLE.1 - MOTION_ANGLE.0) * r.random::<f64>();
    let q = Quaternion::from_axis_angle(theta, unit_axis(r)).expect("unit axis");
    let p = [TRANSLATION_SCALE * normal(r), TRANSLATION_SCALE * normal(r), TRANSLATION_SCALE * normal(r)];
    UnitDualQuaternion::from_pose(q, Quaternion::imaginary(p)).expect("valid motion")
}

/// Multiplicative noise: rotation of angle `σ_r·ζ` about a random axis and
/// body-frame translation `σ_t·(ζ₁, ζ₂, ζ₃)`, with standard normal `ζ`.
/// The draws do not depend on the noise levels, so one seed gives the same
/// geometry at every level.
fn noise(r: &mut DetRng, sigma_r: f64, sigma_t: f64) -> UnitDualQuaternion {
    let axis = unit_axis(r);
    let angle = sigma_r * normal(r);
    let p = [sigma_t * normal(r), sigma_t * normal(r), sigma_t * normal(r)];
    let q = Quaternion::from_axis_angle(angle, axis).expect("unit axis");
    UnitDualQuaternion::from_pose(q, Quaternion::imaginary(p)).expect("valid noise")
}

fn spread_ok(axes: &[Quaternion]) -> bool {
    (0..axes.len()).any(|i| {
        (i + 1..axes.len()).any(|j| axes[i].dot(axes[j]).abs().min(1.0).acos() >= MIN_AXIS_SPREAD)
    })
}

/// Synthetic dataset with `n` relative motions (`AX = XB`) or `n` pose
/// pairs (`AX = YB`). `B` is perturbed by [`noise`]-style transforms.
pub fn generate_synthetic(model: Model, n: usize, sigma_r: f64, sigma_t: f64, seed: u64) -> Result<HandEyeDataset> {
    let needed = match model {
        Model::Axxb => 2,
        Model::Axyb => 3,
    };
    if n < needed {
        return Err(Error::TooFewMotions { needed, got: n });
    }
    if !(sigma_r >= 0.0 && sigma_t >= 0.0) {
        return Err(Error::Config("noise levels must be nonnegative".into()));
    }
    let mut r = rng(seed);
    let x = random_pose(&mut r, TRANSLATION_SCALE);
    let y = random_pose(&mut r, TRANSLATION_SCALE);
    // Both signs of ŷ are the same pose. Pick the one with (y x*)_w ≥ 0, so
    // that a_w ≥ MIN_REAL_PART and (y* a x)_w = ⟨a, y x*⟩ ≥ MIN_REAL_PART
    // describe overlapping caps and the rejection loop below terminates.
    let y = if (y.rotation() * x.rotation().conj()).w < 0.0 {
        UnitDualQuaternion::new(-y.inner()).expect("negated unit")
    } else {
        y
    };
    let (a, b_clean): (Vec<UnitDualQuaternion>, Vec<UnitDualQuaternion>) = match model {
        Model::Axxb => {
            let w = random_pose(&mut r, TRANSLATION_SCALE);
            let motions = loop {
                let m: Vec<UnitDualQuaternion> = (0..n).map(|_| random_motion(&mut r)).collect();
                let axes: Vec<Quaternion> = m.iter().map(|q| q.rotation().to_axis_angle().1).collect();
                if spread_ok(&axes) {
                    break m;
                }
            };
            let mut a = vec![random_pose(&mut r, 1.0)];
            for m in &motions {
                let next = *m * *a.last().expect("nonempty");
                a.push(next);
            }
            let b = a.iter().map(|ai| w * ai.conj() * x).collect();
            (a, b)
        }
        Model::Axyb => loop {
            let mut a = Vec::with_capacity(n);
            while a.len() < n {
                let ai = random_pose(&mut r, 1.0).canonicalize();
                let bi = y.conj() * ai * x;
                if ai.rotation().w >= MIN_REAL_PART && bi.rotation().w >= MIN_REAL_PART {
                    a.push(ai);
                }
            }
            let axes: Vec<Quaternion> = a
                .windows(2)
                .map(|w| (w[1].rotation() * w[0].rotation().conj()).to_axis_angle().1)
                .collect();
            if spread_ok(&axes) {
                let b = a.iter().map(|ai| y.conj() * *ai * x).collect();
                break (a, b);
            }
        },
    };
    let b: Vec<UnitDualQuaternion> = b_clean.iter().map(|bi| *bi * noise(&mut r, sigma_r, sigma_t)).collect();
    Ok(HandEyeDataset {
        model,
        a: a.into_iter().map(Pose::from_udq).collect(),
        b: b.into_iter().map(Pose::from_udq).collect(),
        ground_truth: Some(GroundTruth {
            x: Pose::from_udq(x),
            y: (model == Model::Axyb).then(|| Pose::from_udq(y)),
        }),
        generator: Some(GeneratorInfo { motions: n, noise_rot: sigma_r, noise_trans: sigma_t, seed }),
    })
}

/// Rotation and translation errors of one estimated transform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformError {
    /// Angle of `q_true* q_est` in `[0, π]`, radians.
    pub rotation: f64,
    /// `|p_true − p_est|` of the body-frame translations.
    pub translation: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HandEyeErrors {
    #[serde(rename = "X")]
    pub x: TransformError,
    #[serde(rename = "Y", default, skip_serializing_if = "Option::is_none")]
    pub y: Option<TransformError>,
}

impl HandEyeErrors {
    pub fn max_rotation(&self) -> f64 {
        self.y.map_or(self.x.rotation, |y| self.x.rotation.max(y.rotation))
    }

    pub fn max_translation(&self) -> f64 {
        self.y.map_or(self.x.translation, |y| self.x.translation.max(y.translation))
    }
}

/// Rotation and body-frame translation of an estimate that is unit up to
/// solver tolerance.
fn estimate_pose(q: DualQuaternion) -> (Quaternion, [f64; 3]) {
    let n = q.std.norm();
    let rot = q.std.scale(1.0 / n);
    let p = (rot.conj() * q.dual.scale(1.0 / n)).scale(2.0);
    (rot, p.vector())
}

pub fn transform_error(truth: &Pose, estimate: DualQuaternion) -> Result<TransformError> {
    let t = truth.to_udq()?.canonicalize();
    let (q_true, p_true) = t.to_pose();
    let (q_est, p_est) = estimate_pose(estimate);
    let rel = q_true.conj() * q_est;
    let rel = if rel.w < 0.0 { -rel } else { rel };
    let p_true = p_true.vector();
    let translation = (0..3).map(|k| (p_true[k] - p_est[k]).powi(2)).sum::<f64>().sqrt();
    Ok(TransformError { rotation: rel.rotation_angle(), translation })
}

/// Errors of `x̂` (and `ŷ` for `AX = YB`) against the recorded ground truth.
pub fn evaluate_solution(d: &HandEyeDataset, x: DualQuaternion, y: Option<DualQuaternion>) -> Result<HandEyeErrors> {
    let gt = d.ground_truth.as_ref().ok_or(Error::NoGroundTruth)?;
    let ex = transform_error(&gt.x, x)?;
    let ey = match (gt.y, y) {
        (Some(truth), Some(est)) => Some(transform_error(&truth, est)?),
        _ => None,
    };
    Ok(HandEyeErrors { x: ex, y: ey })
}

/// Errors of a solve report's solution, if the dataset has ground truth.
pub fn evaluate_report(d: &HandEyeDataset, report: &SolveReport) -> Result<Option<HandEyeErrors>> {
    if d.ground_truth.is_none() {
        return Ok(None);
    }
    let s: &DualQuaternionVector = &report.solution;
    let y = (s.len() > 1).then(|| s[1]);
    evaluate_solution(d, s[0], y).map(Some)
}

/// Solve report of a hand-eye dataset with error metrics and warnings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HandEyeReport {
    pub model: Model,
    #[serde(flatten)]
    pub solve: SolveReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub errors: Option<HandEyeErrors>,
    pub warnings: Vec<String>,
}

pub fn solve(d: &HandEyeDataset, cfg: &SolverConfig) -> Result<HandEyeReport> {
    let warnings = degeneracy_warning(d)?.into_iter().collect();
    let problem = build(d)?;
    let solve = solve_eqdqo(&problem, cfg)?;
    let errors = evaluate_report(d, &solve)?;
    Ok(HandEyeReport { model: d.model, solve, errors, warnings })
}

#[cfg(test)]
mod tests;
