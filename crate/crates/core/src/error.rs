use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("square root of a dual number with negative standard part {0}")]
    NegativeStandardPart(f64),
    #[error("no dual number squares to {0}ε")]
    InfinitesimalSqrt(f64),
    #[error("rotation axis is not an imaginary unit quaternion")]
    NonUnitAxis,
    #[error("dual quaternion is not appreciable (standard part is zero)")]
    NotAppreciable,
    #[error("rotation quaternion is not unit (|q| = {0})")]
    NonUnitRotation(f64),
    #[error("translation quaternion has nonzero real part {0}")]
    NonImaginaryTranslation(f64),
    #[error("dual quaternion fails the unit condition: {0}")]
    NonUnit(String),
    #[error("arity mismatch: {0} vs {1}")]
    ArityMismatch(usize, usize),
    #[error("sampled value of a unit-valued function is not unit: {0}")]
    NonUnitValue(String),
    #[error("no restart reached feasibility (best residual {residual:e}, tolerance {tol:e})")]
    Infeasible { residual: f64, tol: f64 },
    #[error("{stage} hit its iteration cap ({iterations} iterations)")]
    MaxIterations { stage: &'static str, iterations: usize },
    #[error("constraint gradients are rank deficient (smallest/largest singular value {0:e})")]
    DegenerateConstraintGradients(f64),
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("too few motions: need at least {needed}, got {got}")]
    TooFewMotions { needed: usize, got: usize },
    #[error("dataset carries no ground truth")]
    NoGroundTruth,
    #[error("pose graph is not weakly connected")]
    DisconnectedGraph,
    #[error("invalid pose graph: {0}")]
    InvalidGraph(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: measurement is not a unit rotation (|q| = {norm})")]
    NonUnitMeasurement { line: usize, norm: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
