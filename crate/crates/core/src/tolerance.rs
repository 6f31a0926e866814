//! Numerical thresholds shared across the crate.

/// A dual number or dual quaternion is appreciable when its standard part
/// exceeds this magnitude. Decides the branch of the magnitude and 2-norm.
pub const TOL_APP: f64 = 1e-8;

/// Unit validation tolerance for rotations and unit dual quaternions.
pub const TOL_UNIT: f64 = 1e-9;

/// Constructors renormalize inputs that are this close to unit and reject
/// anything farther away.
pub const TOL_NORMALIZE: f64 = 1e-6;

/// Default central finite-difference step.
pub const FD_STEP: f64 = 1e-5;
