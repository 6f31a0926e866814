//! Dual numbers, quaternions, dual quaternions and dual quaternion vectors.

mod dual_number;
mod dual_quaternion;
mod quaternion;
mod unit;
mod vector;

pub use dual_number::{dn_compare, DualNumber};
pub use dual_quaternion::{dq_inverse, dq_magnitude, DualQuaternion};
pub use quaternion::{
    mat4_add, mat4_mul, mat4_mul_vec, mat4_scale, mat4_transpose_mul_vec, q_exp_axis_angle,
    Mat4, Quaternion, CONJ_MATRIX,
};
pub use unit::{
    is_unit, udq_canonicalize_sign, udq_exp, udq_from_pose, udq_log, udq_to_pose,
    unit_residuals, UnitDualQuaternion,
};
pub use vector::{dqvec_norm2, DualQuaternionVector};
pub(crate) use unit::is_canonical_sign;
