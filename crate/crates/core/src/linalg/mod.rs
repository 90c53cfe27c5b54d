//! Exact integer linear algebra: determinants, Smith normal form, cokernels.

mod det;
mod matrix;
mod snf;

pub(crate) use det::bareiss;
pub use det::{det_exact, det_i128, det_mod, gram_det};
pub use matrix::IntMatrix;
pub use snf::{cokernel, cokernel_general, invariant_factors, smith_normal_form, verify_snf, GeneralCokernel, SnfResult};
