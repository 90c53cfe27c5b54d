//! Type vectors of `q ∈ Gⁿ`, the fixed-`n` formula for `P(A_n q = 0)`, the
//! per-type contributions `E(n̲)` and their sum over generating types, which
//! is the surjection moment `E|Sur(cok A_n, G)|`.

mod sum;
mod types;
mod window;

pub use sum::{
    divergence_bound_scan, exact_sur_moment, exact_sur_moment_rational, sur_moment, window_decomposition_report, MomentScan,
    DEFAULT_BUDGET,
};
pub use types::{
    alpha, det_ratio_exact, kernel_prob_oracle, kl_form_contribution, ln_divergence_bound, ln_kl_form_contribution,
    ln_prob_kernel_type, ln_type_contribution, moment_det_exact, moment_matrix, prob_kernel_type, prob_kernel_vector,
    type_contribution, type_contribution_exact, type_of, z2_single_contribution, MomentMatrix, TypeVector, EXACT_MAX_N,
};
pub use window::{uniform_on_subgroup, window_check, window_membership, WindowCheck, WindowParams, DEFAULT_WINDOW_CONSTANT};
pub(crate) use types::{det_of, integer_moment_matrix};
