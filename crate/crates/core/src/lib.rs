//! Exact cokernels of determinantally biased sparse integer matrices and of
//! random 2-dimensional hypertrees, with the fixed-`n` moment formulas,
//! divergence diagnostics and Laplace-method constants used to check them.

pub mod abelian;
pub mod combinatorics;
pub mod divergence;
pub mod dpp;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod hypertree;
pub mod laplace;
pub mod linalg;
pub mod moments;
pub mod seed;

pub use abelian::{AbelianGroup, GroupElement, GroupTable, PGroupPartition};
pub use error::{Error, Result};
