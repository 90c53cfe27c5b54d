//! Inputs shared by the benchmarks.

use cokernel_lab::linalg::IntMatrix;
use cokernel_lab::seed;
use rand::Rng;

/// A dense `n × n` matrix with entries in `[-bound, bound]`.
pub fn random_matrix(n: usize, bound: i64, seed_value: u64) -> IntMatrix {
    let mut rng = seed::rng(seed_value);
    let rows: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(-bound..=bound)).collect()).collect();
    IntMatrix::from_rows(&rows)
}
