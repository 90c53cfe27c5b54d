//! Random 2-dimensional hypertrees. `I_n` has rows indexed by the 2-subsets
//! of `[n−1]` and columns by the 3-subsets of `[n]`; a hypertree is a set `K`
//! of `C(n−1,2)` columns with `I_nᵀ[K]` nonsingular, drawn with probability
//! `det(I_nᵀ[K])² / det(I_n I_nᵀ)`. Its first homology is `cok I_nᵀ[K]`.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Pow, Zero};
use rayon::prelude::*;

use crate::abelian::{AbelianGroup, PGroupPartition};
use crate::combinatorics::{binomial, next_combination, rank_combination, unrank_combination};
use crate::dpp::{self, DenseFeatures};
use crate::ensemble::{is_nonsingular, MAX_RESAMPLES};
use crate::error::{Error, Result};
use crate::harness::{run_hypertree_census, CensusReport, ExperimentConfig, Subcommand};
use crate::linalg::{cokernel, det_i128, gram_det, IntMatrix};
use crate::seed;

/// Largest `n` the sampler accepts.
pub const MAX_SAMPLER_N: usize = 14;
/// Column subsets `kalai_check` is willing to enumerate.
pub const KALAI_BUDGET: u64 = 1_000_000;

/// `I_n` with its row and column labels (1-based vertices).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryMatrix {
    pub n: usize,
    pub rows: Vec<[usize; 2]>,
    pub cols: Vec<[usize; 3]>,
    pub matrix: IntMatrix,
}

impl BoundaryMatrix {
    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.cols.len())
    }

    /// `I_nᵀ[K]`: the listed columns of `I_n`, as rows.
    pub fn selected(&self, columns: &[usize]) -> IntMatrix {
        self.matrix.select_cols(columns).transpose()
    }

    fn column_f64(&self, j: usize) -> Vec<f64> {
        (0..self.rows.len()).map(|i| if self.matrix[(i, j)].is_zero() { 0.0 } else if self.matrix[(i, j)] > BigInt::zero() { 1.0 } else { -1.0 }).collect()
    }

    fn small_entries(&self) -> Vec<i8> {
        let (r, c) = self.shape();
        let mut out = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                let v = &self.matrix[(i, j)];
                out.push(if v.is_zero() { 0 } else if *v > BigInt::zero() { 1 } else { -1 });
            }
        }
        out
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidConfig(format!("hypertrees need n ≥ 3, got {n}")));
    }
    Ok(())
}

/// Builds `I_n`: entry `(A, B)` is `(−1)^i` when `A = B ∖ {x_i}` for
/// `B = {x₁ < x₂ < x₃}`, and 0 otherwise.
pub fn boundary_matrix(n: usize) -> Result<BoundaryMatrix> {
    check_n(n)?;
    let n_rows = binomial(n as u64 - 1, 2) as usize;
    let n_cols = binomial(n as u64, 3) as usize;
    let rows: Vec<[usize; 2]> = (0..n_rows as u64)
        .map(|r| {
            let s = unrank_combination(r, n - 1, 2);
            [s[0] + 1, s[1] + 1]
        })
        .collect();
    let cols: Vec<[usize; 3]> = (0..n_cols as u64)
        .map(|c| {
            let s = unrank_combination(c, n, 3);
            [s[0] + 1, s[1] + 1, s[2] + 1]
        })
        .collect();
    let mut matrix = IntMatrix::zeros(n_rows, n_cols);
    for (j, b) in cols.iter().enumerate() {
        for i in 0..3 {
            let a: Vec<usize> = (0..3).filter(|&t| t != i).map(|t| b[t]).collect();
            if a[1] <= n - 1 {
                let row = rank_combination(&[a[0] - 1, a[1] - 1], n - 1) as usize;
                matrix[(row, j)] = BigInt::from(if (i + 1) % 2 == 0 { 1 } else { -1 });
            }
        }
    }
    Ok(BoundaryMatrix { n, rows, cols, matrix })
}

/// Exact `det(I_n I_nᵀ)`.
pub fn hypertree_gram_det(n: usize) -> Result<BigInt> {
    Ok(gram_det(&boundary_matrix(n)?.matrix.transpose()))
}

/// `n^{C(n−2,2)}`.
pub fn kalai_closed_form(n: usize) -> BigInt {
    Pow::pow(BigInt::from(n), binomial(n as u64 - 2, 2) as usize)
}

/// A sampled hypertree and its first homology.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HypertreeComplex {
    pub n: usize,
    pub seed: u64,
    /// Column indices into `I_n`, increasing.
    pub columns: Vec<usize>,
    pub resamples: u32,
    /// Invariant factors of `H₁`, each ≥ 2.
    pub invariant_factors: Vec<BigUint>,
}

impl HypertreeComplex {
    /// The triangles of the complex, as 1-based vertex triples.
    pub fn triangles(&self) -> Vec<[usize; 3]> {
        self.columns
            .iter()
            .map(|&c| {
                let s = unrank_combination(c as u64, self.n, 3);
                [s[0] + 1, s[1] + 1, s[2] + 1]
            })
            .collect()
    }

    /// `|H₁| = |det I_nᵀ[K]|`.
    pub fn homology_order(&self) -> BigUint {
        self.invariant_factors.iter().fold(BigUint::one(), |acc, d| acc * d)
    }

    pub fn digest(&self) -> String {
        let mut words = vec![self.n as u64];
        words.extend(self.columns.iter().map(|&c| c as u64));
        seed::digest(&words)
    }
}

/// `H₁ = cok I_nᵀ[K]`, recomputed from the selected columns.
pub fn homology(h: &HypertreeComplex) -> Result<AbelianGroup> {
    let b = boundary_matrix(h.n)?;
    if h.columns.len() != b.rows.len() {
        return Err(Error::WrongCardinality { got: h.columns.len(), expected: b.rows.len() });
    }
    cokernel(&b.selected(&h.columns))
}

/// Reusable sampler for one `n`; the whitened features are built once.
#[derive(Clone, Debug)]
pub struct HypertreeSampler {
    boundary: BoundaryMatrix,
    features: DenseFeatures,
}

impl HypertreeSampler {
    pub fn new(n: usize) -> Result<Self> {
        check_n(n)?;
        if n > MAX_SAMPLER_N {
            return Err(Error::InvalidConfig(format!("hypertree sampler supports n ≤ {MAX_SAMPLER_N}, got {n}")));
        }
        let boundary = boundary_matrix(n)?;
        let raw: Vec<Vec<f64>> = (0..boundary.cols.len()).map(|j| boundary.column_f64(j)).collect();
        let features = DenseFeatures::whiten(boundary.rows.len(), &raw).expect("I_n has full row rank");
        Ok(Self { boundary, features })
    }

    pub fn boundary(&self) -> &BoundaryMatrix {
        &self.boundary
    }

    /// Draws `C_n`; a pure function of `(n, seed)`.
    pub fn sample(&self, seed_value: u64) -> Result<HypertreeComplex> {
        let mut current = seed_value;
        for attempt in 0..=MAX_RESAMPLES {
            if attempt > 0 {
                current = seed::sub_seed(seed_value, attempt);
            }
            let columns = dpp::sample(&self.features, &mut seed::rng(current));
            let m = self.boundary.selected(&columns);
            if !is_nonsingular(&m) {
                continue;
            }
            let h1 = cokernel(&m)?;
            return Ok(HypertreeComplex {
                n: self.boundary.n,
                seed: seed_value,
                columns,
                resamples: attempt,
                invariant_factors: h1.factors().to_vec(),
            });
        }
        Err(Error::NumericalDegeneracy { attempts: MAX_RESAMPLES + 1 })
    }
}

pub fn sample_hypertree(n: usize, seed_value: u64) -> Result<HypertreeComplex> {
    HypertreeSampler::new(n)?.sample(seed_value)
}

/// `det I_nᵀ[K]` for a column subset.
pub fn selection_det(b: &BoundaryMatrix, columns: &[usize]) -> BigInt {
    let entries = b.small_entries();
    selection_det_from(&entries, b.shape(), columns, &mut Vec::new())
}

fn selection_det_from(entries: &[i8], (rows, cols): (usize, usize), columns: &[usize], buf: &mut Vec<i128>) -> BigInt {
    buf.clear();
    for &c in columns {
        for r in 0..rows {
            buf.push(entries[r * cols + c] as i128);
        }
    }
    match det_i128(buf, rows) {
        Some(d) => BigInt::from(d),
        None => crate::linalg::bareiss(buf.chunks(rows).map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()),
    }
}

/// Both sides of Kalai's identity `Σ_K |H₁(K)|² = n^{C(n−2,2)}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KalaiCheck {
    pub n: usize,
    pub subsets: u64,
    pub lhs: BigInt,
    pub rhs: BigInt,
}

impl KalaiCheck {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

fn big_binomial(n: u64, k: u64) -> BigUint {
    (0..k).fold(BigUint::one(), |acc, i| acc * (n - i) / (i + 1))
}

/// Enumerates every `C(n−1,2)`-subset of columns and sums `det²`.
pub fn kalai_check(n: usize) -> Result<KalaiCheck> {
    check_n(n)?;
    let n_cols = binomial(n as u64, 3);
    let k = binomial(n as u64 - 1, 2);
    let needed = big_binomial(n_cols, k);
    if needed > BigUint::from(KALAI_BUDGET) {
        return Err(Error::BudgetExceeded { needed: needed.to_string(), budget: KALAI_BUDGET });
    }
    let total: u64 = needed.try_into().expect("within budget");
    let b = boundary_matrix(n)?;
    let entries = b.small_entries();
    let shape = b.shape();
    const CHUNK: u64 = 4096;
    let chunks: Vec<u64> = (0..total.div_ceil(CHUNK)).collect();
    let partial: Vec<BigInt> = chunks
        .par_iter()
        .map(|&c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(total);
            let mut subset = unrank_combination(start, n_cols as usize, k as usize);
            let mut buf = Vec::new();
            let mut acc = BigInt::zero();
            for r in start..end {
                let d = selection_det_from(&entries, shape, &subset, &mut buf);
                acc += &d * &d;
                if r + 1 < end {
                    next_combination(&mut subset, n_cols as usize);
                }
            }
            acc
        })
        .collect();
    let lhs = partial.into_iter().fold(BigInt::zero(), |a, b| a + b);
    Ok(KalaiCheck { n, subsets: total, lhs, rhs: kalai_closed_form(n) })
}

/// p-Sylow partition of `H₁` for each sample.
pub fn hypertree_sylow(h: &HypertreeComplex, p: u64) -> PGroupPartition {
    AbelianGroup::new(h.invariant_factors.clone()).expect("invariant factors form a chain").sylow(p)
}

/// Empirical p-Sylow distribution of `H₁(C_n)` over seeded replicas. The
/// Cohen–Lenstra comparison in the report is exploratory.
pub fn sylow_census_hypertree(n: usize, p: u64, replicas: u64, master_seed: u64) -> Result<CensusReport> {
    let mut cfg = ExperimentConfig::new(Subcommand::HypertreeCensus);
    cfg.n = vec![n as u64];
    cfg.primes = vec![p];
    cfg.replicas = replicas;
    cfg.master_seed = master_seed;
    run_hypertree_census(&cfg)
}
