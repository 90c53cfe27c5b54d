//! The structured ensemble: the `n³ × n` matrix `B_n` whose row indexed by
//! the ordered triple `(x₁, x₂, x₃)` is `e_{x₁} + e_{x₂} + e_{x₃}`, the
//! determinantal law `P(X = K) = det(B[K])² / det(BᵀB)` on `n`-subsets of
//! triples, and the square matrix `A_n = B_n[X_n]`.
//!
//! Items are numbered `r = (x₁−1)n² + (x₂−1)n + (x₃−1)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Pow, Zero};
use serde::{Deserialize, Serialize};

use crate::dpp::{self, ProjectionFeatures};
use crate::error::{Error, Result};
use crate::linalg::{det_exact, det_mod, gram_det, IntMatrix};
use crate::seed;

/// Explicit construction is only affordable up to this size.
pub const EXPLICIT_GRAM_MAX_N: usize = 6;

/// Draws with a singular assembled matrix are retried at most this often.
pub const MAX_RESAMPLES: u32 = 8;

const CHECK_PRIMES: [u64; 2] = [(1 << 61) - 1, 1_000_000_007];

/// An ordered triple of 1-based coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroundTriple(pub [usize; 3]);

impl GroundTriple {
    pub fn new(x1: usize, x2: usize, x3: usize) -> Self {
        Self([x1, x2, x3])
    }

    pub fn check(&self, n: usize) -> Result<()> {
        for &x in &self.0 {
            if x < 1 || x > n {
                return Err(Error::OutOfRange { value: x as i64, range: format!("[1, {n}]") });
            }
        }
        Ok(())
    }

    /// 0-based item number.
    pub fn index(&self, n: usize) -> usize {
        let [a, b, c] = self.0;
        ((a - 1) * n + (b - 1)) * n + (c - 1)
    }

    pub fn from_index(r: usize, n: usize) -> Self {
        Self([r / (n * n) + 1, (r / n) % n + 1, r % n + 1])
    }

    /// Squared norm of the row: 3, 5 or 9 depending on repeated coordinates.
    pub fn row_norm_sq(&self) -> u32 {
        let [a, b, c] = self.0;
        match (a == b, b == c, a == c) {
            (true, true, _) => 9,
            (false, false, false) => 3,
            _ => 5,
        }
    }
}

pub fn build_row(t: &GroundTriple, n: usize) -> Result<Vec<i64>> {
    t.check(n)?;
    let mut row = vec![0i64; n];
    for &x in &t.0 {
        row[x - 1] += 1;
    }
    Ok(row)
}

/// `B_n`, kept implicit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StructuredMatrix {
    n: usize,
}

impl StructuredMatrix {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn item_count(&self) -> usize {
        self.n.pow(3)
    }

    pub fn triple(&self, r: usize) -> GroundTriple {
        GroundTriple::from_index(r, self.n)
    }

    /// Explicit `n³ × n` matrix.
    pub fn full_matrix(&self) -> IntMatrix {
        let n = self.n;
        let mut m = IntMatrix::zeros(n.pow(3), n);
        for r in 0..n.pow(3) {
            for &x in &self.triple(r).0 {
                m[(r, x - 1)] += 1;
            }
        }
        m
    }

    /// Rows of the listed triples, in the given order.
    pub fn submatrix(&self, triples: &[GroundTriple]) -> Result<IntMatrix> {
        let rows = triples.iter().map(|t| build_row(t, self.n)).collect::<Result<Vec<_>>>()?;
        if rows.is_empty() {
            return Ok(IntMatrix::zeros(0, self.n));
        }
        Ok(IntMatrix::from_rows(&rows))
    }

    /// Marginal inclusion probability `K(r, r)` of item `r`.
    pub fn leverage(&self, r: usize) -> f64 {
        let n = self.n as f64;
        (self.triple(r).row_norm_sq() as f64 - 6.0 / n) / (3.0 * n * n)
    }
}

/// `3^{n+1} n^{2n}` via the closed form. For small `n` the value is checked
/// against an explicit construction.
pub fn structured_gram_det(n: usize) -> BigInt {
    let closed = structured_gram_det_closed(n);
    if n <= EXPLICIT_GRAM_MAX_N {
        let explicit = structured_gram_det_explicit(n);
        assert_eq!(closed, explicit, "closed form disagrees with explicit Gram determinant at n={n}");
    }
    closed
}

pub fn structured_gram_det_closed(n: usize) -> BigInt {
    Pow::pow(BigInt::from(3u32), n + 1) * Pow::pow(BigInt::from(n), 2 * n)
}

pub fn structured_gram_det_explicit(n: usize) -> BigInt {
    gram_det(&StructuredMatrix { n }.full_matrix())
}

pub fn exact_subset_prob(n: usize, triples: &[GroundTriple]) -> Result<BigRational> {
    if triples.len() != n {
        return Err(Error::WrongCardinality { got: triples.len(), expected: n });
    }
    let b = StructuredMatrix::new(n)?;
    let d = det_exact(&b.submatrix(triples)?)?;
    Ok(BigRational::new(&d * &d, structured_gram_det_closed(n)))
}

/// Whitened features `φ_r = (BᵀB)^{-1/2} v_r` with
/// `(BᵀB)^{-1/2} = (I − cJ) / (√3 n)`, `c = (1 − 1/√3) / n`.
/// Projections cost `O(n)` setup plus `O(1)` per item.
#[derive(Clone, Debug)]
pub struct StructuredFeatures {
    n: usize,
    scale: f64,
    c: f64,
}

impl StructuredFeatures {
    pub fn new(n: usize) -> Self {
        let nf = n as f64;
        Self { n, scale: 1.0 / (3f64.sqrt() * nf), c: (1.0 - 1.0 / 3f64.sqrt()) / nf }
    }

    fn whiten(&self, v: &[f64]) -> Vec<f64> {
        let s: f64 = v.iter().sum();
        v.iter().map(|x| self.scale * (x - self.c * s)).collect()
    }
}

impl ProjectionFeatures for StructuredFeatures {
    fn item_count(&self) -> usize {
        self.n.pow(3)
    }

    fn rank(&self) -> usize {
        self.n
    }

    fn feature(&self, item: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        for &x in &GroundTriple::from_index(item, self.n).0 {
            v[x - 1] += 1.0;
        }
        self.whiten(&v)
    }

    fn leverages(&self) -> Vec<f64> {
        let b = StructuredMatrix { n: self.n };
        (0..self.item_count()).map(|r| b.leverage(r)).collect()
    }

    fn project_all(&self, direction: &[f64], out: &mut [f64]) {
        let w = self.whiten(direction);
        let n = self.n;
        let mut r = 0;
        for &a in &w {
            for &b in &w {
                let ab = a + b;
                for &c in &w {
                    out[r] = ab + c;
                    r += 1;
                }
            }
        }
        debug_assert_eq!(r, n.pow(3));
    }
}

/// A sampled `X_n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSubset {
    pub n: usize,
    pub seed: u64,
    pub triples: Vec<GroundTriple>,
    /// Draws discarded because the assembled matrix came out singular.
    #[serde(default)]
    pub resamples: u32,
}

impl SampleSubset {
    pub fn item_indices(&self) -> Vec<usize> {
        self.triples.iter().map(|t| t.index(self.n)).collect()
    }

    /// Stable hex digest of `(n, items)`.
    pub fn digest(&self) -> String {
        let mut words = vec![self.n as u64];
        words.extend(self.item_indices().into_iter().map(|r| r as u64));
        seed::digest(&words)
    }
}

pub fn assemble_matrix(k: &SampleSubset) -> IntMatrix {
    StructuredMatrix { n: k.n }.submatrix(&k.triples).expect("sampled triples are in range")
}

pub(crate) fn is_nonsingular(a: &IntMatrix) -> bool {
    for p in CHECK_PRIMES {
        if det_mod(a, p).expect("square") != 0 {
            return true;
        }
    }
    !det_exact(a).expect("square").is_zero()
}

/// Draws `X_n` from the determinantal law. The draw is a pure function of
/// `(n, seed)`.
pub fn sample_subset(n: usize, seed_value: u64) -> Result<SampleSubset> {
    StructuredMatrix::new(n)?;
    let features = StructuredFeatures::new(n);
    let mut current = seed_value;
    for attempt in 0..=MAX_RESAMPLES {
        if attempt > 0 {
            current = seed::sub_seed(seed_value, attempt);
        }
        let items = dpp::sample(&features, &mut seed::rng(current));
        let subset = SampleSubset {
            n,
            seed: seed_value,
            triples: items.into_iter().map(|r| GroundTriple::from_index(r, n)).collect(),
            resamples: attempt,
        };
        if is_nonsingular(&assemble_matrix(&subset)) {
            return Ok(subset);
        }
    }
    Err(Error::NumericalDegeneracy { attempts: MAX_RESAMPLES + 1 })
}
