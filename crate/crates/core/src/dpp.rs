//! Exact sampling from projection determinantal point processes.
//!
//! A projection DPP of rank `k` on items `0..m` is described by feature
//! vectors `φ_r ∈ R^k` whose Gram matrix is the identity (`Σ_r φ_r φ_rᵀ = I`),
//! so `K(r, s) = φ_r · φ_s`. The chain-rule sampler picks items one at a
//! time; after `t` picks with orthonormal basis `b_1..b_t` of the chosen
//! features, item `r` is chosen with probability
//! `(‖φ_r‖² − Σ_j (φ_r·b_j)²) / (k − t)`.

use rand::Rng;
use rayon::prelude::*;

/// Residual weights are recomputed from scratch this often to stop the
/// incremental downdates from drifting.
pub const REORTHONORMALIZE_EVERY: usize = 16;

pub trait ProjectionFeatures: Sync {
    fn item_count(&self) -> usize;

    /// Rank of the kernel, i.e. the sample size.
    fn rank(&self) -> usize;

    fn feature(&self, item: usize) -> Vec<f64>;

    /// `‖φ_r‖²` for every item (the marginal inclusion probabilities).
    fn leverages(&self) -> Vec<f64>;

    /// `out[r] = φ_r · direction` for every item.
    fn project_all(&self, direction: &[f64], out: &mut [f64]);
}

/// Dense features given explicitly, `φ_r` stored row by row.
#[derive(Clone, Debug)]
pub struct DenseFeatures {
    rank: usize,
    rows: Vec<f64>,
}

impl DenseFeatures {
    pub fn new(rank: usize, rows: Vec<f64>) -> Self {
        assert_eq!(rows.len() % rank.max(1), 0);
        Self { rank, rows }
    }

    /// Whitens raw item vectors `a_r` (columns of a full-row-rank matrix) so
    /// that `φ_r = L⁻¹ a_r` with `L Lᵀ = Σ_r a_r a_rᵀ`.
    pub fn whiten(rank: usize, raw: &[Vec<f64>]) -> Option<Self> {
        let mut gram = nalgebra::DMatrix::<f64>::zeros(rank, rank);
        for a in raw {
            let v = nalgebra::DVector::from_column_slice(a);
            gram += &v * v.transpose();
        }
        let chol = nalgebra::Cholesky::new(gram)?;
        let l = chol.l();
        let mut rows = Vec::with_capacity(raw.len() * rank);
        for a in raw {
            let v = nalgebra::DVector::from_column_slice(a);
            let phi = l.solve_lower_triangular(&v)?;
            rows.extend(phi.iter());
        }
        Some(Self { rank, rows })
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.rows[r * self.rank..(r + 1) * self.rank]
    }
}

impl ProjectionFeatures for DenseFeatures {
    fn item_count(&self) -> usize {
        if self.rank == 0 {
            0
        } else {
            self.rows.len() / self.rank
        }
    }

    fn rank(&self) -> usize {
        self.rank
    }

    fn feature(&self, item: usize) -> Vec<f64> {
        self.row(item).to_vec()
    }

    fn leverages(&self) -> Vec<f64> {
        (0..self.item_count()).map(|r| self.row(r).iter().map(|x| x * x).sum()).collect()
    }

    fn project_all(&self, direction: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.row(r).iter().zip(direction).map(|(a, b)| a * b).sum();
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Draws one sample; returns the chosen items in increasing order.
pub fn sample<F: ProjectionFeatures, R: Rng + ?Sized>(features: &F, rng: &mut R) -> Vec<usize> {
    let m = features.item_count();
    let k = features.rank();
    let leverages = features.leverages();
    let mut weights = leverages.clone();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut proj = vec![0.0; m];

    for t in 0..k {
        if t > 0 && t % REORTHONORMALIZE_EVERY == 0 {
            weights.copy_from_slice(&leverages);
            for b in &basis {
                features.project_all(b, &mut proj);
                for (w, p) in weights.iter_mut().zip(&proj) {
                    *w -= p * p;
                }
            }
        }
        for &c in &chosen {
            weights[c] = 0.0;
        }
        for w in weights.iter_mut() {
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let total: f64 = weights.iter().sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (r, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            pick = Some(r);
            if acc > target {
                break;
            }
        }
        let r = pick.expect("projection kernel has remaining mass");
        chosen.push(r);

        // Classical Gram–Schmidt applied twice keeps the basis orthonormal to
        // working precision.
        let mut v = features.feature(r);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&v, b);
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 0.0 {
            for x in v.iter_mut() {
                *x /= norm;
            }
        }
        features.project_all(&v, &mut proj);
        for (w, p) in weights.iter_mut().zip(&proj) {
            *w -= p * p;
        }
        basis.push(v);
    }
    chosen.sort_unstable();
    chosen
}

/// Independent samples in parallel; sample `i` uses the RNG from `make_rng(i)`,
/// so the output does not depend on the thread count.
pub fn sample_many<F, R, G>(features: &F, count: usize, make_rng: G) -> Vec<Vec<usize>>
where
    F: ProjectionFeatures,
    R: Rng,
    G: Fn(u64) -> R + Sync,
{
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = make_rng(i as u64);
            sample(features, &mut rng)
        })
        .collect()
}
