use nalgebra::DMatrix;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Pow, Signed, ToPrimitive, Zero};
use statrs::function::factorial::ln_factorial;

use crate::abelian::GroupTable;
use crate::divergence;
use crate::ensemble::StructuredMatrix;
use crate::error::{Error, Result};
use crate::linalg::{bareiss, det_i128, gram_det};

/// Counts `n_a` of each element among the coordinates of some `q ∈ Gⁿ`,
/// with `m_a = Σ_b n_b n_{−a−b}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TypeVector {
    counts: Vec<u64>,
    m: Vec<u64>,
    n: u64,
}

pub(crate) fn pair_counts(table: &GroupTable, counts: &[u64], m: &mut [u64]) {
    m.iter_mut().for_each(|x| *x = 0);
    for (b, &nb) in counts.iter().enumerate() {
        if nb == 0 {
            continue;
        }
        for (c, &nc) in counts.iter().enumerate() {
            if nc != 0 {
                m[table.neg(table.add(b, c))] += nb * nc;
            }
        }
    }
}

impl TypeVector {
    pub fn from_counts(table: &GroupTable, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != table.order() {
            return Err(Error::InvalidConfig(format!(
                "type has {} entries for a group of order {}",
                counts.len(),
                table.order()
            )));
        }
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::InvalidConfig("type vector must have n ≥ 1".into()));
        }
        let mut m = vec![0; counts.len()];
        pair_counts(table, &counts, &mut m);
        Ok(Self { counts, m, n })
    }

    /// `n/|G|` on every element; `None` unless `|G|` divides `n`.
    pub fn uniform(table: &GroupTable, n: u64) -> Option<Self> {
        let k = table.order() as u64;
        (n % k == 0).then(|| Self::from_counts(table, vec![n / k; k as usize]).expect("valid"))
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn m(&self) -> &[u64] {
        &self.m
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `G₊`, in element order.
    pub fn support(&self) -> Vec<usize> {
        (0..self.counts.len()).filter(|&a| self.counts[a] > 0).collect()
    }

    /// `ν(a) = n_a / n`.
    pub fn nu(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.n as f64).collect()
    }

    /// `μ(a) = m_a / n²`.
    pub fn mu(&self) -> Vec<f64> {
        let n2 = (self.n * self.n) as f64;
        self.m.iter().map(|&c| c as f64 / n2).collect()
    }

    /// Whether `m_a > 0` on the whole support.
    pub fn mu_positive_on_support(&self) -> bool {
        self.counts.iter().zip(&self.m).all(|(&c, &m)| c == 0 || m > 0)
    }

    /// Whether the support generates the whole group.
    pub fn is_generating(&self, table: &GroupTable) -> bool {
        table.generated(&self.support()).len() == table.order()
    }

    /// `n! / ∏ n_a!`.
    pub fn multinomial(&self) -> BigUint {
        let fact = |k: u64| -> BigUint { (1..=k).map(BigUint::from).product() };
        let mut out = fact(self.n);
        for &c in &self.counts {
            out /= fact(c);
        }
        out
    }

    pub fn ln_multinomial(&self) -> f64 {
        ln_factorial(self.n) - self.counts.iter().map(|&c| ln_factorial(c)).sum::<f64>()
    }

    /// `Σ_a ν(a) log(1/ν(a))`.
    pub fn entropy(&self) -> f64 {
        self.nu().iter().filter(|&&p| p > 0.0).map(|p| -p * p.ln()).sum()
    }
}

/// Type of `q`, given as element indices.
pub fn type_of(table: &GroupTable, q: &[usize]) -> Result<TypeVector> {
    let mut counts = vec![0u64; table.order()];
    for &a in q {
        if a >= table.order() {
            return Err(Error::NotAnElement(format!("index {a}")));
        }
        counts[a] += 1;
    }
    TypeVector::from_counts(table, counts)
}

/// The symmetric matrix `M` on `G₊`: diagonal `2n_a n_{−2a} + m_a`,
/// off-diagonal `2√(n_a n_b) n_{−a−b}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentMatrix {
    pub support: Vec<usize>,
    pub matrix: DMatrix<f64>,
}

impl MomentMatrix {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.matrix.clone().symmetric_eigen().eigenvalues.iter().copied().collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Positive semidefinite up to `rel_tol · ‖M‖` (Frobenius).
    pub fn is_psd(&self, rel_tol: f64) -> bool {
        self.min_eigenvalue() >= -rel_tol * self.matrix.norm()
    }

    /// Determinant as the product of the eigenvalues.
    pub fn det_from_eigenvalues(&self) -> f64 {
        self.eigenvalues().iter().product()
    }
}

pub fn moment_matrix(table: &GroupTable, t: &TypeVector) -> MomentMatrix {
    let support = t.support();
    let s = support.len();
    let nc = &t.counts;
    let matrix = DMatrix::from_fn(s, s, |i, j| {
        let (a, b) = (support[i], support[j]);
        let cross = nc[table.neg(table.add(a, b))] as f64;
        if i == j {
            2.0 * nc[a] as f64 * cross + t.m[a] as f64
        } else {
            2.0 * ((nc[a] * nc[b]) as f64).sqrt() * cross
        }
    });
    MomentMatrix { support, matrix }
}

/// The integer matrix `M̃(a,b) = 2 n_a n_{−a−b} + [a=b] m_a` on `G₊`. It is
/// similar to `M` via `diag(√n_a)`, so the determinants agree.
pub(crate) fn integer_moment_matrix(table: &GroupTable, counts: &[u64], m: &[u64], support: &[usize], out: &mut Vec<i128>) {
    let s = support.len();
    out.clear();
    out.reserve(s * s);
    for &a in support {
        for &b in support {
            let mut v = 2 * counts[a] as i128 * counts[table.neg(table.add(a, b))] as i128;
            if a == b {
                v += m[a] as i128;
            }
            out.push(v);
        }
    }
}

pub(crate) fn det_of(entries: &[i128], s: usize) -> BigInt {
    match det_i128(entries, s) {
        Some(d) => BigInt::from(d),
        None => bareiss(entries.chunks(s.max(1)).map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()),
    }
}

/// Exact `det M`.
pub fn moment_det_exact(table: &GroupTable, t: &TypeVector) -> BigInt {
    let support = t.support();
    let mut buf = Vec::new();
    integer_moment_matrix(table, &t.counts, &t.m, &support, &mut buf);
    det_of(&buf, support.len())
}

pub(crate) fn ln_big(x: &BigInt) -> f64 {
    debug_assert!(x.is_positive());
    let bits = x.bits();
    if bits < 1000 {
        return x.to_f64().expect("finite").ln();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().expect("finite").ln() + shift as f64 * std::f64::consts::LN_2
}

fn pow_u(base: u64, e: u64) -> BigInt {
    Pow::pow(BigInt::from(base), e as usize)
}

/// `3 n^{2n}`, the common denominator.
fn denominator(n: u64) -> BigInt {
    BigInt::from(3) * pow_u(n, 2 * n)
}

/// `det M · ∏_{a∈G₊} m_a^{n_a−1}`, the numerator over `3n^{2n}`.
fn kernel_numerator(table: &GroupTable, t: &TypeVector) -> BigInt {
    let mut num = moment_det_exact(table, t);
    for a in t.support() {
        num *= pow_u(t.m[a], t.counts[a] - 1);
    }
    num
}

/// `P(A_n q = 0)` for any `q` of type `t`, exactly.
pub fn prob_kernel_type(table: &GroupTable, t: &TypeVector) -> BigRational {
    BigRational::new(kernel_numerator(table, t), denominator(t.n))
}

/// `P(A_n q = 0)`, exactly; `q` is given by element indices.
pub fn prob_kernel_vector(table: &GroupTable, q: &[usize]) -> Result<BigRational> {
    Ok(prob_kernel_type(table, &type_of(table, q)?))
}

/// `log P(A_n q = 0)` for any `q` of type `t`; `−∞` when the probability is 0.
pub fn ln_prob_kernel_type(table: &GroupTable, t: &TypeVector) -> f64 {
    // The zero vector is always in the kernel; returning 0 here keeps the
    // trivial-group moment exactly 1 instead of 1 ± rounding.
    if t.support() == [0] {
        return 0.0;
    }
    let det = moment_det_exact(table, t);
    if !det.is_positive() {
        return f64::NEG_INFINITY;
    }
    let n = t.n as f64;
    let mut ln = ln_big(&det) - 3f64.ln() - 2.0 * n * n.ln();
    for a in t.support() {
        let e = t.counts[a] - 1;
        if e > 0 {
            if t.m[a] == 0 {
                return f64::NEG_INFINITY;
            }
            ln += e as f64 * (t.m[a] as f64).ln();
        }
    }
    ln
}

/// `det(B_qᵀ B_q) / det(BᵀB)`, where `B_q` keeps the rows `(x₁,x₂,x₃)` of
/// `B_n` with `q_{x₁} + q_{x₂} + q_{x₃} = 0`. Builds the rows explicitly.
pub fn kernel_prob_oracle(table: &GroupTable, q: &[usize]) -> Result<BigRational> {
    let n = q.len();
    let b = StructuredMatrix::new(n)?;
    let full = b.full_matrix();
    let rows: Vec<usize> = (0..b.item_count())
        .filter(|&r| {
            let [x1, x2, x3] = b.triple(r).0;
            table.add(table.add(q[x1 - 1], q[x2 - 1]), q[x3 - 1]) == 0
        })
        .collect();
    let bq = full.select_rows(&rows);
    Ok(BigRational::new(gram_det(&bq), gram_det(&full)))
}

/// `E(n̲) = (n!/∏n_a!) · P(A_n q = 0)`, exactly.
pub fn type_contribution_exact(table: &GroupTable, t: &TypeVector) -> BigRational {
    prob_kernel_type(table, t) * BigRational::from_integer(BigInt::from(t.multinomial()))
}

/// `log E(n̲)`, or `−∞` when it vanishes.
pub fn ln_type_contribution(table: &GroupTable, t: &TypeVector) -> f64 {
    let p = ln_prob_kernel_type(table, t);
    if p == f64::NEG_INFINITY {
        return p;
    }
    p + t.ln_multinomial()
}

/// Types up to this size are evaluated in rational arithmetic.
pub const EXACT_MAX_N: u64 = 12;

/// `E(n̲)`: exact for `n ≤ 12`, log-space above.
pub fn type_contribution(table: &GroupTable, t: &TypeVector) -> f64 {
    if t.n <= EXACT_MAX_N {
        type_contribution_exact(table, t).to_f64().expect("finite")
    } else {
        ln_type_contribution(table, t).exp()
    }
}

/// `α(n̲) = (n!/∏n_a!) / exp(n H(ν))`.
pub fn alpha(t: &TypeVector) -> f64 {
    (t.ln_multinomial() - t.n as f64 * t.entropy()).exp()
}

/// `det M / (3 ∏_{a∈G₊} m_a)`, exactly.
pub fn det_ratio_exact(table: &GroupTable, t: &TypeVector) -> Result<BigRational> {
    let support = t.support();
    if !t.mu_positive_on_support() {
        return Err(Error::ZeroMu);
    }
    let prod: BigInt = support.iter().map(|&a| BigInt::from(t.m[a])).product();
    Ok(BigRational::new(moment_det_exact(table, t), BigInt::from(3) * prod))
}

/// `log` of `α · det M / (3∏m_a) · exp(−n KL(ν‖μ))`.
pub fn ln_kl_form_contribution(table: &GroupTable, t: &TypeVector) -> Result<f64> {
    let ratio = det_ratio_exact(table, t)?;
    if ratio.is_zero() {
        return Ok(f64::NEG_INFINITY);
    }
    let ln_ratio = ln_big(ratio.numer()) - ln_big(ratio.denom());
    let d = divergence::kl(&t.nu(), &t.mu());
    Ok(alpha(t).ln() + ln_ratio - t.n as f64 * d)
}

/// `α · det M / (3∏m_a) · exp(−n KL(ν‖μ))`, equal to `E(n̲)`.
pub fn kl_form_contribution(table: &GroupTable, t: &TypeVector) -> Result<f64> {
    Ok(ln_kl_form_contribution(table, t)?.exp())
}

/// `log(3^{|G|} n^{2|G|}) − n KL(ν‖μ)`, the log of the upper bound on `E(n̲)`.
pub fn ln_divergence_bound(t: &TypeVector) -> f64 {
    let k = t.counts.len() as f64;
    let n = t.n as f64;
    k * 3f64.ln() + 2.0 * k * n.ln() - n * divergence::kl(&t.nu(), &t.mu())
}

/// `E(n̲)` for `G = Z/2` and `n̲ = (n−1, 1)` in closed form:
/// `4(n−1)³/n³ · (1 − 2/n + 2/n²)^{n−2}`.
pub fn z2_single_contribution(n: u64) -> f64 {
    let nf = n as f64;
    let base_ln = (-2.0 / nf + 2.0 / (nf * nf)).ln_1p();
    4.0 * (nf - 1.0).powi(3) / nf.powi(3) * ((nf - 2.0) * base_ln).exp()
}
