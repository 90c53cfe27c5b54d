use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Pow, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, Subcommand, Tolerances};
use crate::abelian::{subgroups, AbelianGroup, GroupTable};
use crate::divergence::{detect_subgroup, fourier, kl, pair_convolution, pinsker_gap, refinement_bound, DEFAULT_DETECTION_THRESHOLD};
use crate::ensemble::{assemble_matrix, sample_subset, structured_gram_det_closed, structured_gram_det_explicit};
use crate::error::Result;
use crate::hypertree::{hypertree_gram_det, kalai_check, kalai_closed_form};
use crate::laplace::{
    analytic_gradient, analytic_hessian, finite_difference_gradient, finite_difference_hessian, gaussian_riemann_sum, q_det_closed_form,
    q_matrix, taylor_residual, SimplexPoint, GRADIENT_STEP, HESSIAN_STEP,
};
use crate::linalg::{det_exact, smith_normal_form, verify_snf, IntMatrix};
use crate::moments::{
    det_of, exact_sur_moment, exact_sur_moment_rational, integer_moment_matrix, kernel_prob_oracle, prob_kernel_type, type_of,
    TypeVector, WindowParams,
};
use crate::seed;

/// Faults that can be injected to confirm the suites catch them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    /// Negates the off-diagonal entries of the moment matrix.
    FlipMomentOffDiagonal,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub checks: u64,
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        Self { name: name.into(), ..Self::default() }
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(msg());
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub suites: Vec<SuiteReport>,
}

impl DiagnosticsReport {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::passed)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| s.name == name)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for suite in &self.suites {
            let status = if suite.passed() { "PASS" } else { "FAIL" };
            s.push_str(&format!(
                "{status} {:<24} {:>7} checks {:>5} failures\n",
                suite.name,
                suite.checks,
                suite.failures.len()
            ));
            for f in suite.failures.iter().take(5) {
                s.push_str(&format!("    {f}\n"));
            }
            if suite.failures.len() > 5 {
                s.push_str(&format!("    ... {} more\n", suite.failures.len() - 5));
            }
        }
        s
    }
}

fn table(factors: &[u64]) -> GroupTable {
    AbelianGroup::from_factors(factors).and_then(|g| g.table()).expect("small fixed group")
}

/// `P(A_n q = 0)` from the moment-matrix formula, with an optional fault.
fn formula(table: &GroupTable, t: &TypeVector, mutation: Option<Mutation>) -> BigRational {
    let Some(Mutation::FlipMomentOffDiagonal) = mutation else {
        return prob_kernel_type(table, t);
    };
    let support = t.support();
    let s = support.len();
    let mut buf = Vec::new();
    integer_moment_matrix(table, t.counts(), t.m(), &support, &mut buf);
    for i in 0..s {
        for j in 0..s {
            if i != j {
                buf[i * s + j] = -buf[i * s + j];
            }
        }
    }
    let mut num = det_of(&buf, s);
    for &a in &support {
        num *= Pow::pow(BigInt::from(t.m()[a]), (t.counts()[a] - 1) as usize);
    }
    let n = t.n();
    BigRational::new(num, BigInt::from(3) * Pow::pow(BigInt::from(n), (2 * n) as usize))
}

fn for_each_vector(k: usize, n: usize, mut f: impl FnMut(&[usize])) {
    let mut q = vec![0usize; n];
    loop {
        f(&q);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            q[i] += 1;
            if q[i] < k {
                break;
            }
            q[i] = 0;
            i += 1;
        }
    }
}

/// The moment-matrix formula against the explicit kernel oracle, for every
/// `q ∈ Gⁿ` with `G = Z/2, n ≤ 4` and `G = Z/3, n ≤ 3`.
pub fn fixed_n_formula_suite(mutation: Option<Mutation>) -> SuiteReport {
    let mut r = SuiteReport::new("fixed-n-formula");
    for (f, max_n) in [(2u64, 4usize), (3, 3)] {
        let tb = table(&[f]);
        for n in 1..=max_n {
            for_each_vector(tb.order(), n, |q| {
                let t = type_of(&tb, q).expect("valid vector");
                let lhs = formula(&tb, &t, mutation);
                let rhs = kernel_prob_oracle(&tb, q).expect("valid vector");
                r.check(lhs == rhs, || format!("Z/{f} q={q:?}: formula {lhs} vs oracle {rhs}"));
            });
        }
    }
    r
}

fn gram_suite() -> SuiteReport {
    let mut r = SuiteReport::new("gram-closed-form");
    for n in 1..=5 {
        let (a, b) = (structured_gram_det_explicit(n), structured_gram_det_closed(n));
        r.check(a == b, || format!("n={n}: explicit {a} vs closed form {b}"));
    }
    r
}

fn moment_oracle_suite() -> SuiteReport {
    let mut r = SuiteReport::new("moment-oracle");
    for (f, n) in [(2u64, 3usize), (2, 4), (3, 3)] {
        let tb = table(&[f]);
        let mut brute = BigRational::zero();
        for_each_vector(tb.order(), n, |q| {
            if tb.generated(q).len() == tb.order() {
                brute += kernel_prob_oracle(&tb, q).expect("valid vector");
            }
        });
        let exact = exact_sur_moment_rational(&tb, n as u64, u64::MAX).expect("tiny");
        r.check(exact == brute, || format!("Z/{f} n={n}: type sum {exact} vs brute force {brute}"));
        let log = exact_sur_moment(&tb, n as u64, u64::MAX).expect("tiny");
        let e = num_traits::ToPrimitive::to_f64(&exact).unwrap_or(f64::NAN);
        r.check((log - e).abs() <= 1e-10 * e.max(1.0), || format!("Z/{f} n={n}: log-space {log} vs rational {e}"));
    }
    r
}

fn remark_one_suite(samples: u64, master: u64) -> SuiteReport {
    let mut r = SuiteReport::new("row-sums");
    for i in 0..samples {
        let s = sample_subset(12, seed::derive_seed(master, i)).expect("n = 12 is in range");
        let a = assemble_matrix(&s);
        let sums_ok = (0..a.rows()).all(|row| a.row(row).iter().sum::<BigInt>() == BigInt::from(3));
        r.check(sums_ok, || format!("sample {i}: a row does not sum to 3"));
        let det = det_exact(&a).expect("square");
        r.check((&det % BigInt::from(3)).is_zero(), || format!("sample {i}: det {det} not divisible by 3"));
    }
    r
}

fn random_dist<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| if rng.random_bool(0.1) { 0.0 } else { rng.random::<f64>() }).collect();
    let total: f64 = w.iter().sum();
    if total == 0.0 {
        return vec![1.0 / k as f64; k];
    }
    w.iter().map(|x| x / total).collect()
}

/// Gibbs, Pinsker and refinement on random pairs, the Fourier identity
/// `μ̂ = conj(ν̂²)`, and subgroup detection on (perturbed) subgroup-uniform
/// inputs.
pub fn divergence_suite(tb: &GroupTable, trials: u64, master: u64, tol: &Tolerances) -> SuiteReport {
    let mut r = SuiteReport::new("divergence");
    let k = tb.order();
    let mut rng = seed::rng(master);
    let slack = tol.inequality_slack;
    for _ in 0..trials {
        let nu = random_dist(&mut rng, k);
        let mu = random_dist(&mut rng, k);
        let d = kl(&nu, &mu);
        r.check(d >= -slack, || format!("Gibbs: KL = {d}"));
        let (l1, bound) = pinsker_gap(&nu, &mu);
        r.check(l1 <= bound + slack, || format!("Pinsker: l1 {l1} > {bound}"));
        let y: Vec<bool> = (0..k).map(|_| rng.random_bool(0.5)).collect();
        let refined = refinement_bound(&nu, &mu, &y);
        r.check(refined <= d + slack, || format!("refinement: {refined} > {d}"));
        let hat = fourier(tb, &nu);
        let mu_hat = fourier(tb, &pair_convolution(tb, &nu));
        let err = mu_hat.iter().zip(&hat).map(|(m, h)| (m - (h * h).conj()).norm()).fold(0.0, f64::max);
        r.check(err <= tol.fourier, || format!("Fourier identity off by {err}"));
    }
    for h in subgroups(tb).expect("small group") {
        let mut u = vec![0.0; k];
        for &a in &h.elements {
            u[a] = 1.0 / h.order() as f64;
        }
        let det = detect_subgroup(tb, &u, DEFAULT_DETECTION_THRESHOLD);
        r.check(det.subgroup == h.elements, || format!("uniform on {}: detected {:?}", h.structure, det.subgroup));
        let noise = random_dist(&mut rng, k);
        let eps = 1e-3;
        let perturbed: Vec<f64> = u.iter().zip(&noise).map(|(a, b)| (1.0 - eps) * a + eps * b).collect();
        let det = detect_subgroup(tb, &perturbed, DEFAULT_DETECTION_THRESHOLD);
        r.check(det.subgroup == h.elements, || format!("perturbed uniform on {}: detected {:?}", h.structure, det.subgroup));
    }
    r
}

/// Derivatives at the uniform point, finite-difference cross-checks at random
/// interior points, `det Q` for every order up to 12, and the lattice sum.
pub fn laplace_suite(tb: &GroupTable, points: u64, master: u64, tol: &Tolerances) -> SuiteReport {
    let mut r = SuiteReport::new("laplace");
    let k = tb.order();
    let center = SimplexPoint::center(k);
    let g = analytic_gradient(tb, &center);
    let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    r.check(gmax < tol.center_gradient, || format!("gradient at the center has sup-norm {gmax}"));
    let q = q_matrix(k).expect("order ≥ 2");
    let herr = (analytic_hessian(tb, &center) - q.to_f64()).abs().max();
    r.check(herr < tol.center_hessian, || format!("Hessian at the center differs from Q by {herr}"));
    let mut rng = seed::rng(master);
    for i in 0..points {
        let w: Vec<f64> = (0..k).map(|_| 0.2 + rng.random::<f64>()).collect();
        let s: f64 = w.iter().sum();
        let x = SimplexPoint::new(w[1..].iter().map(|v| v / s).collect()).expect("interior point");
        let g = analytic_gradient(tb, &x);
        let fd = finite_difference_gradient(tb, &x, GRADIENT_STEP).expect("interior point");
        let gerr = g.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        r.check(gerr < tol.fd_gradient, || format!("point {i}: gradient off finite differences by {gerr}"));
        let h = analytic_hessian(tb, &x);
        let fdh = finite_difference_hessian(tb, &x, HESSIAN_STEP).expect("interior point");
        let herr = (h - fdh).abs().max();
        r.check(herr < tol.fd_hessian, || format!("point {i}: Hessian off finite differences by {herr}"));
    }
    for order in 2..=12 {
        let q = q_matrix(order).expect("order ≥ 2");
        let (d, c) = (q.det_exact(), q_det_closed_form(order));
        r.check(d == c, || format!("det Q for order {order}: {d} vs {c}"));
        r.check(q.is_positive_definite(), || format!("Q for order {order} is not positive definite"));
    }
    let sum = gaussian_riemann_sum(k, 10_000, 8.0).expect("valid parameters");
    r.check((sum - 1.0).abs() < tol.riemann, || format!("lattice sum for order {k} is {sum}"));
    r
}

/// Residual of the quadratic approximation at the window edge, and the
/// constant `residual / (n ρ³)` it implies, `ρ = t_n / n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaylorFit {
    pub n: u64,
    pub radius: f64,
    pub residual: f64,
    pub fitted_constant: f64,
}

pub fn taylor_fit(tb: &GroupTable, ns: &[u64], w: &WindowParams) -> Result<Vec<TaylorFit>> {
    let k = tb.order();
    ns.iter()
        .map(|&n| {
            let radius = w.t_n(k, n) / n as f64;
            let x: Vec<f64> = (1..k).map(|i| if i % 2 == 0 { radius } else { -radius } / i as f64).collect();
            let residual = taylor_residual(tb, n, &x, w)?;
            Ok(TaylorFit { n, radius, residual, fitted_constant: residual / (n as f64 * radius.powi(3)) })
        })
        .collect()
}

fn snf_suite(count: u64, master: u64) -> SuiteReport {
    let mut r = SuiteReport::new("smith-normal-form");
    let mut rng = seed::rng(master);
    for i in 0..count {
        let rows = rng.random_range(1..=8);
        let cols = rng.random_range(1..=8);
        let data: Vec<BigInt> = (0..rows * cols).map(|_| BigInt::from(rng.random_range(-9i64..=9))).collect();
        let a = IntMatrix::from_data(rows, cols, data).expect("consistent shape");
        let problems = verify_snf(&a, &smith_normal_form(&a));
        r.check(problems.is_empty(), || format!("matrix {i}: {}", problems.join("; ")));
    }
    r
}

/// `det(I_n I_nᵀ)` against the closed form, and Kalai's identity by
/// enumeration for each `n` listed. Fails with `BudgetExceeded` when an `n`
/// is too large to enumerate.
pub fn hypertree_suite(gram_max: usize, kalai_ns: &[usize]) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("hypertree");
    for n in 3..=gram_max {
        let (a, b) = (hypertree_gram_det(n).expect("n ≥ 3"), kalai_closed_form(n));
        r.check(a == b, || format!("n={n}: det(I I^T) = {a}, expected {b}"));
    }
    for &n in kalai_ns {
        let k = kalai_check(n)?;
        r.check(k.holds(), || format!("n={n}: Kalai sum {} vs {}", k.lhs, k.rhs));
    }
    Ok(r)
}

/// Runs the suites for the configured subcommand: everything for
/// `diagnostics`, one family for the `*-check` commands.
pub fn run_diagnostics(cfg: &ExperimentConfig) -> Result<DiagnosticsReport> {
    cfg.validate()?;
    let tol = &cfg.tolerances;
    let m = cfg.master_seed;
    cfg.install(|| -> Result<DiagnosticsReport> {
        let suites = match cfg.subcommand {
            Subcommand::LaplaceCheck => {
                let tb = AbelianGroup::from_factors(&cfg.group)?.table()?;
                vec![laplace_suite(&tb, cfg.replicas.min(100), m, tol)]
            }
            Subcommand::DivergenceCheck => {
                let tb = AbelianGroup::from_factors(&cfg.group)?.table()?;
                vec![divergence_suite(&tb, cfg.replicas, m, tol)]
            }
            Subcommand::KalaiCheck => {
                let ns: Vec<usize> = cfg.n.iter().map(|&n| n as usize).collect();
                let gram_max = ns.iter().copied().max().unwrap_or(3).min(8);
                vec![hypertree_suite(gram_max, &ns)?]
            }
            _ => {
                let mut suites = vec![gram_suite(), fixed_n_formula_suite(cfg.mutation), moment_oracle_suite(), remark_one_suite(20, m)];
                for f in [&[2u64][..], &[5], &[2, 2], &[7], &[25], &[5, 5]] {
                    let mut s = divergence_suite(&table(f), cfg.replicas.min(1000), m, tol);
                    s.name = format!("divergence Z/{}", f.iter().map(u64::to_string).collect::<Vec<_>>().join("+Z/"));
                    suites.push(s);
                }
                for f in [2u64, 3, 5, 7] {
                    let mut s = laplace_suite(&table(&[f]), 10, m, tol);
                    s.name = format!("laplace Z/{f}");
                    suites.push(s);
                }
                suites.push(snf_suite(200, m));
                suites.push(hypertree_suite(7, &[4, 5])?);
                suites
            }
        };
        Ok(DiagnosticsReport { suites })
    })?
}
