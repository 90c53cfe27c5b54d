//! Acceptance criteria. Each test writes one `criterion NN ... PASS|FAIL`
//! line to stdout (bypassing the test harness capture) and then asserts.
//! Oracles here are written from the definitions, independently of the
//! library code paths they check.

use std::collections::HashMap;
use std::io::Write;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use rand::Rng;

use cokernel_lab::abelian::{subgroups, AbelianGroup, GroupTable};
use cokernel_lab::divergence::{detect_subgroup, fourier, kl, pair_convolution, pinsker_gap, refinement_bound, DEFAULT_DETECTION_THRESHOLD};
use cokernel_lab::ensemble::{assemble_matrix, sample_subset, structured_gram_det, structured_gram_det_explicit};
use cokernel_lab::harness::{run_hypertree_census, run_moment_scan, run_sylow_census, ExperimentConfig, Subcommand};
use cokernel_lab::hypertree::{hypertree_gram_det, kalai_check, HypertreeSampler};
use cokernel_lab::laplace::{
    analytic_gradient, analytic_hessian, f_value, gaussian_riemann_sum, q_matrix, SimplexPoint,
};
use cokernel_lab::linalg::{det_exact, smith_normal_form, IntMatrix};
use cokernel_lab::moments::{
    exact_sur_moment, exact_sur_moment_rational, ln_type_contribution, prob_kernel_vector, z2_single_contribution, TypeVector,
    DEFAULT_BUDGET,
};
use cokernel_lab::seed;

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "criterion {id:>2} {name}: {status} ({detail})").unwrap();
    out.flush().unwrap();
}

// ---------------------------------------------------------------------------
// Oracles

/// Exact determinant by Gaussian elimination over the rationals.
fn det_q(rows: &[Vec<BigInt>]) -> BigInt {
    let n = rows.len();
    let mut m: Vec<Vec<BigRational>> = rows.iter().map(|r| r.iter().map(|x| BigRational::from_integer(x.clone())).collect()).collect();
    let mut det = BigRational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !m[r][c].is_zero()) else {
            return BigInt::zero();
        };
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        let pivot = m[c][c].clone();
        det *= &pivot;
        for r in c + 1..n {
            let f = &m[r][c] / &pivot;
            if f.is_zero() {
                continue;
            }
            for k in c..n {
                let v = &f * &m[c][k];
                m[r][k] -= v;
            }
        }
    }
    assert!(det.is_integer());
    det.to_integer()
}

fn to_big(rows: &[Vec<i64>]) -> Vec<Vec<BigInt>> {
    rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
}

/// Rows of `B_n` in the order `(x₁, x₂, x₃)` lexicographic, 0-based.
fn b_rows(n: usize) -> Vec<(Vec<usize>, Vec<i64>)> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut v = vec![0i64; n];
                v[a] += 1;
                v[b] += 1;
                v[c] += 1;
                out.push((vec![a, b, c], v));
            }
        }
    }
    out
}

fn gram(rows: &[Vec<i64>], n: usize) -> Vec<Vec<BigInt>> {
    let mut g = vec![vec![BigInt::zero(); n]; n];
    for r in rows {
        for i in 0..n {
            for j in 0..n {
                g[i][j] += BigInt::from(r[i] * r[j]);
            }
        }
    }
    g
}

/// `3^{n+1} n^{2n}`.
fn gram_closed(n: usize) -> BigInt {
    Pow::pow(BigInt::from(3), n + 1) * Pow::pow(BigInt::from(n), 2 * n)
}

/// `P(A_n q = 0)` for `q ∈ (Z/k)ⁿ` via Cauchy–Binet: `det(B_qᵀB_q)/det(BᵀB)`
/// with `B_q` the rows of `B_n` whose coordinates of `q` sum to 0.
fn kernel_prob_cauchy_binet(k: usize, q: &[usize]) -> BigRational {
    let n = q.len();
    let rows: Vec<Vec<i64>> = b_rows(n).into_iter().filter(|(x, _)| (q[x[0]] + q[x[1]] + q[x[2]]) % k == 0).map(|(_, v)| v).collect();
    BigRational::new(det_q(&gram(&rows, n)), gram_closed(n))
}

fn vectors(k: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out.into_iter().flat_map(|v| (0..k).map(move |a| [v.clone(), vec![a]].concat())).collect();
    }
    out
}

fn cyclic(k: u64) -> GroupTable {
    AbelianGroup::from_factors(&[k]).unwrap().table().unwrap()
}

fn table(f: &[u64]) -> GroupTable {
    AbelianGroup::from_factors(f).unwrap().table().unwrap()
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_01_gram_closed_form() {
    let start = std::time::Instant::now();
    let mut ok = true;
    for n in 1..=6 {
        let rows: Vec<Vec<i64>> = b_rows(n).into_iter().map(|(_, v)| v).collect();
        let oracle = det_q(&gram(&rows, n));
        ok &= oracle == gram_closed(n);
        ok &= structured_gram_det_explicit(n) == gram_closed(n);
        ok &= structured_gram_det(n) == gram_closed(n);
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 30.0;
    report(1, "gram closed form n=1..6", ok, &format!("{secs:.2}s"));
    assert!(ok);
}

#[test]
fn criterion_02_fixed_n_formula() {
    let start = std::time::Instant::now();
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for (k, max_n) in [(2u64, 4usize), (3, 4), (5, 3)] {
        let tb = cyclic(k);
        for n in 1..=max_n {
            for q in vectors(k as usize, n) {
                let lhs = prob_kernel_vector(&tb, &q).unwrap();
                let rhs = kernel_prob_cauchy_binet(k as usize, &q);
                checked += 1;
                if lhs != rhs {
                    mismatches.push(format!("Z/{k} {q:?}: {lhs} vs {rhs}"));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = mismatches.is_empty() && secs < 300.0;
    report(2, "fixed-n formula vs Cauchy-Binet", ok, &format!("{checked} vectors, {} mismatches, {secs:.1}s", mismatches.len()));
    assert!(mismatches.is_empty(), "{mismatches:?}");
    assert!(secs < 300.0);
}

/// Exact subset probabilities `det(B[K])² / det(BᵀB)` by enumeration.
fn exact_subset_law(n: usize) -> HashMap<Vec<usize>, f64> {
    let rows: Vec<Vec<i64>> = b_rows(n).into_iter().map(|(_, v)| v).collect();
    let denom = gram_closed(n).to_f64().unwrap();
    let m = rows.len();
    let mut out = HashMap::new();
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let sub: Vec<Vec<i64>> = idx.iter().map(|&r| rows[r].clone()).collect();
        let d = det_q(&to_big(&sub));
        if !d.is_zero() {
            out.insert(idx.clone(), (&d * &d).to_f64().unwrap() / denom);
        }
        // next lexicographic n-subset of 0..m
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < m - n + i {
                idx[i] += 1;
                for j in i + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn sampler_tv(n: usize, samples: u64, master: u64) -> (f64, f64) {
    let law = exact_subset_law(n);
    let total: f64 = law.values().sum();
    assert!((total - 1.0).abs() < 1e-12);
    let mut counts: HashMap<Vec<usize>, u64> = HashMap::new();
    for i in 0..samples {
        let s = sample_subset(n, seed::derive_seed(master, i)).unwrap();
        let mut items = s.item_indices();
        items.sort_unstable();
        *counts.entry(items).or_default() += 1;
    }
    let mut tv = 0.0;
    for (k, p) in &law {
        tv += (counts.get(k).copied().unwrap_or(0) as f64 / samples as f64 - p).abs();
    }
    tv += counts.iter().filter(|(k, _)| !law.contains_key(*k)).map(|(_, &c)| c as f64 / samples as f64).sum::<f64>();
    // Expected TV of an exact sampler: ½ Σ E|p̂ − p| ≈ ½ Σ √(2p(1−p)/(πN)).
    let null: f64 = 0.5 * law.values().map(|p| (2.0 * p * (1.0 - p) / (std::f64::consts::PI * samples as f64)).sqrt()).sum::<f64>();
    (0.5 * tv, null)
}

#[test]
fn criterion_03_sampler_law() {
    let start = std::time::Instant::now();
    let (tv2, null2) = sampler_tv(2, 100_000, 31);
    let (tv3, null3) = sampler_tv(3, 100_000, 32);
    let secs = start.elapsed().as_secs_f64();
    let pass2 = tv2 < 0.02;
    let pass3 = tv3 < 0.03;
    report(
        3,
        "sampler law",
        pass2 && pass3 && secs < 120.0,
        &format!(
            "n=2 TV {tv2:.4} < 0.02: {pass2}; n=3 TV {tv3:.4} < 0.03: {pass3}; an exact sampler has expected TV {null2:.4} (n=2) and {null3:.4} (n=3) at 1e5 draws; {secs:.1}s"
        ),
    );
    assert!(pass2, "n=2 TV {tv2}");
    assert!(secs < 120.0);
    // The n=3 bound is below the sampling noise floor; the strict assertion is
    // `criterion_03_sampler_law_n3_strict`. Here the observed TV must at
    // least match what an exact sampler produces.
    assert!((tv3 - null3).abs() < 0.01, "n=3 TV {tv3} vs exact-sampler expectation {null3}");
}

#[test]
#[ignore = "unattainable at 1e5 draws: an exact sampler has expected TV about 0.048 over the 1918 subsets"]
fn criterion_03_sampler_law_n3_strict() {
    let (tv3, _) = sampler_tv(3, 100_000, 32);
    assert!(tv3 < 0.03, "n=3 TV {tv3}");
}

#[test]
fn criterion_04_moment_oracle() {
    let start = std::time::Instant::now();
    let tb = cyclic(2);
    let mut exact_ok = true;
    let mut detail = String::new();
    for n in [3usize, 4] {
        let brute: BigRational = vectors(2, n).iter().filter(|q| q.contains(&1)).map(|q| kernel_prob_cauchy_binet(2, q)).sum();
        let exact = exact_sur_moment_rational(&tb, n as u64, DEFAULT_BUDGET).unwrap();
        let log = exact_sur_moment(&tb, n as u64, DEFAULT_BUDGET).unwrap();
        let b = brute.to_f64().unwrap();
        exact_ok &= exact == brute && (log - b).abs() < 1e-12 * b.max(1.0);
        detail.push_str(&format!("Z/2 n={n}: {brute} ({b:.6}); "));
    }
    let mut cfg = ExperimentConfig::new(Subcommand::MomentScan);
    cfg.group = vec![5];
    cfg.n = vec![40];
    cfg.replicas = 2000;
    cfg.master_seed = 404;
    let scan = run_moment_scan(&cfg).unwrap();
    let row = &scan.rows[0];
    let exact = row.exact_moment.unwrap();
    let z = (row.mc_estimate - exact) / row.mc_std_error;
    let mc_ok = z.abs() <= 3.0;
    let secs = start.elapsed().as_secs_f64();
    detail.push_str(&format!(
        "Z/5 n=40 exact {exact:.5}, monte carlo {:.5} ± {:.5} (z = {z:.2}); {secs:.1}s",
        row.mc_estimate, row.mc_std_error
    ));
    let ok = exact_ok && mc_ok && secs < 600.0;
    report(4, "moment oracle equivalence", ok, &detail);
    assert!(ok);
}

#[test]
fn criterion_05_moment_trend() {
    let start = std::time::Instant::now();
    let tb = cyclic(5);
    let e: Vec<f64> = [10u64, 20, 40, 80].iter().map(|&n| exact_sur_moment(&tb, n, DEFAULT_BUDGET).unwrap()).collect();
    let secs = start.elapsed().as_secs_f64();
    let ok = (e[3] - 1.0).abs() < (e[0] - 1.0).abs() && (e[3] - 1.0).abs() < 0.2 && secs < 900.0;
    report(5, "Z/5 moment trend (heuristic tolerance)", ok, &format!("E = {e:.5?} at n = 10, 20, 40, 80; {secs:.1}s"));
    assert!(ok);
}

#[test]
fn criterion_06_single_nonzero_coordinate() {
    let n = 10_000u64;
    let target = 4.0 * (-2.0f64).exp();
    // E(n̲) for n̲ = (n−1, 1) on Z/2 from the moment matrix by hand:
    // det M = 12(n−1)³, m₀ = (n−1)² + 1, so E = n · det M · m₀^{n−2} / (3n^{2n}).
    let nf = n as f64;
    let by_hand = (4f64.ln() + 3.0 * (nf - 1.0).ln() + (nf - 2.0) * ((nf - 1.0).powi(2) + 1.0).ln() - (2.0 * nf - 1.0) * nf.ln()).exp();
    let tb = cyclic(2);
    let t = TypeVector::from_counts(&tb, vec![n - 1, 1]).unwrap();
    let via_types = ln_type_contribution(&tb, &t).exp();
    let closed = z2_single_contribution(n);
    let e40 = exact_sur_moment(&tb, 40, DEFAULT_BUDGET).unwrap();
    let ok = (closed - target).abs() < 1e-3 && (via_types - target).abs() < 1e-3 && (by_hand - closed).abs() < 1e-9 && e40 >= 1.3;
    report(
        6,
        "single nonzero coordinate on Z/2",
        ok,
        &format!("E at n=1e4: {closed:.7} (types {via_types:.7}) vs 4e^-2 = {target:.7}; Z/2 moment at n=40: {e40:.4} >= 1.3"),
    );
    assert!(ok);
}

#[test]
fn criterion_07_determinant_divisible_by_three() {
    let mut bad = 0;
    for i in 0..1000 {
        let s = sample_subset(30, seed::derive_seed(707, i)).unwrap();
        let a = assemble_matrix(&s);
        for r in 0..30 {
            assert_eq!(a.row(r).iter().sum::<BigInt>(), BigInt::from(3));
        }
        if !(det_exact(&a).unwrap() % BigInt::from(3)).is_zero() {
            bad += 1;
        }
    }
    report(7, "det(A_30) divisible by 3", bad == 0, &format!("{bad} of 1000 samples not divisible"));
    assert_eq!(bad, 0);
}

#[test]
fn criterion_08_sylow_census() {
    let start = std::time::Instant::now();
    let mut cfg = ExperimentConfig::new(Subcommand::Census);
    cfg.n = vec![45];
    cfg.primes = vec![5];
    cfg.replicas = 2000;
    cfg.master_seed = 808;
    let r = run_sylow_census(&cfg).unwrap();
    let eta: f64 = (1..200).map(|j| 1.0 - 5f64.powi(-j)).product();
    let trivial = r.class(&[vec![]]).unwrap();
    let cyclic5 = r.class(&[vec![1]]).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let ok = (trivial.frequency - eta).abs() < 0.06 && (cyclic5.frequency - eta / 4.0).abs() < 0.05 && secs < 3600.0;
    report(
        8,
        "5-Sylow census n=45 (heuristic tolerance)",
        ok,
        &format!(
            "trivial {:.4} ± {:.4} vs {eta:.4}; Z/5 {:.4} ± {:.4} vs {:.4}; {secs:.1}s",
            trivial.frequency,
            trivial.std_error,
            cyclic5.frequency,
            cyclic5.std_error,
            eta / 4.0
        ),
    );
    assert!(ok);
}

fn fd_gradient(tb: &GroupTable, x: &[f64], h: f64) -> Vec<f64> {
    let f = |y: &[f64]| f_value(tb, &SimplexPoint::new(y.to_vec()).unwrap());
    (0..x.len())
        .map(|i| {
            let (mut up, mut dn) = (x.to_vec(), x.to_vec());
            up[i] += h;
            dn[i] -= h;
            (f(&up) - f(&dn)) / (2.0 * h)
        })
        .collect()
}

fn fd_hessian(tb: &GroupTable, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let f = |y: &[f64]| f_value(tb, &SimplexPoint::new(y.to_vec()).unwrap());
    let d = x.len();
    let f0 = f(x);
    let mut out = vec![vec![0.0; d]; d];
    for i in 0..d {
        let mut up = x.to_vec();
        let mut dn = x.to_vec();
        up[i] += h;
        dn[i] -= h;
        out[i][i] = (f(&up) - 2.0 * f0 + f(&dn)) / (h * h);
        for j in 0..i {
            let at = |si: f64, sj: f64| {
                let mut y = x.to_vec();
                y[i] += si * h;
                y[j] += sj * h;
                f(&y)
            };
            out[i][j] = (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h * h);
            out[j][i] = out[i][j];
        }
    }
    out
}

#[test]
fn criterion_09_laplace() {
    let mut rng = seed::rng(909);
    let (mut grad_c, mut hess_c, mut fd_g, mut fd_h) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for f in [&[2u64][..], &[3], &[4], &[5], &[7], &[2, 2], &[3, 3], &[2, 4]] {
        let tb = table(f);
        let k = tb.order();
        let c = SimplexPoint::center(k);
        grad_c = grad_c.max(analytic_gradient(&tb, &c).iter().fold(0.0, |m, v| m.max(v.abs())));
        let h = analytic_hessian(&tb, &c);
        for i in 0..k - 1 {
            for j in 0..k - 1 {
                let q = if i == j { 2.0 * k as f64 } else { k as f64 };
                hess_c = hess_c.max((h[(i, j)] - q).abs());
            }
        }
    }
    for k in [2u64, 3, 5, 7] {
        let tb = cyclic(k);
        let k = k as usize;
        for _ in 0..20 {
            // Interior points with every coordinate, ν(0) included, at least 10h from the boundary.
            let w: Vec<f64> = (0..k).map(|_| 0.2 + rng.random::<f64>()).collect();
            let s: f64 = w.iter().sum();
            let x: Vec<f64> = w[1..].iter().map(|v| v / s).collect();
            let p = SimplexPoint::new(x.clone()).unwrap();
            let g = analytic_gradient(&tb, &p);
            for (a, b) in g.iter().zip(fd_gradient(&tb, &x, 1e-5)) {
                fd_g = fd_g.max((a - b).abs());
            }
            let h = analytic_hessian(&tb, &p);
            let fh = fd_hessian(&tb, &x, 1e-4);
            for i in 0..k - 1 {
                for j in 0..k - 1 {
                    fd_h = fd_h.max((h[(i, j)] - fh[i][j]).abs());
                }
            }
        }
    }
    let mut det_ok = true;
    for k in 2..=12usize {
        let rows: Vec<Vec<i64>> = (0..k - 1).map(|i| (0..k - 1).map(|j| if i == j { 2 * k as i64 } else { k as i64 }).collect()).collect();
        let expected = Pow::pow(BigInt::from(k), k);
        det_ok &= det_q(&to_big(&rows)) == expected;
        det_ok &= q_matrix(k).unwrap().det_exact() == expected;
    }
    let riemann = gaussian_riemann_sum(5, 10_000, 8.0).unwrap();
    let ok = grad_c < 1e-12 && hess_c < 1e-9 && fd_g < 1e-6 && fd_h < 1e-4 && det_ok && (riemann - 1.0).abs() < 1e-2;
    report(
        9,
        "laplace suite",
        ok,
        &format!(
            "center gradient {grad_c:.1e}, center Hessian vs Q {hess_c:.1e}, finite differences {fd_g:.1e} / {fd_h:.1e}, det Q exact: {det_ok}, lattice sum {riemann:.6}"
        ),
    );
    assert!(ok);
}

fn random_dist<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| if rng.random_bool(0.15) { 0.0 } else { rng.random::<f64>().powi(3) }).collect();
    let s: f64 = w.iter().sum();
    if s == 0.0 {
        return vec![1.0 / k as f64; k];
    }
    w.iter().map(|x| x / s).collect()
}

#[test]
fn criterion_10_divergence() {
    let mut rng = seed::rng(1010);
    let mut violations = 0u64;
    let mut trials = 0u64;
    let mut fourier_err = 0.0f64;
    let mut detection_misses = Vec::new();
    for f in [&[5u64][..], &[25], &[5, 5], &[7], &[2], &[2, 2]] {
        let tb = table(f);
        let k = tb.order();
        for _ in 0..10_000 {
            trials += 1;
            let nu = random_dist(&mut rng, k);
            let mu = random_dist(&mut rng, k);
            // Gibbs, computed here directly from the definition as well.
            let d = kl(&nu, &mu);
            let direct: f64 = nu.iter().zip(&mu).filter(|(p, _)| **p > 0.0).map(|(p, q)| p * (p / q).ln()).sum();
            if d < -1e-12 || (direct.is_finite() && direct < -1e-12) {
                violations += 1;
            }
            let (l1, bound) = pinsker_gap(&nu, &mu);
            let l1_direct: f64 = nu.iter().zip(&mu).map(|(p, q)| (p - q).abs()).sum();
            if l1 > bound + 1e-12 || (l1 - l1_direct).abs() > 1e-15 {
                violations += 1;
            }
            let y: Vec<bool> = (0..k).map(|_| rng.random_bool(0.5)).collect();
            if refinement_bound(&nu, &mu, &y) > d + 1e-12 {
                violations += 1;
            }
            // μ = ν * ν reflected: μ(c) = Σ_b ν(b) ν(−c−b); then μ̂ = conj(ν̂²).
            let mu_nu: Vec<f64> =
                (0..k).map(|c| (0..k).map(|b| nu[b] * nu[tb.neg(tb.add(c, b))]).sum()).collect();
            let lib = pair_convolution(&tb, &nu);
            fourier_err = fourier_err.max(mu_nu.iter().zip(&lib).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
            let hat = fourier(&tb, &nu);
            let mu_hat = fourier(&tb, &mu_nu);
            for (m, h) in mu_hat.iter().zip(&hat) {
                fourier_err = fourier_err.max((m - (h * h).conj()).norm());
            }
        }
        if [&[2u64][..], &[2, 2]].contains(&f) {
            continue;
        }
        for h in subgroups(&tb).unwrap() {
            let mut u = vec![0.0; k];
            for &a in &h.elements {
                u[a] = 1.0 / h.order() as f64;
            }
            if detect_subgroup(&tb, &u, DEFAULT_DETECTION_THRESHOLD).subgroup != h.elements {
                detection_misses.push(format!("{f:?} uniform on {}", h.structure));
            }
            for _ in 0..5 {
                let noise = random_dist(&mut rng, k);
                let p: Vec<f64> = u.iter().zip(&noise).map(|(a, b)| (1.0 - 1e-3) * a + 1e-3 * b).collect();
                if detect_subgroup(&tb, &p, DEFAULT_DETECTION_THRESHOLD).subgroup != h.elements {
                    detection_misses.push(format!("{f:?} perturbed uniform on {}", h.structure));
                }
            }
        }
    }
    let ok = violations == 0 && fourier_err < 1e-10 && detection_misses.is_empty();
    report(
        10,
        "divergence suite",
        ok,
        &format!(
            "{trials} trials, {violations} inequality violations, Fourier error {fourier_err:.1e}, {} detection misses",
            detection_misses.len()
        ),
    );
    assert!(ok, "{detection_misses:?}");
}

/// `I_n` from the definition, rows 2-subsets of `[n−1]`, columns 3-subsets
/// of `[n]`, both lexicographic.
fn boundary_oracle(n: usize) -> (Vec<Vec<i64>>, usize, usize) {
    let rows: Vec<(usize, usize)> = (1..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let cols: Vec<(usize, usize, usize)> =
        (1..=n).flat_map(|a| (a + 1..=n).flat_map(move |b| (b + 1..=n).map(move |c| (a, b, c)))).collect();
    let mut m = vec![vec![0i64; cols.len()]; rows.len()];
    for (j, &(x1, x2, x3)) in cols.iter().enumerate() {
        for (i, pair) in [(x2, x3), (x1, x3), (x1, x2)].iter().enumerate() {
            if let Some(r) = rows.iter().position(|p| p == pair) {
                m[r][j] = if i % 2 == 0 { -1 } else { 1 };
            }
        }
    }
    (m, rows.len(), cols.len())
}

fn hypertree_law(n: usize) -> HashMap<Vec<usize>, f64> {
    let (m, r, c) = boundary_oracle(n);
    let total = Pow::pow(BigInt::from(n), (n - 2) * (n - 3) / 2).to_f64().unwrap();
    let mut out = HashMap::new();
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        let sub: Vec<Vec<i64>> = idx.iter().map(|&j| (0..r).map(|i| m[i][j]).collect()).collect();
        let d = det_q(&to_big(&sub));
        if !d.is_zero() {
            out.insert(idx.clone(), (&d * &d).to_f64().unwrap() / total);
        }
        let mut i = r;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < c - r + i {
                idx[i] += 1;
                for j in i + 1..r {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[test]
fn criterion_11_hypertree() {
    let start = std::time::Instant::now();
    let mut gram_ok = true;
    for n in 3..=7usize {
        let (m, r, _) = boundary_oracle(n);
        let g: Vec<Vec<i64>> = (0..r).map(|i| (0..r).map(|j| m[i].iter().zip(&m[j]).map(|(a, b)| a * b).sum()).collect()).collect();
        let expected = Pow::pow(BigInt::from(n), (n - 2) * (n - 3) / 2);
        gram_ok &= det_q(&to_big(&g)) == expected && hypertree_gram_det(n).unwrap() == expected;
    }
    let mut kalai_ok = true;
    let mut kalai_detail = Vec::new();
    for n in [4usize, 5, 6] {
        let k = kalai_check(n).unwrap();
        kalai_ok &= k.lhs == k.rhs && k.rhs == Pow::pow(BigInt::from(n), (n - 2) * (n - 3) / 2);
        kalai_detail.push(format!("n={n}: {} subsets, sum {}", k.subsets, k.lhs));
    }
    let kalai_secs = start.elapsed().as_secs_f64();
    let mut tvs = Vec::new();
    for n in [4usize, 5] {
        let law = hypertree_law(n);
        assert!((law.values().sum::<f64>() - 1.0).abs() < 1e-12);
        let s = HypertreeSampler::new(n).unwrap();
        let samples = 100_000u64;
        let mut counts: HashMap<Vec<usize>, u64> = HashMap::new();
        for i in 0..samples {
            *counts.entry(s.sample(seed::derive_seed(1111 + n as u64, i)).unwrap().columns).or_default() += 1;
        }
        let mut tv = 0.0;
        for (key, p) in &law {
            tv += (counts.get(key).copied().unwrap_or(0) as f64 / samples as f64 - p).abs();
        }
        tv += counts.iter().filter(|(k, _)| !law.contains_key(*k)).map(|(_, &c)| c as f64 / samples as f64).sum::<f64>();
        tvs.push(0.5 * tv);
    }
    let ok = gram_ok && kalai_ok && kalai_secs < 600.0 && tvs.iter().all(|&t| t < 0.02);
    report(
        11,
        "hypertree gram, Kalai and sampler law",
        ok,
        &format!("gram n=3..7 exact: {gram_ok}; {}; sampler TV n=4 {:.4}, n=5 {:.4}", kalai_detail.join(", "), tvs[0], tvs[1]),
    );
    assert!(ok);
}

fn mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let (n, k, m) = (a.len(), b.len(), b.first().map_or(0, Vec::len));
    (0..n).map(|i| (0..m).map(|j| (0..k).map(|t| &a[i][t] * &b[t][j]).sum()).collect()).collect()
}

#[test]
fn criterion_12_smith_normal_form() {
    let mut rng = seed::rng(1212);
    let mut failures = Vec::new();
    for t in 0..1000 {
        let (r, c) = (rng.random_range(1..=8usize), rng.random_range(1..=8usize));
        let bound = [1i64, 3, 10, 100][t % 4];
        let rows: Vec<Vec<i64>> = (0..r).map(|_| (0..c).map(|_| rng.random_range(-bound..=bound)).collect()).collect();
        let a = IntMatrix::from_rows(&rows);
        let s = smith_normal_form(&a);
        let (u, v, d) = (s.u.to_rows(), s.v.to_rows(), s.s.to_rows());
        if mul(&mul(&u, &to_big(&rows)), &v) != d {
            failures.push(format!("{t}: UAV != S"));
        }
        if !det_q(&u).abs().is_one() || !det_q(&v).abs().is_one() {
            failures.push(format!("{t}: not unimodular"));
        }
        for i in 0..r {
            for j in 0..c {
                if i != j && !d[i][j].is_zero() {
                    failures.push(format!("{t}: S not diagonal"));
                }
            }
        }
        let diag: Vec<BigInt> = (0..r.min(c)).map(|i| d[i][i].clone()).filter(|x| !x.is_zero()).collect();
        if diag.iter().any(|x| x.is_negative()) || diag.windows(2).any(|w| !(&w[1] % &w[0]).is_zero()) {
            failures.push(format!("{t}: not a divisibility chain"));
        }
        if r == c {
            let det = det_q(&to_big(&rows));
            let prod: BigInt = diag.iter().product();
            let ok = if det.is_zero() { diag.len() < r } else { prod == det.abs() };
            if !ok {
                failures.push(format!("{t}: product {prod} vs |det| {}", det.abs()));
            }
        }
        let lib: Vec<BigUint> = s.invariant_factors.clone();
        if lib.iter().map(|x| BigInt::from(x.clone())).collect::<Vec<_>>() != diag {
            failures.push(format!("{t}: invariant factors disagree with S"));
        }
    }
    report(12, "smith normal form on 1000 random matrices", failures.is_empty(), &format!("{} failures", failures.len()));
    assert!(failures.is_empty(), "{failures:?}");
}

#[test]
fn criterion_13_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (name, threads) in [("default", None), ("one", Some(1)), ("three", Some(3))] {
        let mut cfg = ExperimentConfig::new(Subcommand::Census);
        cfg.n = vec![20];
        cfg.primes = vec![5, 7];
        cfg.replicas = 300;
        cfg.master_seed = 1313;
        cfg.threads = threads;
        cfg.out = Some(dir.path().join(format!("{name}.jsonl")));
        run_sylow_census(&cfg).unwrap();
        let mut h = ExperimentConfig::new(Subcommand::HypertreeCensus);
        h.n = vec![9];
        h.primes = vec![2, 3];
        h.replicas = 200;
        h.master_seed = 1313;
        h.threads = threads;
        h.out = Some(dir.path().join(format!("{name}-ht.jsonl")));
        run_hypertree_census(&h).unwrap();
        let mut s = ExperimentConfig::new(Subcommand::MomentScan);
        s.group = vec![3];
        s.n = vec![6, 12];
        s.replicas = 100;
        s.threads = threads;
        s.out = Some(dir.path().join(format!("{name}.csv")));
        run_moment_scan(&s).unwrap();
        let read = |f: String| std::fs::read(dir.path().join(f)).unwrap();
        outputs.push([
            read(format!("{name}.jsonl")),
            read(format!("{name}.report.json")),
            read(format!("{name}-ht.jsonl")),
            read(format!("{name}.csv")),
        ]);
    }
    let ok = outputs.windows(2).all(|w| w[0] == w[1]) && outputs[0].iter().all(|o| !o.is_empty());
    report(13, "determinism across thread counts", ok, "census, hypertree census and moment scan with default, 1 and 3 threads");
    assert!(ok);
}
