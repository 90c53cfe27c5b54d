use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::factorial::ln_factorial;

use super::types::{det_of, integer_moment_matrix, ln_big, pair_counts, type_contribution_exact, TypeVector};
use super::window::{window_shape, WindowParams};
use crate::abelian::{subgroups, GroupTable, Subgroup};
use crate::error::{Error, Result};

/// Default cap on `(n+1)^{|G|−1}`.
pub const DEFAULT_BUDGET: u64 = 1_000_000_000;

/// Bitmask enumeration of supports needs `|G| ≤ 64`.
const MASK_BITS: usize = 64;

fn check_budget(order: usize, n: u64, budget: u64) -> Result<()> {
    let needed = num_traits::Pow::pow(BigUint::from(n + 1), order.saturating_sub(1));
    if needed > BigUint::from(budget) {
        return Err(Error::BudgetExceeded { needed: needed.to_string(), budget });
    }
    Ok(())
}

/// Advances `c[lo..]` to the next vector (lexicographically) with entry sum
/// at most `cap`.
fn next_bounded(c: &mut [u64], lo: usize, cap: u64) -> bool {
    let mut s: u64 = c[lo..].iter().sum();
    let mut i = c.len();
    while i > lo {
        i -= 1;
        if s < cap {
            c[i] += 1;
            return true;
        }
        s -= c[i];
        c[i] = 0;
    }
    false
}

/// Calls `f` on every type `(n_a)` with `Σ n_a = n` in lexicographic order of
/// `(n_1, …, n_{k−1})`, with `n_0` the remainder, restricted to `n_1 = first`.
fn for_each_with_first<F: FnMut(&[u64])>(k: usize, n: u64, first: u64, mut f: F) {
    let mut c = vec![0u64; k];
    if k == 1 {
        c[0] = n;
        f(&c);
        return;
    }
    c[1] = first;
    loop {
        let used: u64 = c[1..].iter().sum();
        c[0] = n - used;
        f(&c);
        if !next_bounded(&mut c, 2, n - first) {
            break;
        }
    }
}

/// Precomputed data for evaluating `E(n̲)` over many types.
struct Evaluator<'a> {
    table: &'a GroupTable,
    n: u64,
    ln_fact: Vec<f64>,
    /// Maximal proper subgroups as element masks; a support generates `G`
    /// iff it is inside none of them.
    maximal: Vec<u64>,
    windows: Vec<(Vec<bool>, usize)>,
    window: WindowParams,
}

#[derive(Default)]
struct Scratch {
    m: Vec<u64>,
    support: Vec<usize>,
    mat: Vec<i128>,
}

impl<'a> Evaluator<'a> {
    fn new(table: &'a GroupTable, n: u64, subs: &[Subgroup], window: WindowParams) -> Result<Self> {
        let k = table.order();
        if k > MASK_BITS {
            return Err(Error::GroupTooLarge { order: k.to_string(), cap: MASK_BITS as u64 });
        }
        let mask = |h: &Subgroup| h.elements.iter().fold(0u64, |acc, &a| acc | 1 << a);
        let proper: Vec<&Subgroup> = subs.iter().filter(|h| h.order() < k).collect();
        let maximal = proper
            .iter()
            .filter(|h| !proper.iter().any(|g| g.order() > h.order() && h.is_subgroup_of(g)))
            .map(|h| mask(h))
            .collect();
        let windows = subs.iter().map(|h| (h.mask(k), h.order())).collect();
        Ok(Self { table, n, ln_fact: (0..=n).map(ln_factorial).collect(), maximal, windows, window })
    }

    fn generates(&self, support_mask: u64) -> bool {
        self.maximal.iter().all(|&h| support_mask & !h != 0)
    }

    /// `log E(n̲)`; `−∞` when it vanishes.
    fn ln_e(&self, counts: &[u64], s: &mut Scratch) -> f64 {
        let k = counts.len();
        s.support.clear();
        s.support.extend((0..k).filter(|&a| counts[a] > 0));
        if s.support == [0] {
            return 0.0;
        }
        s.m.resize(k, 0);
        pair_counts(self.table, counts, &mut s.m);
        if s.support.iter().any(|&a| s.m[a] == 0) {
            return f64::NEG_INFINITY;
        }
        integer_moment_matrix(self.table, counts, &s.m, &s.support, &mut s.mat);
        let det = det_of(&s.mat, s.support.len());
        if !det.is_positive() {
            return f64::NEG_INFINITY;
        }
        let n = self.n as f64;
        let mut ln = ln_big(&det) - 3f64.ln() - 2.0 * n * n.ln() + self.ln_fact[self.n as usize];
        for &a in &s.support {
            ln += (counts[a] - 1) as f64 * (s.m[a] as f64).ln() - self.ln_fact[counts[a] as usize];
        }
        ln
    }
}

/// Partial sums over one slab of types.
#[derive(Clone, Debug, Default)]
struct Slab {
    total: f64,
    per_subgroup: Vec<f64>,
    generating_types: u64,
    nonzero_types: u64,
    bound_violations: u64,
    max_bound_excess: f64,
}

fn scan_slab(ev: &Evaluator<'_>, first: u64, with_windows: bool, with_bound: bool) -> Slab {
    let k = ev.table.order();
    let mut slab = Slab { per_subgroup: vec![0.0; ev.windows.len()], max_bound_excess: f64::NEG_INFINITY, ..Default::default() };
    let mut scratch = Scratch::default();
    let t_n = ev.window.t_n(k, ev.n);
    let r_n = ev.window.r_n(k, ev.n);
    for_each_with_first(k, ev.n, first, |counts| {
        let mask = counts.iter().enumerate().fold(0u64, |acc, (a, &c)| if c > 0 { acc | 1 << a } else { acc });
        if !ev.generates(mask) {
            return;
        }
        slab.generating_types += 1;
        let ln = ev.ln_e(counts, &mut scratch);
        if ln == f64::NEG_INFINITY {
            return;
        }
        slab.nonzero_types += 1;
        let e = ln.exp();
        slab.total += e;
        if with_windows {
            for (h, (h_mask, h_order)) in ev.windows.iter().enumerate() {
                let (sup, off) = window_shape(counts, ev.n, h_mask, *h_order);
                if sup <= t_n && off as f64 <= r_n {
                    slab.per_subgroup[h] += e;
                }
            }
        }
        if with_bound {
            let t = TypeVector::from_counts(ev.table, counts.to_vec()).expect("valid type");
            let excess = ln - super::types::ln_divergence_bound(&t);
            slab.max_bound_excess = slab.max_bound_excess.max(excess);
            if excess > 1e-9 {
                slab.bound_violations += 1;
            }
        }
    });
    slab
}

/// Result of a full pass over the generating types.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentScan {
    pub n: u64,
    pub group: String,
    /// `Σ_{n̲ ∈ D_n} E(n̲)`.
    pub total: f64,
    /// Subgroups in enumeration order (by order, then elements).
    pub subgroups: Vec<String>,
    /// `Σ_{n̲ ∈ B(n,H)} E(n̲)` per subgroup; empty unless windows were requested.
    pub per_subgroup: Vec<f64>,
    /// `total − Σ_H per_subgroup[H]`.
    pub residual: f64,
    pub window_constant: f64,
    pub generating_types: u64,
    pub nonzero_types: u64,
    /// Types where `E(n̲)` exceeded `3^{|G|} n^{2|G|} exp(−n KL)`.
    pub bound_violations: u64,
    /// `max (log E − log bound)` over the nonzero types.
    pub max_bound_excess: f64,
}

#[derive(Clone, Copy, Debug)]
struct ScanOptions {
    windows: bool,
    bound: bool,
}

fn scan(table: &GroupTable, n: u64, w: WindowParams, budget: u64, opts: ScanOptions) -> Result<MomentScan> {
    if n == 0 {
        return Err(Error::InvalidConfig("n must be at least 1".into()));
    }
    let k = table.order();
    check_budget(k, n, budget)?;
    let subs = subgroups(table)?;
    let ev = Evaluator::new(table, n, &subs, w)?;
    let firsts: Vec<u64> = if k == 1 { vec![0] } else { (0..=n).collect() };
    // Slabs are fixed by the value of n_1, and combined in that order, so the
    // floating-point sum does not depend on the thread count.
    let slabs: Vec<Slab> = firsts.par_iter().map(|&f| scan_slab(&ev, f, opts.windows, opts.bound)).collect();
    let mut total = 0.0;
    let mut per_subgroup = vec![0.0; subs.len()];
    let (mut generating_types, mut nonzero_types, mut bound_violations) = (0, 0, 0);
    let mut max_bound_excess = f64::NEG_INFINITY;
    for s in &slabs {
        total += s.total;
        for (acc, v) in per_subgroup.iter_mut().zip(&s.per_subgroup) {
            *acc += v;
        }
        generating_types += s.generating_types;
        nonzero_types += s.nonzero_types;
        bound_violations += s.bound_violations;
        max_bound_excess = max_bound_excess.max(s.max_bound_excess);
    }
    let residual = if opts.windows { total - per_subgroup.iter().sum::<f64>() } else { 0.0 };
    Ok(MomentScan {
        n,
        group: table.group().to_string(),
        total,
        subgroups: subs.iter().map(|h| h.structure.to_string()).collect(),
        per_subgroup: if opts.windows { per_subgroup } else { Vec::new() },
        residual,
        window_constant: w.constant,
        generating_types,
        nonzero_types,
        bound_violations,
        max_bound_excess,
    })
}

/// `E|Sur(cok A_n, G)| = Σ_{n̲ ∈ D_n} E(n̲)` in log-space arithmetic.
pub fn exact_sur_moment(table: &GroupTable, n: u64, budget: u64) -> Result<f64> {
    Ok(scan(table, n, WindowParams::default(), budget, ScanOptions { windows: false, bound: false })?.total)
}

/// Splits the moment sum over the windows `B(n, H)`.
pub fn window_decomposition_report(table: &GroupTable, n: u64, w: WindowParams, budget: u64) -> Result<MomentScan> {
    scan(table, n, w, budget, ScanOptions { windows: true, bound: false })
}

/// Checks `E(n̲) ≤ 3^{|G|} n^{2|G|} exp(−n KL(ν‖μ))` on every type of `D_n`.
pub fn divergence_bound_scan(table: &GroupTable, n: u64, budget: u64) -> Result<MomentScan> {
    scan(table, n, WindowParams::default(), budget, ScanOptions { windows: false, bound: true })
}

/// The same sum in exact rational arithmetic, sequentially.
pub fn exact_sur_moment_rational(table: &GroupTable, n: u64, budget: u64) -> Result<BigRational> {
    if n == 0 {
        return Err(Error::InvalidConfig("n must be at least 1".into()));
    }
    let k = table.order();
    check_budget(k, n, budget)?;
    let mut total = BigRational::zero();
    let firsts: Vec<u64> = if k == 1 { vec![0] } else { (0..=n).collect() };
    for f in firsts {
        for_each_with_first(k, n, f, |counts| {
            let t = TypeVector::from_counts(table, counts.to_vec()).expect("valid type");
            if t.is_generating(table) {
                total += type_contribution_exact(table, &t);
            }
        });
    }
    Ok(total)
}

/// `E|Sur(cok A_n, G)|` by the route chosen for `n`: rational below the
/// exact threshold, log-space above.
pub fn sur_moment(table: &GroupTable, n: u64, budget: u64, exact: bool) -> Result<f64> {
    if exact {
        Ok(exact_sur_moment_rational(table, n, budget)?.to_f64().unwrap_or(f64::NAN))
    } else {
        exact_sur_moment(table, n, budget)
    }
}
