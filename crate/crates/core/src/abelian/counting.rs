use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};

use super::group::{AbelianGroup, GroupTable, PGroupPartition};
use super::subgroups::{subgroups, SUBGROUP_CAP};
use crate::error::Result;

/// Default truncation tolerance for the Cohen–Lenstra product.
pub const CL_TRUNCATION_TOL: f64 = 1e-12;

/// `|Aut(⊕ Z/p^λ_i)|` by the closed form for abelian p-groups: with the parts
/// sorted ascending `e_1 ≤ ... ≤ e_k`, `d_j = max{l : e_l = e_j}` and
/// `c_j = min{l : e_l = e_j}`,
///
/// `∏_j (p^{d_j} − p^{j−1}) · ∏_j p^{e_j (k − d_j)} · ∏_j p^{(e_j − 1)(k − c_j + 1)}`.
pub fn aut_order(part: &PGroupPartition) -> BigUint {
    let mut e: Vec<u32> = part.parts.clone();
    e.sort_unstable();
    let k = e.len();
    let p = BigUint::from(part.p);
    let mut total = BigUint::one();
    for j in 0..k {
        let d = (j..k).take_while(|&l| e[l] == e[j]).last().unwrap() + 1;
        let c = (0..=j).rev().take_while(|&l| e[l] == e[j]).last().unwrap() + 1;
        total *= p.pow(d as u32) - p.pow(j as u32);
        total *= p.pow(e[j] * (k - d) as u32);
        total *= p.pow((e[j] - 1) * (k - c + 1) as u32);
    }
    total
}

/// Smallest `J` with tail bound `2 p^{−J} < tol`, so that truncating
/// `∏_{j≥1}(1 − p^{−j})` after `J` factors moves it by less than `tol`.
pub fn truncation_depth(p: u64, tol: f64) -> u32 {
    assert!(tol > 0.0, "truncation tolerance must be positive");
    let pf = p as f64;
    let mut j = 1u32;
    while 2.0 * pf.powi(-(j as i32)) >= tol {
        j += 1;
    }
    j
}

/// `∏_{j=1}^{J} (1 − p^{−j})` truncated at [`truncation_depth`].
pub fn cl_product(p: u64, tol: f64) -> f64 {
    let pf = p as f64;
    (1..=truncation_depth(p, tol)).map(|j| 1.0 - pf.powi(-(j as i32))).product()
}

/// Cohen–Lenstra mass `|Aut(G)|^{−1} ∏_{j≥1}(1 − p^{−j})` of a p-group.
pub fn cl_mass(part: &PGroupPartition, tol: f64) -> f64 {
    let aut = aut_order(part).to_f64().unwrap_or(f64::INFINITY);
    cl_product(part.p, tol) / aut
}

/// `|Hom(H, K)| = ∏_{i,j} gcd(h_i, k_j)`.
pub fn hom_count(h: &AbelianGroup, k: &AbelianGroup) -> BigUint {
    let mut total = BigUint::one();
    for a in h.factors() {
        for b in k.factors() {
            total *= a.gcd(b);
        }
    }
    total
}

/// Number of surjections `H → G` by Möbius inversion over the subgroup lattice
/// of `G`: `Sur(H, K) = Hom(H, K) − Σ_{K' ⊊ K} Sur(H, K')`. `H` may be huge;
/// only `G` is enumerated.
pub fn sur_count(h: &AbelianGroup, g: &AbelianGroup) -> Result<BigUint> {
    let table = GroupTable::with_cap(g, SUBGROUP_CAP)?;
    let subs = subgroups(&table)?;
    let mut sur: Vec<BigInt> = Vec::with_capacity(subs.len());
    for (i, k) in subs.iter().enumerate() {
        let mut s = BigInt::from(hom_count(h, &k.structure));
        for (j, k2) in subs[..i].iter().enumerate() {
            if k2.order() < k.order() && k2.is_subgroup_of(k) {
                s -= &sur[j];
            }
        }
        sur.push(s);
    }
    let top = sur.pop().expect("subgroup list is never empty");
    debug_assert!(!top.is_negative());
    Ok(top.magnitude().clone())
}
