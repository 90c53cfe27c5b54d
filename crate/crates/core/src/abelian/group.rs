use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest group order for which element and character lists are materialised.
pub const ENUMERATION_CAP: u64 = 1 << 20;

/// A finite abelian group `Z/d1 + ... + Z/dk` in invariant-factor form, `d1 | d2 | ... | dk`.
///
/// Factors are arbitrary precision because cokernels of large integer matrices
/// routinely have orders far beyond 64 bits. Anything that enumerates elements
/// goes through [`GroupTable`], which requires a small order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AbelianGroup {
    factors: Vec<BigUint>,
}

impl AbelianGroup {
    /// Validates a divisibility chain of invariant factors.
    pub fn new(factors: Vec<BigUint>) -> Result<Self> {
        let two = BigUint::from(2u32);
        for d in &factors {
            if *d < two {
                return Err(Error::InvalidFactor(d.to_string()));
            }
        }
        for w in factors.windows(2) {
            if !(&w[1] % &w[0]).is_zero() {
                return Err(Error::NonDivisibleChain(w[0].to_string(), w[1].to_string()));
            }
        }
        Ok(Self { factors })
    }

    pub fn from_factors(factors: &[u64]) -> Result<Self> {
        Self::new(factors.iter().map(|&d| BigUint::from(d)).collect())
    }

    pub fn trivial() -> Self {
        Self { factors: Vec::new() }
    }

    pub fn cyclic(d: u64) -> Result<Self> {
        if d == 1 {
            return Ok(Self::trivial());
        }
        Self::from_factors(&[d])
    }

    /// Builds the canonical form of an arbitrary direct sum of cyclic groups.
    /// Factors equal to 1 are dropped; zero is rejected.
    pub fn from_cyclic_orders(orders: &[BigUint]) -> Result<Self> {
        // Collect prime-power parts per prime, then recombine largest-with-largest.
        let mut parts: Vec<(BigUint, Vec<BigUint>)> = Vec::new();
        for d in orders {
            if d.is_zero() {
                return Err(Error::InvalidFactor(d.to_string()));
            }
            for (p, e) in factorize(d) {
                let q = p.pow(e);
                match parts.iter_mut().find(|(pp, _)| *pp == p) {
                    Some((_, v)) => v.push(q),
                    None => parts.push((p, vec![q])),
                }
            }
        }
        let width = parts.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
        let mut factors = vec![BigUint::one(); width];
        for (_, mut v) in parts {
            v.sort();
            let offset = width - v.len();
            for (i, q) in v.into_iter().enumerate() {
                factors[offset + i] *= q;
            }
        }
        Self::new(factors)
    }

    pub fn from_p_parts(parts: &[PGroupPartition]) -> Self {
        let orders: Vec<BigUint> = parts
            .iter()
            .flat_map(|part| part.parts.iter().map(move |&e| BigUint::from(part.p).pow(e)))
            .collect();
        Self::from_cyclic_orders(&orders).expect("prime powers are valid cyclic orders")
    }

    pub fn factors(&self) -> &[BigUint] {
        &self.factors
    }

    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn order(&self) -> BigUint {
        self.factors.iter().product()
    }

    /// Factors as machine integers, provided the whole group has order at most `cap`.
    pub fn small_factors(&self, cap: u64) -> Result<Vec<u64>> {
        let order = self.order();
        match order.to_u64() {
            Some(o) if o <= cap => Ok(self.factors.iter().map(|d| d.to_u64().unwrap()).collect()),
            _ => Err(Error::GroupTooLarge { order: order.to_string(), cap }),
        }
    }

    /// All elements in lexicographic coordinate order.
    pub fn elements(&self) -> Result<Vec<GroupElement>> {
        let table = GroupTable::with_cap(self, ENUMERATION_CAP)?;
        Ok((0..table.order()).map(|i| table.element(i)).collect())
    }

    /// The p-Sylow subgroup as an exponent partition.
    pub fn sylow(&self, p: u64) -> PGroupPartition {
        let bp = BigUint::from(p);
        let mut parts: Vec<u32> = self
            .factors
            .iter()
            .map(|d| {
                let mut d = d.clone();
                let mut e = 0;
                loop {
                    let (q, r) = d.div_rem(&bp);
                    if !r.is_zero() {
                        break;
                    }
                    d = q;
                    e += 1;
                }
                e
            })
            .filter(|&e| e > 0)
            .collect();
        parts.sort_unstable_by(|a, b| b.cmp(a));
        PGroupPartition { p, parts }
    }

    pub fn table(&self) -> Result<GroupTable> {
        GroupTable::with_cap(self, ENUMERATION_CAP)
    }
}

impl fmt::Display for AbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.factors.iter().map(|d| format!("Z/{d}")).collect();
        write!(f, "{}", parts.join("+"))
    }
}

/// Trial-division factorisation; only used on orders of enumerable groups and
/// on prime powers, so the inputs stay small.
fn factorize(n: &BigUint) -> Vec<(BigUint, u32)> {
    let mut n = n.clone();
    let mut out = Vec::new();
    let mut p = BigUint::from(2u32);
    while &p * &p <= n {
        let mut e = 0;
        while (&n % &p).is_zero() {
            n /= &p;
            e += 1;
        }
        if e > 0 {
            out.push((p.clone(), e));
        }
        p += 1u32;
    }
    if n > BigUint::one() {
        out.push((n, 1));
    }
    out
}

/// Residue tuple; `coords[i]` lies in `[0, d_i)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement {
    pub coords: Vec<u64>,
}

/// A finite abelian p-group `Z/p^λ1 + Z/p^λ2 + ...` with `λ1 ≥ λ2 ≥ ... ≥ 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PGroupPartition {
    pub p: u64,
    pub parts: Vec<u32>,
}

impl PGroupPartition {
    pub fn new(p: u64, mut parts: Vec<u32>) -> Self {
        parts.retain(|&e| e > 0);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Self { p, parts }
    }

    pub fn trivial(p: u64) -> Self {
        Self { p, parts: Vec::new() }
    }

    pub fn is_trivial(&self) -> bool {
        self.parts.is_empty()
    }

    /// Σ λ_i, i.e. log_p of the order.
    pub fn weight(&self) -> u32 {
        self.parts.iter().sum()
    }

    pub fn order(&self) -> BigUint {
        BigUint::from(self.p).pow(self.weight())
    }

    pub fn to_group(&self) -> AbelianGroup {
        AbelianGroup::from_p_parts(std::slice::from_ref(self))
    }

    /// Every partition with weight at most `max_weight`, ordered by weight and
    /// then reverse-lexicographically.
    pub fn all_up_to(p: u64, max_weight: u32) -> Vec<Self> {
        fn rec(rem: u32, max_part: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if rem == 0 {
                out.push(cur.clone());
                return;
            }
            for e in (1..=rem.min(max_part)).rev() {
                cur.push(e);
                rec(rem - e, e, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        for w in 0..=max_weight {
            let mut parts = Vec::new();
            rec(w, w, &mut Vec::new(), &mut parts);
            out.extend(parts.into_iter().map(|parts| Self { p, parts }));
        }
        out
    }
}

impl fmt::Display for PGroupPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.parts.iter().map(|e| format!("Z/{}^{}", self.p, e)).collect();
        write!(f, "{}", parts.join("+"))
    }
}

/// Index-based view of a small group. Element `i` has mixed-radix coordinates
/// with the first factor most significant, so index order is lexicographic.
#[derive(Clone, Debug)]
pub struct GroupTable {
    group: AbelianGroup,
    moduli: Vec<u64>,
    strides: Vec<usize>,
    order: usize,
    neg: Vec<usize>,
    add: Option<Vec<u32>>,
}

const ADD_TABLE_MAX: usize = 512;

impl GroupTable {
    pub fn with_cap(group: &AbelianGroup, cap: u64) -> Result<Self> {
        let moduli = group.small_factors(cap)?;
        let order: usize = moduli.iter().product::<u64>() as usize;
        let mut strides = vec![1usize; moduli.len()];
        for i in (0..moduli.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * moduli[i + 1] as usize;
        }
        let mut table = Self {
            group: group.clone(),
            moduli,
            strides,
            order,
            neg: Vec::new(),
            add: None,
        };
        table.neg = (0..order).map(|i| table.neg_slow(i)).collect();
        if order <= ADD_TABLE_MAX {
            let mut add = Vec::with_capacity(order * order);
            for i in 0..order {
                for j in 0..order {
                    add.push(table.add_slow(i, j) as u32);
                }
            }
            table.add = Some(add);
        }
        Ok(table)
    }

    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Least common multiple of the element orders (the last invariant factor).
    pub fn exponent(&self) -> u64 {
        self.moduli.last().copied().unwrap_or(1)
    }

    pub fn coords(&self, idx: usize) -> Vec<u64> {
        self.moduli
            .iter()
            .zip(&self.strides)
            .map(|(&d, &s)| ((idx / s) as u64) % d)
            .collect()
    }

    pub fn element(&self, idx: usize) -> GroupElement {
        GroupElement { coords: self.coords(idx) }
    }

    pub fn index_of(&self, e: &GroupElement) -> Result<usize> {
        if e.coords.len() != self.moduli.len()
            || e.coords.iter().zip(&self.moduli).any(|(&c, &d)| c >= d)
        {
            return Err(Error::NotAnElement(format!("{:?}", e.coords)));
        }
        Ok(self.index_from_coords(&e.coords))
    }

    pub(crate) fn index_from_coords(&self, coords: &[u64]) -> usize {
        coords.iter().zip(&self.strides).map(|(&c, &s)| c as usize * s).sum()
    }

    fn add_slow(&self, a: usize, b: usize) -> usize {
        let (ca, cb) = (self.coords(a), self.coords(b));
        let sum: Vec<u64> = ca.iter().zip(&cb).zip(&self.moduli).map(|((x, y), d)| (x + y) % d).collect();
        self.index_from_coords(&sum)
    }

    fn neg_slow(&self, a: usize) -> usize {
        let c: Vec<u64> = self.coords(a).iter().zip(&self.moduli).map(|(x, d)| (d - x) % d).collect();
        self.index_from_coords(&c)
    }

    #[inline]
    pub fn add(&self, a: usize, b: usize) -> usize {
        match &self.add {
            Some(t) => t[a * self.order + b] as usize,
            None => self.add_slow(a, b),
        }
    }

    #[inline]
    pub fn neg(&self, a: usize) -> usize {
        self.neg[a]
    }

    /// `k·a` for a non-negative multiplier.
    pub fn scale(&self, k: u64, a: usize) -> usize {
        let c: Vec<u64> = self
            .coords(a)
            .iter()
            .zip(&self.moduli)
            .map(|(&x, &d)| ((x as u128 * k as u128) % d as u128) as u64)
            .collect();
        self.index_from_coords(&c)
    }

    /// Additive order of element `a`.
    pub fn element_order(&self, a: usize) -> u64 {
        self.coords(a)
            .iter()
            .zip(&self.moduli)
            .map(|(&x, &d)| d / x.gcd(&d))
            .fold(1, |acc, o| acc.lcm(&o))
    }

    /// Sorted element indices of the subgroup generated by `gens`.
    pub fn generated(&self, gens: &[usize]) -> Vec<usize> {
        let mut members = vec![false; self.order];
        members[0] = true;
        let mut list = vec![0usize];
        for &g in gens {
            if members[g] {
                continue;
            }
            // Extend by cosets S + j·g until j·g falls back into S.
            let base = list.clone();
            let mut shift = g;
            while !members[shift] {
                for &s in &base {
                    let x = self.add(s, shift);
                    members[x] = true;
                    list.push(x);
                }
                shift = self.add(shift, g);
            }
        }
        list.sort_unstable();
        list
    }

    /// Abstract isomorphism type of a subgroup given by its element indices.
    pub fn structure_of(&self, elements: &[usize]) -> AbelianGroup {
        let size = elements.len() as u64;
        let orders: Vec<u64> = elements.iter().map(|&e| self.element_order(e)).collect();
        let mut parts = Vec::new();
        for (p, _) in factorize(&BigUint::from(size)) {
            let p = p.to_u64().unwrap();
            // |S[p^j]| = p^{Σ min(λ_i, j)}; successive differences count parts ≥ j.
            let mut prev_log = 0u32;
            let mut counts_ge = Vec::new();
            let mut pj = 1u64;
            loop {
                pj *= p;
                let c = orders.iter().filter(|&&o| pj % o == 0).count() as u64;
                let log = ilog(c, p);
                if log == prev_log {
                    break;
                }
                counts_ge.push(log - prev_log);
                prev_log = log;
            }
            // counts_ge[j-1] = #{i : λ_i ≥ j}
            let first = counts_ge.first().copied().unwrap_or(0);
            let mut lambda = Vec::new();
            for i in 0..first {
                lambda.push(counts_ge.iter().filter(|&&c| c > i).count() as u32);
            }
            parts.push(PGroupPartition::new(p, lambda));
        }
        AbelianGroup::from_p_parts(&parts)
    }
}

fn ilog(mut x: u64, p: u64) -> u32 {
    let mut e = 0;
    while x > 1 {
        x /= p;
        e += 1;
    }
    e
}
