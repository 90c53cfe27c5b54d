use std::f64::consts::PI;

use num_complex::Complex64;

use super::group::{AbelianGroup, GroupTable, ENUMERATION_CAP};
use crate::error::Result;

/// A character of `Z/d1 + ... + Z/dk`, `a ↦ exp(2πi Σ c_i a_i / d_i)`.
///
/// Evaluation reduces the phase to an exact fraction `k / exponent` before
/// calling the complex exponential, so kernels are decided exactly.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Character {
    pub freqs: Vec<u64>,
    moduli: Vec<u64>,
    exponent: u64,
}

impl Character {
    pub fn new(table: &GroupTable, freqs: Vec<u64>) -> Self {
        Self { freqs, moduli: table.moduli().to_vec(), exponent: table.exponent() }
    }

    pub fn is_trivial(&self) -> bool {
        self.freqs.iter().all(|&c| c == 0)
    }

    /// Phase numerator `k` with `ρ(a) = exp(2πi k / exponent)`, `k ∈ [0, exponent)`.
    pub fn phase(&self, coords: &[u64]) -> u64 {
        let e = self.exponent as u128;
        let mut k: u128 = 0;
        for ((&c, &a), &d) in self.freqs.iter().zip(coords).zip(&self.moduli) {
            k = (k + c as u128 * a as u128 % e * (self.exponent / d) as u128) % e;
        }
        k as u64
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn eval(&self, coords: &[u64]) -> Complex64 {
        let k = self.phase(coords);
        if k == 0 {
            return Complex64::new(1.0, 0.0);
        }
        let theta = 2.0 * PI * k as f64 / self.exponent as f64;
        Complex64::from_polar(1.0, theta)
    }

    pub fn in_kernel(&self, coords: &[u64]) -> bool {
        self.phase(coords) == 0
    }
}

/// Every character, indexed like the group elements (frequency vectors are
/// themselves group elements); the trivial character comes first.
pub fn characters(group: &AbelianGroup) -> Result<Vec<Character>> {
    let table = GroupTable::with_cap(group, ENUMERATION_CAP)?;
    Ok(characters_of(&table))
}

pub fn characters_of(table: &GroupTable) -> Vec<Character> {
    (0..table.order()).map(|i| Character::new(table, table.coords(i))).collect()
}

/// Dense character table, `values[ρ][a] = ρ(a)`.
pub fn character_table(table: &GroupTable) -> Vec<Vec<Complex64>> {
    let coords: Vec<Vec<u64>> = (0..table.order()).map(|a| table.coords(a)).collect();
    characters_of(table)
        .iter()
        .map(|rho| coords.iter().map(|c| rho.eval(c)).collect())
        .collect()
}
