use serde::{Deserialize, Serialize};

use super::types::TypeVector;
use crate::abelian::{GroupTable, Subgroup};

pub const DEFAULT_WINDOW_CONSTANT: f64 = 1.0;

/// Window sizes `t_n = 2C√(|G| n log n)` and `r_n = 4C|G| log n` for a
/// chosen constant `C`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowParams {
    pub constant: f64,
}

impl Default for WindowParams {
    fn default() -> Self {
        Self { constant: DEFAULT_WINDOW_CONSTANT }
    }
}

impl WindowParams {
    pub fn new(constant: f64) -> Self {
        Self { constant }
    }

    pub fn t_n(&self, order: usize, n: u64) -> f64 {
        let n = n as f64;
        2.0 * self.constant * (order as f64 * n * n.ln()).sqrt()
    }

    pub fn r_n(&self, order: usize, n: u64) -> f64 {
        4.0 * self.constant * order as f64 * (n as f64).ln()
    }
}

/// `u_H`: `1/|H|` on `H`, zero elsewhere.
pub fn uniform_on_subgroup(order: usize, h: &Subgroup) -> Vec<f64> {
    let mut u = vec![0.0; order];
    for &a in &h.elements {
        u[a] = 1.0 / h.order() as f64;
    }
    u
}

/// The individual conditions behind membership in `B(n, H)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowCheck {
    /// `‖n̲ − n·u_H‖∞`.
    pub sup_dist: f64,
    /// `Σ_{a∉H} n_a`.
    pub off_mass: u64,
    pub t_n: f64,
    pub r_n: f64,
    /// `m_a > 0` on the support.
    pub mu_positive: bool,
    /// The support generates `G`.
    pub generating: bool,
}

impl WindowCheck {
    /// Both window inequalities hold and `m_a > 0` on the support; says
    /// nothing about generation.
    pub fn in_window(&self) -> bool {
        self.sup_dist <= self.t_n && (self.off_mass as f64) <= self.r_n && self.mu_positive
    }

    pub fn is_member(&self) -> bool {
        self.in_window() && self.generating
    }
}

pub(crate) fn window_shape(counts: &[u64], n: u64, h_mask: &[bool], h_order: usize) -> (f64, u64) {
    let share = n as f64 / h_order as f64;
    let mut sup = 0.0f64;
    let mut off = 0u64;
    for (a, &c) in counts.iter().enumerate() {
        if h_mask[a] {
            sup = sup.max((c as f64 - share).abs());
        } else {
            sup = sup.max(c as f64);
            off += c;
        }
    }
    (sup, off)
}

pub fn window_check(table: &GroupTable, t: &TypeVector, h: &Subgroup, w: &WindowParams) -> WindowCheck {
    let (sup_dist, off_mass) = window_shape(t.counts(), t.n(), &h.mask(table.order()), h.order());
    WindowCheck {
        sup_dist,
        off_mass,
        t_n: w.t_n(table.order(), t.n()),
        r_n: w.r_n(table.order(), t.n()),
        mu_positive: t.mu_positive_on_support(),
        generating: t.is_generating(table),
    }
}

/// Whether `t ∈ B(n, H)`.
pub fn window_membership(table: &GroupTable, t: &TypeVector, h: &Subgroup, w: &WindowParams) -> bool {
    window_check(table, t, h, w).is_member()
}
