//! The function `f(ν) = KL(ν‖μ)`, `μ` the pair convolution of `ν`, in the
//! coordinates `(ν(a))_{a≠0}`, its explicit first and second derivatives, the
//! Hessian `Q` at the uniform point, and the Gaussian lattice sum that the
//! Laplace method reduces to.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{Pow, ToPrimitive};
use rayon::prelude::*;

use crate::abelian::GroupTable;
use crate::divergence::{kl, pair_convolution};
use crate::error::{Error, Result};
use crate::linalg::{det_exact, IntMatrix};
use crate::moments::WindowParams;

/// Relative step for the central-difference gradient.
pub const GRADIENT_STEP: f64 = 1e-5;
/// Relative step for the central-difference Hessian.
pub const HESSIAN_STEP: f64 = 1e-4;

/// A strictly positive distribution on `G`, stored as `(ν(a))_{a≠0}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexPoint {
    coords: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let rest = 1.0 - coords.iter().sum::<f64>();
        if coords.iter().any(|&x| !(x > 0.0)) || !(rest > 0.0) {
            return Err(Error::BoundaryPoint);
        }
        Ok(Self { coords })
    }

    /// The uniform distribution `𝟙/|G|`.
    pub fn center(order: usize) -> Self {
        Self { coords: vec![1.0 / order as f64; order - 1] }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The full distribution, `ν(0)` first.
    pub fn nu(&self) -> Vec<f64> {
        let mut nu = Vec::with_capacity(self.coords.len() + 1);
        nu.push(1.0 - self.coords.iter().sum::<f64>());
        nu.extend_from_slice(&self.coords);
        nu
    }

    fn shifted(&self, i: usize, h: f64) -> Result<Self> {
        let mut c = self.coords.clone();
        c[i] += h;
        Self::new(c)
    }
}

fn check_order(table: &GroupTable, x: &SimplexPoint) {
    assert_eq!(x.coords.len() + 1, table.order(), "point has the wrong dimension");
}

pub fn f_value(table: &GroupTable, x: &SimplexPoint) -> f64 {
    check_order(table, x);
    let nu = x.nu();
    kl(&nu, &pair_convolution(table, &nu))
}

/// `∂_a f = log ν(a) − log ν(0) − log μ(a) + log μ(0)
///          − Σ_c ν(c)/μ(c) · 2(ν(−a−c) − ν(−c))`, for `a ≠ 0`.
pub fn analytic_gradient(table: &GroupTable, x: &SimplexPoint) -> Vec<f64> {
    check_order(table, x);
    let nu = x.nu();
    let mu = pair_convolution(table, &nu);
    let k = table.order();
    let v = |a: usize| nu[a];
    let neg = |a: usize| table.neg(a);
    (1..k)
        .map(|a| {
            let mut s = 0.0;
            for c in 0..k {
                s += v(c) / mu[c] * 2.0 * (v(neg(table.add(a, c))) - v(neg(c)));
            }
            v(a).ln() - v(0).ln() - mu[a].ln() + mu[0].ln() - s
        })
        .collect()
}

/// `∂_a ∂_a f`.
fn hessian_diagonal(table: &GroupTable, nu: &[f64], mu: &[f64], a: usize) -> f64 {
    let k = table.order();
    let neg = |x: usize| table.neg(x);
    let m2a = neg(table.add(a, a));
    let ma = neg(a);
    let mut tail = 0.0;
    for c in 0..k {
        let d = nu[neg(table.add(a, c))] - nu[neg(c)];
        tail += nu[c] / (mu[c] * mu[c]) * 4.0 * d * d;
    }
    1.0 / nu[a] + 1.0 / nu[0] - 2.0 * (nu[m2a] - nu[ma]) / mu[a] + 2.0 * (nu[ma] - nu[0]) / mu[0]
        - 2.0 * nu[m2a] / mu[m2a]
        + 2.0 * nu[ma] / mu[ma]
        + 2.0 * nu[ma] / mu[ma]
        - 2.0 * nu[0] / mu[0]
        - 1.0 / mu[a] * 2.0 * (nu[m2a] - nu[ma])
        + 1.0 / mu[0] * 2.0 * (nu[ma] - nu[0])
        + tail
}

/// `∂_b ∂_a f` for `a ≠ b`.
fn hessian_off_diagonal(table: &GroupTable, nu: &[f64], mu: &[f64], a: usize, b: usize) -> f64 {
    let k = table.order();
    let neg = |x: usize| table.neg(x);
    let mab = neg(table.add(a, b));
    let (ma, mb) = (neg(a), neg(b));
    let mut tail = 0.0;
    for c in 0..k {
        let da = nu[neg(table.add(a, c))] - nu[neg(c)];
        let db = nu[neg(table.add(b, c))] - nu[neg(c)];
        tail += nu[c] / (mu[c] * mu[c]) * 4.0 * da * db;
    }
    1.0 / nu[0] - 2.0 * (nu[mab] - nu[ma]) / mu[a] + 2.0 * (nu[mb] - nu[0]) / mu[0] - 2.0 * nu[mab] / mu[mab]
        + 2.0 * nu[ma] / mu[ma]
        + 2.0 * nu[mb] / mu[mb]
        - 2.0 * nu[0] / mu[0]
        - 1.0 / mu[b] * 2.0 * (nu[mab] - nu[mb])
        + 1.0 / mu[0] * 2.0 * (nu[ma] - nu[0])
        + tail
}

/// The `(|G|−1) × (|G|−1)` Hessian from the explicit second-derivative
/// formulas; the off-diagonal entries are symmetrized.
pub fn analytic_hessian(table: &GroupTable, x: &SimplexPoint) -> DMatrix<f64> {
    check_order(table, x);
    let nu = x.nu();
    let mu = pair_convolution(table, &nu);
    let d = table.order() - 1;
    let mut h = DMatrix::zeros(d, d);
    for i in 0..d {
        h[(i, i)] = hessian_diagonal(table, &nu, &mu, i + 1);
        for j in 0..i {
            let ab = hessian_off_diagonal(table, &nu, &mu, i + 1, j + 1);
            let ba = hessian_off_diagonal(table, &nu, &mu, j + 1, i + 1);
            h[(i, j)] = 0.5 * (ab + ba);
            h[(j, i)] = h[(i, j)];
        }
    }
    h
}

/// Raw `∂_b ∂_a f` from the off-diagonal formula, without symmetrizing.
pub fn mixed_partial(table: &GroupTable, x: &SimplexPoint, a: usize, b: usize) -> f64 {
    check_order(table, x);
    let nu = x.nu();
    let mu = pair_convolution(table, &nu);
    hessian_off_diagonal(table, &nu, &mu, a, b)
}

/// Central differences of `f` with step `h·max(1, |x_i|)`.
pub fn finite_difference_gradient(table: &GroupTable, x: &SimplexPoint, h: f64) -> Result<Vec<f64>> {
    (0..x.coords.len())
        .map(|i| {
            let step = h * x.coords[i].abs().max(1.0);
            let up = f_value(table, &x.shifted(i, step)?);
            let down = f_value(table, &x.shifted(i, -step)?);
            Ok((up - down) / (2.0 * step))
        })
        .collect()
}

/// Central second differences of `f`.
pub fn finite_difference_hessian(table: &GroupTable, x: &SimplexPoint, h: f64) -> Result<DMatrix<f64>> {
    let d = x.coords.len();
    let mut out = DMatrix::zeros(d, d);
    let f0 = f_value(table, x);
    for i in 0..d {
        let hi = h * x.coords[i].abs().max(1.0);
        let up = f_value(table, &x.shifted(i, hi)?);
        let down = f_value(table, &x.shifted(i, -hi)?);
        out[(i, i)] = (up - 2.0 * f0 + down) / (hi * hi);
        for j in 0..i {
            let hj = h * x.coords[j].abs().max(1.0);
            let eval = |si: f64, sj: f64| -> Result<f64> { Ok(f_value(table, &x.shifted(i, si * hi)?.shifted(j, sj * hj)?)) };
            let v = (eval(1.0, 1.0)? - eval(1.0, -1.0)? - eval(-1.0, 1.0)? + eval(-1.0, -1.0)?) / (4.0 * hi * hj);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

/// `Q`: diagonal `2|G|`, off-diagonal `|G|`, size `|G| − 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HessianQ {
    pub order: usize,
    pub matrix: IntMatrix,
}

impl HessianQ {
    pub fn det_exact(&self) -> BigInt {
        det_exact(&self.matrix).expect("square")
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        let d = self.order - 1;
        DMatrix::from_fn(d, d, |i, j| self.matrix[(i, j)].to_f64().expect("small"))
    }

    pub fn is_positive_definite(&self) -> bool {
        nalgebra::Cholesky::new(self.to_f64()).is_some()
    }

    /// `yᵀQy = |G|(‖y‖² + (Σy)²)`.
    pub fn quadratic_form(&self, y: &[f64]) -> f64 {
        let s: f64 = y.iter().sum();
        let sq: f64 = y.iter().map(|v| v * v).sum();
        self.order as f64 * (sq + s * s)
    }
}

pub fn q_matrix(order: usize) -> Result<HessianQ> {
    if order < 2 {
        return Err(Error::InvalidConfig("Q needs a group of order at least 2".into()));
    }
    let d = order - 1;
    let mut m = IntMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            m[(i, j)] = BigInt::from(if i == j { 2 * order } else { order });
        }
    }
    Ok(HessianQ { order, matrix: m })
}

/// `|G|^{|G|}`.
pub fn q_det_closed_form(order: usize) -> BigInt {
    Pow::pow(BigInt::from(order), order)
}

/// `|n f(𝟙/|G| + x) − (n/2) xᵀQx|` for a perturbation `x` of the coordinates
/// with `‖x‖∞ ≤ t_n / n`.
pub fn taylor_residual(table: &GroupTable, n: u64, x: &[f64], w: &WindowParams) -> Result<f64> {
    let k = table.order();
    assert_eq!(x.len() + 1, k, "perturbation has the wrong dimension");
    let radius = w.t_n(k, n) / n as f64;
    let norm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if norm > radius {
        return Err(Error::OutOfWindow { norm, radius });
    }
    let c = 1.0 / k as f64;
    let point = SimplexPoint::new(x.iter().map(|v| c + v).collect())?;
    let q = q_matrix(k)?;
    let nf = n as f64;
    Ok((nf * f_value(table, &point) - 0.5 * nf * q.quadratic_form(x)).abs())
}

/// `√|G|^{|G|} / √det Q`, the value of the Gaussian integral (equal to 1).
pub fn gaussian_integral(order: usize) -> f64 {
    let det = q_matrix(order).expect("order ≥ 2").det_exact().to_f64().expect("finite");
    (order as f64).sqrt().powi(order as i32) / det.sqrt()
}

/// `Σ_y √|G|^{|G|}/√(2πn)^{|G|−1} · exp(−½ yᵀQy)` over `y ∈ (ℤ/√n)^{|G|−1}`
/// with `‖y‖∞ ≤ box_radius`.
///
/// With `y = j/√n` the summand factors as `∏ w(j_i) · exp(−|G| s²/(2n))`,
/// `s = Σ j_i`, `w(j) = exp(−|G| j²/(2n))`, so the sum is an iterated
/// convolution of `w` evaluated against the `s`-weights.
pub fn gaussian_riemann_sum(order: usize, n: u64, box_radius: f64) -> Result<f64> {
    if order < 2 {
        return Err(Error::InvalidConfig("order must be at least 2".into()));
    }
    if n < 4 || !(box_radius > 0.0) {
        return Err(Error::InvalidConfig("need n ≥ 4 and a positive box radius".into()));
    }
    let nf = n as f64;
    let kf = order as f64;
    let j_max = (box_radius * nf.sqrt()).floor() as i64;
    let w: Vec<f64> = (-j_max..=j_max).map(|j| (-kf * (j * j) as f64 / (2.0 * nf)).exp()).collect();
    let dims = order - 1;
    // conv[t] is the total weight of s = t − dims·j_max.
    let mut conv = w.clone();
    for _ in 1..dims {
        let len = conv.len() + w.len() - 1;
        conv = (0..len)
            .into_par_iter()
            .map(|t| {
                let lo = t.saturating_sub(w.len() - 1);
                let hi = t.min(conv.len() - 1);
                (lo..=hi).map(|i| conv[i] * w[t - i]).sum()
            })
            .collect();
    }
    let offset = dims as i64 * j_max;
    let total: f64 = conv
        .iter()
        .enumerate()
        .map(|(t, &c)| {
            let s = t as i64 - offset;
            c * (-kf * (s * s) as f64 / (2.0 * nf)).exp()
        })
        .sum();
    let norm = kf.sqrt().powi(order as i32) / (2.0 * std::f64::consts::PI * nf).sqrt().powi(dims as i32);
    Ok(total * norm)
}
