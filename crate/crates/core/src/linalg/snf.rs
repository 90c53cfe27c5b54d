use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::matrix::IntMatrix;
use crate::abelian::AbelianGroup;
use crate::error::{Error, Result};

/// `U·A·V = S` with `U`, `V` unimodular and `S` diagonal, `d_1 | d_2 | ...`.
#[derive(Clone, Debug)]
pub struct SnfResult {
    pub u: IntMatrix,
    pub s: IntMatrix,
    pub v: IntMatrix,
    /// Nonzero diagonal entries of `S`, in divisibility order (including 1s).
    pub invariant_factors: Vec<BigUint>,
}

impl SnfResult {
    pub fn rank(&self) -> usize {
        self.invariant_factors.len()
    }
}

/// Working state of the elimination. The transform matrices are optional so
/// the cokernel path can skip the bookkeeping.
struct Elimination {
    s: Vec<Vec<BigInt>>,
    u: Option<Vec<Vec<BigInt>>>,
    v: Option<Vec<Vec<BigInt>>>,
}

fn identity_rows(n: usize) -> Vec<Vec<BigInt>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect()
}

/// `rows[dst] -= q * rows[src]`.
fn row_axpy(rows: &mut [Vec<BigInt>], dst: usize, src: usize, q: &BigInt) {
    let (d, s) = if dst < src {
        let (a, b) = rows.split_at_mut(src);
        (&mut a[dst], &b[0])
    } else {
        let (a, b) = rows.split_at_mut(dst);
        (&mut b[0], &a[src])
    };
    for (x, y) in d.iter_mut().zip(s.iter()) {
        if !y.is_zero() {
            *x -= q * y;
        }
    }
}

/// `col[dst] -= q * col[src]`.
fn col_axpy(rows: &mut [Vec<BigInt>], dst: usize, src: usize, q: &BigInt) {
    for row in rows.iter_mut() {
        if !row[src].is_zero() {
            let t = q * &row[src];
            row[dst] -= t;
        }
    }
}

fn swap_cols(rows: &mut [Vec<BigInt>], a: usize, b: usize) {
    if a != b {
        for row in rows.iter_mut() {
            row.swap(a, b);
        }
    }
}

impl Elimination {
    fn nrows(&self) -> usize {
        self.s.len()
    }

    fn ncols(&self) -> usize {
        self.s.first().map_or(0, Vec::len)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            self.s.swap(a, b);
            if let Some(u) = &mut self.u {
                u.swap(a, b);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        swap_cols(&mut self.s, a, b);
        if let Some(v) = &mut self.v {
            swap_cols(v, a, b);
        }
    }

    fn row_op(&mut self, dst: usize, src: usize, q: &BigInt) {
        row_axpy(&mut self.s, dst, src, q);
        if let Some(u) = &mut self.u {
            row_axpy(u, dst, src, q);
        }
    }

    fn col_op(&mut self, dst: usize, src: usize, q: &BigInt) {
        col_axpy(&mut self.s, dst, src, q);
        if let Some(v) = &mut self.v {
            col_axpy(v, dst, src, q);
        }
    }

    fn negate_row(&mut self, i: usize) {
        for x in self.s[i].iter_mut() {
            *x = -&*x;
        }
        if let Some(u) = &mut self.u {
            for x in u[i].iter_mut() {
                *x = -&*x;
            }
        }
    }

    /// Smallest nonzero magnitude in the trailing block, ties to the smallest
    /// (row, col) in row-major order.
    fn smallest_in_block(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize)> = None;
        for i in t..self.nrows() {
            for j in t..self.ncols() {
                let x = &self.s[i][j];
                if x.is_zero() {
                    continue;
                }
                if best.is_none_or(|(bi, bj)| x.magnitude() < self.s[bi][bj].magnitude()) {
                    best = Some((i, j));
                }
            }
        }
        best
    }

    /// Euclid on row `t` and column `t` until only the pivot survives.
    fn clear_cross(&mut self, t: usize) {
        loop {
            let pivot = self.s[t][t].clone();
            for i in t + 1..self.nrows() {
                if !self.s[i][t].is_zero() {
                    let q = self.s[i][t].div_floor(&pivot);
                    self.row_op(i, t, &q);
                }
            }
            for j in t + 1..self.ncols() {
                if !self.s[t][j].is_zero() {
                    let q = self.s[t][j].div_floor(&pivot);
                    self.col_op(j, t, &q);
                }
            }
            // Any leftover is a remainder smaller than the pivot; promote the smallest.
            let mut best: Option<(bool, usize)> = None;
            let mut best_mag: Option<BigUint> = None;
            for i in t + 1..self.nrows() {
                let m = self.s[i][t].magnitude();
                if !m.is_zero() && best_mag.as_ref().is_none_or(|b| m < b) {
                    best = Some((true, i));
                    best_mag = Some(m.clone());
                }
            }
            for j in t + 1..self.ncols() {
                let m = self.s[t][j].magnitude();
                if !m.is_zero() && best_mag.as_ref().is_none_or(|b| m < b) {
                    best = Some((false, j));
                    best_mag = Some(m.clone());
                }
            }
            match best {
                None => return,
                Some((true, i)) => self.swap_rows(t, i),
                Some((false, j)) => self.swap_cols(t, j),
            }
        }
    }

    fn run(&mut self) -> usize {
        let limit = self.nrows().min(self.ncols());
        let mut rank = 0;
        for t in 0..limit {
            let Some((i, j)) = self.smallest_in_block(t) else { break };
            self.swap_rows(t, i);
            self.swap_cols(t, j);
            loop {
                self.clear_cross(t);
                let pivot = self.s[t][t].clone();
                let offender = (t + 1..self.nrows())
                    .find(|&i| (t + 1..self.ncols()).any(|j| !self.s[i][j].is_multiple_of(&pivot)));
                match offender {
                    // Pull the offending row into row t; the next pass reduces it.
                    Some(i) => self.row_op(t, i, &BigInt::from(-1)),
                    None => break,
                }
            }
            if self.s[t][t].is_negative() {
                self.negate_row(t);
            }
            rank += 1;
        }
        rank
    }
}

fn to_matrix(rows: Vec<Vec<BigInt>>, ncols: usize) -> IntMatrix {
    let nrows = rows.len();
    IntMatrix::from_data(nrows, ncols, rows.into_iter().flatten().collect()).expect("rectangular")
}

/// Smith normal form with transforms, for any shape.
pub fn smith_normal_form(a: &IntMatrix) -> SnfResult {
    let mut e = Elimination {
        s: a.to_rows(),
        u: Some(identity_rows(a.rows())),
        v: Some(identity_rows(a.cols())),
    };
    let rank = e.run();
    let invariant_factors = (0..rank).map(|t| e.s[t][t].magnitude().clone()).collect();
    SnfResult {
        u: to_matrix(e.u.take().unwrap(), a.rows()),
        v: to_matrix(e.v.take().unwrap(), a.cols()),
        s: to_matrix(e.s, a.cols()),
        invariant_factors,
    }
}

/// Nonzero invariant factors only, without transform bookkeeping.
pub fn invariant_factors(a: &IntMatrix) -> Vec<BigUint> {
    let mut e = Elimination { s: a.to_rows(), u: None, v: None };
    let rank = e.run();
    (0..rank).map(|t| e.s[t][t].magnitude().clone()).collect()
}

fn torsion_group(factors: Vec<BigUint>) -> AbelianGroup {
    let nontrivial: Vec<BigUint> = factors.into_iter().filter(|d| !d.is_one()).collect();
    AbelianGroup::new(nontrivial).expect("SNF diagonal is a divisibility chain")
}

/// `Zⁿ / rowspan(A)` for a nonsingular square `A`; its order is `|det A|`.
pub fn cokernel(a: &IntMatrix) -> Result<AbelianGroup> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    let factors = invariant_factors(a);
    if factors.len() < a.rows() {
        return Err(Error::SingularMatrix);
    }
    Ok(torsion_group(factors))
}

/// Cokernel of an arbitrary matrix, split as `Z^free_rank ⊕ torsion`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralCokernel {
    pub free_rank: usize,
    pub torsion: AbelianGroup,
}

/// Cokernel of the row lattice for any shape: `Z^cols / rowspan(A)`.
pub fn cokernel_general(a: &IntMatrix) -> GeneralCokernel {
    let factors = invariant_factors(a);
    GeneralCokernel { free_rank: a.cols() - factors.len(), torsion: torsion_group(factors) }
}

/// Lists every way `r` fails to be a Smith normal form of `a`; empty when it
/// is one.
pub fn verify_snf(a: &IntMatrix, r: &SnfResult) -> Vec<String> {
    let mut out = Vec::new();
    match r.u.mul(a).and_then(|ua| ua.mul(&r.v)) {
        Ok(prod) if prod == r.s => {}
        _ => out.push("U·A·V differs from S".to_string()),
    }
    if !r.s.is_diagonal() {
        out.push("S is not diagonal".to_string());
    }
    for (name, m) in [("U", &r.u), ("V", &r.v)] {
        if !super::det::det_exact(m).map(|d| d.magnitude().is_one()).unwrap_or(false) {
            out.push(format!("{name} is not unimodular"));
        }
    }
    for w in r.invariant_factors.windows(2) {
        if !w[1].is_multiple_of(&w[0]) {
            out.push(format!("{} does not divide {}", w[0], w[1]));
        }
    }
    if a.is_square() {
        let det = super::det::det_exact(a).expect("square");
        let prod: BigUint = r.invariant_factors.iter().product();
        let consistent = if det.is_zero() { r.rank() < a.rows() } else { &prod == det.magnitude() };
        if !consistent {
            out.push(format!("product of invariant factors {prod} differs from |det| {}", det.magnitude()));
        }
    }
    out
}
