use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::matrix::IntMatrix;
use crate::error::{Error, Result};

/// Exact determinant by fraction-free (Bareiss) elimination with row pivoting.
pub fn det_exact(a: &IntMatrix) -> Result<BigInt> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    Ok(bareiss(a.to_rows()))
}

pub(crate) fn bareiss(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut negate = false;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(k, i);
                    negate = !negate;
                }
                None => return BigInt::zero(),
            }
        }
        let (top, bottom) = m.split_at_mut(k + 1);
        let pivot_row = &top[k];
        let pivot = &pivot_row[k];
        for row in bottom.iter_mut() {
            let lead = row[k].clone();
            for j in k + 1..n {
                let v = &row[j] * pivot - &lead * &pivot_row[j];
                row[j] = v / &prev;
            }
            row[k] = BigInt::zero();
        }
        prev = pivot.clone();
    }
    let d = m[n - 1][n - 1].clone();
    if negate {
        -d
    } else {
        d
    }
}

/// Bareiss on machine integers with overflow detection; `None` means the
/// caller should fall back to [`det_exact`].
pub fn det_i128(entries: &[i128], n: usize) -> Option<i128> {
    debug_assert_eq!(entries.len(), n * n);
    if n == 0 {
        return Some(1);
    }
    let mut m = entries.to_vec();
    let mut negate = false;
    let mut prev: i128 = 1;
    for k in 0..n - 1 {
        if m[k * n + k] == 0 {
            let Some(i) = (k + 1..n).find(|&i| m[i * n + k] != 0) else {
                return Some(0);
            };
            for j in 0..n {
                m.swap(k * n + j, i * n + j);
            }
            negate = !negate;
        }
        let pivot = m[k * n + k];
        for i in k + 1..n {
            let lead = m[i * n + k];
            for j in k + 1..n {
                let v = m[i * n + j].checked_mul(pivot)?.checked_sub(lead.checked_mul(m[k * n + j])?)?;
                m[i * n + j] = v / prev;
            }
            m[i * n + k] = 0;
        }
        prev = pivot;
    }
    let d = m[n * n - 1];
    Some(if negate { -d } else { d })
}

/// `det(A) mod p` for a prime `p < 2^63` by Gaussian elimination over `F_p`.
pub fn det_mod(a: &IntMatrix, p: u64) -> Result<u64> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    let n = a.rows();
    let bp = BigInt::from(p);
    let mut m: Vec<u64> = a
        .entries()
        .iter()
        .map(|x| {
            let r = x % &bp;
            let r = if r < BigInt::zero() { r + &bp } else { r };
            u64::try_from(r).expect("reduced residue fits")
        })
        .collect();
    let mulmod = |x: u64, y: u64| ((x as u128 * y as u128) % p as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = mulmod(r, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        r
    };
    let mut det = 1u64;
    for k in 0..n {
        let Some(piv) = (k..n).find(|&i| m[i * n + k] != 0) else { return Ok(0) };
        if piv != k {
            for j in 0..n {
                m.swap(k * n + j, piv * n + j);
            }
            det = (p - det) % p;
        }
        let pivot = m[k * n + k];
        det = mulmod(det, pivot);
        let inv = powmod(pivot, p - 2);
        for i in k + 1..n {
            let f = mulmod(m[i * n + k], inv);
            if f == 0 {
                continue;
            }
            for j in k..n {
                let sub = mulmod(f, m[k * n + j]);
                m[i * n + j] = (m[i * n + j] + p - sub) % p;
            }
        }
    }
    Ok(det)
}

/// Exact `det(AᵀA)`.
pub fn gram_det(a: &IntMatrix) -> BigInt {
    bareiss(a.gram().to_rows())
}
