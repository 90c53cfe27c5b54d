//! Binomial coefficients and lexicographic k-subsets of `0..n`.

/// `C(n, k)` in u64; panics on overflow.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    u64::try_from(acc).expect("binomial coefficient overflows u64")
}

/// The `rank`-th k-subset of `0..n` in lexicographic order.
pub fn unrank_combination(mut rank: u64, n: usize, k: usize) -> Vec<usize> {
    assert!(rank < binomial(n as u64, k as u64), "rank out of range");
    let mut out = Vec::with_capacity(k);
    let mut x = 0usize;
    for slot in 0..k {
        loop {
            // subsets starting with x at this slot
            let count = binomial((n - x - 1) as u64, (k - slot - 1) as u64);
            if rank < count {
                break;
            }
            rank -= count;
            x += 1;
        }
        out.push(x);
        x += 1;
    }
    out
}

pub fn rank_combination(subset: &[usize], n: usize) -> u64 {
    let k = subset.len();
    let mut rank = 0;
    let mut prev = 0usize;
    for (slot, &x) in subset.iter().enumerate() {
        for y in prev..x {
            rank += binomial((n - y - 1) as u64, (k - slot - 1) as u64);
        }
        prev = x + 1;
    }
    rank
}

/// Advances to the next k-subset in lexicographic order; false after the last.
pub fn next_combination(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    for i in (0..k).rev() {
        if subset[i] < n - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
