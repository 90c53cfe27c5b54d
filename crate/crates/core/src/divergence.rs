//! Kullback–Leibler divergence and the inequalities around it, the Fourier
//! transform on a finite abelian group, and recovery of a subgroup `H` from a
//! distribution that is close to uniform on `H`.
//!
//! Logarithms are natural.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::abelian::{characters_of, AbelianGroup, GroupTable};
use crate::error::{Error, Result};

/// Absolute threshold on `|ν̂(ρ) − 1|` used when no scaled threshold is given.
pub const DEFAULT_DETECTION_THRESHOLD: f64 = 0.25;

/// Default `c` in the certificate threshold `c·‖ν − μ‖₁`.
pub const DEFAULT_CERTIFICATE_SCALE: f64 = 2.0;

/// The certificate threshold never drops below this, so an exactly
/// subgroup-uniform input still selects its characters despite rounding.
pub const CERTIFICATE_THRESHOLD_FLOOR: f64 = 1e-9;

const NORMALIZATION_TOL: f64 = 1e-12;

/// A probability vector, validated on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidConfig("probabilities must be finite and non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidConfig(format!("probabilities sum to {total}")));
        }
        Ok(Self { probs })
    }

    /// Normalizes non-negative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidConfig("weights have no mass".into()));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    /// Uniform distribution on the listed elements.
    pub fn uniform_on(order: usize, elements: &[usize]) -> Self {
        let mut probs = vec![0.0; order];
        let w = 1.0 / elements.len() as f64;
        for &a in elements {
            probs[a] = w;
        }
        Self { probs }
    }

    pub fn uniform(order: usize) -> Self {
        Self { probs: vec![1.0 / order as f64; order] }
    }

    pub fn point_mass(order: usize, a: usize) -> Self {
        let mut probs = vec![0.0; order];
        probs[a] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

impl std::ops::Deref for Distribution {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.probs
    }
}

/// `Σ ν(x) log(ν(x)/μ(x))`, with `0·log(0/·) = 0` and `+∞` when `ν` charges a
/// `μ`-null point.
pub fn kl(nu: &[f64], mu: &[f64]) -> f64 {
    assert_eq!(nu.len(), mu.len(), "distributions live on different sets");
    let mut total = 0.0;
    for (&p, &q) in nu.iter().zip(mu) {
        if p > 0.0 {
            if q <= 0.0 {
                return f64::INFINITY;
            }
            total += p * (p / q).ln();
        }
    }
    // Rounding can leave a tiny negative value for nearly equal inputs.
    total.max(0.0)
}

/// Law of `−(X₁ + X₂)` for independent `X₁, X₂ ~ ν`.
pub fn pair_convolution(table: &GroupTable, nu: &[f64]) -> Vec<f64> {
    let k = table.order();
    let mut mu = vec![0.0; k];
    for b in 0..k {
        if nu[b] == 0.0 {
            continue;
        }
        for c in 0..k {
            if nu[c] != 0.0 {
                mu[table.neg(table.add(b, c))] += nu[b] * nu[c];
            }
        }
    }
    mu
}

/// Character values `ρ(a)` as `roots[phase[ρ][a]]`, with the phase exact.
struct PhaseTable {
    phases: Vec<Vec<u64>>,
    roots: Vec<Complex64>,
}

impl PhaseTable {
    fn new(table: &GroupTable) -> Self {
        let e = table.exponent();
        let coords: Vec<Vec<u64>> = (0..table.order()).map(|a| table.coords(a)).collect();
        let phases = characters_of(table)
            .iter()
            .map(|rho| coords.iter().map(|c| rho.phase(c)).collect())
            .collect();
        let roots = (0..e)
            .map(|j| if j == 0 { Complex64::new(1.0, 0.0) } else { Complex64::from_polar(1.0, 2.0 * PI * j as f64 / e as f64) })
            .collect();
        Self { phases, roots }
    }
}

/// `ν̂(ρ) = Σ_a ρ(a) ν(a)` for every character, in character order.
pub fn fourier(table: &GroupTable, nu: &[f64]) -> Vec<Complex64> {
    let pt = PhaseTable::new(table);
    pt.phases
        .iter()
        .map(|ph| ph.iter().zip(nu).map(|(&j, &p)| pt.roots[j as usize] * p).sum())
        .collect()
}

/// `ν(a) = |G|⁻¹ Σ_ρ conj(ρ(a)) ν̂(ρ)`.
pub fn inverse_fourier(table: &GroupTable, hat: &[Complex64]) -> Vec<Complex64> {
    let pt = PhaseTable::new(table);
    let k = table.order();
    (0..k)
        .map(|a| {
            let s: Complex64 = pt.phases.iter().zip(hat).map(|(ph, &h)| pt.roots[ph[a] as usize].conj() * h).sum();
            s / k as f64
        })
        .collect()
}

/// Result of [`detect_subgroup`].
#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    /// Sorted element indices of `H`.
    pub subgroup: Vec<usize>,
    pub structure: AbelianGroup,
    /// Characters with `|ν̂(ρ) − 1| ≤ threshold`.
    pub selected: Vec<usize>,
    /// `|ν̂(ρ) − 1|` for every character.
    pub distances: Vec<f64>,
    pub threshold: f64,
}

/// `H = ⋂ ker ρ` over the characters with `|ν̂(ρ) − 1| ≤ threshold`. Kernel
/// membership is decided from exact phases.
pub fn detect_subgroup(table: &GroupTable, nu: &[f64], threshold: f64) -> Detection {
    let hat = fourier(table, nu);
    let distances: Vec<f64> = hat.iter().map(|z| (z - 1.0).norm()).collect();
    let selected: Vec<usize> = (0..table.order()).filter(|&r| distances[r] <= threshold).collect();
    let pt = PhaseTable::new(table);
    let subgroup: Vec<usize> = (0..table.order()).filter(|&a| selected.iter().all(|&r| pt.phases[r][a] == 0)).collect();
    let structure = table.structure_of(&subgroup);
    Detection { subgroup, structure, selected, distances, threshold }
}

/// `(‖ν − μ‖₁, √(2·KL(ν‖μ)))`.
pub fn pinsker_gap(nu: &[f64], mu: &[f64]) -> (f64, f64) {
    let l1 = nu.iter().zip(mu).map(|(p, q)| (p - q).abs()).sum();
    (l1, (2.0 * kl(nu, mu)).sqrt())
}

/// Divergence of the two-point laws `(ν(Y), 1 − ν(Y))` and `(μ(Y), 1 − μ(Y))`.
pub fn refinement_bound(nu: &[f64], mu: &[f64], y: &[bool]) -> f64 {
    // Both halves are summed directly; `1 − ν(Y)` would lose a small
    // complement to rounding.
    let mass = |d: &[f64], side: bool| -> f64 { d.iter().zip(y).filter(|(_, &inside)| inside == side).map(|(p, _)| p).sum() };
    kl(&[mass(nu, true), mass(nu, false)], &[mass(mu, true), mass(mu, false)])
}

/// Quantities relating the distance of `ν` from a subgroup-uniform law to
/// `KL(ν‖μ)`; the ratios are for fitting constants, not for assertions.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformityCertificate {
    pub detection: Detection,
    /// `max_a |ν_H(a) − ν(a)|`.
    pub sup_dist: f64,
    /// `ν(G ∖ H)`.
    pub tail_mass: f64,
    pub kl: f64,
    pub sqrt_kl: f64,
    /// `‖ν − μ‖₁`.
    pub delta: f64,
}

impl UniformityCertificate {
    /// `sup_dist / √kl`, or `None` when `kl` vanishes.
    pub fn sup_ratio(&self) -> Option<f64> {
        (self.sqrt_kl > 0.0).then(|| self.sup_dist / self.sqrt_kl)
    }

    /// `tail_mass / kl`, or `None` when `kl` vanishes.
    pub fn tail_ratio(&self) -> Option<f64> {
        (self.kl > 0.0).then(|| self.tail_mass / self.kl)
    }
}

pub fn uniformity_certificate(table: &GroupTable, nu: &[f64], scale: f64) -> UniformityCertificate {
    let mu = pair_convolution(table, nu);
    let (delta, _) = pinsker_gap(nu, &mu);
    let threshold = (scale * delta).max(CERTIFICATE_THRESHOLD_FLOOR);
    let detection = detect_subgroup(table, nu, threshold);
    let nu_h = Distribution::uniform_on(table.order(), &detection.subgroup);
    let sup_dist = nu.iter().zip(nu_h.probs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mut inside = vec![false; table.order()];
    for &a in &detection.subgroup {
        inside[a] = true;
    }
    let tail_mass = nu.iter().zip(&inside).filter(|(_, &i)| !i).map(|(p, _)| p).sum();
    let d = kl(nu, &mu);
    UniformityCertificate { detection, sup_dist, tail_mass, kl: d, sqrt_kl: d.sqrt(), delta }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abelian::subgroups;
    use crate::seed;
    use rand::Rng;

    fn table(f: &[u64]) -> GroupTable {
        AbelianGroup::from_factors(f).unwrap().table().unwrap()
    }

    fn random_dist<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
        let w: Vec<f64> = (0..k).map(|_| if rng.random_bool(0.1) { 0.0 } else { rng.random::<f64>() }).collect();
        let total: f64 = w.iter().sum();
        if total == 0.0 {
            return Distribution::uniform(k).probs().to_vec();
        }
        w.iter().map(|x| x / total).collect()
    }

    #[test]
    fn kl_examples() {
        let nu = [0.3, 0.7];
        assert_eq!(kl(&nu, &nu), 0.0);
        assert_eq!(kl(&[1.0, 0.0], &[0.0, 1.0]), f64::INFINITY);
        assert_eq!(kl(&[0.0, 1.0], &[0.5, 0.5]), 2f64.ln());
    }

    #[test]
    fn distribution_validation() {
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![-0.1, 1.1]).is_err());
        assert!(Distribution::new(vec![0.25; 4]).is_ok());
        assert_eq!(Distribution::from_weights(&[1.0, 3.0]).unwrap().probs(), &[0.25, 0.75]);
    }

    #[test]
    fn convolution_examples() {
        let t = table(&[5]);
        let u = Distribution::uniform(5);
        for p in pair_convolution(&t, &u) {
            assert!((p - 0.2).abs() < 1e-15);
        }
        let mu = pair_convolution(&t, &Distribution::point_mass(5, 1));
        assert_eq!(mu[3], 1.0);
    }

    #[test]
    fn convolution_matches_simulation() {
        let t = table(&[7]);
        let nu = [0.3, 0.05, 0.2, 0.1, 0.15, 0.0, 0.2];
        let mu = pair_convolution(&t, &nu);
        let mut rng = seed::rng(5);
        let draws = 100_000;
        let mut counts = [0usize; 7];
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (a, &p) in nu.iter().enumerate() {
                acc += p;
                if u < acc {
                    return a;
                }
            }
            6
        };
        for _ in 0..draws {
            let x = draw(&mut rng);
            let y = draw(&mut rng);
            counts[t.neg(t.add(x, y))] += 1;
        }
        for a in 0..7 {
            let f = counts[a] as f64 / draws as f64;
            let se = (mu[a] * (1.0 - mu[a]) / draws as f64).sqrt();
            assert!((f - mu[a]).abs() <= 3.0 * se + 1e-12, "a={a}");
        }
    }

    #[test]
    fn fourier_identities() {
        let mut rng = seed::rng(8);
        for f in [&[2u64][..], &[5], &[2, 4], &[5, 5], &[8]] {
            let t = table(f);
            let k = t.order();
            let u = fourier(&t, &Distribution::uniform(k));
            assert!((u[0] - 1.0).norm() < 1e-14);
            assert!(u[1..].iter().all(|z| z.norm() < 1e-12));
            for _ in 0..200 {
                let nu = random_dist(&mut rng, k);
                let hat = fourier(&t, &nu);
                assert!((hat[0] - 1.0).norm() < 1e-12);
                assert!(hat.iter().all(|z| z.norm() <= 1.0 + 1e-12));
                let mu_hat = fourier(&t, &pair_convolution(&t, &nu));
                for (m, h) in mu_hat.iter().zip(&hat) {
                    assert!((m - (h * h).conj()).norm() < 1e-10);
                }
                let back = inverse_fourier(&t, &hat);
                for (b, p) in back.iter().zip(&nu) {
                    assert!((b.re - p).abs() < 1e-10 && b.im.abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn inequalities_hold() {
        let mut rng = seed::rng(9);
        for f in [&[2u64][..], &[4], &[5], &[7], &[8], &[25]] {
            let k = table(f).order();
            for _ in 0..2000 {
                let nu = random_dist(&mut rng, k);
                let mu = random_dist(&mut rng, k);
                let d = kl(&nu, &mu);
                assert!(d >= 0.0);
                let (l1, bound) = pinsker_gap(&nu, &mu);
                assert!(l1 <= bound + 1e-12);
                let y: Vec<bool> = (0..k).map(|_| rng.random_bool(0.5)).collect();
                assert!(refinement_bound(&nu, &mu, &y) <= d + 1e-12);
            }
        }
    }

    #[test]
    fn pinsker_and_refinement_examples() {
        let (l1, bound) = pinsker_gap(&[0.9, 0.1], &[0.5, 0.5]);
        assert!((l1 - 0.8).abs() < 1e-15);
        let want = (2.0 * (0.9 * 1.8f64.ln() + 0.1 * 0.2f64.ln())).sqrt();
        assert!((bound - want).abs() < 1e-12);
        assert!(l1 <= bound);
        assert_eq!(pinsker_gap(&[0.5, 0.5], &[0.5, 0.5]), (0.0, 0.0));
        let nu = [0.2, 0.3, 0.5];
        let mu = [0.1, 0.6, 0.3];
        assert_eq!(refinement_bound(&nu, &mu, &[true; 3]), 0.0);
        assert_eq!(refinement_bound(&nu, &mu, &[false; 3]), 0.0);
    }

    #[test]
    fn detection_recovers_subgroups() {
        for f in [&[5u64][..], &[25], &[5, 5], &[7], &[2, 4]] {
            let t = table(f);
            for h in subgroups(&t).unwrap() {
                let nu = Distribution::uniform_on(t.order(), &h.elements);
                let d = detect_subgroup(&t, &nu, DEFAULT_DETECTION_THRESHOLD);
                assert_eq!(d.subgroup, h.elements);
                assert_eq!(d.structure, h.structure);
                let again = detect_subgroup(&t, &Distribution::uniform_on(t.order(), &d.subgroup), DEFAULT_DETECTION_THRESHOLD);
                assert_eq!(again.subgroup, d.subgroup);
            }
        }
    }

    #[test]
    fn detection_mixture_example() {
        let t = table(&[25]);
        let h: Vec<usize> = (0..25).step_by(5).collect();
        let uh = Distribution::uniform_on(25, &h);
        let nu: Vec<f64> = uh.iter().map(|p| 0.99 * p + 0.01 / 25.0).collect();
        assert_eq!(detect_subgroup(&t, &nu, 0.1).subgroup, h);
        let whole = detect_subgroup(&t, &Distribution::uniform(25), DEFAULT_DETECTION_THRESHOLD);
        assert_eq!(whole.subgroup.len(), 25);
    }

    #[test]
    fn certificate_examples() {
        let t = table(&[5, 5]);
        let h = t.generated(&[1]);
        let uh = Distribution::uniform_on(25, &h);
        let c = uniformity_certificate(&t, &uh, DEFAULT_CERTIFICATE_SCALE);
        assert_eq!(c.detection.subgroup, h);
        assert!(c.sup_dist < 1e-15 && c.tail_mass == 0.0 && c.kl < 1e-15);

        let eps = 1e-3;
        let mut nu = uh.probs().to_vec();
        for (a, p) in nu.iter_mut().enumerate() {
            *p = (1.0 - eps) * *p + if a == 7 { eps } else { 0.0 };
        }
        let c = uniformity_certificate(&t, &nu, DEFAULT_CERTIFICATE_SCALE);
        assert_eq!(c.detection.subgroup, h);
        assert!(c.sup_dist <= 2.0 * eps);
        assert!(c.sup_ratio().unwrap().is_finite());
    }
}
