use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, ExperimentRecord, SylowRecord};
use crate::abelian::{cl_mass, AbelianGroup, PGroupPartition, CL_TRUNCATION_TOL};
use crate::ensemble::{assemble_matrix, sample_subset};
use crate::error::Result;
use crate::hypertree::HypertreeSampler;
use crate::linalg::cokernel;
use crate::seed;

/// Sylow partitions heavier than this are pooled into "other".
pub const MAX_CLASS_WEIGHT: u32 = 6;

/// Replicas computed in parallel between two writes.
const CHUNK: u64 = 256;

/// One exponent partition per configured prime; `None` is "other".
type ClassKey = Option<Vec<Vec<u32>>>;

/// Class tallies. Merging is plain addition, so the result does not depend on
/// how replicas were split up.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub primes: Vec<u64>,
    pub counts: BTreeMap<ClassKey, u64>,
    pub total: u64,
}

impl ClassCounts {
    pub fn new(primes: &[u64]) -> Self {
        Self { primes: primes.to_vec(), ..Self::default() }
    }

    pub fn add(&mut self, sylow: &[PGroupPartition]) {
        debug_assert_eq!(sylow.len(), self.primes.len());
        let key = if sylow.iter().all(|s| s.weight() <= MAX_CLASS_WEIGHT) {
            Some(sylow.iter().map(|s| s.parts.clone()).collect())
        } else {
            None
        };
        *self.counts.entry(key).or_default() += 1;
        self.total += 1;
    }

    pub fn merge(&mut self, other: &ClassCounts) {
        assert_eq!(self.primes, other.primes, "merging tallies over different primes");
        for (k, v) in &other.counts {
            *self.counts.entry(k.clone()).or_default() += v;
        }
        self.total += other.total;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusClass {
    pub label: String,
    /// Exponent partitions per prime; absent for "other".
    pub partitions: Option<Vec<Vec<u32>>>,
    pub count: u64,
    pub frequency: f64,
    pub std_error: f64,
    /// Product of Cohen–Lenstra masses (for "other": the remaining mass).
    pub reference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusReport {
    /// "matrix" or "hypertree".
    pub kind: String,
    pub n: u64,
    pub primes: Vec<u64>,
    pub replicas: u64,
    pub master_seed: u64,
    /// Every class with `Σλ ≤ 6` for each prime, then "other".
    pub classes: Vec<CensusClass>,
    /// `½ Σ |frequency − reference|` over the classes.
    pub total_variation: f64,
    pub heuristic: bool,
    pub notes: Vec<String>,
}

impl CensusReport {
    pub fn from_counts(kind: &str, n: u64, master_seed: u64, counts: &ClassCounts, notes: Vec<String>) -> Self {
        let per_prime: Vec<Vec<PGroupPartition>> =
            counts.primes.iter().map(|&p| PGroupPartition::all_up_to(p, MAX_CLASS_WEIGHT)).collect();
        let total = counts.total.max(1) as f64;
        let stats = |count: u64| {
            let f = count as f64 / total;
            (f, (f * (1.0 - f) / total).sqrt())
        };
        let combos: usize = per_prime.iter().map(|ps| ps.len()).product();
        let mut classes = Vec::with_capacity(combos + 1);
        for flat in 0..combos {
            // Mixed-radix digits of `flat`, last prime fastest.
            let mut rest = flat;
            let mut parts: Vec<&PGroupPartition> = Vec::with_capacity(per_prime.len());
            for ps in per_prime.iter().rev() {
                parts.push(&ps[rest % ps.len()]);
                rest /= ps.len();
            }
            parts.reverse();
            let key: Vec<Vec<u32>> = parts.iter().map(|s| s.parts.clone()).collect();
            let count = counts.counts.get(&Some(key.clone())).copied().unwrap_or(0);
            let (frequency, std_error) = stats(count);
            classes.push(CensusClass {
                label: parts.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" x "),
                partitions: Some(key),
                count,
                frequency,
                std_error,
                reference: parts.iter().map(|s| cl_mass(s, CL_TRUNCATION_TOL)).product(),
            });
        }
        let listed: f64 = classes.iter().map(|c| c.reference).sum();
        let other = counts.counts.get(&None).copied().unwrap_or(0);
        let (frequency, std_error) = stats(other);
        classes.push(CensusClass {
            label: "other".into(),
            partitions: None,
            count: other,
            frequency,
            std_error,
            reference: (1.0 - listed).max(0.0),
        });
        let total_variation = 0.5 * classes.iter().map(|c| (c.frequency - c.reference).abs()).sum::<f64>();
        Self {
            kind: kind.into(),
            n,
            primes: counts.primes.clone(),
            replicas: counts.total,
            master_seed,
            classes,
            total_variation: total_variation.min(1.0),
            heuristic: true,
            notes,
        }
    }

    /// The class with the given partitions, one per prime.
    pub fn class(&self, partitions: &[Vec<u32>]) -> Option<&CensusClass> {
        self.classes.iter().find(|c| c.partitions.as_deref() == Some(partitions))
    }

    /// Human-readable table of the classes that were seen or carry
    /// reference mass above `1e-4`.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} census, n = {}, primes {:?}, {} replicas, seed {}\n",
            self.kind, self.n, self.primes, self.replicas, self.master_seed
        );
        s.push_str(&format!("{:<32} {:>8} {:>10} {:>10} {:>10}\n", "class", "count", "freq", "se", "reference"));
        for c in self.classes.iter().filter(|c| c.count > 0 || c.reference > 1e-4) {
            s.push_str(&format!(
                "{:<32} {:>8} {:>10.5} {:>10.5} {:>10.5}\n",
                c.label, c.count, c.frequency, c.std_error, c.reference
            ));
        }
        s.push_str(&format!("total variation to reference: {:.5}\n", self.total_variation));
        for note in &self.notes {
            s.push_str(&format!("note: {note}\n"));
        }
        s
    }
}

fn report_path(out: &Path) -> PathBuf {
    out.with_extension("report.json")
}

/// Runs `replica` for every index, appending records in index order. Records
/// finished before a failure are flushed before the error is returned.
fn run_census<F>(cfg: &ExperimentConfig, kind: &str, notes: Vec<String>, replica: F) -> Result<CensusReport>
where
    F: Fn(u64, u64) -> Result<(ExperimentRecord, Vec<PGroupPartition>)> + Sync,
{
    cfg.validate()?;
    cfg.install(|| {
        let mut writer = match &cfg.out {
            Some(path) => Some(BufWriter::new(File::create(path)?)),
            None => None,
        };
        let mut counts = ClassCounts::new(&cfg.primes);
        let mut start = 0;
        while start < cfg.replicas {
            let end = (start + CHUNK).min(cfg.replicas);
            let results: Vec<_> = (start..end)
                .into_par_iter()
                .map(|i| {
                    let t0 = Instant::now();
                    let out = replica(i, seed::derive_seed(cfg.master_seed, i));
                    out.map(|(mut rec, sylow)| {
                        if cfg.record_wall_time {
                            rec.wall_time_ms = Some(t0.elapsed().as_secs_f64() * 1e3);
                        }
                        (rec, sylow)
                    })
                })
                .collect();
            for r in results {
                match r {
                    Ok((rec, sylow)) => {
                        if let Some(w) = writer.as_mut() {
                            serde_json::to_writer(&mut *w, &rec)?;
                            w.write_all(b"\n")?;
                        }
                        counts.add(&sylow);
                    }
                    Err(e) => {
                        if let Some(w) = writer.as_mut() {
                            w.flush()?;
                        }
                        return Err(e);
                    }
                }
            }
            if let Some(w) = writer.as_mut() {
                w.flush()?;
            }
            start = end;
        }
        let report = CensusReport::from_counts(kind, cfg.n[0], cfg.master_seed, &counts, notes);
        if let Some(path) = &cfg.out {
            let mut f = BufWriter::new(File::create(report_path(path))?);
            serde_json::to_writer_pretty(&mut f, &report)?;
            f.write_all(b"\n")?;
            f.flush()?;
        }
        Ok(report)
    })?
}

fn record(replica: u64, seed: u64, n: u64, digest: String, group: &AbelianGroup, primes: &[u64], resamples: u32) -> (ExperimentRecord, Vec<PGroupPartition>) {
    let sylow: Vec<PGroupPartition> = primes.iter().map(|&p| group.sylow(p)).collect();
    let rec = ExperimentRecord {
        replica,
        seed,
        n,
        subset_digest: digest,
        det: group.order().to_string(),
        invariant_factors: group.factors().iter().map(|d| d.to_string()).collect(),
        sylow: sylow.iter().map(SylowRecord::from).collect(),
        resamples,
        wall_time_ms: None,
    };
    (rec, sylow)
}

/// Samples `A_n` for each replica and tallies the joint Sylow classes of
/// `cok A_n` at the configured primes.
pub fn run_sylow_census(cfg: &ExperimentConfig) -> Result<CensusReport> {
    let notes = vec![
        "heuristic: finite-n frequencies compared with limiting Cohen–Lenstra masses; no convergence rate is known".into(),
        format!("classes with a Sylow partition of weight above {MAX_CLASS_WEIGHT} are pooled as \"other\""),
    ];
    let n = cfg.n.first().copied().unwrap_or(0);
    run_census(cfg, "matrix", notes, |i, s| {
        let subset = sample_subset(n as usize, s)?;
        let group = cokernel(&assemble_matrix(&subset))?;
        Ok(record(i, s, n, subset.digest(), &group, &cfg.primes, subset.resamples))
    })
}

/// The same census over `H₁(C_n)`. The comparison is reported only.
pub fn run_hypertree_census(cfg: &ExperimentConfig) -> Result<CensusReport> {
    let mut notes = vec![
        "reported only: no theorem predicts these frequencies at finite n".to_string(),
        format!("classes with a Sylow partition of weight above {MAX_CLASS_WEIGHT} are pooled as \"other\""),
    ];
    if cfg.primes.contains(&2) {
        notes.push("known false: for p = 2 the Cohen–Lenstra prediction does not hold for these complexes".into());
    }
    cfg.validate()?;
    let n = cfg.n[0];
    let sampler = HypertreeSampler::new(n as usize)?;
    run_census(cfg, "hypertree", notes, |i, s| {
        let h = sampler.sample(s)?;
        let group = AbelianGroup::new(h.invariant_factors.clone())?;
        Ok(record(i, s, n, h.digest(), &group, &cfg.primes, h.resamples))
    })
}
