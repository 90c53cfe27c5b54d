//! Seeded, parallel experiment runs: Sylow censuses of `cok A_n` and of
//! `H₁(C_n)`, moment scans, and the diagnostics suites. Every output is a
//! pure function of the configuration, whatever the worker count.

mod census;
mod diagnostics;
mod scan;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::abelian::PGroupPartition;
use crate::error::{Error, Result};
use crate::moments::{DEFAULT_BUDGET, DEFAULT_WINDOW_CONSTANT};

pub use census::{run_hypertree_census, run_sylow_census, CensusClass, CensusReport, ClassCounts, MAX_CLASS_WEIGHT};
pub use diagnostics::{
    divergence_suite, fixed_n_formula_suite, hypertree_suite, laplace_suite, run_diagnostics, taylor_fit, DiagnosticsReport,
    Mutation, SuiteReport, TaylorFit,
};
pub use scan::{run_moment_scan, MomentScanReport, MomentScanRow};

pub const DEFAULT_MASTER_SEED: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Census,
    HypertreeCensus,
    MomentScan,
    Diagnostics,
    LaplaceCheck,
    DivergenceCheck,
    KalaiCheck,
}

/// Tolerances used by the desk-scale checks. None of them come with a proven
/// convergence rate, so reports flag them as heuristic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Monte Carlo moment estimates must lie within this many standard errors.
    pub mc_standard_errors: f64,
    pub fd_gradient: f64,
    pub fd_hessian: f64,
    pub center_gradient: f64,
    pub center_hessian: f64,
    pub riemann: f64,
    pub inequality_slack: f64,
    pub fourier: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            mc_standard_errors: 3.0,
            fd_gradient: 1e-6,
            fd_hessian: 1e-4,
            center_gradient: 1e-12,
            center_hessian: 1e-9,
            riemann: 1e-2,
            inequality_slack: 1e-12,
            fourier: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub subcommand: Subcommand,
    /// One size for censuses; the grid for moment scans.
    pub n: Vec<u64>,
    /// Invariant factors of `G`; empty means the trivial group.
    pub group: Vec<u64>,
    pub primes: Vec<u64>,
    pub replicas: u64,
    pub master_seed: u64,
    pub out: Option<PathBuf>,
    pub window_constant: f64,
    pub budget: u64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Rational rather than log-space moment sums.
    pub exact: bool,
    pub tolerances: Tolerances,
    /// Deliberate fault for checking that the diagnostics notice it.
    pub mutation: Option<Mutation>,
    /// Adds per-replica wall time to the records, which makes them differ
    /// between runs.
    pub record_wall_time: bool,
}

impl ExperimentConfig {
    pub fn new(subcommand: Subcommand) -> Self {
        let (n, group, primes, replicas) = match subcommand {
            Subcommand::Census => (vec![45], vec![], vec![5], 2000),
            Subcommand::HypertreeCensus => (vec![10], vec![], vec![2], 1000),
            Subcommand::MomentScan => (vec![10, 20, 40, 80], vec![5], vec![], 2000),
            Subcommand::KalaiCheck => (vec![4, 5, 6], vec![], vec![], 1),
            Subcommand::Diagnostics | Subcommand::LaplaceCheck | Subcommand::DivergenceCheck => (vec![], vec![5], vec![], 1000),
        };
        Self {
            subcommand,
            n,
            group,
            primes,
            replicas,
            master_seed: DEFAULT_MASTER_SEED,
            out: None,
            window_constant: DEFAULT_WINDOW_CONSTANT,
            budget: DEFAULT_BUDGET,
            threads: None,
            exact: false,
            tolerances: Tolerances::default(),
            mutation: None,
            record_wall_time: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.replicas == 0 {
            return bad("replicas must be positive".into());
        }
        if self.n.contains(&0) {
            return bad("n must be positive".into());
        }
        if !(self.window_constant > 0.0) {
            return bad("window constant must be positive".into());
        }
        if self.budget == 0 {
            return bad("budget must be positive".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        if let Some(&d) = self.group.iter().find(|&&d| d < 2) {
            return bad(format!("invariant factor {d} is smaller than 2"));
        }
        if let Some(&p) = self.primes.iter().find(|&&p| !is_prime(p)) {
            return bad(format!("{p} is not prime"));
        }
        let single_n = |lo: u64, hi: u64| -> Result<()> {
            match self.n.as_slice() {
                [n] if (lo..=hi).contains(n) => Ok(()),
                _ => Err(Error::InvalidConfig(format!("expected a single n in [{lo}, {hi}], got {:?}", self.n))),
            }
        };
        match self.subcommand {
            Subcommand::Census => {
                single_n(1, 80)?;
                if self.primes.is_empty() {
                    return bad("census needs at least one prime".into());
                }
                if let Some(&p) = self.primes.iter().find(|&&p| p < 5) {
                    return bad(format!("census primes must be at least 5, got {p}"));
                }
            }
            Subcommand::HypertreeCensus => {
                single_n(3, crate::hypertree::MAX_SAMPLER_N as u64)?;
                if self.primes.is_empty() {
                    return bad("census needs at least one prime".into());
                }
            }
            Subcommand::MomentScan => {
                if self.n.is_empty() {
                    return bad("moment scan needs at least one n".into());
                }
                if self.n.iter().any(|&n| n > 80) {
                    return bad("moment scan samples A_n, so n must be at most 80".into());
                }
            }
            Subcommand::KalaiCheck => {
                if self.n.is_empty() || self.n.iter().any(|&n| n < 3) {
                    return bad("kalai-check needs n ≥ 3".into());
                }
            }
            Subcommand::LaplaceCheck | Subcommand::DivergenceCheck => {
                if self.group.is_empty() {
                    return bad("need a nontrivial group".into());
                }
            }
            Subcommand::Diagnostics => {}
        }
        Ok(())
    }

    /// Runs `f` on a pool with the configured number of threads.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        match self.threads {
            None => Ok(f()),
            Some(t) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build()
                    .map_err(|e| Error::InvalidConfig(format!("cannot build thread pool: {e}")))?;
                Ok(pool.install(f))
            }
        }
    }
}

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SylowRecord {
    pub p: u64,
    pub partition: Vec<u32>,
}

impl From<&PGroupPartition> for SylowRecord {
    fn from(s: &PGroupPartition) -> Self {
        Self { p: s.p, partition: s.parts.clone() }
    }
}

/// One line of census output. Matrix and hypertree censuses share it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub replica: u64,
    pub seed: u64,
    pub n: u64,
    pub subset_digest: String,
    /// `|det|`, i.e. the order of the cokernel, in decimal.
    pub det: String,
    pub invariant_factors: Vec<String>,
    pub sylow: Vec<SylowRecord>,
    pub resamples: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl ExperimentRecord {
    pub fn sylow_partitions(&self) -> Vec<PGroupPartition> {
        self.sylow.iter().map(|s| PGroupPartition::new(s.p, s.partition.clone())).collect()
    }
}
