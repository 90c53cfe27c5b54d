use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};

use cokernel_lab::harness::{
    run_diagnostics, run_hypertree_census, run_moment_scan, run_sylow_census, taylor_fit, ExperimentConfig, Mutation, Subcommand,
};
use cokernel_lab::moments::WindowParams;
use cokernel_lab::{AbelianGroup, Error};

const EXIT_SUITE_FAILURE: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_INVALID_CONFIG: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "cokernel-lab", version, about = "Cokernels of determinantally biased random integer matrices and 2-hypertrees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand, Debug)]
enum Command {
    /// Sylow census of cok(A_n) against Cohen–Lenstra masses.
    Census(Common),
    /// Sylow census of H_1 of random 2-hypertrees (reported only).
    HypertreeCensus(Common),
    /// Exact surjection moments, window decomposition and Monte Carlo estimates.
    MomentScan(Common),
    /// Runs every identity, inequality and oracle suite.
    Diagnostics(Common),
    /// Derivatives, Hessian, det Q and lattice sum for one group.
    LaplaceCheck(Common),
    /// Divergence inequalities, Fourier identity and subgroup detection for one group.
    DivergenceCheck(Common),
    /// Kalai's identity and det(I_n I_n^T) by enumeration.
    KalaiCheck(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Matrix size; a comma-separated grid for moment-scan and kalai-check.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<u64>>,
    /// Invariant factors of G, comma-separated (empty for the trivial group).
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    group: Option<Vec<u64>>,
    /// Primes for the Sylow census, comma-separated.
    #[arg(long, value_delimiter = ',')]
    primes: Option<Vec<u64>>,
    #[arg(long)]
    replicas: Option<u64>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// JSONL records (censuses) or CSV table (moment-scan).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    window_constant: Option<f64>,
    /// Largest number of types a moment sum may enumerate.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long, env = "COKERNEL_LAB_THREADS")]
    threads: Option<usize>,
    /// Rational instead of log-space moment sums.
    #[arg(long)]
    exact: bool,
    /// Adds per-replica wall time to census records.
    #[arg(long)]
    wall_time: bool,
    /// Injects a known fault so the diagnostics can be seen to fail.
    #[arg(long, value_enum, hide = true)]
    inject_fault: Option<Fault>,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum Fault {
    FlipMomentOffDiagonal,
}

impl Command {
    fn parts(&self) -> (Subcommand, &Common) {
        match self {
            Command::Census(c) => (Subcommand::Census, c),
            Command::HypertreeCensus(c) => (Subcommand::HypertreeCensus, c),
            Command::MomentScan(c) => (Subcommand::MomentScan, c),
            Command::Diagnostics(c) => (Subcommand::Diagnostics, c),
            Command::LaplaceCheck(c) => (Subcommand::LaplaceCheck, c),
            Command::DivergenceCheck(c) => (Subcommand::DivergenceCheck, c),
            Command::KalaiCheck(c) => (Subcommand::KalaiCheck, c),
        }
    }
}

fn config(sub: Subcommand, c: &Common) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(sub);
    if let Some(n) = &c.n {
        cfg.n = n.clone();
    }
    if let Some(g) = &c.group {
        cfg.group = g.clone();
    }
    if let Some(p) = &c.primes {
        cfg.primes = p.clone();
    }
    if let Some(r) = c.replicas {
        cfg.replicas = r;
    }
    if let Some(s) = c.seed {
        cfg.master_seed = s;
    }
    cfg.out = c.out.clone();
    if let Some(w) = c.window_constant {
        cfg.window_constant = w;
    }
    if let Some(b) = c.budget {
        cfg.budget = b;
    }
    cfg.threads = c.threads;
    cfg.exact = c.exact;
    cfg.record_wall_time = c.wall_time;
    cfg.mutation = c.inject_fault.map(|Fault::FlipMomentOffDiagonal| Mutation::FlipMomentOffDiagonal);
    cfg
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_) | Error::Parse(_) | Error::InvalidFactor(_) | Error::NonDivisibleChain(..) | Error::GroupTooLarge { .. } => {
            EXIT_INVALID_CONFIG
        }
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        _ => 1,
    }
}

fn run(sub: Subcommand, cfg: &ExperimentConfig) -> Result<u8, Error> {
    let mut stdout = std::io::stdout().lock();
    match sub {
        Subcommand::Census => {
            let report = run_sylow_census(cfg)?;
            write!(stdout, "{}", report.summary())?;
        }
        Subcommand::HypertreeCensus => {
            let report = run_hypertree_census(cfg)?;
            write!(stdout, "{}", report.summary())?;
        }
        Subcommand::MomentScan => {
            let report = run_moment_scan(cfg)?;
            if cfg.out.is_none() {
                write!(stdout, "{}", report.to_csv()?)?;
            } else {
                for row in &report.rows {
                    match row.exact_moment {
                        Some(e) => writeln!(stdout, "n = {:>3}: exact {e:.6}, monte carlo {:.6} ± {:.6}", row.n, row.mc_estimate, row.mc_std_error)?,
                        None => writeln!(stdout, "n = {:>3}: skipped ({})", row.n, row.note)?,
                    }
                }
            }
            if report.budget_exceeded() {
                return Ok(EXIT_BUDGET);
            }
        }
        Subcommand::Diagnostics | Subcommand::LaplaceCheck | Subcommand::DivergenceCheck | Subcommand::KalaiCheck => {
            let report = run_diagnostics(cfg)?;
            write!(stdout, "{}", report.summary())?;
            if sub == Subcommand::LaplaceCheck {
                let table = AbelianGroup::from_factors(&cfg.group)?.table()?;
                let fits = taylor_fit(&table, &[100_000, 1_000_000, 10_000_000], &WindowParams::new(cfg.window_constant))?;
                writeln!(stdout, "quadratic-approximation residual at the window edge (reported, not asserted):")?;
                for f in fits {
                    writeln!(stdout, "  n = {:>9}: radius {:.3e}, residual {:.3e}, fitted constant {:.4}", f.n, f.radius, f.residual, f.fitted_constant)?;
                }
            }
            if !report.all_passed() {
                return Ok(EXIT_SUITE_FAILURE);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (sub, common) = cli.command.parts();
    let cfg = config(sub, common);
    match run(sub, &cfg) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
