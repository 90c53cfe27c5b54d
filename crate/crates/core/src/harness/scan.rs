use std::fs::File;
use std::io::{BufWriter, Write};

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use super::ExperimentConfig;
use crate::abelian::{sur_count, subgroups, AbelianGroup};
use crate::ensemble::{assemble_matrix, sample_subset};
use crate::error::{Error, Result};
use crate::linalg::cokernel;
use crate::moments::{exact_sur_moment_rational, window_decomposition_report, WindowParams};
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentScanRow {
    pub n: u64,
    /// `E|Sur(cok A_n, G)|` from the type sum; absent when over budget.
    pub exact_moment: Option<f64>,
    /// The part of the type sum outside every window.
    pub residual: Option<f64>,
    /// Window sums, one per subgroup.
    pub per_subgroup: Vec<f64>,
    /// Mean of `|Sur(cok A_n, G)|` over the sampled replicas.
    pub mc_estimate: f64,
    pub mc_std_error: f64,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentScanReport {
    pub group: String,
    pub subgroups: Vec<String>,
    pub window_constant: f64,
    pub exact: bool,
    pub replicas: u64,
    pub rows: Vec<MomentScanRow>,
}

impl MomentScanReport {
    /// Rows whose type sum was skipped because of the budget.
    pub fn budget_exceeded(&self) -> bool {
        self.rows.iter().any(|r| r.exact_moment.is_none())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = ["n", "group", "exact_moment", "residual"].iter().map(|s| s.to_string()).collect();
        header.extend(self.subgroups.iter().map(|h| format!("window[{h}]")));
        header.extend(["mc_estimate", "mc_std_error", "note"].iter().map(|s| s.to_string()));
        let csv_err = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record(&header).map_err(csv_err)?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
        for r in &self.rows {
            let mut rec = vec![r.n.to_string(), self.group.clone(), opt(r.exact_moment), opt(r.residual)];
            if r.per_subgroup.is_empty() {
                rec.extend(self.subgroups.iter().map(|_| String::new()));
            } else {
                rec.extend(r.per_subgroup.iter().map(|v| format!("{v:.12e}")));
            }
            rec.push(format!("{:.12e}", r.mc_estimate));
            rec.push(format!("{:.12e}", r.mc_std_error));
            rec.push(r.note.clone());
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

/// Mean and standard error of `|Sur(cok A_n, G)|` over seeded replicas.
fn monte_carlo(n: u64, group: &AbelianGroup, replicas: u64, row_seed: u64) -> Result<(f64, f64)> {
    let values: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let s = sample_subset(n as usize, seed::derive_seed(row_seed, i))?;
            let cok = cokernel(&assemble_matrix(&s))?;
            Ok(sur_count(&cok, group)?.to_f64().unwrap_or(f64::INFINITY))
        })
        .collect::<Result<_>>()?;
    let r = replicas as f64;
    let mean = values.iter().sum::<f64>() / r;
    let var = if replicas > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0) } else { 0.0 };
    Ok((mean, (var / r).sqrt()))
}

/// For each `n` of the grid: the type sum, its window decomposition and a
/// Monte Carlo estimate. Rows over budget keep only the Monte Carlo columns.
pub fn run_moment_scan(cfg: &ExperimentConfig) -> Result<MomentScanReport> {
    cfg.validate()?;
    let group = AbelianGroup::from_factors(&cfg.group)?;
    let table = group.table()?;
    let subs = subgroups(&table)?;
    let w = WindowParams::new(cfg.window_constant);
    let report = cfg.install(|| -> Result<MomentScanReport> {
        let mut rows = Vec::new();
        for &n in &cfg.n {
            let (mc_estimate, mc_std_error) = monte_carlo(n, &group, cfg.replicas, seed::derive_seed(cfg.master_seed, n))?;
            let row = match window_decomposition_report(&table, n, w, cfg.budget) {
                Ok(scan) => {
                    let exact_moment = if cfg.exact {
                        exact_sur_moment_rational(&table, n, cfg.budget)?.to_f64().unwrap_or(f64::NAN)
                    } else {
                        scan.total
                    };
                    MomentScanRow {
                        n,
                        exact_moment: Some(exact_moment),
                        residual: Some(scan.residual),
                        per_subgroup: scan.per_subgroup,
                        mc_estimate,
                        mc_std_error,
                        note: String::new(),
                    }
                }
                Err(e @ Error::BudgetExceeded { .. }) => MomentScanRow {
                    n,
                    exact_moment: None,
                    residual: None,
                    per_subgroup: Vec::new(),
                    mc_estimate,
                    mc_std_error,
                    note: e.to_string(),
                },
                Err(e) => return Err(e),
            };
            rows.push(row);
        }
        Ok(MomentScanReport {
            group: group.to_string(),
            subgroups: subs.iter().map(|h| h.structure.to_string()).collect(),
            window_constant: cfg.window_constant,
            exact: cfg.exact,
            replicas: cfg.replicas,
            rows,
        })
    })??;
    if let Some(path) = &cfg.out {
        let mut f = BufWriter::new(File::create(path)?);
        f.write_all(report.to_csv()?.as_bytes())?;
        f.flush()?;
    }
    Ok(report)
}
