//! Parameter sweeps, aggregation, oracle validation, and file emission.

use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admission::AdmissionMode;
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::metrics::{binomial_se, mean, standard_error, utilization_cdf, RunStats};
use crate::oracle::{product_form_blocking, OracleSpec};
use crate::sim::run_scenario;

/// Generous budget for the exact oracle; the reference configuration uses
/// ~2.4e5 states.
const ORACLE_STATE_BUDGET: u64 = 200_000_000;

/// All runs of one (mode, rho) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub mode: AdmissionMode,
    pub rho: f64,
    pub runs: Vec<RunStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
}

/// Execute `runs` independent replications of every (mode, rho) cell.
/// Cell and run order is fixed by the configuration, so results are
/// reproducible regardless of scheduling.
pub fn run_sweep(cfg: &ScenarioConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let mut jobs = Vec::new();
    for &mode in &cfg.modes {
        for &rho in &cfg.rho {
            for r in 0..cfg.runs {
                jobs.push((mode, rho, cfg.seed + r as u64));
            }
        }
    }
    let stats: Vec<Result<RunStats>> = jobs
        .par_iter()
        .map(|&(mode, rho, seed)| run_scenario(&cfg.run_config(mode, rho, seed)?))
        .collect();

    let mut cells = Vec::new();
    let mut it = stats.into_iter();
    for &mode in &cfg.modes {
        for &rho in &cfg.rho {
            let runs: Vec<RunStats> =
                (0..cfg.runs).map(|_| it.next().unwrap()).collect::<Result<_>>()?;
            cells.push(SweepCell { mode, rho, runs });
        }
    }
    Ok(SweepResult { cells })
}

/// Aggregates of one (mode, rho) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub mode: AdmissionMode,
    pub rho: f64,
    pub runs: usize,
    pub availability_mean: f64,
    pub availability_se: f64,
    pub blocking_mean: Vec<f64>,
    pub blocking_se: Vec<f64>,
    /// Exact blocking when the mode has an analytical counterpart.
    pub oracle_blocking: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub entries: Vec<ReportEntry>,
}

/// Map the configuration onto integer-unit loss-system parameters for the
/// exact oracle. `None` for the adaptive mode, which has no product-form
/// counterpart.
pub fn oracle_spec_for(
    cfg: &ScenarioConfig,
    mode: AdmissionMode,
    rho: f64,
) -> Result<Option<OracleSpec>> {
    if mode == AdmissionMode::FrbAdaptive {
        return Ok(None);
    }
    let policy = cfg.policy_set()?;
    let mut kbps_values = vec![cfg.total_kbps];
    kbps_values.extend(cfg.bitrates_kbps.iter().copied());
    if mode == AdmissionMode::BasePolicy {
        kbps_values.extend((0..cfg.class_count()).map(|j| policy.base_kbps(j)));
    }
    let integral: Vec<u64> = kbps_values
        .iter()
        .map(|&v| {
            let r = v.round();
            if (v - r).abs() > 1e-6 || r <= 0.0 {
                Err(Error::Config(format!(
                    "oracle needs positive integral kbit/s values, got {v}"
                )))
            } else {
                Ok(r as u64)
            }
        })
        .collect::<Result<_>>()?;
    let unit = integral.iter().copied().fold(0, gcd);
    let offered: Vec<f64> = (0..cfg.class_count())
        .map(|j| rho * policy.base_kbps(j) / cfg.bitrates_kbps[j])
        .collect();
    Ok(Some(OracleSpec {
        capacity_units: integral[0] / unit,
        class_size_units: (0..cfg.class_count()).map(|j| integral[1 + j] / unit).collect(),
        class_cap_units: match mode {
            AdmissionMode::BasePolicy => Some(
                (0..cfg.class_count())
                    .map(|j| integral[1 + cfg.class_count() + j] / unit)
                    .collect(),
            ),
            _ => None,
        },
        offered_load_erlangs: offered,
    }))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn build_report(cfg: &ScenarioConfig, sweep: &SweepResult) -> Result<ScenarioReport> {
    let k = cfg.class_count();
    let mut entries = Vec::with_capacity(sweep.cells.len());
    for cell in &sweep.cells {
        let avail: Vec<f64> =
            cell.runs.iter().map(|r| r.availability()).collect::<Result<_>>()?;
        let per_run_blocking: Vec<Vec<f64>> =
            cell.runs.iter().map(|r| r.blocking_per_class()).collect::<Result<_>>()?;
        let mut blocking_mean = Vec::with_capacity(k);
        let mut blocking_se = Vec::with_capacity(k);
        for j in 0..k {
            let vals: Vec<f64> = per_run_blocking.iter().map(|b| b[j]).collect();
            blocking_mean.push(mean(&vals));
            blocking_se.push(standard_error(&vals));
        }
        let oracle_blocking = oracle_spec_for(cfg, cell.mode, cell.rho)?
            .map(|spec| product_form_blocking(&spec, ORACLE_STATE_BUDGET))
            .transpose()?;
        entries.push(ReportEntry {
            mode: cell.mode,
            rho: cell.rho,
            runs: cell.runs.len(),
            availability_mean: mean(&avail),
            availability_se: standard_error(&avail),
            blocking_mean,
            blocking_se,
            oracle_blocking,
        });
    }
    Ok(ScenarioReport { entries })
}

/// One simulated-vs-exact comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub mode: AdmissionMode,
    pub rho: f64,
    /// Zero-based class index.
    pub class: usize,
    pub simulated: f64,
    pub oracle: f64,
    /// Three standard errors of the simulated mean, floored by the binomial
    /// error under the exact probability (the empirical spread degenerates
    /// when rejections are very rare).
    pub tolerance: f64,
    pub pass: bool,
}

/// Compare every analytically tractable cell of the sweep against the exact
/// oracle.
pub fn validate_against_oracle(
    cfg: &ScenarioConfig,
    sweep: &SweepResult,
) -> Result<Vec<ValidationRow>> {
    let mut rows = Vec::new();
    for cell in &sweep.cells {
        let Some(spec) = oracle_spec_for(cfg, cell.mode, cell.rho)? else {
            continue;
        };
        let exact = product_form_blocking(&spec, ORACLE_STATE_BUDGET)?;
        let per_run: Vec<Vec<f64>> =
            cell.runs.iter().map(|r| r.blocking_per_class()).collect::<Result<_>>()?;
        for j in 0..cfg.class_count() {
            let vals: Vec<f64> = per_run.iter().map(|b| b[j]).collect();
            let simulated = mean(&vals);
            let trials = cfg.request_counts[j] * cell.runs.len() as u64;
            let se = standard_error(&vals).max(binomial_se(exact[j], trials));
            let tolerance = 3.0 * se;
            rows.push(ValidationRow {
                mode: cell.mode,
                rho: cell.rho,
                class: j,
                simulated,
                oracle: exact[j],
                tolerance,
                pass: (simulated - exact[j]).abs() <= tolerance,
            });
        }
    }
    Ok(rows)
}

/// Write report.json, blocking.csv, availability.csv, utilization_cdf.csv,
/// runs.csv, and one timeseries_<index>.csv per run into `out_dir`.
pub fn write_outputs(
    cfg: &ScenarioConfig,
    sweep: &SweepResult,
    report: &ScenarioReport,
    out_dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;

    let json = serde_json::to_string_pretty(report)?;
    std::fs::write(out_dir.join("report.json"), json)?;

    let mut blocking = String::from("mode,rho,class,blocking_mean,blocking_se,oracle\n");
    let mut availability = String::from("mode,rho,availability_mean,availability_se\n");
    for e in &report.entries {
        for j in 0..cfg.class_count() {
            let oracle = match &e.oracle_blocking {
                Some(o) => o[j].to_string(),
                None => String::new(),
            };
            blocking.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.mode,
                e.rho,
                j + 1,
                e.blocking_mean[j],
                e.blocking_se[j],
                oracle
            ));
        }
        availability.push_str(&format!(
            "{},{},{},{}\n",
            e.mode, e.rho, e.availability_mean, e.availability_se
        ));
    }
    std::fs::write(out_dir.join("blocking.csv"), blocking)?;
    std::fs::write(out_dir.join("availability.csv"), availability)?;

    let mut cdf = String::from("mode,rho,utilization,cdf\n");
    for cell in &sweep.cells {
        let samples: Vec<f64> = cell
            .runs
            .iter()
            .flat_map(|r| r.series.iter().map(|p| p.utilization))
            .collect();
        for (value, fraction) in utilization_cdf(&samples)? {
            cdf.push_str(&format!("{},{},{},{}\n", cell.mode, cell.rho, value, fraction));
        }
    }
    std::fs::write(out_dir.join("utilization_cdf.csv"), cdf)?;

    let mut index = String::from("run,mode,rho,seed\n");
    let mut run_idx = 0usize;
    for cell in &sweep.cells {
        for run in &cell.runs {
            index.push_str(&format!("{},{},{},{}\n", run_idx, run.mode, run.rho, run.seed));
            let file =
                std::fs::File::create(out_dir.join(format!("timeseries_{run_idx}.csv")))?;
            let mut w = std::io::BufWriter::new(file);
            let class_cols: Vec<String> =
                (1..=cfg.class_count()).map(|j| format!("b_{j}_kbps")).collect();
            writeln!(w, "time_s,{},total_kbps,utilization", class_cols.join(","))?;
            for p in &run.series {
                let classes: Vec<String> =
                    p.class_kbps.iter().map(|v| v.to_string()).collect();
                writeln!(
                    w,
                    "{},{},{},{}",
                    p.time_s,
                    classes.join(","),
                    p.total_kbps,
                    p.utilization
                )?;
            }
            run_idx += 1;
        }
    }
    std::fs::write(out_dir.join("runs.csv"), index)?;
    Ok(())
}
