//! Command-line front end over the library: single runs, parameter sweeps,
//! oracle validation, the scripted congestion scenario, and plot-data
//! emission.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fuzzyqos::admission::AdmissionMode;
use fuzzyqos::config::ScenarioConfig;
use fuzzyqos::error::Result;
use fuzzyqos::sim::{run_adaptive_marking, AdaptiveMarkingConfig};
use fuzzyqos::sweep::{build_report, run_sweep, validate_against_oracle, write_outputs};

#[derive(Parser)]
#[command(name = "qostool", about = "Adaptive QoS admission-control toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Scenario configuration (JSON); built-in defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Offered-load factor override (repeatable).
    #[arg(long, value_delimiter = ',')]
    rho: Vec<f64>,
    /// Admission mode override (repeatable).
    #[arg(long, value_delimiter = ',')]
    mode: Vec<AdmissionMode>,
    /// Runs per (mode, rho) cell.
    #[arg(long)]
    runs: Option<u32>,
    /// Fuzzy rule file (normalized template).
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Runtime QoS policy file.
    #[arg(long)]
    policies: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one run per (mode, rho) cell and write its outputs.
    Run(CommonOpts),
    /// Execute the full multi-seed sweep and write aggregated outputs.
    Sweep(CommonOpts),
    /// Compare simulated blocking against the exact oracle; exit nonzero on
    /// disagreement.
    Validate(CommonOpts),
    /// Scripted congestion scenario: utilization-triggered expedited marking
    /// of a test flow under ramping background load.
    #[command(name = "scenario-5-3-2")]
    Scenario532(CommonOpts),
    /// Emit every CSV series the standard plots are drawn from.
    EmitPlots(CommonOpts),
}

fn load_config(opts: &CommonOpts) -> Result<ScenarioConfig> {
    let mut cfg = match &opts.config {
        Some(path) => ScenarioConfig::from_file(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if !opts.rho.is_empty() {
        cfg.rho = opts.rho.clone();
    }
    if !opts.mode.is_empty() {
        cfg.modes = opts.mode.clone();
    }
    if let Some(runs) = opts.runs {
        cfg.runs = runs;
    }
    if opts.rules.is_some() {
        cfg.rule_file = opts.rules.clone();
    }
    if opts.policies.is_some() {
        cfg.policy_file = opts.policies.clone();
    }
    cfg.validate()?;
    // fail fast on unreadable auxiliary files
    cfg.load_rule_table()?;
    cfg.load_policy_rules()?;
    Ok(cfg)
}

fn sweep_and_write(cfg: &ScenarioConfig, out: &std::path::Path) -> Result<()> {
    let sweep = run_sweep(cfg)?;
    let report = build_report(cfg, &sweep)?;
    write_outputs(cfg, &sweep, &report, out)?;
    for e in &report.entries {
        println!(
            "mode={} rho={} runs={} availability={:.4} blocking={:?}",
            e.mode, e.rho, e.runs, e.availability_mean, e.blocking_mean
        );
    }
    println!("outputs written to {}", out.display());
    Ok(())
}

fn cmd_validate(cfg: &ScenarioConfig) -> Result<bool> {
    let sweep = run_sweep(cfg)?;
    let rows = validate_against_oracle(cfg, &sweep)?;
    if rows.is_empty() {
        println!("no analytically tractable cells in this configuration");
        return Ok(false);
    }
    let mut ok = true;
    for r in &rows {
        println!(
            "{} mode={} rho={} class={} simulated={:.6e} oracle={:.6e} tolerance={:.6e}",
            if r.pass { "PASS" } else { "FAIL" },
            r.mode,
            r.rho,
            r.class + 1,
            r.simulated,
            r.oracle,
            r.tolerance
        );
        ok &= r.pass;
    }
    Ok(ok)
}

fn cmd_scenario(out: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    for (enabled, tag) in [(true, "adaptive"), (false, "static")] {
        let cfg = AdaptiveMarkingConfig { policy_enabled: enabled, ..Default::default() };
        let report = run_adaptive_marking(&cfg)?;
        let mut csv = String::from(
            "time_s,background_demand_kbps,test_flow_kbps,background_kbps,utilization_pct,expedited\n",
        );
        for p in &report.points {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                p.time_s,
                p.background_demand_kbps,
                p.test_flow_kbps,
                p.background_kbps,
                p.utilization_pct,
                p.expedited
            ));
        }
        std::fs::write(out.join(format!("marking_{tag}.csv")), csv)?;
        std::fs::write(
            out.join(format!("marking_{tag}.json")),
            serde_json::to_string_pretty(&report).map_err(fuzzyqos::Error::from)?,
        )?;
        match report.trigger_time_s {
            Some(t) => println!("[{tag}] trigger fired at t={t} s"),
            None => println!("[{tag}] trigger did not fire"),
        }
        let last = report.points.last().unwrap();
        println!(
            "[{tag}] final test-flow throughput: {:.1} of {:.1} kbit/s",
            last.test_flow_kbps, report.nominal_kbps
        );
    }
    println!("scenario outputs written to {}", out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(opts) => {
            let mut cfg = load_config(&opts)?;
            cfg.runs = 1;
            sweep_and_write(&cfg, &opts.out)?;
            Ok(true)
        }
        Command::Sweep(opts) => {
            let cfg = load_config(&opts)?;
            sweep_and_write(&cfg, &opts.out)?;
            Ok(true)
        }
        Command::Validate(opts) => {
            let cfg = load_config(&opts)?;
            cmd_validate(&cfg)
        }
        Command::Scenario532(opts) => {
            cmd_scenario(&opts.out)?;
            Ok(true)
        }
        Command::EmitPlots(opts) => {
            let cfg = load_config(&opts)?;
            sweep_and_write(&cfg, &opts.out)?;
            cmd_scenario(&opts.out)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
