//! One full simulation run per admission mode at a fixed offered load, with
//! per-class blocking and overall availability.

use fuzzyqos::admission::AdmissionMode;
use fuzzyqos::config::ScenarioConfig;
use fuzzyqos::sim::run_scenario;

fn main() -> fuzzyqos::Result<()> {
    let cfg = ScenarioConfig {
        request_counts: vec![2000, 2000, 2000], // keep the example quick
        ..ScenarioConfig::default()
    };

    let rho = 0.8;
    println!("rho = {rho}, {} requests per class, seed {}\n", cfg.request_counts[0], cfg.seed);
    println!("{:<15} {:>12} {:>12} {:>12} {:>13}", "mode", "blocking 1", "blocking 2", "blocking 3", "availability");
    for mode in [
        AdmissionMode::ClassAgnostic,
        AdmissionMode::BasePolicy,
        AdmissionMode::FrbAdaptive,
    ] {
        let stats = run_scenario(&cfg.run_config(mode, rho, cfg.seed)?)?;
        let b = stats.blocking_per_class()?;
        println!(
            "{:<15} {:>12.5} {:>12.5} {:>12.5} {:>13.5}",
            mode.to_string(),
            b[0],
            b[1],
            b[2],
            stats.availability()?
        );
    }
    Ok(())
}
