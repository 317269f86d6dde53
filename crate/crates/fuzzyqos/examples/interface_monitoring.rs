//! Counter-based bandwidth monitoring: wrapping 32-bit octet counters,
//! EWMA smoothing, and a hysteresis trigger on utilization.

use fuzzyqos::monitor::{
    EmulatedInterface, EwmaEstimator, InterfacePoller, ThresholdTrigger, DEFAULT_EWMA_ALPHA,
    DEFAULT_HYSTERESIS_PCT,
};

fn main() -> fuzzyqos::Result<()> {
    // 10 Mbit/s interface fed by a square-wave load
    let mut iface = EmulatedInterface::new(10_000_000);
    let mut poller = InterfacePoller::new();
    let mut ewma = EwmaEstimator::new(DEFAULT_EWMA_ALPHA)?;
    let mut trigger = ThresholdTrigger::new(80.0, DEFAULT_HYSTERESIS_PCT)?;

    // first poll cycle carries no measurement
    assert!(poller.push(iface.sample(0.0))?.is_none());

    println!("   t    out kbit/s   util%   ewma%   trigger");
    for step in 1..=20 {
        let load_kbps = if (5..=12).contains(&step) { 9000.0 } else { 3000.0 };
        iface.advance(10.0, 0.0, load_kbps);
        let t = step as f64 * 10.0;
        let m = poller.push(iface.sample(t))?.expect("second cycle onwards");
        let smoothed = ewma.update(m.utilization_out_pct);
        let fired = trigger.observe(m.utilization_out_pct).is_some();
        println!(
            "{t:>5}  {:>11.0}  {:>6.1}  {:>6.1}   {}",
            m.bandwidth_out_bps / 1000.0,
            m.utilization_out_pct,
            smoothed,
            if fired { "FIRED" } else { "" }
        );
    }
    Ok(())
}
