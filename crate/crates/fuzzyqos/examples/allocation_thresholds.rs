//! Adaptive per-class thresholds from the fuzzy allocator.
//!
//! A 6.4 Mbit/s link is split 30/40/30 across three classes. The allocator
//! watches the measured per-class aggregates and raises a class's admission
//! threshold above its base share whenever the other classes leave capacity
//! unused.

use fuzzyqos::allocator::{
    build_frb, compute_allocations, compute_inputs, AllocationPolicySet,
};

fn main() -> fuzzyqos::Result<()> {
    let policy = AllocationPolicySet::new(6400.0, vec![0.3, 0.4, 0.3])?;
    let frb = build_frb(&policy, None)?; // bundled default rule table

    println!("base allocations: {:?} kbit/s\n", policy.base_allocations());
    println!("{:>28}  {:>28}", "measured kbit/s", "thresholds kbit/s");

    let scenarios: [[f64; 3]; 4] = [
        [0.0, 0.0, 0.0],       // idle: everyone may overshoot their share
        [400.0, 600.0, 500.0], // light load
        [1900.0, 800.0, 300.0],// class 1 saturated, others light
        [1920.0, 2560.0, 1920.0], // all at their base shares
    ];
    for measured in scenarios {
        let inputs = compute_inputs(&measured, &policy)?;
        let alloc = compute_allocations(&frb, &inputs)?;
        let th: Vec<String> = alloc.threshold_kbps.iter().map(|t| format!("{t:.0}")).collect();
        println!("{:>28?}  {:>28}", measured, th.join(" / "));
    }
    Ok(())
}
