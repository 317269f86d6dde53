//! Exact blocking probabilities for a three-class loss link, computed two
//! independent ways, under full sharing and under per-class partitions.

use fuzzyqos::oracle::{occupancy_recursion_blocking, product_form_blocking, OracleSpec};

fn main() -> fuzzyqos::Result<()> {
    // 6400 kbit/s link in 32 kbit/s units: capacity 200, sessions of
    // 1 / 12 / 8 units, base partitions 60 / 80 / 60 units
    let sizes = vec![1u64, 12, 8];
    let caps = vec![60u64, 80, 60];

    println!("rho   sharing      class 1      class 2      class 3");
    for rho in [0.2, 0.4, 0.6, 0.8] {
        // offered load a_j = rho * B_j / bw_j Erlangs
        let loads: Vec<f64> = caps.iter().zip(&sizes).map(|(&c, &s)| rho * c as f64 / s as f64).collect();

        let shared = OracleSpec {
            capacity_units: 200,
            class_size_units: sizes.clone(),
            class_cap_units: None,
            offered_load_erlangs: loads.clone(),
        };
        let b_shared = product_form_blocking(&shared, 100_000_000)?;

        // the independent recursion must agree with the enumeration
        let b_recursion = occupancy_recursion_blocking(200, &sizes, &loads)?;
        for (a, b) in b_shared.iter().zip(&b_recursion) {
            assert!((a - b).abs() < 1e-12);
        }

        let partitioned = OracleSpec { class_cap_units: Some(caps.clone()), ..shared };
        let b_part = product_form_blocking(&partitioned, 100_000_000)?;

        println!("{rho}   shared      {:>10.3e}  {:>10.3e}  {:>10.3e}", b_shared[0], b_shared[1], b_shared[2]);
        println!("      partitioned {:>10.3e}  {:>10.3e}  {:>10.3e}", b_part[0], b_part[1], b_part[2]);
    }
    Ok(())
}
