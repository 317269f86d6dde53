//! Analytical blocking probabilities for the multirate loss system.
//!
//! Two independent computations of the stationary product-form solution:
//! direct state-space enumeration (supports per-class occupancy caps) and
//! the classic one-dimensional occupancy recursion (total-capacity sharing
//! only). Both operate on integer capacity units.

use crate::error::{Error, Result};

/// Loss-system description in integer bandwidth units.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSpec {
    /// Link capacity in units.
    pub capacity_units: u64,
    /// Per-session size of each class, units.
    pub class_size_units: Vec<u64>,
    /// Optional per-class occupancy caps in units (the per-class partition
    /// policy); `None` models full sharing of the total capacity.
    pub class_cap_units: Option<Vec<u64>>,
    /// Offered load per class in Erlangs (`a_j = λ_j / π_j`).
    pub offered_load_erlangs: Vec<f64>,
}

impl OracleSpec {
    fn validate(&self) -> Result<()> {
        let k = self.class_size_units.len();
        if k == 0 {
            return Err(Error::Config("oracle needs at least one class".into()));
        }
        if self.offered_load_erlangs.len() != k {
            return Err(Error::Config(format!(
                "{} class sizes but {} offered loads",
                k,
                self.offered_load_erlangs.len()
            )));
        }
        if self.capacity_units == 0 {
            return Err(Error::Config("capacity must be > 0 units".into()));
        }
        if self.class_size_units.contains(&0) {
            return Err(Error::Config("class sizes must be > 0 units".into()));
        }
        if self.offered_load_erlangs.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
            return Err(Error::Config("offered loads must be finite and >= 0".into()));
        }
        if let Some(caps) = &self.class_cap_units {
            if caps.len() != k {
                return Err(Error::Config(format!(
                    "{} class sizes but {} class caps",
                    k,
                    caps.len()
                )));
            }
        }
        Ok(())
    }

    /// Per-class maximum session count.
    fn max_sessions(&self) -> Vec<u64> {
        self.class_size_units
            .iter()
            .enumerate()
            .map(|(j, &s)| {
                let cap = match &self.class_cap_units {
                    Some(caps) => caps[j].min(self.capacity_units),
                    None => self.capacity_units,
                };
                cap / s
            })
            .collect()
    }
}

/// Blocking probability per class by exact enumeration of the product-form
/// stationary distribution. Fails with [`Error::Oversize`] when the state
/// space exceeds `max_states`.
pub fn product_form_blocking(spec: &OracleSpec, max_states: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    let k = spec.class_size_units.len();
    let max_n = spec.max_sessions();

    let mut states: u64 = 1;
    for &m in &max_n {
        states = states
            .checked_mul(m + 1)
            .filter(|&s| s <= max_states)
            .ok_or_else(|| {
                Error::Oversize(format!("state space exceeds the {max_states}-state budget"))
            })?;
    }

    // log-weights avoid overflow: ln w(n) = sum_j (n_j ln a_j - ln n_j!)
    let log_fact: Vec<f64> = {
        let top = max_n.iter().copied().max().unwrap() as usize;
        let mut lf = vec![0.0; top + 1];
        for i in 1..=top {
            lf[i] = lf[i - 1] + (i as f64).ln();
        }
        lf
    };

    let mut normalizer = 0.0;
    let mut blocked_mass = vec![0.0; k];
    let mut n = vec![0u64; k];
    loop {
        let used: u64 = n
            .iter()
            .zip(&spec.class_size_units)
            .map(|(&nj, &sj)| nj * sj)
            .sum();
        if used <= spec.capacity_units {
            let mut logw = 0.0;
            let mut feasible = true;
            for j in 0..k {
                if n[j] > 0 {
                    if spec.offered_load_erlangs[j] == 0.0 {
                        feasible = false;
                        break;
                    }
                    logw += n[j] as f64 * spec.offered_load_erlangs[j].ln()
                        - log_fact[n[j] as usize];
                }
            }
            if feasible {
                let w = logw.exp();
                normalizer += w;
                for (j, mass) in blocked_mass.iter_mut().enumerate() {
                    if !admits(spec, &n, used, j) {
                        *mass += w;
                    }
                }
            }
        }
        // odometer over 0..=max_n per class
        let mut j = 0;
        loop {
            if j == k {
                return Ok(blocked_mass.iter().map(|b| b / normalizer).collect());
            }
            if n[j] < max_n[j] {
                n[j] += 1;
                break;
            }
            n[j] = 0;
            j += 1;
        }
    }
}

fn admits(spec: &OracleSpec, n: &[u64], used: u64, class: usize) -> bool {
    let size = spec.class_size_units[class];
    if used + size > spec.capacity_units {
        return false;
    }
    if let Some(caps) = &spec.class_cap_units {
        if (n[class] + 1) * size > caps[class] {
            return false;
        }
    }
    true
}

/// Blocking probability per class from the one-dimensional occupancy
/// recursion (full sharing of the total capacity; per-class caps are not
/// representable here):
/// `c q(c) = sum_j a_j s_j q(c - s_j)`, blocking_j = tail mass above
/// `capacity - s_j`.
pub fn occupancy_recursion_blocking(
    capacity_units: u64,
    class_size_units: &[u64],
    offered_load_erlangs: &[f64],
) -> Result<Vec<f64>> {
    let spec = OracleSpec {
        capacity_units,
        class_size_units: class_size_units.to_vec(),
        class_cap_units: None,
        offered_load_erlangs: offered_load_erlangs.to_vec(),
    };
    spec.validate()?;

    let cap = capacity_units as usize;
    let mut q = vec![0.0_f64; cap + 1];
    q[0] = 1.0;
    for c in 1..=cap {
        let mut acc = 0.0;
        for (j, &s) in class_size_units.iter().enumerate() {
            let s = s as usize;
            if s <= c {
                acc += offered_load_erlangs[j] * s as f64 * q[c - s];
            }
        }
        q[c] = acc / c as f64;
        // periodic rescale guards against overflow on large systems
        if q[c] > 1e100 {
            let scale = q[c];
            for v in q[..=c].iter_mut() {
                *v /= scale;
            }
        }
    }
    let total: f64 = q.iter().sum();
    Ok(class_size_units
        .iter()
        .map(|&s| {
            let from = cap + 1 - (s as usize).min(cap + 1);
            q[from..].iter().sum::<f64>() / total
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < tol, "{x} vs {y}");
        }
    }

    #[test]
    fn single_class_matches_closed_form_loss() {
        // size 1, capacity 2, offered load 1 Erlang:
        // loss = (1/2!) / (1 + 1 + 1/2) = 0.2
        let spec = OracleSpec {
            capacity_units: 2,
            class_size_units: vec![1],
            class_cap_units: None,
            offered_load_erlangs: vec![1.0],
        };
        let b = product_form_blocking(&spec, 1_000).unwrap();
        assert!((b[0] - 0.2).abs() < 1e-15);
        let b2 = occupancy_recursion_blocking(2, &[1], &[1.0]).unwrap();
        assert!((b2[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn enumeration_and_recursion_agree_without_caps() {
        let sizes = vec![1u64, 12, 8];
        let loads = vec![18.0, 1.6, 1.8];
        let spec = OracleSpec {
            capacity_units: 200,
            class_size_units: sizes.clone(),
            class_cap_units: None,
            offered_load_erlangs: loads.clone(),
        };
        let a = product_form_blocking(&spec, 100_000_000).unwrap();
        let b = occupancy_recursion_blocking(200, &sizes, &loads).unwrap();
        close(&a, &b, 1e-12);
    }

    #[test]
    fn per_class_caps_increase_blocking() {
        let sizes = vec![1u64, 12, 8];
        let loads = vec![18.0, 1.6, 1.8];
        let free = product_form_blocking(
            &OracleSpec {
                capacity_units: 200,
                class_size_units: sizes.clone(),
                class_cap_units: None,
                offered_load_erlangs: loads.clone(),
            },
            100_000_000,
        )
        .unwrap();
        let capped = product_form_blocking(
            &OracleSpec {
                capacity_units: 200,
                class_size_units: sizes,
                class_cap_units: Some(vec![60, 80, 60]),
                offered_load_erlangs: loads,
            },
            100_000_000,
        )
        .unwrap();
        // the capped heavy classes block far more, which in turn shelters
        // the small class below its full-sharing blocking
        assert!(capped[1] > free[1] * 10.0);
        assert!(capped[2] > free[2] * 10.0);
        assert!(capped[0] < free[0]);
    }

    #[test]
    fn zero_offered_load_class_is_well_defined() {
        let spec = OracleSpec {
            capacity_units: 10,
            class_size_units: vec![2, 3],
            class_cap_units: None,
            offered_load_erlangs: vec![0.0, 1.0],
        };
        let b = product_form_blocking(&spec, 10_000).unwrap();
        assert_eq!(b[0], b[0].clamp(0.0, 1.0));
        // class 1 sees only class 2 occupancy; blocking equals the chance
        // fewer than 2 units are free, still well-defined
        assert!(b[0] < 1.0);
    }

    #[test]
    fn oversized_state_space_is_rejected() {
        let spec = OracleSpec {
            capacity_units: 1_000_000,
            class_size_units: vec![1, 1, 1],
            class_cap_units: None,
            offered_load_erlangs: vec![1.0, 1.0, 1.0],
        };
        assert!(matches!(product_form_blocking(&spec, 1_000_000), Err(Error::Oversize(_))));
    }

    #[test]
    fn session_too_large_for_the_link_always_blocks() {
        let spec = OracleSpec {
            capacity_units: 5,
            class_size_units: vec![6, 1],
            class_cap_units: None,
            offered_load_erlangs: vec![1.0, 0.5],
        };
        let b = product_form_blocking(&spec, 10_000).unwrap();
        assert_eq!(b[0], 1.0);
        assert!(b[1] < 1.0);
    }
}
