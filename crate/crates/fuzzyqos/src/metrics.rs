//! Per-run statistics and derived service metrics.

use serde::{Deserialize, Serialize};

use crate::admission::AdmissionMode;
use crate::error::{Error, Result};
use crate::policy::ActionRecord;

/// One admission decision, in arrival order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub flow_id: u64,
    /// Zero-based class index.
    pub class: usize,
    pub time_s: f64,
    pub accepted: bool,
}

/// One sample instant of the link state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub time_s: f64,
    /// Admitted bandwidth per class, kbit/s.
    pub class_kbps: Vec<f64>,
    pub total_kbps: f64,
    /// Fraction of link capacity in use, in [0, 1].
    pub utilization: f64,
    /// Per-class admission thresholds in force after this sample, kbit/s.
    pub threshold_kbps: Vec<f64>,
}

/// Complete, serializable record of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub mode: AdmissionMode,
    pub rho: f64,
    pub seed: u64,
    pub generated: Vec<u64>,
    pub accepted: Vec<u64>,
    pub rejected: Vec<u64>,
    pub decisions: Vec<DecisionRecord>,
    pub series: Vec<SamplePoint>,
    pub actions: Vec<ActionRecord>,
}

impl RunStats {
    /// Accepted fraction over all classes.
    pub fn availability(&self) -> Result<f64> {
        let generated: u64 = self.generated.iter().sum();
        if generated == 0 {
            return Err(Error::UndefinedMetric("availability of an empty run".into()));
        }
        let accepted: u64 = self.accepted.iter().sum();
        Ok(accepted as f64 / generated as f64)
    }

    /// Rejected fraction per class.
    pub fn blocking_per_class(&self) -> Result<Vec<f64>> {
        self.generated
            .iter()
            .zip(&self.rejected)
            .enumerate()
            .map(|(j, (&g, &r))| {
                if g == 0 {
                    Err(Error::UndefinedMetric(format!("blocking of class {} with no arrivals", j + 1)))
                } else {
                    Ok(r as f64 / g as f64)
                }
            })
            .collect()
    }

    /// Conservation check: per class, generated = accepted + rejected, and
    /// the decision log agrees with the aggregate counters.
    pub fn check_conservation(&self) -> Result<()> {
        for j in 0..self.generated.len() {
            if self.generated[j] != self.accepted[j] + self.rejected[j] {
                return Err(Error::InvalidInput(format!(
                    "class {}: {} generated but {} accepted + {} rejected",
                    j + 1,
                    self.generated[j],
                    self.accepted[j],
                    self.rejected[j]
                )));
            }
            let logged =
                self.decisions.iter().filter(|d| d.class == j).count() as u64;
            if logged != self.generated[j] {
                return Err(Error::InvalidInput(format!(
                    "class {}: {} decisions logged for {} arrivals",
                    j + 1,
                    logged,
                    self.generated[j]
                )));
            }
        }
        Ok(())
    }
}

/// Empirical CDF of the sampled utilization values: for each distinct value
/// `v`, the fraction of samples `<= v`. Returns `(value, cdf)` pairs in
/// increasing value order.
pub fn utilization_cdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::UndefinedMetric("CDF of an empty sample set".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite utilization sample".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut points = Vec::new();
    let mut below = 0usize;
    let mut i = 0usize;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        below = j;
        points.push((v, below as f64 / n));
        i = j;
    }
    debug_assert_eq!(below, sorted.len());
    Ok(points)
}

/// Summation in value order, so aggregates are independent of run order.
fn ordered_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sorted: Vec<f64> = values.collect();
    sorted.sort_by(f64::total_cmp);
    sorted.iter().sum()
}

/// Sample mean; independent of input order.
pub fn mean(values: &[f64]) -> f64 {
    ordered_sum(values.iter().copied()) / values.len() as f64
}

/// Standard error of the mean across independent run-level values
/// (sample standard deviation over sqrt(n)); zero for a single value.
/// Independent of input order.
pub fn standard_error(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    let var = ordered_sum(values.iter().map(|v| (v - m) * (v - m))) / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Standard error of an observed proportion under a hypothesized true
/// probability `p` with `trials` independent observations. Used as a floor
/// for the empirical run-to-run error when the observed counts are tiny.
pub fn binomial_se(p: f64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    (p * (1.0 - p) / trials as f64).sqrt()
}
