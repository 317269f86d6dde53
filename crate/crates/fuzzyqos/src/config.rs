//! JSON scenario configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::admission::AdmissionMode;
use crate::allocator::AllocationPolicySet;
use crate::error::{Error, Result};
use crate::fuzzy::RuleBase;
use crate::policy::{parse_policy, LinguisticStateMap, PolicyRule};
use crate::sim::{lifetime_from_rho, ClassTraffic, RunConfig, WorkloadSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Base seed; run r of a sweep uses `seed + r`.
    pub seed: u64,
    /// Offered-load factors to sweep.
    pub rho: Vec<f64>,
    pub modes: Vec<AdmissionMode>,
    /// Link capacity, kbit/s.
    pub total_kbps: f64,
    /// Per-class capacity fractions.
    pub shares: Vec<f64>,
    /// Per-class session bitrates, kbit/s.
    pub bitrates_kbps: Vec<f64>,
    /// Per-class Poisson arrival rates, sessions per second.
    pub arrival_rates_per_s: Vec<f64>,
    /// Per-class request counts.
    pub request_counts: Vec<u64>,
    pub sample_interval_s: f64,
    /// Independent runs per (mode, rho) cell.
    pub runs: u32,
    /// Optional fuzzy rule file (normalized template); the bundled default
    /// table is used when absent.
    pub rule_file: Option<PathBuf>,
    /// Optional runtime QoS policy file evaluated at sample instants.
    pub policy_file: Option<PathBuf>,
    /// Optional EWMA weight for the aggregates fed to the allocator.
    pub ewma_alpha: Option<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            rho: vec![0.2, 0.4, 0.6, 0.8],
            modes: vec![
                AdmissionMode::ClassAgnostic,
                AdmissionMode::BasePolicy,
                AdmissionMode::FrbAdaptive,
            ],
            total_kbps: 6400.0,
            shares: vec![0.3, 0.4, 0.3],
            bitrates_kbps: vec![32.0, 384.0, 256.0],
            arrival_rates_per_s: vec![0.8, 0.8, 0.8],
            request_counts: vec![5000, 5000, 5000],
            sample_interval_s: 10.0,
            runs: 10,
            rule_file: None,
            policy_file: None,
            ewma_alpha: None,
        }
    }
}

impl ScenarioConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ScenarioConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.shares.len();
        for (name, len) in [
            ("bitrates_kbps", self.bitrates_kbps.len()),
            ("arrival_rates_per_s", self.arrival_rates_per_s.len()),
            ("request_counts", self.request_counts.len()),
        ] {
            if len != k {
                return Err(Error::Config(format!(
                    "{name} has {len} entries but there are {k} shares"
                )));
            }
        }
        if self.rho.is_empty() || self.modes.is_empty() {
            return Err(Error::Config("need at least one load factor and one mode".into()));
        }
        if self.runs == 0 {
            return Err(Error::Config("need at least one run".into()));
        }
        // surface bad share/capacity values early
        self.policy_set()?;
        Ok(())
    }

    pub fn class_count(&self) -> usize {
        self.shares.len()
    }

    pub fn policy_set(&self) -> Result<AllocationPolicySet> {
        AllocationPolicySet::new(self.total_kbps, self.shares.clone())
    }

    /// Load the rule table named by `rule_file`, if any.
    pub fn load_rule_table(&self) -> Result<Option<RuleBase>> {
        match &self.rule_file {
            None => Ok(None),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::Config(format!("cannot read rule file {}: {e}", path.display()))
                })?;
                Ok(Some(RuleBase::parse(&text)?))
            }
        }
    }

    /// Load the runtime policy file, if any, against the default state map.
    pub fn load_policy_rules(&self) -> Result<(Vec<PolicyRule>, LinguisticStateMap)> {
        let states = LinguisticStateMap::with_defaults();
        match &self.policy_file {
            None => Ok((Vec::new(), states)),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::Config(format!("cannot read policy file {}: {e}", path.display()))
                })?;
                let rules = parse_policy(&text, &states)?;
                Ok((rules, states))
            }
        }
    }

    pub fn workload(&self, rho: f64) -> Result<WorkloadSpec> {
        let policy = self.policy_set()?;
        let classes = (0..self.class_count())
            .map(|j| {
                Ok(ClassTraffic {
                    arrival_rate_per_s: self.arrival_rates_per_s[j],
                    mean_lifetime_s: lifetime_from_rho(
                        rho,
                        j,
                        &policy,
                        self.arrival_rates_per_s[j],
                        self.bitrates_kbps[j],
                    )?,
                    bitrate_kbps: self.bitrates_kbps[j],
                    requests: self.request_counts[j],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(WorkloadSpec { classes })
    }

    /// Assemble the run configuration for one (mode, rho, seed) cell.
    pub fn run_config(&self, mode: AdmissionMode, rho: f64, seed: u64) -> Result<RunConfig> {
        let mut cfg =
            RunConfig::new(seed, rho, mode, self.policy_set()?, self.workload(rho)?)?;
        cfg.sample_interval_s = self.sample_interval_s;
        cfg.rule_table = self.load_rule_table()?;
        cfg.ewma_alpha = self.ewma_alpha;
        let (rules, states) = self.load_policy_rules()?;
        cfg.policy_rules = rules;
        cfg.state_map = states;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid_and_round_trips() {
        let cfg = ScenarioConfig::default();
        cfg.validate().unwrap();
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back: ScenarioConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn mismatched_class_lists_are_rejected() {
        let mut cfg = ScenarioConfig::default();
        cfg.bitrates_kbps.pop();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = serde_json::from_str::<ScenarioConfig>("{\"sead\": 1}");
        assert!(err.is_err());
    }

    #[test]
    fn derived_lifetimes_follow_the_load_factor() {
        let cfg = ScenarioConfig::default();
        let w = cfg.workload(0.4).unwrap();
        assert!((w.classes[0].mean_lifetime_s - 30.0).abs() < 1e-9);
        assert!((w.classes[1].mean_lifetime_s - 3.333).abs() < 1e-3);
        assert!((w.classes[2].mean_lifetime_s - 3.75).abs() < 1e-9);
    }

    #[test]
    fn missing_rule_file_is_a_config_error() {
        let cfg = ScenarioConfig {
            rule_file: Some("/nonexistent/rules.txt".into()),
            ..ScenarioConfig::default()
        };
        assert!(matches!(cfg.load_rule_table(), Err(Error::Config(_))));
    }
}
