//! Scripted congestion scenario: a nominal-rate test flow shares an
//! emulated link with a steadily ramping best-effort background aggregate.
//! A utilization-triggered policy promotes the test flow to Expedited
//! Forwarding, restoring its nominal throughput within one sample interval;
//! with the policy disabled the flow degrades as the background grows.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monitor::{
    EmulatedInterface, InterfacePoller, ThresholdTrigger, DEFAULT_HYSTERESIS_PCT,
};
use crate::policy::{
    evaluate, parse_policy, ActionRecord, EvalContext, FlowQosTable, LinguisticStateMap, DSCP_EF,
};
use crate::sim::fluid::{fluid_share, FluidFlow, FluidLink};

const TEST_FLOW_ID: u64 = 1;
const BACKGROUND_FLOW_ID: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveMarkingConfig {
    pub capacity_kbps: f64,
    /// Nominal demand of the monitored test flow.
    pub test_flow_kbps: f64,
    /// Background demand added per sample interval.
    pub background_step_kbps: f64,
    pub sample_interval_s: f64,
    pub steps: usize,
    /// Utilization trigger point in percent.
    pub trigger_threshold_pct: f64,
    /// With the policy disabled the run shows the unprotected degradation.
    pub policy_enabled: bool,
}

impl Default for AdaptiveMarkingConfig {
    fn default() -> Self {
        AdaptiveMarkingConfig {
            capacity_kbps: 8000.0,
            test_flow_kbps: 1000.0,
            background_step_kbps: 400.0,
            sample_interval_s: 10.0,
            steps: 50,
            trigger_threshold_pct: 80.0,
            policy_enabled: true,
        }
    }
}

/// One sample interval of the scenario; rates are the fluid shares in force
/// during the interval ending at `time_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveMarkingPoint {
    pub time_s: f64,
    pub background_demand_kbps: f64,
    pub test_flow_kbps: f64,
    pub background_kbps: f64,
    /// Measured egress utilization over the interval, percent.
    pub utilization_pct: f64,
    /// Whether the test flow was expedited during the interval.
    pub expedited: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveMarkingReport {
    pub config: AdaptiveMarkingConfig,
    pub nominal_kbps: f64,
    /// First instant the utilization trigger fired, if it did.
    pub trigger_time_s: Option<f64>,
    pub points: Vec<AdaptiveMarkingPoint>,
    pub actions: Vec<ActionRecord>,
}

/// Run the scenario: measure with counter polls each interval, evaluate the
/// marking policy on the measurement, and apply any promotion to the next
/// interval's fluid shares.
pub fn run_adaptive_marking(cfg: &AdaptiveMarkingConfig) -> Result<AdaptiveMarkingReport> {
    if !(cfg.test_flow_kbps > 0.0) || !(cfg.background_step_kbps > 0.0) {
        return Err(Error::Config("flow demands must be > 0".into()));
    }
    if !(cfg.sample_interval_s > 0.0) || cfg.steps == 0 {
        return Err(Error::Config("need a positive interval and at least one step".into()));
    }

    let mut states = LinguisticStateMap::with_defaults();
    states.insert(
        "bandwidth_utilization",
        "high",
        crate::policy::Predicate {
            metric: "utilization".into(),
            comparator: crate::policy::Comparator::Ge,
            threshold: cfg.trigger_threshold_pct / 100.0,
        },
    );
    let policy_text =
        format!("IF (bandwidth_utilization==high) THEN (mark {TEST_FLOW_ID} dscp 0x2e)\n");
    let rules = parse_policy(&policy_text, &states)?;

    let mut link = FluidLink::new(cfg.capacity_kbps)?;
    link.add_flow(FluidFlow {
        id: TEST_FLOW_ID,
        demand_kbps: cfg.test_flow_kbps,
        expedited: false,
    })?;

    let if_speed_bps = (cfg.capacity_kbps * 1000.0) as u64;
    let mut iface = EmulatedInterface::new(if_speed_bps);
    let mut poller = InterfacePoller::new();
    poller.push(iface.sample(0.0))?;
    let mut trigger = ThresholdTrigger::new(cfg.trigger_threshold_pct, DEFAULT_HYSTERESIS_PCT)?;

    let mut table = FlowQosTable::new();
    let active: BTreeSet<u64> = [TEST_FLOW_ID, BACKGROUND_FLOW_ID].into();

    let mut report = AdaptiveMarkingReport {
        config: cfg.clone(),
        nominal_kbps: cfg.test_flow_kbps,
        trigger_time_s: None,
        points: Vec::with_capacity(cfg.steps),
        actions: Vec::new(),
    };

    for step in 0..cfg.steps {
        let background_demand = cfg.background_step_kbps * (step + 1) as f64;
        if step == 0 {
            link.add_flow(FluidFlow {
                id: BACKGROUND_FLOW_ID,
                demand_kbps: background_demand,
                expedited: false,
            })?;
        } else {
            link.flow_mut(BACKGROUND_FLOW_ID).unwrap().demand_kbps = background_demand;
        }
        let expedited = table.dscp(TEST_FLOW_ID) == DSCP_EF;
        link.flow_mut(TEST_FLOW_ID).unwrap().expedited = expedited;

        let rates = fluid_share(&link);
        let test_rate = rates.iter().find(|(id, _)| *id == TEST_FLOW_ID).unwrap().1;
        let background_rate =
            rates.iter().find(|(id, _)| *id == BACKGROUND_FLOW_ID).unwrap().1;
        let carried: f64 = rates.iter().map(|(_, r)| r).sum();

        let t_end = (step + 1) as f64 * cfg.sample_interval_s;
        iface.advance(cfg.sample_interval_s, 0.0, carried);
        let measurement = poller
            .push(iface.sample(t_end))?
            .ok_or_else(|| Error::InvalidMeasurement("poller produced no measurement".into()))?;

        if trigger.observe(measurement.utilization_out_pct).is_some()
            && report.trigger_time_s.is_none()
        {
            report.trigger_time_s = Some(t_end);
        }

        if cfg.policy_enabled {
            let mut measurements = HashMap::new();
            measurements.insert("utilization".to_string(), measurement.utilization_out_pct / 100.0);
            let ctx = EvalContext {
                timestamp_s: t_end,
                measurements: &measurements,
                active_flows: &active,
                transport_configured: true,
            };
            report.actions.extend(evaluate(&rules, &ctx, &states, &mut table)?);
        }

        report.points.push(AdaptiveMarkingPoint {
            time_s: t_end,
            background_demand_kbps: background_demand,
            test_flow_kbps: test_rate,
            background_kbps: background_rate,
            utilization_pct: measurement.utilization_out_pct,
            expedited,
        });
    }

    Ok(report)
}
