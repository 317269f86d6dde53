//! Deterministic flow-level simulator.
//!
//! A run is a loss system: Poisson session arrivals per class, exponential
//! lifetimes, accept/reject at arrival, no queueing. The link state is
//! sampled on a fixed interval; in the adaptive mode each sample recomputes
//! the per-class admission thresholds through the fuzzy allocator, and those
//! thresholds stay in force until the next sample. Identical configurations
//! produce byte-identical serialized results.

mod fluid;
mod scenario;

pub use fluid::{fluid_share, FluidFlow, FluidLink};
pub use scenario::{
    run_adaptive_marking, AdaptiveMarkingConfig, AdaptiveMarkingPoint, AdaptiveMarkingReport,
};

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::admission::{AdmissionMode, FlowRequest, LinkState};
use crate::allocator::{
    build_frb, compute_allocations, compute_inputs, AllocationPolicySet, FrbSystem,
};
use crate::error::{Error, Result};
use crate::fuzzy::RuleBase;
use crate::metrics::{DecisionRecord, RunStats, SamplePoint};
use crate::monitor::EwmaEstimator;
use crate::policy::{evaluate, EvalContext, FlowQosTable, LinguisticStateMap, PolicyRule};

/// Traffic description for one class.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClassTraffic {
    /// Poisson arrival rate λ, sessions per second.
    pub arrival_rate_per_s: f64,
    /// Mean exponential session lifetime 1/π, seconds.
    pub mean_lifetime_s: f64,
    /// Per-session bitrate, kbit/s.
    pub bitrate_kbps: f64,
    /// Number of session requests to generate.
    pub requests: u64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WorkloadSpec {
    pub classes: Vec<ClassTraffic>,
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::Config("workload has no traffic classes".into()));
        }
        for (j, c) in self.classes.iter().enumerate() {
            if !(c.arrival_rate_per_s > 0.0)
                || !(c.mean_lifetime_s > 0.0)
                || !(c.bitrate_kbps > 0.0)
            {
                return Err(Error::Config(format!(
                    "class {} traffic parameters must be > 0",
                    j + 1
                )));
            }
        }
        Ok(())
    }
}

/// Mean session lifetime that offers load `rho * B_j` to class `j`:
/// `1/π_j = rho * B_j / (bw_j * λ_j)`.
pub fn lifetime_from_rho(
    rho: f64,
    class: usize,
    policy: &AllocationPolicySet,
    arrival_rate_per_s: f64,
    bitrate_kbps: f64,
) -> Result<f64> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Config(format!("load factor must be > 0, got {rho}")));
    }
    if class >= policy.class_count() {
        return Err(Error::Config(format!("class index {class} out of range")));
    }
    if !(arrival_rate_per_s > 0.0) || !(bitrate_kbps > 0.0) {
        return Err(Error::Config("arrival rate and bitrate must be > 0".into()));
    }
    Ok(rho * policy.base_kbps(class) / (bitrate_kbps * arrival_rate_per_s))
}

/// One generated session: arrival instant and lifetime, both in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratedSession {
    pub arrival_s: f64,
    pub lifetime_s: f64,
}

/// Draw every class's arrival process from its own deterministic stream so
/// that changing one class's parameters never perturbs the others.
pub fn generate_workload(spec: &WorkloadSpec, seed: u64) -> Result<Vec<Vec<GeneratedSession>>> {
    spec.validate()?;
    let mut streams = Vec::with_capacity(spec.classes.len());
    for (j, class) in spec.classes.iter().enumerate() {
        let mut rng = class_rng(seed, j);
        let gap = Exp::new(class.arrival_rate_per_s)
            .map_err(|e| Error::Config(format!("class {} arrival rate: {e}", j + 1)))?;
        let hold = Exp::new(1.0 / class.mean_lifetime_s)
            .map_err(|e| Error::Config(format!("class {} lifetime: {e}", j + 1)))?;
        let mut t = 0.0;
        let mut sessions = Vec::with_capacity(class.requests as usize);
        for _ in 0..class.requests {
            t += gap.sample(&mut rng);
            sessions.push(GeneratedSession { arrival_s: t, lifetime_s: hold.sample(&mut rng) });
        }
        streams.push(sessions);
    }
    Ok(streams)
}

fn class_rng(seed: u64, class: usize) -> ChaCha8Rng {
    // splitmix-style stream separation per class
    ChaCha8Rng::seed_from_u64(seed ^ (class as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Everything needed to execute one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    /// Offered-load factor, recorded in the results.
    pub rho: f64,
    pub mode: AdmissionMode,
    pub policy: AllocationPolicySet,
    pub workload: WorkloadSpec,
    pub sample_interval_s: f64,
    /// Normalized rule table for the adaptive mode; `None` uses the bundled
    /// default table.
    pub rule_table: Option<RuleBase>,
    /// Optional smoothing of the per-class aggregates fed to the allocator.
    pub ewma_alpha: Option<f64>,
    /// Runtime QoS policies evaluated at every sample instant.
    pub policy_rules: Vec<PolicyRule>,
    pub state_map: LinguisticStateMap,
}

impl RunConfig {
    pub fn new(
        seed: u64,
        rho: f64,
        mode: AdmissionMode,
        policy: AllocationPolicySet,
        workload: WorkloadSpec,
    ) -> Result<Self> {
        if workload.classes.len() != policy.class_count() {
            return Err(Error::Config(format!(
                "workload has {} classes but the policy has {}",
                workload.classes.len(),
                policy.class_count()
            )));
        }
        workload.validate()?;
        Ok(RunConfig {
            seed,
            rho,
            mode,
            policy,
            workload,
            sample_interval_s: 10.0,
            rule_table: None,
            ewma_alpha: None,
            policy_rules: Vec::new(),
            state_map: LinguisticStateMap::with_defaults(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum EventKind {
    Departure { flow_id: u64 },
    Sample,
    Arrival { req: FlowRequest },
}

impl EventKind {
    /// Simultaneous events resolve departures first, then samples, then
    /// arrivals, so freed capacity and fresh thresholds are visible to an
    /// arrival at the same instant.
    fn priority(&self) -> u8 {
        match self {
            EventKind::Departure { .. } => 0,
            EventKind::Sample => 1,
            EventKind::Arrival { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Event {
    time_s: f64,
    seq: u64,
    kind: EventKind,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap, we want earliest first
        other
            .time_s
            .total_cmp(&self.time_s)
            .then_with(|| other.kind.priority().cmp(&self.kind.priority()))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct EventQueue {
    heap: BinaryHeap<Event>,
    next_seq: u64,
}

impl EventQueue {
    fn new() -> Self {
        EventQueue { heap: BinaryHeap::new(), next_seq: 0 }
    }

    fn push(&mut self, time_s: f64, kind: EventKind) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Event { time_s, seq, kind });
    }

    fn pop(&mut self) -> Option<Event> {
        self.heap.pop()
    }
}

/// Execute one run to completion (all requests decided, all admitted
/// sessions departed).
pub fn run_scenario(cfg: &RunConfig) -> Result<RunStats> {
    let classes = cfg.policy.class_count();
    if cfg.workload.classes.len() != classes {
        return Err(Error::Config(format!(
            "workload has {} classes but the policy has {}",
            cfg.workload.classes.len(),
            classes
        )));
    }
    if !(cfg.sample_interval_s > 0.0) {
        return Err(Error::Config("sample interval must be > 0".into()));
    }

    let frb: Option<FrbSystem> = match cfg.mode {
        AdmissionMode::FrbAdaptive => Some(build_frb(&cfg.policy, cfg.rule_table.clone())?),
        _ => None,
    };

    let streams = generate_workload(&cfg.workload, cfg.seed)?;
    let mut queue = EventQueue::new();
    queue.push(0.0, EventKind::Sample);
    let mut pending_arrivals: u64 = 0;
    for (j, sessions) in streams.iter().enumerate() {
        for (k, s) in sessions.iter().enumerate() {
            let req = FlowRequest {
                id: ((j as u64) << 32) | k as u64,
                class: j,
                bandwidth_kbps: cfg.workload.classes[j].bitrate_kbps,
                arrival_s: s.arrival_s,
                lifetime_s: s.lifetime_s,
            };
            queue.push(s.arrival_s, EventKind::Arrival { req });
            pending_arrivals += 1;
        }
    }

    let mut link = LinkState::new(cfg.policy.total_kbps(), classes)?;
    // Thresholds in force between samples: base shares for the static modes,
    // recomputed by the allocator at every sample in the adaptive mode.
    let mut limits = cfg.policy.base_allocations();
    let mut smoothers: Option<Vec<EwmaEstimator>> = match cfg.ewma_alpha {
        Some(alpha) => Some(
            (0..classes).map(|_| EwmaEstimator::new(alpha)).collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };

    let mut stats = RunStats {
        mode: cfg.mode,
        rho: cfg.rho,
        seed: cfg.seed,
        generated: vec![0; classes],
        accepted: vec![0; classes],
        rejected: vec![0; classes],
        decisions: Vec::new(),
        series: Vec::new(),
        actions: Vec::new(),
    };
    let mut qos_table = FlowQosTable::new();

    while let Some(event) = queue.pop() {
        match event.kind {
            EventKind::Departure { flow_id } => {
                link.release(flow_id)?;
            }
            EventKind::Sample => {
                let measured = link.per_class_kbps().to_vec();
                let allocator_view: Vec<f64> = match smoothers.as_mut() {
                    Some(ewmas) => measured
                        .iter()
                        .zip(ewmas.iter_mut())
                        .map(|(&b, e)| e.update(b))
                        .collect(),
                    None => measured.clone(),
                };
                if let Some(frb) = &frb {
                    let inputs = compute_inputs(&allocator_view, &cfg.policy)?;
                    limits = compute_allocations(frb, &inputs)?.threshold_kbps;
                }
                let total = link.total_kbps();
                let utilization = total / cfg.policy.total_kbps();
                stats.series.push(SamplePoint {
                    time_s: event.time_s,
                    class_kbps: measured,
                    total_kbps: total,
                    utilization,
                    threshold_kbps: limits.clone(),
                });
                if !cfg.policy_rules.is_empty() {
                    let mut measurements = std::collections::HashMap::new();
                    measurements.insert("utilization".to_string(), utilization);
                    let active: std::collections::BTreeSet<u64> = link.flow_ids().collect();
                    let ctx = EvalContext {
                        timestamp_s: event.time_s,
                        measurements: &measurements,
                        active_flows: &active,
                        transport_configured: true,
                    };
                    stats.actions.extend(evaluate(
                        &cfg.policy_rules,
                        &ctx,
                        &cfg.state_map,
                        &mut qos_table,
                    )?);
                }
                if pending_arrivals > 0 || link.active_flows() > 0 {
                    queue.push(event.time_s + cfg.sample_interval_s, EventKind::Sample);
                }
            }
            EventKind::Arrival { req } => {
                pending_arrivals -= 1;
                stats.generated[req.class] += 1;
                let decision = link.admit(&req, cfg.mode, &limits)?;
                if decision.accepted() {
                    stats.accepted[req.class] += 1;
                    queue.push(
                        req.arrival_s + req.lifetime_s,
                        EventKind::Departure { flow_id: req.id },
                    );
                } else {
                    stats.rejected[req.class] += 1;
                }
                stats.decisions.push(DecisionRecord {
                    flow_id: req.id,
                    class: req.class,
                    time_s: req.arrival_s,
                    accepted: decision.accepted(),
                });
            }
        }
    }

    debug_assert_eq!(link.active_flows(), 0);
    stats.check_conservation()?;
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_policy() -> AllocationPolicySet {
        AllocationPolicySet::new(640.0, vec![0.3, 0.4, 0.3]).unwrap()
    }

    fn small_workload(policy: &AllocationPolicySet, rho: f64, requests: u64) -> WorkloadSpec {
        let bitrates = [32.0, 384.0, 256.0];
        WorkloadSpec {
            classes: (0..3)
                .map(|j| ClassTraffic {
                    arrival_rate_per_s: 0.8,
                    mean_lifetime_s: lifetime_from_rho(rho, j, policy, 0.8, bitrates[j]).unwrap(),
                    bitrate_kbps: bitrates[j],
                    requests,
                })
                .collect(),
        }
    }

    #[test]
    fn lifetime_formula() {
        let policy = AllocationPolicySet::new(6400.0, vec![0.3, 0.4, 0.3]).unwrap();
        // rho * B_j / (bw_j * lambda): 0.4 * 1920 / (32 * 0.8) = 30
        let l = lifetime_from_rho(0.4, 0, &policy, 0.8, 32.0).unwrap();
        assert!((l - 30.0).abs() < 1e-12);
        let l = lifetime_from_rho(0.2, 1, &policy, 0.8, 384.0).unwrap();
        assert!((l - 1.0 / 0.6).abs() < 1e-12);
        assert!(lifetime_from_rho(0.0, 0, &policy, 0.8, 32.0).is_err());
    }

    #[test]
    fn workload_generation_is_deterministic_and_per_class_independent() {
        let policy = small_policy();
        let spec = small_workload(&policy, 0.4, 50);
        let a = generate_workload(&spec, 42).unwrap();
        let b = generate_workload(&spec, 42).unwrap();
        assert_eq!(a, b);

        // changing class 2's parameters leaves the other streams untouched
        let mut spec2 = spec.clone();
        spec2.classes[1].mean_lifetime_s *= 3.0;
        let c = generate_workload(&spec2, 42).unwrap();
        assert_eq!(a[0], c[0]);
        assert_eq!(a[2], c[2]);
        assert_ne!(a[1], c[1]);

        // arrivals are strictly increasing
        for stream in &a {
            for w in stream.windows(2) {
                assert!(w[1].arrival_s > w[0].arrival_s);
            }
        }
    }

    #[test]
    fn event_order_breaks_ties_departure_sample_arrival() {
        let mut q = EventQueue::new();
        let req = FlowRequest {
            id: 1,
            class: 0,
            bandwidth_kbps: 1.0,
            arrival_s: 5.0,
            lifetime_s: 1.0,
        };
        q.push(5.0, EventKind::Arrival { req });
        q.push(5.0, EventKind::Sample);
        q.push(5.0, EventKind::Departure { flow_id: 9 });
        q.push(4.0, EventKind::Arrival {
            req: FlowRequest { id: 2, class: 0, bandwidth_kbps: 1.0, arrival_s: 4.0, lifetime_s: 1.0 },
        });
        assert!(matches!(q.pop().unwrap().kind, EventKind::Arrival { .. }));
        assert!(matches!(q.pop().unwrap().kind, EventKind::Departure { .. }));
        assert!(matches!(q.pop().unwrap().kind, EventKind::Sample));
        assert!(matches!(q.pop().unwrap().kind, EventKind::Arrival { .. }));
        assert!(q.pop().is_none());
    }

    #[test]
    fn same_time_same_kind_pops_in_push_order() {
        let mut q = EventQueue::new();
        q.push(1.0, EventKind::Departure { flow_id: 10 });
        q.push(1.0, EventKind::Departure { flow_id: 20 });
        assert!(matches!(q.pop().unwrap().kind, EventKind::Departure { flow_id: 10 }));
        assert!(matches!(q.pop().unwrap().kind, EventKind::Departure { flow_id: 20 }));
    }

    #[test]
    fn run_is_deterministic_and_conserving() {
        let policy = small_policy();
        let cfg = RunConfig::new(
            7,
            0.8,
            AdmissionMode::FrbAdaptive,
            policy.clone(),
            small_workload(&policy, 0.8, 200),
        )
        .unwrap();
        let a = run_scenario(&cfg).unwrap();
        let b = run_scenario(&cfg).unwrap();
        assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
        a.check_conservation().unwrap();
        assert_eq!(a.generated, vec![200, 200, 200]);
        // capacity is never exceeded at any sample instant
        for p in &a.series {
            assert!(p.total_kbps <= policy.total_kbps() + 1e-9);
        }
    }

    #[test]
    fn sampled_thresholds_respect_bounds() {
        let policy = small_policy();
        let cfg = RunConfig::new(
            3,
            0.6,
            AdmissionMode::FrbAdaptive,
            policy.clone(),
            small_workload(&policy, 0.6, 100),
        )
        .unwrap();
        let stats = run_scenario(&cfg).unwrap();
        assert!(!stats.series.is_empty());
        for p in &stats.series {
            for j in 0..3 {
                assert!(p.threshold_kbps[j] >= policy.base_kbps(j) - 1e-9);
                assert!(p.threshold_kbps[j] <= policy.total_kbps() + 1e-9);
            }
        }
    }

    #[test]
    fn static_modes_keep_base_thresholds() {
        let policy = small_policy();
        let cfg = RunConfig::new(
            3,
            0.6,
            AdmissionMode::BasePolicy,
            policy.clone(),
            small_workload(&policy, 0.6, 50),
        )
        .unwrap();
        let stats = run_scenario(&cfg).unwrap();
        for p in &stats.series {
            assert_eq!(p.threshold_kbps, policy.base_allocations());
        }
    }

    #[test]
    fn class_count_mismatch_is_a_config_error() {
        let policy = small_policy();
        let mut workload = small_workload(&policy, 0.4, 10);
        workload.classes.pop();
        assert!(RunConfig::new(1, 0.4, AdmissionMode::BasePolicy, policy, workload).is_err());
    }
}
