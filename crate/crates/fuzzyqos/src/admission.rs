//! Per-request accept/reject decisions over a shared link.
//!
//! Three modes: `ClassAgnostic` checks only total capacity, `BasePolicy`
//! additionally caps each class at its policy share, `FrbAdaptive` caps each
//! class at the fuzzy threshold computed at the most recent sample instant.
//! Rejected requests are dropped, never queued.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// One session request.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FlowRequest {
    pub id: u64,
    /// Zero-based class index.
    pub class: usize,
    pub bandwidth_kbps: f64,
    pub arrival_s: f64,
    pub lifetime_s: f64,
}

impl FlowRequest {
    pub fn validate(&self, class_count: usize) -> Result<()> {
        if self.class >= class_count {
            return Err(Error::InvalidInput(format!(
                "flow {} has class index {} out of range",
                self.id, self.class
            )));
        }
        if !(self.bandwidth_kbps > 0.0) {
            return Err(Error::InvalidInput(format!("flow {} has non-positive bitrate", self.id)));
        }
        if !(self.lifetime_s > 0.0) {
            return Err(Error::InvalidInput(format!("flow {} has non-positive lifetime", self.id)));
        }
        Ok(())
    }
}

/// Admission strategy selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdmissionMode {
    ClassAgnostic,
    BasePolicy,
    FrbAdaptive,
}

impl std::fmt::Display for AdmissionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            AdmissionMode::ClassAgnostic => "class-agnostic",
            AdmissionMode::BasePolicy => "base-policy",
            AdmissionMode::FrbAdaptive => "frb-adaptive",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for AdmissionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "class-agnostic" => Ok(AdmissionMode::ClassAgnostic),
            "base-policy" => Ok(AdmissionMode::BasePolicy),
            "frb-adaptive" => Ok(AdmissionMode::FrbAdaptive),
            other => Err(Error::Config(format!("unknown admission mode {other:?}"))),
        }
    }
}

/// Why a request was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    /// Total admitted bandwidth plus the request would exceed link capacity.
    LinkFull,
    /// The class aggregate plus the request would exceed the class limit.
    ClassLimit,
}

/// Admission decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accepted,
    Rejected(RejectReason),
}

impl Decision {
    pub fn accepted(&self) -> bool {
        matches!(self, Decision::Accepted)
    }
}

/// Shared-link occupancy: active flows plus per-class aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState {
    capacity_kbps: f64,
    flows: BTreeMap<u64, (usize, f64)>,
    per_class_kbps: Vec<f64>,
}

impl LinkState {
    pub fn new(capacity_kbps: f64, class_count: usize) -> Result<Self> {
        if !(capacity_kbps > 0.0) {
            return Err(Error::Config(format!("capacity must be > 0, got {capacity_kbps}")));
        }
        Ok(LinkState {
            capacity_kbps,
            flows: BTreeMap::new(),
            per_class_kbps: vec![0.0; class_count],
        })
    }

    pub fn capacity_kbps(&self) -> f64 {
        self.capacity_kbps
    }

    pub fn class_kbps(&self, class: usize) -> f64 {
        self.per_class_kbps[class]
    }

    pub fn per_class_kbps(&self) -> &[f64] {
        &self.per_class_kbps
    }

    pub fn total_kbps(&self) -> f64 {
        self.per_class_kbps.iter().sum()
    }

    pub fn active_flows(&self) -> usize {
        self.flows.len()
    }

    pub fn flow_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.flows.keys().copied()
    }

    /// Recompute the per-class aggregates from scratch (drift check).
    pub fn recompute_per_class(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.per_class_kbps.len()];
        for (class, bw) in self.flows.values() {
            sums[*class] += bw;
        }
        sums
    }

    /// Decide on `req` and, when accepted, admit it.
    ///
    /// `class_limits` are the per-class caps consulted by `BasePolicy`
    /// (the policy's base shares) and `FrbAdaptive` (the latest fuzzy
    /// thresholds); `ClassAgnostic` ignores them.
    pub fn admit(
        &mut self,
        req: &FlowRequest,
        mode: AdmissionMode,
        class_limits: &[f64],
    ) -> Result<Decision> {
        req.validate(self.per_class_kbps.len())?;
        if self.flows.contains_key(&req.id) {
            return Err(Error::InvalidInput(format!("duplicate flow id {}", req.id)));
        }
        let bw = req.bandwidth_kbps;
        let decision = if self.total_kbps() + bw > self.capacity_kbps {
            Decision::Rejected(RejectReason::LinkFull)
        } else {
            match mode {
                AdmissionMode::ClassAgnostic => Decision::Accepted,
                AdmissionMode::BasePolicy | AdmissionMode::FrbAdaptive => {
                    if class_limits.len() != self.per_class_kbps.len() {
                        return Err(Error::InvalidInput(format!(
                            "expected {} class limits, got {}",
                            self.per_class_kbps.len(),
                            class_limits.len()
                        )));
                    }
                    if self.per_class_kbps[req.class] + bw > class_limits[req.class] {
                        Decision::Rejected(RejectReason::ClassLimit)
                    } else {
                        Decision::Accepted
                    }
                }
            }
        };
        if decision.accepted() {
            self.flows.insert(req.id, (req.class, bw));
            self.per_class_kbps[req.class] += bw;
        }
        Ok(decision)
    }

    /// Remove an active flow, returning its class and bitrate.
    pub fn release(&mut self, flow_id: u64) -> Result<(usize, f64)> {
        let (class, bw) = self
            .flows
            .remove(&flow_id)
            .ok_or_else(|| Error::NotFound(format!("flow {flow_id} is not active")))?;
        self.per_class_kbps[class] -= bw;
        Ok((class, bw))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(id: u64, class: usize, bw: f64) -> FlowRequest {
        FlowRequest { id, class, bandwidth_kbps: bw, arrival_s: 0.0, lifetime_s: 1.0 }
    }

    fn fill(state: &mut LinkState, start_id: u64, class: usize, bw: f64, n: usize) {
        for i in 0..n {
            let d = state
                .admit(&req(start_id + i as u64, class, bw), AdmissionMode::ClassAgnostic, &[])
                .unwrap();
            assert!(d.accepted());
        }
    }

    #[test]
    fn class_agnostic_total_check() {
        let mut state = LinkState::new(6400.0, 3).unwrap();
        fill(&mut state, 0, 2, 6200.0, 1);
        let d = state.admit(&req(100, 1, 384.0), AdmissionMode::ClassAgnostic, &[]).unwrap();
        assert_eq!(d, Decision::Rejected(RejectReason::LinkFull));
    }

    #[test]
    fn base_policy_class_cap() {
        let mut state = LinkState::new(6400.0, 3).unwrap();
        fill(&mut state, 0, 1, 2432.0, 1); // b_2 = 2432
        fill(&mut state, 1, 2, 568.0, 1); // total 3000
        let base = [1920.0, 2560.0, 1920.0];
        let d = state.admit(&req(100, 1, 384.0), AdmissionMode::BasePolicy, &base).unwrap();
        assert_eq!(d, Decision::Rejected(RejectReason::ClassLimit));

        // FRB threshold 2944 admits the same request
        let th = [1920.0, 2944.0, 1920.0];
        let d = state.admit(&req(100, 1, 384.0), AdmissionMode::FrbAdaptive, &th).unwrap();
        assert_eq!(d, Decision::Accepted);
    }

    #[test]
    fn admit_release_round_trip() {
        let mut state = LinkState::new(1000.0, 2).unwrap();
        let before = state.clone();
        assert!(state.admit(&req(7, 0, 64.0), AdmissionMode::ClassAgnostic, &[]).unwrap().accepted());
        state.release(7).unwrap();
        assert_eq!(state, before);
    }

    #[test]
    fn release_unknown_flow() {
        let mut state = LinkState::new(1000.0, 2).unwrap();
        assert!(matches!(state.release(42), Err(Error::NotFound(_))));
    }

    #[test]
    fn duplicate_flow_id_rejected() {
        let mut state = LinkState::new(1000.0, 2).unwrap();
        state.admit(&req(1, 0, 10.0), AdmissionMode::ClassAgnostic, &[]).unwrap();
        assert!(state.admit(&req(1, 1, 10.0), AdmissionMode::ClassAgnostic, &[]).is_err());
    }

    #[test]
    fn aggregates_never_drift() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut state = LinkState::new(1e9, 3).unwrap();
        let mut live: Vec<u64> = Vec::new();
        for i in 0..1000u64 {
            let class = rng.gen_range(0..3);
            let bw = rng.gen_range(1..=512) as f64;
            if state.admit(&req(i, class, bw), AdmissionMode::ClassAgnostic, &[]).unwrap().accepted()
            {
                live.push(i);
            }
            if rng.gen_bool(0.5) && !live.is_empty() {
                let idx = rng.gen_range(0..live.len());
                state.release(live.swap_remove(idx)).unwrap();
            }
        }
        assert_eq!(state.recompute_per_class(), state.per_class_kbps().to_vec());
    }
}
