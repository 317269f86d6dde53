//! Fluid shared-link model with expedited-forwarding priority.
//!
//! Expedited flows are served first, each receiving min(demand, residual
//! capacity) in flow-id order; best-effort flows then share the remaining
//! capacity proportionally to their demands.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FluidFlow {
    pub id: u64,
    pub demand_kbps: f64,
    pub expedited: bool,
}

#[derive(Debug, Clone)]
pub struct FluidLink {
    capacity_kbps: f64,
    flows: Vec<FluidFlow>,
}

impl FluidLink {
    pub fn new(capacity_kbps: f64) -> Result<Self> {
        if !(capacity_kbps > 0.0) {
            return Err(Error::Config(format!("capacity must be > 0, got {capacity_kbps}")));
        }
        Ok(FluidLink { capacity_kbps, flows: Vec::new() })
    }

    pub fn capacity_kbps(&self) -> f64 {
        self.capacity_kbps
    }

    pub fn add_flow(&mut self, flow: FluidFlow) -> Result<()> {
        if !(flow.demand_kbps > 0.0) {
            return Err(Error::InvalidInput(format!("flow {} has non-positive demand", flow.id)));
        }
        if self.flows.iter().any(|f| f.id == flow.id) {
            return Err(Error::InvalidInput(format!("duplicate fluid flow id {}", flow.id)));
        }
        self.flows.push(flow);
        self.flows.sort_by_key(|f| f.id);
        Ok(())
    }

    pub fn remove_flow(&mut self, id: u64) -> Result<FluidFlow> {
        let pos = self
            .flows
            .iter()
            .position(|f| f.id == id)
            .ok_or_else(|| Error::NotFound(format!("fluid flow {id}")))?;
        Ok(self.flows.remove(pos))
    }

    pub fn flow_mut(&mut self, id: u64) -> Option<&mut FluidFlow> {
        self.flows.iter_mut().find(|f| f.id == id)
    }

    pub fn flows(&self) -> &[FluidFlow] {
        &self.flows
    }
}

/// Allocate rates to every flow; returns `(flow id, rate)` pairs in
/// flow-id order. Never over-allocates and never exceeds a flow's demand.
pub fn fluid_share(link: &FluidLink) -> Vec<(u64, f64)> {
    let mut residual = link.capacity_kbps;
    let mut rates: Vec<(u64, f64)> = Vec::with_capacity(link.flows().len());

    for flow in link.flows().iter().filter(|f| f.expedited) {
        let rate = flow.demand_kbps.min(residual);
        residual -= rate;
        rates.push((flow.id, rate));
    }

    let be_demand: f64 =
        link.flows().iter().filter(|f| !f.expedited).map(|f| f.demand_kbps).sum();
    for flow in link.flows().iter().filter(|f| !f.expedited) {
        let rate = if be_demand <= residual {
            flow.demand_kbps
        } else {
            residual * flow.demand_kbps / be_demand
        };
        rates.push((flow.id, rate));
    }

    rates.sort_by_key(|(id, _)| *id);
    rates
}
