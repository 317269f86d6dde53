// Validation deliberately writes `!(x > 0.0)` instead of `x <= 0.0`: the
// negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Policy-driven QoS admission control with fuzzy adaptive bandwidth
//! allocation.
//!
//! The crate provides, as independent building blocks:
//!
//! - [`fuzzy`] — a small Mamdani inference engine with Gaussian membership
//!   functions, min/max connectives, clip implication, and centroid
//!   defuzzification, plus a line-oriented rule-file format;
//! - [`allocator`] — per-class bandwidth thresholds computed from measured
//!   class loads through a policy-scaled fuzzy rule base;
//! - [`admission`] — accept/reject decisions for session requests on a
//!   shared link under class-agnostic, fixed-partition, or adaptive limits;
//! - [`monitor`] — counter-based bandwidth and utilization measurement with
//!   EWMA smoothing and hysteresis triggers;
//! - [`policy`] — `IF (condition) THEN (action)` QoS rules with a per-flow
//!   DSCP table and a replayable action log;
//! - [`sim`] — a deterministic flow-level loss-system simulator and a
//!   scripted congestion scenario on a fluid link model;
//! - [`oracle`] — exact product-form blocking probabilities for validating
//!   the simulator;
//! - [`config`], [`sweep`], [`metrics`] — scenario configuration, parameter
//!   sweeps, aggregation, and file emission.
//!
//! The `examples/` directory contains one runnable example per capability;
//! the `qostool` binary wires the same pieces into a command-line workflow.

pub mod admission;
pub mod allocator;
pub mod config;
pub mod error;
pub mod fuzzy;
pub mod metrics;
pub mod monitor;
pub mod oracle;
pub mod policy;
pub mod sim;
pub mod sweep;

pub use error::{Error, Result};
