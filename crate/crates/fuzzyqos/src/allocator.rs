//! Fuzzy-rule-based bandwidth allocation.
//!
//! Builds a per-class fuzzy system from a high-level allocation policy,
//! turns measured per-class aggregates into normalized load inputs, and
//! produces effective admission thresholds: the per-class threshold is the
//! larger of the policy's base share and the fuzzy allocation, capped at the
//! link capacity.

use crate::error::{Error, Result};
use crate::fuzzy::{
    Connective, FuzzyRule, GaussianMf, LinguisticVariable, RuleBase, DEFAULT_RESOLUTION,
};

/// Input set parameters on the normalized (unit-share) universe.
/// Scaled by `B_j / B_T` when the system is built.
const INPUT_SETS: [(&str, f64, f64); 3] =
    [("LL", 0.0, 0.17), ("ML", 0.5, 0.13), ("HL", 1.0, 0.17)];

/// Output set parameters on the fixed [0, 1] allocation universe.
const OUTPUT_SETS: [(&str, f64, f64); 3] =
    [("LA", 0.0, 0.17), ("MA", 0.5, 0.13), ("HA", 1.0, 0.17)];

/// Bundled default rule table (normalized template for three classes).
pub const DEFAULT_RULES_TEXT: &str = include_str!("../assets/default.rules");

/// Total link bandwidth plus per-class base shares.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationPolicySet {
    total_kbps: f64,
    shares: Vec<f64>,
}

impl AllocationPolicySet {
    /// `shares[j]` is the fraction `B_j / B_T`, each in (0, 1].
    pub fn new(total_kbps: f64, shares: Vec<f64>) -> Result<Self> {
        if !(total_kbps > 0.0) || !total_kbps.is_finite() {
            return Err(Error::Config(format!("total bandwidth must be > 0, got {total_kbps}")));
        }
        if shares.len() < 2 {
            return Err(Error::Config("need at least two traffic classes".into()));
        }
        for (j, s) in shares.iter().enumerate() {
            if !(*s > 0.0 && *s <= 1.0) {
                return Err(Error::Config(format!(
                    "class {} share must be in (0, 1], got {s}",
                    j + 1
                )));
            }
        }
        Ok(AllocationPolicySet { total_kbps, shares })
    }

    pub fn total_kbps(&self) -> f64 {
        self.total_kbps
    }

    pub fn class_count(&self) -> usize {
        self.shares.len()
    }

    pub fn share(&self, class: usize) -> f64 {
        self.shares[class]
    }

    /// Base allocation `B_j` in kbit/s.
    pub fn base_kbps(&self, class: usize) -> f64 {
        self.shares[class] * self.total_kbps
    }

    pub fn base_allocations(&self) -> Vec<f64> {
        (0..self.shares.len()).map(|j| self.base_kbps(j)).collect()
    }
}

/// Per-class fuzzy allocation and effective admission threshold, in kbit/s.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AllocationResult {
    pub fls_kbps: Vec<f64>,
    pub threshold_kbps: Vec<f64>,
}

/// A policy-scaled fuzzy system ready for inference.
///
/// Immutable after construction; policy reconfiguration builds a new system.
#[derive(Debug, Clone)]
pub struct FrbSystem {
    rule_base: RuleBase,
    policy: AllocationPolicySet,
}

impl FrbSystem {
    pub fn rule_base(&self) -> &RuleBase {
        &self.rule_base
    }

    pub fn policy(&self) -> &AllocationPolicySet {
        &self.policy
    }
}

/// Enumerate the default rule table for `classes` traffic classes on
/// normalized (unit) universes.
///
/// Every combination of {LL, ML, HL} antecedents yields one rule; the
/// consequent for each class is driven by the spare capacity of the other
/// classes, scored LL=0, ML=1, HL=2 and summed to `s`: the lower the others'
/// total load score, the higher the allocation. With `smax = 2(classes-1)`,
/// the consequent is HA when `4s <= smax`, LA when `4s > 3*smax`, MA
/// otherwise (for three classes: HA at s <= 1, MA at 2..3, LA at s = 4).
pub fn default_rule_table(classes: usize) -> Result<RuleBase> {
    if classes < 2 {
        return Err(Error::Config("default rule table needs at least two classes".into()));
    }
    let mut inputs = Vec::with_capacity(classes);
    let mut outputs = Vec::with_capacity(classes);
    for j in 0..classes {
        let mut iv = LinguisticVariable::new(format!("class{}_load", j + 1), 0.0, 1.0)?;
        for (label, mean, sigma) in INPUT_SETS {
            iv.add_set(label, GaussianMf::new(mean, sigma)?)?;
        }
        inputs.push(iv);
        let mut ov = LinguisticVariable::new(format!("class{}_res", j + 1), 0.0, 1.0)?;
        for (label, mean, sigma) in OUTPUT_SETS {
            ov.add_set(label, GaussianMf::new(mean, sigma)?)?;
        }
        outputs.push(ov);
    }

    let smax = 2 * (classes - 1);
    let count = 3usize.pow(classes as u32);
    let mut rules = Vec::with_capacity(count);
    for z in 0..count {
        // digits of z in base 3 pick the antecedent label per class
        let mut digits = Vec::with_capacity(classes);
        let mut rem = z;
        for _ in 0..classes {
            digits.push(rem % 3);
            rem /= 3;
        }
        digits.reverse();
        let antecedents: Vec<(usize, String)> = digits
            .iter()
            .enumerate()
            .map(|(j, &d)| (j, INPUT_SETS[d].0.to_string()))
            .collect();
        let consequents: Vec<(usize, String)> = (0..classes)
            .map(|j| {
                let s: usize = digits
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != j)
                    .map(|(_, &d)| d)
                    .sum();
                let label = if 4 * s <= smax {
                    "HA"
                } else if 4 * s > 3 * smax {
                    "LA"
                } else {
                    "MA"
                };
                (j, label.to_string())
            })
            .collect();
        rules.push(FuzzyRule {
            id: (z + 1) as u32,
            antecedents,
            connective: Connective::And,
            consequents,
        });
    }
    RuleBase::new(inputs, outputs, rules, DEFAULT_RESOLUTION)
}

/// Build the policy-scaled fuzzy system.
///
/// `template` must use normalized [0, 1] input universes (the bundled table
/// or an operator-supplied rule file); each class's input universe and set
/// parameters are scaled by that class's share. Pass `None` for the default
/// table.
pub fn build_frb(policy: &AllocationPolicySet, template: Option<RuleBase>) -> Result<FrbSystem> {
    let template = match template {
        Some(t) => t,
        None => default_rule_table(policy.class_count())?,
    };
    if template.inputs().len() != policy.class_count() {
        return Err(Error::Config(format!(
            "rule table has {} input variables but the policy has {} classes",
            template.inputs().len(),
            policy.class_count()
        )));
    }
    let mut inputs = Vec::with_capacity(policy.class_count());
    for (j, var) in template.inputs().iter().enumerate() {
        let (lo, hi) = var.universe();
        if lo != 0.0 || hi != 1.0 {
            return Err(Error::Config(format!(
                "input variable {:?} must use a normalized [0, 1] universe",
                var.name()
            )));
        }
        let share = policy.share(j);
        let mut scaled = LinguisticVariable::new(var.name(), 0.0, share)?;
        for (label, mf) in var.sets() {
            scaled.add_set(label, GaussianMf::new(mf.mean() * share, mf.sigma() * share)?)?;
        }
        inputs.push(scaled);
    }
    let rule_base = RuleBase::new(
        inputs,
        template.outputs().to_vec(),
        template.rules().to_vec(),
        template.resolution(),
    )?;
    Ok(FrbSystem { rule_base, policy: policy.clone() })
}

/// Normalized load inputs: `min(b_j / B_T, B_j / B_T)` per class.
pub fn compute_inputs(measured_kbps: &[f64], policy: &AllocationPolicySet) -> Result<Vec<f64>> {
    if measured_kbps.len() != policy.class_count() {
        return Err(Error::InvalidMeasurement(format!(
            "expected {} class aggregates, got {}",
            policy.class_count(),
            measured_kbps.len()
        )));
    }
    measured_kbps
        .iter()
        .enumerate()
        .map(|(j, &b)| {
            if !(b >= 0.0) {
                return Err(Error::InvalidMeasurement(format!(
                    "class {} aggregate must be >= 0, got {b}",
                    j + 1
                )));
            }
            Ok((b / policy.total_kbps()).min(policy.share(j)))
        })
        .collect()
}

/// Run inference and apply the threshold rule
/// `B_th^j = min(B_T, max(B_j, y_j * B_T))`.
pub fn compute_allocations(frb: &FrbSystem, inputs: &[f64]) -> Result<AllocationResult> {
    let outputs = frb.rule_base.infer(inputs)?;
    let total = frb.policy.total_kbps();
    let fls_kbps: Vec<f64> = outputs.iter().map(|y| y * total).collect();
    let threshold_kbps: Vec<f64> = fls_kbps
        .iter()
        .enumerate()
        .map(|(j, &fls)| fls.max(frb.policy.base_kbps(j)).min(total))
        .collect();
    Ok(AllocationResult { fls_kbps, threshold_kbps })
}
