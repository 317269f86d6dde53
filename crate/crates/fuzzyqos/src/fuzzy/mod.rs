//! Mamdani fuzzy inference engine: Gaussian membership functions, min/max
//! rule firing, clipped-set max-aggregation and centroid defuzzification.
//!
//! Rule bases are immutable after construction; [`RuleBase::infer`] is a pure
//! function and safe to call from any number of threads.

mod parse;

use crate::error::{Error, Result};

/// Default number of discretization points per output universe.
///
/// Chosen so that centroids of the Gaussian sets used here differ from a
/// 100001-point reference integration by less than 1e-3.
pub const DEFAULT_RESOLUTION: usize = 201;

/// Minimum admissible discretization resolution.
pub const MIN_RESOLUTION: usize = 101;

/// Gaussian membership function `exp(-0.5 (x - mean)^2 / sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMf {
    mean: f64,
    sigma: f64,
}

impl GaussianMf {
    pub fn new(mean: f64, sigma: f64) -> Result<Self> {
        if !mean.is_finite() || !sigma.is_finite() {
            return Err(Error::InvalidParameter("non-finite Gaussian parameter".into()));
        }
        if sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!("sigma must be > 0, got {sigma}")));
        }
        Ok(GaussianMf { mean, sigma })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Membership grade at `x`, in (0, 1]. Errors on non-finite `x`.
    pub fn grade(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite input {x}")));
        }
        Ok(self.eval(x))
    }

    #[inline]
    pub(crate) fn eval(&self, x: f64) -> f64 {
        let d = (x - self.mean) / self.sigma;
        (-0.5 * d * d).exp()
    }
}

/// A named variable over a bounded universe with labeled Gaussian sets.
#[derive(Debug, Clone, PartialEq)]
pub struct LinguisticVariable {
    name: String,
    lo: f64,
    hi: f64,
    sets: Vec<(String, GaussianMf)>,
}

impl LinguisticVariable {
    pub fn new(name: impl Into<String>, lo: f64, hi: f64) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::InvalidParameter("variable name must be non-empty".into()));
        }
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::InvalidParameter(format!(
                "universe bounds must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(LinguisticVariable { name, lo, hi, sets: Vec::new() })
    }

    /// Attach a labeled membership function. The mean must lie within the
    /// universe and labels must be unique and non-empty.
    pub fn add_set(&mut self, label: impl Into<String>, mf: GaussianMf) -> Result<()> {
        let label = label.into();
        if label.is_empty() {
            return Err(Error::InvalidParameter("set label must be non-empty".into()));
        }
        if self.sets.iter().any(|(l, _)| *l == label) {
            return Err(Error::InvalidParameter(format!(
                "duplicate set label {label:?} on variable {:?}",
                self.name
            )));
        }
        if mf.mean() < self.lo || mf.mean() > self.hi {
            return Err(Error::InvalidParameter(format!(
                "mean {} of set {label:?} lies outside universe [{}, {}]",
                mf.mean(),
                self.lo,
                self.hi
            )));
        }
        self.sets.push((label, mf));
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn universe(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn sets(&self) -> impl Iterator<Item = (&str, &GaussianMf)> {
        self.sets.iter().map(|(l, m)| (l.as_str(), m))
    }

    pub fn set(&self, label: &str) -> Option<&GaussianMf> {
        self.sets.iter().find(|(l, _)| l == label).map(|(_, m)| m)
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

/// Antecedent connective. `And` combines grades with min, `Or` with max.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connective {
    And,
    Or,
}

/// One IF-THEN rule over the owning rule base's variables.
///
/// Antecedents and consequents reference variables by index and sets by
/// label; validity is checked when the [`RuleBase`] is constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyRule {
    pub id: u32,
    pub antecedents: Vec<(usize, String)>,
    pub connective: Connective,
    pub consequents: Vec<(usize, String)>,
}

/// An immutable Mamdani rule base.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleBase {
    inputs: Vec<LinguisticVariable>,
    outputs: Vec<LinguisticVariable>,
    rules: Vec<FuzzyRule>,
    resolution: usize,
}

impl RuleBase {
    pub fn new(
        inputs: Vec<LinguisticVariable>,
        outputs: Vec<LinguisticVariable>,
        rules: Vec<FuzzyRule>,
        resolution: usize,
    ) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::Config("rule base needs at least one input variable".into()));
        }
        if outputs.is_empty() {
            return Err(Error::Config("rule base needs at least one output variable".into()));
        }
        if rules.is_empty() {
            return Err(Error::Config("rule base needs at least one rule".into()));
        }
        if resolution < MIN_RESOLUTION {
            return Err(Error::Config(format!(
                "resolution {resolution} below minimum {MIN_RESOLUTION}"
            )));
        }
        let mut seen_ids = std::collections::BTreeSet::new();
        for rule in &rules {
            if !seen_ids.insert(rule.id) {
                return Err(Error::Config(format!("duplicate rule id {}", rule.id)));
            }
            if rule.antecedents.is_empty() {
                return Err(Error::Config(format!("rule {} has no antecedents", rule.id)));
            }
            if rule.consequents.is_empty() {
                return Err(Error::Config(format!("rule {} has no consequents", rule.id)));
            }
            for (idx, label) in &rule.antecedents {
                let var = inputs.get(*idx).ok_or_else(|| {
                    Error::Config(format!("rule {} references input index {idx}", rule.id))
                })?;
                if var.set(label).is_none() {
                    return Err(Error::Config(format!(
                        "rule {} references unknown label {label:?} on input {:?}",
                        rule.id,
                        var.name()
                    )));
                }
            }
            for (idx, label) in &rule.consequents {
                let var = outputs.get(*idx).ok_or_else(|| {
                    Error::Config(format!("rule {} references output index {idx}", rule.id))
                })?;
                if var.set(label).is_none() {
                    return Err(Error::Config(format!(
                        "rule {} references unknown label {label:?} on output {:?}",
                        rule.id,
                        var.name()
                    )));
                }
            }
        }
        Ok(RuleBase { inputs, outputs, rules, resolution })
    }

    pub fn inputs(&self) -> &[LinguisticVariable] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[LinguisticVariable] {
        &self.outputs
    }

    pub fn rules(&self) -> &[FuzzyRule] {
        &self.rules
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Returns a copy with a different discretization resolution.
    pub fn with_resolution(&self, resolution: usize) -> Result<Self> {
        RuleBase::new(self.inputs.clone(), self.outputs.clone(), self.rules.clone(), resolution)
    }

    /// Firing strength of one rule: min of antecedent grades under `And`,
    /// max under `Or`. Inputs are clamped to their universes first.
    pub fn fire_rule(&self, rule: &FuzzyRule, inputs: &[f64]) -> Result<f64> {
        self.check_inputs(inputs)?;
        Ok(self.fire(rule, inputs))
    }

    fn check_inputs(&self, inputs: &[f64]) -> Result<()> {
        if inputs.len() != self.inputs.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} inputs, got {}",
                self.inputs.len(),
                inputs.len()
            )));
        }
        if let Some(x) = inputs.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite input {x}")));
        }
        Ok(())
    }

    fn fire(&self, rule: &FuzzyRule, inputs: &[f64]) -> f64 {
        let mut strength: f64 = match rule.connective {
            Connective::And => 1.0,
            Connective::Or => 0.0,
        };
        for (idx, label) in &rule.antecedents {
            let var = &self.inputs[*idx];
            let grade = var.set(label).expect("validated at construction").eval(var.clamp(inputs[*idx]));
            strength = match rule.connective {
                Connective::And => strength.min(grade),
                Connective::Or => strength.max(grade),
            };
        }
        strength
    }

    /// Crisp output per output variable.
    ///
    /// For each output the aggregate set over a uniform grid is the max over
    /// rules of min(firing strength, consequent grade); the returned value is
    /// its trapezoidal centroid, or the universe midpoint when the aggregate
    /// has zero area.
    pub fn infer(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        self.check_inputs(inputs)?;
        let strengths: Vec<f64> = self.rules.iter().map(|r| self.fire(r, inputs)).collect();
        let n = self.resolution;
        let mut out = Vec::with_capacity(self.outputs.len());
        for (out_idx, var) in self.outputs.iter().enumerate() {
            let (lo, hi) = var.universe();
            let step = (hi - lo) / (n - 1) as f64;
            // (strength, mf) pairs of every consequent targeting this output
            let clips: Vec<(f64, &GaussianMf)> = self
                .rules
                .iter()
                .zip(&strengths)
                .flat_map(|(rule, &w)| {
                    rule.consequents
                        .iter()
                        .filter(move |(idx, _)| *idx == out_idx)
                        .map(move |(_, label)| (w, var.set(label).expect("validated")))
                })
                .collect();
            let mut num = 0.0;
            let mut den = 0.0;
            let mut prev: Option<(f64, f64)> = None;
            for i in 0..n {
                let x = lo + step * i as f64;
                let mut agg = 0.0f64;
                for (w, mf) in &clips {
                    agg = agg.max(w.min(mf.eval(x)));
                }
                if let Some((px, py)) = prev {
                    den += 0.5 * (py + agg) * step;
                    num += 0.5 * (px * py + x * agg) * step;
                }
                prev = Some((x, agg));
            }
            out.push(if den > 0.0 { num / den } else { 0.5 * (lo + hi) });
        }
        Ok(out)
    }
}
