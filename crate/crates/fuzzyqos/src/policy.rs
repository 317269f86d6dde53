//! High-level QoS policy rules and their runtime evaluation.
//!
//! Two rule shapes are supported, one static and one measurement-driven:
//!
//! ```text
//! IF (flow==17) THEN (mark dscp 0x2e)
//! IF (bandwidth_utilization==high) THEN (mark 17 dscp 0x2e)
//! ```
//!
//! Linguistic states such as `high` resolve through a state map
//! (`state <event> <name> := <metric> <op> <value>` lines). Fired actions
//! update the per-flow DSCP look-up table and are emitted as a structured
//! action log; replaying the log from the initial table reproduces the
//! final table exactly.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};

/// Best-effort DSCP, the default for unconfigured flows.
pub const DSCP_BEST_EFFORT: u8 = 0x00;

/// Expedited Forwarding DSCP.
pub const DSCP_EF: u8 = 0x2e;

/// Inclusive flow-identifier range; a single id is a one-element range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct IdRange {
    pub first: u64,
    pub last: u64,
}

impl IdRange {
    pub fn single(id: u64) -> Self {
        IdRange { first: id, last: id }
    }

    pub fn contains(&self, id: u64) -> bool {
        id >= self.first && id <= self.last
    }
}

impl std::fmt::Display for IdRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.first == self.last {
            write!(f, "{}", self.first)
        } else {
            write!(f, "{}-{}", self.first, self.last)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    /// Static per-flow provisioning: applies whenever evaluated.
    FlowMatch(IdRange),
    /// Measurement-driven: `(event == state)` resolved via the state map.
    TemporalEvent { event: String, state: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyAction {
    /// Mark flows with a DSCP. `target` is `None` for `FlowMatch` rules,
    /// where the condition's identifier supplies the flows.
    MarkDscp { target: Option<IdRange>, dscp: u8 },
    /// Replace the per-class allocation shares.
    SetAllocation { shares: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRule {
    pub name: String,
    pub condition: Condition,
    pub action: PolicyAction,
    pub enabled: bool,
}

/// Comparison operator of a state-map predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Ge,
    Gt,
    Le,
    Lt,
    Eq,
}

impl Comparator {
    fn holds(&self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparator::Ge => lhs >= rhs,
            Comparator::Gt => lhs > rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Lt => lhs < rhs,
            Comparator::Eq => lhs == rhs,
        }
    }

    fn as_str(&self) -> &'static str {
        match self {
            Comparator::Ge => ">=",
            Comparator::Gt => ">",
            Comparator::Le => "<=",
            Comparator::Lt => "<",
            Comparator::Eq => "==",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    pub metric: String,
    pub comparator: Comparator,
    pub threshold: f64,
}

/// Maps `(event, state)` names to measurement predicates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinguisticStateMap {
    entries: BTreeMap<(String, String), Predicate>,
}

impl LinguisticStateMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Ships `high` utilization at the 80% trigger point.
    pub fn with_defaults() -> Self {
        let mut map = Self::new();
        map.insert(
            "bandwidth_utilization",
            "high",
            Predicate { metric: "utilization".into(), comparator: Comparator::Ge, threshold: 0.80 },
        );
        map
    }

    pub fn insert(&mut self, event: &str, state: &str, predicate: Predicate) {
        self.entries.insert((event.to_string(), state.to_string()), predicate);
    }

    pub fn get(&self, event: &str, state: &str) -> Option<&Predicate> {
        self.entries.get(&(event.to_string(), state.to_string()))
    }

    /// Parse `state <event> <name> := <metric> <op> <value>` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = Self::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != 7 || tokens[0] != "state" || tokens[3] != ":=" {
                return Err(Error::parse(
                    lineno,
                    "expected `state <event> <name> := <metric> <op> <value>`",
                ));
            }
            let comparator = match tokens[5] {
                ">=" => Comparator::Ge,
                ">" => Comparator::Gt,
                "<=" => Comparator::Le,
                "<" => Comparator::Lt,
                "==" => Comparator::Eq,
                op => return Err(Error::parse(lineno, format!("unknown comparator {op:?}"))),
            };
            let threshold: f64 = tokens[6]
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid threshold {:?}", tokens[6])))?;
            map.insert(
                tokens[1],
                tokens[2],
                Predicate { metric: tokens[4].to_string(), comparator, threshold },
            );
        }
        Ok(map)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for ((event, state), p) in &self.entries {
            out.push_str(&format!(
                "state {event} {state} := {} {} {}\n",
                p.metric,
                p.comparator.as_str(),
                p.threshold
            ));
        }
        out
    }
}

fn strip_comment(raw: &str) -> &str {
    match raw.find('#') {
        Some(pos) => raw[..pos].trim(),
        None => raw.trim(),
    }
}

/// Parse a policy file: one rule per line, evaluation priority = line order.
/// Temporal state names must resolve in `states`.
pub fn parse_policy(text: &str, states: &LinguisticStateMap) -> Result<Vec<PolicyRule>> {
    let mut rules = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        rules.push(parse_rule_line(line, lineno, states, rules.len() + 1)?);
    }
    Ok(rules)
}

fn parse_rule_line(
    line: &str,
    lineno: usize,
    states: &LinguisticStateMap,
    ordinal: usize,
) -> Result<PolicyRule> {
    let rest = line
        .strip_prefix("IF")
        .ok_or_else(|| Error::parse(lineno, "rule must start with `IF`"))?
        .trim_start();
    let (cond_text, rest) = take_parenthesized(rest, lineno)?;
    let rest = rest.trim_start();
    let rest = rest
        .strip_prefix("THEN")
        .ok_or_else(|| Error::parse(lineno, "expected `THEN` after the condition"))?
        .trim_start();
    let (action_text, trailing) = take_parenthesized(rest, lineno)?;
    if !trailing.trim().is_empty() {
        return Err(Error::parse(lineno, format!("unexpected trailing input {trailing:?}")));
    }

    let (lhs, rhs) = cond_text
        .split_once("==")
        .ok_or_else(|| Error::parse(lineno, "condition must have the form `<lhs>==<rhs>`"))?;
    let (lhs, rhs) = (lhs.trim(), rhs.trim());
    let condition = if lhs == "flow" {
        Condition::FlowMatch(parse_id_range(rhs, lineno)?)
    } else {
        if states.get(lhs, rhs).is_none() {
            return Err(Error::parse(
                lineno,
                format!("state {rhs:?} of event {lhs:?} is not in the state map"),
            ));
        }
        Condition::TemporalEvent { event: lhs.to_string(), state: rhs.to_string() }
    };

    let action = parse_action(action_text, lineno, &condition)?;
    Ok(PolicyRule { name: format!("rule{ordinal}"), condition, action, enabled: true })
}

fn take_parenthesized(text: &str, lineno: usize) -> Result<(&str, &str)> {
    let text = text
        .strip_prefix('(')
        .ok_or_else(|| Error::parse(lineno, "expected `(`"))?;
    let close = text
        .find(')')
        .ok_or_else(|| Error::parse(lineno, "missing `)`"))?;
    Ok((&text[..close], &text[close + 1..]))
}

fn parse_id_range(s: &str, lineno: usize) -> Result<IdRange> {
    if let Some((a, b)) = s.split_once('-') {
        let first: u64 = a
            .trim()
            .parse()
            .map_err(|_| Error::parse(lineno, format!("invalid flow id {a:?}")))?;
        let last: u64 = b
            .trim()
            .parse()
            .map_err(|_| Error::parse(lineno, format!("invalid flow id {b:?}")))?;
        if first > last {
            return Err(Error::parse(lineno, format!("empty id range {s:?}")));
        }
        Ok(IdRange { first, last })
    } else {
        Ok(IdRange::single(s.parse().map_err(|_| {
            Error::parse(lineno, format!("invalid flow id {s:?}"))
        })?))
    }
}

fn parse_dscp(s: &str, lineno: usize) -> Result<u8> {
    let value = if let Some(hex) = s.strip_prefix("0x") {
        u8::from_str_radix(hex, 16)
    } else {
        s.parse()
    }
    .map_err(|_| Error::parse(lineno, format!("malformed dscp {s:?}")))?;
    if value > 63 {
        return Err(Error::parse(lineno, format!("dscp {value} out of range [0, 63]")));
    }
    Ok(value)
}

fn parse_action(text: &str, lineno: usize, condition: &Condition) -> Result<PolicyAction> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    match tokens.as_slice() {
        ["mark", "dscp", dscp] => {
            if !matches!(condition, Condition::FlowMatch(_)) {
                return Err(Error::parse(
                    lineno,
                    "`mark dscp` without a flow id requires a flow condition",
                ));
            }
            Ok(PolicyAction::MarkDscp { target: None, dscp: parse_dscp(dscp, lineno)? })
        }
        ["mark", ids, "dscp", dscp] => Ok(PolicyAction::MarkDscp {
            target: Some(parse_id_range(ids, lineno)?),
            dscp: parse_dscp(dscp, lineno)?,
        }),
        ["allocate", shares @ ..] if !shares.is_empty() => {
            let shares = shares
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::parse(lineno, format!("invalid share {s:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(PolicyAction::SetAllocation { shares })
        }
        _ => Err(Error::parse(lineno, format!("unknown action {text:?}"))),
    }
}

/// Canonical text form of a rule list; parses back to structurally
/// identical rules.
pub fn policy_to_text(rules: &[PolicyRule]) -> String {
    let mut out = String::new();
    for rule in rules {
        let cond = match &rule.condition {
            Condition::FlowMatch(ids) => format!("flow=={ids}"),
            Condition::TemporalEvent { event, state } => format!("{event}=={state}"),
        };
        let action = match &rule.action {
            PolicyAction::MarkDscp { target: None, dscp } => format!("mark dscp 0x{dscp:02x}"),
            PolicyAction::MarkDscp { target: Some(ids), dscp } => {
                format!("mark {ids} dscp 0x{dscp:02x}")
            }
            PolicyAction::SetAllocation { shares } => {
                let parts: Vec<String> = shares.iter().map(|s| s.to_string()).collect();
                format!("allocate {}", parts.join(" "))
            }
        };
        out.push_str(&format!("IF ({cond}) THEN ({action})\n"));
    }
    out
}

/// Per-flow DSCP look-up table; absent flows are best-effort.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowQosTable {
    entries: BTreeMap<u64, u8>,
}

impl FlowQosTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dscp(&self, flow_id: u64) -> u8 {
        self.entries.get(&flow_id).copied().unwrap_or(DSCP_BEST_EFFORT)
    }

    pub fn set(&mut self, flow_id: u64, dscp: u8) {
        self.entries.insert(flow_id, dscp);
    }

    pub fn entries(&self) -> impl Iterator<Item = (u64, u8)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }
}

/// Outcome of one fired (or skipped) action, emitted as a JSON line.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActionOutcome {
    MarkDscp { flow_id: u64, dscp: u8, changed: bool },
    SetAllocation { shares: Vec<f64> },
    SkippedUnknownFlow { flow_id: u64 },
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ActionRecord {
    pub timestamp_s: f64,
    pub rule: String,
    #[serde(flatten)]
    pub outcome: ActionOutcome,
}

/// Inputs to one evaluation instant.
#[derive(Debug, Clone)]
pub struct EvalContext<'a> {
    pub timestamp_s: f64,
    pub measurements: &'a HashMap<String, f64>,
    pub active_flows: &'a BTreeSet<u64>,
    /// Initial transport (DiffServ) configuration must have succeeded
    /// before runtime rules may be evaluated.
    pub transport_configured: bool,
}

/// Evaluate the rules in priority order against one measurement instant.
///
/// Fired `MarkDscp` actions write the table (idempotently); actions naming
/// flows that are not active produce a skip record. Returns the action log
/// for this instant.
pub fn evaluate(
    rules: &[PolicyRule],
    ctx: &EvalContext<'_>,
    states: &LinguisticStateMap,
    table: &mut FlowQosTable,
) -> Result<Vec<ActionRecord>> {
    if !ctx.transport_configured && rules.iter().any(|r| r.enabled) {
        return Err(Error::Config(
            "initial transport configuration must succeed before runtime policies run".into(),
        ));
    }
    let mut records = Vec::new();
    for rule in rules.iter().filter(|r| r.enabled) {
        let (holds, matched) = match &rule.condition {
            Condition::FlowMatch(ids) => (true, Some(*ids)),
            Condition::TemporalEvent { event, state } => {
                let predicate = states.get(event, state).ok_or_else(|| {
                    Error::Config(format!("state {state:?} of event {event:?} is unmapped"))
                })?;
                let value = ctx.measurements.get(&predicate.metric).ok_or_else(|| {
                    Error::InvalidMeasurement(format!(
                        "rule {:?} needs metric {:?}",
                        rule.name, predicate.metric
                    ))
                })?;
                (predicate.comparator.holds(*value, predicate.threshold), None)
            }
        };
        if !holds {
            continue;
        }
        match &rule.action {
            PolicyAction::MarkDscp { target, dscp } => {
                let ids = target.or(matched).ok_or_else(|| {
                    Error::Config(format!("rule {:?} has no flow target", rule.name))
                })?;
                for flow_id in ids.first..=ids.last {
                    let outcome = if ctx.active_flows.contains(&flow_id) {
                        let changed = table.dscp(flow_id) != *dscp;
                        if changed {
                            table.set(flow_id, *dscp);
                        }
                        ActionOutcome::MarkDscp { flow_id, dscp: *dscp, changed }
                    } else {
                        ActionOutcome::SkippedUnknownFlow { flow_id }
                    };
                    records.push(ActionRecord {
                        timestamp_s: ctx.timestamp_s,
                        rule: rule.name.clone(),
                        outcome,
                    });
                }
            }
            PolicyAction::SetAllocation { shares } => {
                records.push(ActionRecord {
                    timestamp_s: ctx.timestamp_s,
                    rule: rule.name.clone(),
                    outcome: ActionOutcome::SetAllocation { shares: clone_shares(shares) },
                });
            }
        }
    }
    Ok(records)
}

fn clone_shares(shares: &[f64]) -> Vec<f64> {
    shares.to_vec()
}

/// Apply an action log to a table; replaying the full log from the initial
/// table reproduces the final table.
pub fn replay(records: &[ActionRecord], table: &mut FlowQosTable) {
    for record in records {
        if let ActionOutcome::MarkDscp { flow_id, dscp, changed } = &record.outcome {
            if *changed {
                table.set(*flow_id, *dscp);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx<'a>(
        util: f64,
        measurements: &'a mut HashMap<String, f64>,
        flows: &'a BTreeSet<u64>,
    ) -> EvalContext<'a> {
        measurements.insert("utilization".into(), util);
        EvalContext {
            timestamp_s: 0.0,
            measurements,
            active_flows: flows,
            transport_configured: true,
        }
    }

    #[test]
    fn parse_flow_match_rule() {
        let states = LinguisticStateMap::with_defaults();
        let rules = parse_policy("IF (flow==17) THEN (mark dscp 0x2e)\n", &states).unwrap();
        assert_eq!(rules.len(), 1);
        assert_eq!(rules[0].condition, Condition::FlowMatch(IdRange::single(17)));
        assert_eq!(rules[0].action, PolicyAction::MarkDscp { target: None, dscp: 0x2e });
    }

    #[test]
    fn parse_temporal_rule() {
        let states = LinguisticStateMap::with_defaults();
        let rules =
            parse_policy("IF (bandwidth_utilization==high) THEN (mark 17 dscp 0x2e)\n", &states)
                .unwrap();
        assert_eq!(
            rules[0].condition,
            Condition::TemporalEvent {
                event: "bandwidth_utilization".into(),
                state: "high".into()
            }
        );
    }

    #[test]
    fn unknown_state_is_a_parse_error() {
        let states = LinguisticStateMap::with_defaults();
        let err = parse_policy("IF (bandwidth==tall) THEN (mark 1 dscp 0x2e)\n", &states)
            .unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 1);
                assert!(message.contains("tall"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dscp_out_of_range_rejected() {
        let states = LinguisticStateMap::with_defaults();
        assert!(parse_policy("IF (flow==1) THEN (mark dscp 0x7f)\n", &states).is_err());
    }

    #[test]
    fn round_trip() {
        let states = LinguisticStateMap::with_defaults();
        let text = "IF (flow==17) THEN (mark dscp 0x2e)\n\
                    IF (bandwidth_utilization==high) THEN (mark 17-19 dscp 0x2e)\n\
                    IF (bandwidth_utilization==high) THEN (allocate 0.3 0.4 0.3)\n";
        let rules = parse_policy(text, &states).unwrap();
        let rules2 = parse_policy(&policy_to_text(&rules), &states).unwrap();
        assert_eq!(rules, rules2);
    }

    #[test]
    fn state_map_round_trip() {
        let text = "state bandwidth_utilization high := utilization >= 0.8\n";
        let map = LinguisticStateMap::parse(text).unwrap();
        assert_eq!(LinguisticStateMap::parse(&map.to_text()).unwrap(), map);
    }

    #[test]
    fn temporal_rule_fires_and_is_idempotent() {
        let states = LinguisticStateMap::with_defaults();
        let rules =
            parse_policy("IF (bandwidth_utilization==high) THEN (mark 17 dscp 0x2e)\n", &states)
                .unwrap();
        let flows: BTreeSet<u64> = [17].into();
        let mut table = FlowQosTable::new();
        let mut m = HashMap::new();

        // below threshold: nothing fires
        let records = evaluate(&rules, &ctx(0.75, &mut m, &flows), &states, &mut table).unwrap();
        assert!(records.is_empty());
        assert_eq!(table.dscp(17), DSCP_BEST_EFFORT);

        // above threshold: marks
        let records = evaluate(&rules, &ctx(0.85, &mut m, &flows), &states, &mut table).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(table.dscp(17), 0x2e);

        // idempotent: second evaluation changes nothing
        let before = table.clone();
        let records = evaluate(&rules, &ctx(0.85, &mut m, &flows), &states, &mut table).unwrap();
        assert_eq!(
            records[0].outcome,
            ActionOutcome::MarkDscp { flow_id: 17, dscp: 0x2e, changed: false }
        );
        assert_eq!(table, before);
    }

    #[test]
    fn unknown_flow_skips_with_warning_record() {
        let states = LinguisticStateMap::with_defaults();
        let rules =
            parse_policy("IF (bandwidth_utilization==high) THEN (mark 99 dscp 0x2e)\n", &states)
                .unwrap();
        let flows: BTreeSet<u64> = [17].into();
        let mut table = FlowQosTable::new();
        let mut m = HashMap::new();
        let records = evaluate(&rules, &ctx(0.9, &mut m, &flows), &states, &mut table).unwrap();
        assert_eq!(records[0].outcome, ActionOutcome::SkippedUnknownFlow { flow_id: 99 });
        assert_eq!(table, FlowQosTable::new());
    }

    #[test]
    fn disabled_rules_never_fire() {
        let states = LinguisticStateMap::with_defaults();
        let mut rules =
            parse_policy("IF (bandwidth_utilization==high) THEN (mark 17 dscp 0x2e)\n", &states)
                .unwrap();
        rules[0].enabled = false;
        let flows: BTreeSet<u64> = [17].into();
        let mut table = FlowQosTable::new();
        let mut m = HashMap::new();
        let records = evaluate(&rules, &ctx(0.99, &mut m, &flows), &states, &mut table).unwrap();
        assert!(records.is_empty());
    }

    #[test]
    fn unconfigured_transport_is_an_error() {
        let states = LinguisticStateMap::with_defaults();
        let rules = parse_policy("IF (flow==1) THEN (mark dscp 0x2e)\n", &states).unwrap();
        let flows = BTreeSet::new();
        let m = HashMap::new();
        let ctx = EvalContext {
            timestamp_s: 0.0,
            measurements: &m,
            active_flows: &flows,
            transport_configured: false,
        };
        let mut table = FlowQosTable::new();
        assert!(matches!(evaluate(&rules, &ctx, &states, &mut table), Err(Error::Config(_))));
    }

    #[test]
    fn replay_reproduces_final_table() {
        let states = LinguisticStateMap::with_defaults();
        let rules = parse_policy(
            "IF (flow==1-3) THEN (mark dscp 0x2e)\nIF (bandwidth_utilization==high) THEN (mark 5 dscp 0x0a)\n",
            &states,
        )
        .unwrap();
        let flows: BTreeSet<u64> = [1, 2, 3, 5].into();
        let mut table = FlowQosTable::new();
        let mut m = HashMap::new();
        let mut log = Vec::new();
        log.extend(evaluate(&rules, &ctx(0.5, &mut m, &flows), &states, &mut table).unwrap());
        log.extend(evaluate(&rules, &ctx(0.9, &mut m, &flows), &states, &mut table).unwrap());

        let mut replayed = FlowQosTable::new();
        replay(&log, &mut replayed);
        assert_eq!(replayed, table);

        // records serialize as JSON lines
        let line = serde_json::to_string(&log[0]).unwrap();
        assert!(line.contains("\"rule\""));
    }
}
