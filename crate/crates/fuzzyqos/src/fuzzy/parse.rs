//! Line-oriented rule-file parsing and canonical serialization.
//!
//! Format ('#' starts a comment):
//!
//! ```text
//! input <name> universe <lo> <hi>
//!   set <LABEL> gaussian mean=<v> sigma=<v>
//! output <name> universe <lo> <hi>
//!   set <LABEL> gaussian mean=<v> sigma=<v>
//! rule <id>: IF <var> IS <LABEL> [AND|OR <var> IS <LABEL>]* THEN <outvar> IS <LABEL> [, <outvar> IS <LABEL>]*
//! ```

use super::{Connective, FuzzyRule, GaussianMf, LinguisticVariable, RuleBase, DEFAULT_RESOLUTION};
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Input,
    Output,
}

impl RuleBase {
    /// Parse a rule file into a validated rule base.
    pub fn parse(text: &str) -> Result<RuleBase> {
        let mut inputs: Vec<LinguisticVariable> = Vec::new();
        let mut outputs: Vec<LinguisticVariable> = Vec::new();
        let mut rules: Vec<FuzzyRule> = Vec::new();
        let mut section = Section::None;

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match tokens[0] {
                "input" | "output" => {
                    if tokens.len() != 5 || tokens[2] != "universe" {
                        return Err(Error::parse(
                            lineno,
                            format!("expected `{} <name> universe <lo> <hi>`", tokens[0]),
                        ));
                    }
                    let lo = parse_num(tokens[3], lineno)?;
                    let hi = parse_num(tokens[4], lineno)?;
                    let var = LinguisticVariable::new(tokens[1], lo, hi)
                        .map_err(|e| Error::parse(lineno, e.to_string()))?;
                    if tokens[0] == "input" {
                        inputs.push(var);
                        section = Section::Input;
                    } else {
                        outputs.push(var);
                        section = Section::Output;
                    }
                }
                "set" => {
                    if tokens.len() != 5
                        || tokens[2] != "gaussian"
                        || !tokens[3].starts_with("mean=")
                        || !tokens[4].starts_with("sigma=")
                    {
                        return Err(Error::parse(
                            lineno,
                            "expected `set <LABEL> gaussian mean=<v> sigma=<v>`",
                        ));
                    }
                    let mean = parse_num(&tokens[3]["mean=".len()..], lineno)?;
                    let sigma = parse_num(&tokens[4]["sigma=".len()..], lineno)?;
                    let mf = GaussianMf::new(mean, sigma)
                        .map_err(|e| Error::parse(lineno, e.to_string()))?;
                    let var = match section {
                        Section::Input => inputs.last_mut(),
                        Section::Output => outputs.last_mut(),
                        Section::None => None,
                    }
                    .ok_or_else(|| Error::parse(lineno, "`set` before any variable declaration"))?;
                    var.add_set(tokens[1], mf).map_err(|e| Error::parse(lineno, e.to_string()))?;
                }
                "rule" => {
                    section = Section::None;
                    rules.push(parse_rule(line, lineno, &inputs, &outputs)?);
                }
                other => {
                    return Err(Error::parse(lineno, format!("unknown directive {other:?}")));
                }
            }
        }

        if inputs.is_empty() && outputs.is_empty() && rules.is_empty() {
            return Err(Error::Config("empty rule file".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for r in &rules {
            if !seen.insert(r.id) {
                return Err(Error::Config(format!("duplicate rule id {}", r.id)));
            }
        }
        RuleBase::new(inputs, outputs, rules, DEFAULT_RESOLUTION)
    }

    /// Canonical text form; `parse(to_text(rb))` reconstructs `rb` exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (kind, vars) in [("input", self.inputs()), ("output", self.outputs())] {
            for var in vars {
                let (lo, hi) = var.universe();
                out.push_str(&format!("{kind} {} universe {lo} {hi}\n", var.name()));
                for (label, mf) in var.sets() {
                    out.push_str(&format!(
                        "  set {label} gaussian mean={} sigma={}\n",
                        mf.mean(),
                        mf.sigma()
                    ));
                }
            }
        }
        for rule in self.rules() {
            let conn = match rule.connective {
                Connective::And => "AND",
                Connective::Or => "OR",
            };
            let ants: Vec<String> = rule
                .antecedents
                .iter()
                .map(|(idx, label)| format!("{} IS {label}", self.inputs()[*idx].name()))
                .collect();
            let cons: Vec<String> = rule
                .consequents
                .iter()
                .map(|(idx, label)| format!("{} IS {label}", self.outputs()[*idx].name()))
                .collect();
            out.push_str(&format!(
                "rule {}: IF {} THEN {}\n",
                rule.id,
                ants.join(&format!(" {conn} ")),
                cons.join(", ")
            ));
        }
        out
    }
}

fn parse_num(s: &str, lineno: usize) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::parse(lineno, format!("invalid number {s:?}")))
}

fn parse_rule(
    line: &str,
    lineno: usize,
    inputs: &[LinguisticVariable],
    outputs: &[LinguisticVariable],
) -> Result<FuzzyRule> {
    let rest = line.strip_prefix("rule").unwrap().trim_start();
    let colon = rest
        .find(':')
        .ok_or_else(|| Error::parse(lineno, "expected `rule <id>:`"))?;
    let id: u32 = rest[..colon]
        .trim()
        .parse()
        .map_err(|_| Error::parse(lineno, format!("invalid rule id {:?}", &rest[..colon])))?;
    let body = rest[colon + 1..].trim();
    let body = body
        .strip_prefix("IF ")
        .ok_or_else(|| Error::parse(lineno, "expected `IF` after rule id"))?;
    let then_pos = body
        .find(" THEN ")
        .ok_or_else(|| Error::parse(lineno, "expected `THEN`"))?;
    let (if_part, then_part) = (&body[..then_pos], body[then_pos + " THEN ".len()..].trim());

    // Split the antecedent on AND/OR, requiring a consistent connective.
    let mut connective: Option<Connective> = None;
    let mut clauses: Vec<&str> = Vec::new();
    let mut remaining = if_part.trim();
    loop {
        let and_pos = remaining.find(" AND ");
        let or_pos = remaining.find(" OR ");
        let (pos, conn, width) = match (and_pos, or_pos) {
            (Some(a), Some(o)) if a < o => (Some(a), Connective::And, " AND ".len()),
            (Some(a), None) => (Some(a), Connective::And, " AND ".len()),
            (_, Some(o)) => (Some(o), Connective::Or, " OR ".len()),
            (None, None) => (None, Connective::And, 0),
        };
        match pos {
            Some(p) => {
                clauses.push(&remaining[..p]);
                match connective {
                    None => connective = Some(conn),
                    Some(c) if c != conn => {
                        return Err(Error::parse(lineno, "mixed AND/OR in one rule"));
                    }
                    Some(_) => {}
                }
                remaining = &remaining[p + width..];
            }
            None => {
                clauses.push(remaining);
                break;
            }
        }
    }

    let antecedents = clauses
        .iter()
        .map(|c| parse_clause(c, lineno, inputs, "input"))
        .collect::<Result<Vec<_>>>()?;
    let consequents = then_part
        .split(',')
        .map(|c| parse_clause(c, lineno, outputs, "output"))
        .collect::<Result<Vec<_>>>()?;
    Ok(FuzzyRule {
        id,
        antecedents,
        connective: connective.unwrap_or(Connective::And),
        consequents,
    })
}

fn parse_clause(
    clause: &str,
    lineno: usize,
    vars: &[LinguisticVariable],
    kind: &str,
) -> Result<(usize, String)> {
    let tokens: Vec<&str> = clause.split_whitespace().collect();
    if tokens.len() != 3 || tokens[1] != "IS" {
        return Err(Error::parse(lineno, format!("expected `<var> IS <LABEL>`, got {clause:?}")));
    }
    let idx = vars
        .iter()
        .position(|v| v.name() == tokens[0])
        .ok_or_else(|| Error::parse(lineno, format!("unknown {kind} variable {:?}", tokens[0])))?;
    if vars[idx].set(tokens[2]).is_none() {
        return Err(Error::parse(
            lineno,
            format!("unknown label {:?} on {kind} {:?}", tokens[2], tokens[0]),
        ));
    }
    Ok((idx, tokens[2].to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# two-input sample
input load1 universe 0 0.3
  set LL gaussian mean=0 sigma=0.051
  set HL gaussian mean=0.3 sigma=0.051
input load2 universe 0 0.4
  set LL gaussian mean=0 sigma=0.068
  set HL gaussian mean=0.4 sigma=0.068
output alloc universe 0 1
  set LA gaussian mean=0 sigma=0.17
  set HA gaussian mean=1 sigma=0.17
rule 1: IF load1 IS LL AND load2 IS LL THEN alloc IS HA
rule 2: IF load1 IS HL OR load2 IS HL THEN alloc IS LA
";

    #[test]
    fn parse_and_round_trip() {
        let rb = RuleBase::parse(SAMPLE).unwrap();
        assert_eq!(rb.inputs().len(), 2);
        assert_eq!(rb.rules().len(), 2);
        assert_eq!(rb.rules()[1].connective, Connective::Or);

        let text = rb.to_text();
        let rb2 = RuleBase::parse(&text).unwrap();
        assert_eq!(rb, rb2);
        // serialization is stable byte-for-byte
        assert_eq!(text, rb2.to_text());
    }

    #[test]
    fn empty_file_is_config_error() {
        assert!(matches!(RuleBase::parse(""), Err(Error::Config(_))));
        assert!(matches!(RuleBase::parse("# only comments\n"), Err(Error::Config(_))));
    }

    #[test]
    fn undeclared_label_names_the_label() {
        let bad = SAMPLE.replace("load2 IS LL THEN", "load2 IS XL THEN");
        match RuleBase::parse(&bad) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 11);
                assert!(message.contains("XL"), "message: {message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_rule_id_rejected() {
        let bad = SAMPLE.replace("rule 2:", "rule 1:");
        assert!(RuleBase::parse(&bad).is_err());
    }

    #[test]
    fn syntax_error_carries_line_number() {
        let bad = "input x universe 0\n";
        match RuleBase::parse(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
