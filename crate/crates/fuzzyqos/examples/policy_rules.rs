//! Parse QoS policy rules, evaluate them against measurements, and replay
//! the action log.

use std::collections::{BTreeSet, HashMap};

use fuzzyqos::policy::{
    evaluate, parse_policy, policy_to_text, replay, EvalContext, FlowQosTable,
    LinguisticStateMap, DSCP_BEST_EFFORT,
};

const POLICIES: &str = "\
# provision flow 7 statically
IF (flow==7) THEN (mark dscp 0x2e)
# promote flows 10-12 when the link runs hot
IF (bandwidth_utilization==high) THEN (mark 10-12 dscp 0x2e)
";

fn main() -> fuzzyqos::Result<()> {
    let states = LinguisticStateMap::with_defaults();
    let rules = parse_policy(POLICIES, &states)?;
    print!("parsed policies:\n{}\n", policy_to_text(&rules));

    let active: BTreeSet<u64> = [7, 10, 11, 12].into();
    let mut table = FlowQosTable::new();
    let mut log = Vec::new();

    for (t, util) in [(10.0, 0.45), (20.0, 0.91)] {
        let mut measurements = HashMap::new();
        measurements.insert("utilization".to_string(), util);
        let ctx = EvalContext {
            timestamp_s: t,
            measurements: &measurements,
            active_flows: &active,
            transport_configured: true,
        };
        let records = evaluate(&rules, &ctx, &states, &mut table)?;
        println!("t={t}: utilization {util} -> {} action(s)", records.len());
        for r in &records {
            println!("  {}", serde_json::to_string(r).map_err(fuzzyqos::Error::from)?);
        }
        log.extend(records);
    }

    println!("\nfinal DSCP table (flows absent from it are 0x{DSCP_BEST_EFFORT:02x}):");
    for (flow, dscp) in table.entries() {
        println!("  flow {flow}: 0x{dscp:02x}");
    }

    let mut replayed = FlowQosTable::new();
    replay(&log, &mut replayed);
    assert_eq!(replayed, table);
    println!("\nreplaying the {} logged actions reproduces the table", log.len());
    Ok(())
}
