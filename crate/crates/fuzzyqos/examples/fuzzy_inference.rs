//! Build a tiny two-input controller from rule-file text and run inference
//! over a grid of inputs.

use fuzzyqos::fuzzy::RuleBase;

const RULES: &str = "\
input temperature universe 0 40
  set COLD gaussian mean=0 sigma=6
  set WARM gaussian mean=20 sigma=5
  set HOT gaussian mean=40 sigma=6
input humidity universe 0 100
  set DRY gaussian mean=0 sigma=15
  set HUMID gaussian mean=100 sigma=15
output fan_speed universe 0 1
  set SLOW gaussian mean=0 sigma=0.17
  set MEDIUM gaussian mean=0.5 sigma=0.13
  set FAST gaussian mean=1 sigma=0.17
rule 1: IF temperature IS COLD THEN fan_speed IS SLOW
rule 2: IF temperature IS WARM AND humidity IS DRY THEN fan_speed IS MEDIUM
rule 3: IF temperature IS HOT OR humidity IS HUMID THEN fan_speed IS FAST
";

fn main() -> fuzzyqos::Result<()> {
    let rb = RuleBase::parse(RULES)?;
    println!("{} rules over {} inputs\n", rb.rules().len(), rb.inputs().len());

    // per-rule firing strengths at one operating point
    let point = [28.0, 70.0];
    for rule in rb.rules() {
        println!("rule {} fires at {:.4}", rule.id, rb.fire_rule(rule, &point)?);
    }

    println!("\ntemp  humidity  fan_speed");
    for temp in [5.0, 15.0, 25.0, 35.0] {
        for hum in [10.0, 50.0, 90.0] {
            let out = rb.infer(&[temp, hum])?;
            println!("{temp:>4}  {hum:>8}  {:.4}", out[0]);
        }
    }
    Ok(())
}
