//! ITT, excluding switchers and censoring at the switch on one trial.

use switchadj::adjust::{censor_at_switch, exclude_switchers, itt};
use switchadj::sim::{ScenarioConfig, Simulator};

fn main() -> switchadj::Result<()> {
    let cfg = ScenarioConfig {
        true_hr: 0.5,
        target_switch: 0.6,
        ..Default::default()
    };
    let d = Simulator::new(&cfg)?.generate(3)?;
    println!("true HR {}", cfg.true_hr);
    for r in [itt(&d)?, exclude_switchers(&d)?, censor_at_switch(&d)?] {
        println!("{:<10} {:.3} ({:.3}, {:.3})", r.method.label(), r.hr, r.ci95.0, r.ci95.1);
        for (k, v) in &r.diagnostics {
            println!("    {k}: {v}");
        }
    }
    Ok(())
}
