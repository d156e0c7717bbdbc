//! Generates one simulated trial and writes it as CSV to stdout.
//!
//! Run with `cargo run --example simulate_trial -- 0.6 0.5 0.5` for
//! true HR, censoring and switching fractions.

use switchadj::data::{write_csv, Arm};
use switchadj::sim::{ScenarioConfig, Simulator};

fn main() -> switchadj::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let cfg = ScenarioConfig {
        true_hr: args.first().copied().unwrap_or(0.6),
        target_censor: args.get(1).copied().unwrap_or(0.25),
        target_switch: args.get(2).copied().unwrap_or(0.5),
        ..Default::default()
    };
    let sim = Simulator::new(&cfg)?;
    let d = sim.generate(0)?;
    let censored = d.patients().iter().filter(|p| !p.event).count();
    eprintln!(
        "{} patients, {} censored, {} of {} control patients switched (levels: {} / {}), censoring rate {:.2e}/day",
        d.len(),
        censored,
        d.n_switchers(),
        d.arm_count(Arm::Control),
        d.n_switchers_at(1),
        d.n_switchers_at(2),
        sim.censor_rate
    );
    write_csv(&d, std::io::stdout().lock())
}
