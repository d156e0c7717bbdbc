//! All seven methods on repeated trials of one scenario: bias, MSE and
//! coverage, as in one cell of the simulation study.
//!
//! `cargo run --release --example compare_methods -- 0.4 0.25 0.5 50`
//! for true HR, censoring, switching and replicate count.

use switchadj::adjust::{adjust, Method, MethodConfig};
use switchadj::eval::{evaluate, ScenarioId};
use switchadj::sim::{ScenarioConfig, Simulator};

fn main() -> switchadj::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let arg = |i: usize, dflt: f64| args.get(i).copied().unwrap_or(dflt);
    let cfg = ScenarioConfig {
        true_hr: arg(0, 0.6),
        target_censor: arg(1, 0.25),
        target_switch: arg(2, 0.5),
        ..Default::default()
    };
    let reps = arg(3, 30.0) as u64;
    let sim = Simulator::new(&cfg)?;
    let data: Vec<_> = (0..reps).map(|r| sim.generate(r)).collect::<Result<_, _>>()?;
    let mcfg = MethodConfig::default();

    println!("{:<10} {:>8} {:>8} {:>8} {:>6}", "method", "bias", "mse", "cover", "fail");
    for m in Method::STUDY {
        let results: Vec<_> = data.iter().map(|d| adjust(d, m, &mcfg)).collect();
        match evaluate(ScenarioId::of(&cfg), m, &results) {
            Ok(row) => println!(
                "{:<10} {:>+8.4} {:>8.4} {:>8.3} {:>6}",
                m.label(),
                row.bias,
                row.mse,
                row.coverage,
                row.n_failures
            ),
            Err(e) => println!("{:<10} {e}", m.label()),
        }
    }
    Ok(())
}
