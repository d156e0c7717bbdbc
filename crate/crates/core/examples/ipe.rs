//! Iterative parameter estimation with its convergence diagnostics.

use switchadj::adjust::{ipe, IpeConfig};
use switchadj::sim::{ScenarioConfig, Simulator};

fn main() -> switchadj::Result<()> {
    let cfg = ScenarioConfig {
        true_hr: 0.4,
        target_switch: 0.5,
        ..Default::default()
    };
    let d = Simulator::new(&cfg)?.generate(2)?;
    for recensor in [true, false] {
        let r = ipe(
            &d,
            &IpeConfig {
                recensor,
                ..Default::default()
            },
        )?;
        println!(
            "recensor={recensor}: HR {:.3} ({:.3}, {:.3}), psi {}, {} iterations, converged {}",
            r.hr, r.ci95.0, r.ci95.1, r.diagnostics["psi"], r.diagnostics["iterations"], r.diagnostics["converged"]
        );
    }
    Ok(())
}
