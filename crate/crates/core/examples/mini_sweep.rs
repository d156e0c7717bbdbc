//! A small factorial sweep: metrics table, per-scenario recommendation and
//! forest plots written to a temporary directory.

use switchadj::adjust::MethodConfig;
use switchadj::eval::{recommendations, run_factorial, FactorialConfig};
use switchadj::report::{forest_plot_svg, plot_file_name};
use switchadj::sim::ScenarioConfig;

fn main() -> switchadj::Result<()> {
    let base = ScenarioConfig {
        n: 300,
        ..Default::default()
    };
    let factorial = FactorialConfig {
        true_hrs: vec![0.4, 0.8],
        censor_rates: vec![0.25],
        switch_rates: vec![0.25, 0.5],
        reps: 20,
        ..Default::default()
    };
    let mut mcfg = MethodConfig::default();
    mcfg.forest.n_trees = 100;

    let out = run_factorial(&base, &factorial, &mcfg, 4)?;
    for r in &out.metrics {
        println!(
            "HR {} C{:.2} S{:.2} {:<10} bias {:+.4} (mcse {:.4}) mse {:.4} cover {:.2}",
            r.true_hr,
            r.censor,
            r.switch,
            r.method.label(),
            r.bias,
            r.mcse_bias,
            r.mse,
            r.coverage
        );
    }
    for rec in recommendations(&out.metrics) {
        let m = rec.method.map(|m| m.label()).unwrap_or("-");
        println!("recommend at HR {} C{:.2} S{:.2}: {m}", rec.true_hr, rec.censor, rec.switch);
    }

    let dir = std::env::temp_dir().join("switchadj-mini-sweep");
    std::fs::create_dir_all(&dir).map_err(|e| switchadj::Error::InvalidInput(e.to_string()))?;
    for hr in &factorial.true_hrs {
        let path = dir.join(plot_file_name(*hr));
        std::fs::write(&path, forest_plot_svg(&out.metrics, *hr))
            .map_err(|e| switchadj::Error::InvalidInput(e.to_string()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
