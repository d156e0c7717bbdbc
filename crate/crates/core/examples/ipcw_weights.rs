//! Fits the pooled logistic switching model and shows the weight
//! distribution before the weighted Cox fit.

use switchadj::adjust::{compute_weights, fit_switch_model, ipcw, IpcwConfig};
use switchadj::sim::{ScenarioConfig, Simulator};

fn main() -> switchadj::Result<()> {
    let cfg = ScenarioConfig {
        target_switch: 0.5,
        ..Default::default()
    };
    let d = Simulator::new(&cfg)?.generate(0)?;
    let icfg = IpcwConfig::default();

    let model = fit_switch_model(&d, &icfg)?;
    println!("switch model on {}-day intervals", model.interval_days);
    println!("  intercept {:+.4}", model.coefs[0]);
    for (name, b) in model.covariates.iter().zip(&model.coefs[1..]) {
        println!("  {name:<12} {b:+.4} (per sd)");
    }

    let mut finals: Vec<f64> = compute_weights(&d, &model, &icfg).iter().map(|w| w.final_weight()).collect();
    finals.sort_by(f64::total_cmp);
    let q = |p: f64| finals[((finals.len() - 1) as f64 * p).round() as usize];
    println!("final weights: min {:.3}, median {:.3}, max {:.3}", q(0.0), q(0.5), q(1.0));

    let r = ipcw(&d, &icfg)?;
    println!("IPCW HR {:.3} ({:.3}, {:.3}), true {}", r.hr, r.ci95.0, r.ci95.1, cfg.true_hr);
    Ok(())
}
