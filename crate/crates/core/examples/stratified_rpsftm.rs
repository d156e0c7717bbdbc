//! Stratified RPSFTM: switchers to a weaker second-line therapy get their
//! own acceleration parameter.

use switchadj::adjust::{g_estimate, rpsftm, stratified_rpsftm, GEstimationConfig};
use switchadj::sim::{ScenarioConfig, Simulator};

fn main() -> switchadj::Result<()> {
    let cfg = ScenarioConfig {
        n: 1200,
        true_hr: 0.6,
        target_switch: 0.5,
        effect_factors: vec![1.0, 0.7],
        level_mix: vec![0.5, 0.5],
        ..Default::default()
    };
    let d = Simulator::new(&cfg)?.generate(0)?;
    println!(
        "{} switchers: {} to the study drug, {} to the weaker therapy",
        d.n_switchers(),
        d.n_switchers_at(1),
        d.n_switchers_at(2)
    );

    let scfg = GEstimationConfig::stratified(1);
    let g = g_estimate(&d, &scfg)?;
    println!(
        "psi = ({:.3}, {:.3}); generating values ({:.3}, {:.3})",
        g.psi_hat[0],
        g.psi_hat[1],
        cfg.true_hr.ln(),
        cfg.true_hr.ln() - 0.7f64.ln()
    );

    let plain = rpsftm(&d, &GEstimationConfig::default())?;
    let srp = stratified_rpsftm(&d, &scfg)?;
    println!("true HR {}", cfg.true_hr);
    println!("RPSFTM {:.3} ({:.3}, {:.3})", plain.hr, plain.ci95.0, plain.ci95.1);
    println!("SRP    {:.3} ({:.3}, {:.3})", srp.hr, srp.ci95.0, srp.ci95.1);
    Ok(())
}
