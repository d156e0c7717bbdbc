//! One-parameter g-estimation: the log-rank z curve over psi, the solution,
//! and the resulting counterfactual survival times.

use switchadj::adjust::{counterfactual_dataset, g_estimate, rpsftm, GEstimationConfig};
use switchadj::data::Arm;
use switchadj::sim::{ScenarioConfig, Simulator};

fn main() -> switchadj::Result<()> {
    let cfg = ScenarioConfig {
        true_hr: 0.6,
        target_switch: 0.5,
        ..Default::default()
    };
    let d = Simulator::new(&cfg)?.generate(1)?;
    let gcfg = GEstimationConfig {
        keep_surface: true,
        ..Default::default()
    };
    let g = g_estimate(&d, &gcfg)?;
    println!("psi_hat = {:.4} (log true HR = {:.4})", g.psi_hat[0], cfg.true_hr.ln());

    if let Some(surface) = &g.objective_surface {
        for p in surface.iter().take(201).step_by(20) {
            let bar = "#".repeat((p.objective * 10.0).min(60.0) as usize);
            println!("{:+.2} |z| {:6.3} {bar}", p.psi[0], p.objective);
        }
    }

    // one parameter shared by every switch level
    let psi = vec![g.psi_hat[0]; d.k_levels().max(1) as usize];
    let cf = counterfactual_dataset(&d, &psi, true)?;
    let recensored = cf
        .iter()
        .zip(d.patients())
        .filter(|(u, p)| p.event && !u.u_event)
        .count();
    let treated = cf.iter().filter(|u| u.arm == Arm::Treatment).count();
    println!("{treated} treated patients rescaled, {recensored} deaths re-censored");

    let r = rpsftm(&d, &gcfg)?;
    println!("RPSFTM HR {:.3} ({:.3}, {:.3})", r.hr, r.ci95.0, r.ci95.1);
    Ok(())
}
