//! The regression forest on its own, then the counterfactual-prediction
//! adjustment built on it.

use switchadj::adjust::{forest_fit, forest_predict, rf_adjust, ForestConfig};
use switchadj::sim::{ScenarioConfig, Simulator};

fn main() -> switchadj::Result<()> {
    // y = 1 + 2 x0, plus a step in x1
    let x: Vec<Vec<f64>> = (0..200)
        .map(|i| vec![(i % 20) as f64, (i / 20) as f64, ((i * 7) % 13) as f64])
        .collect();
    let y: Vec<f64> = x.iter().map(|r| 1.0 + 2.0 * r[0] + if r[1] > 4.0 { 10.0 } else { 0.0 }).collect();
    let cfg = ForestConfig {
        n_trees: 100,
        ..Default::default()
    };
    let f = forest_fit(&x, &y, &cfg)?;
    println!("OOB MSE {:.3}", f.oob_mse.unwrap_or(f64::NAN));
    for row in [[3.0, 2.0, 0.0], [15.0, 8.0, 5.0]] {
        println!("predict {row:?} -> {:.2}", forest_predict(&f, &row)?);
    }

    let scfg = ScenarioConfig {
        true_hr: 0.6,
        target_switch: 0.5,
        ..Default::default()
    };
    let d = Simulator::new(&scfg)?.generate(0)?;
    let r = rf_adjust(&d, &ForestConfig::default())?;
    println!("RF HR {:.3} ({:.3}, {:.3}), true {}", r.hr, r.ci95.0, r.ci95.1, scfg.true_hr);
    println!(
        "trained on {} control deaths, {} predictions floored",
        r.diagnostics["n_train"], r.diagnostics["n_floored"]
    );
    Ok(())
}
