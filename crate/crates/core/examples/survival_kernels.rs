//! Kaplan-Meier, log-rank, Cox and Weibull AFT on a small two-arm sample.

use switchadj::survival::{cox_fit, kaplan_meier, log_rank, weibull_aft_fit, SurvSample};

fn main() -> switchadj::Result<()> {
    // (days, died, arm)
    let data = [
        (120.0, true, 0),
        (210.0, true, 0),
        (260.0, false, 0),
        (330.0, true, 0),
        (400.0, true, 0),
        (515.0, false, 0),
        (180.0, true, 1),
        (340.0, true, 1),
        (455.0, false, 1),
        (610.0, true, 1),
        (720.0, true, 1),
        (900.0, false, 1),
    ];
    let samples: Vec<SurvSample> = data.iter().map(|&(t, e, g)| SurvSample::new(t, e, g)).collect();

    for arm in [0, 1] {
        let one: Vec<SurvSample> = samples.iter().copied().filter(|s| s.group == arm).collect();
        let km = kaplan_meier(&one)?;
        println!("arm {arm} KM:");
        for (t, s) in km.times.iter().zip(&km.survival) {
            println!("  S({t:>5}) = {s:.3}");
        }
    }

    let lr = log_rank(&samples)?;
    println!("log-rank z = {:.3}, chi2 = {:.3}", lr.z, lr.chi_sq);

    let cox = cox_fit(&samples)?;
    println!("Cox HR = {:.3} ({:.3}, {:.3})", cox.hr, cox.ci95.0, cox.ci95.1);

    let aft = weibull_aft_fit(&samples)?;
    println!(
        "Weibull AFT: time ratio = {:.3}, scale = {:.3}",
        aft.coef_treatment.exp(),
        aft.scale
    );
    Ok(())
}
