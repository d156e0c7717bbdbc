//! Random-forest prediction of switchers' counterfactual survival.
//!
//! A forest trained on control patients who never switched predicts each
//! switcher's untreated survival from baseline covariates; the prediction is
//! floored one day after the switch and treated as an observed death.

use super::forest::{forest_fit, forest_predict, ForestConfig};
use super::{cox_by_arm, require_both_arms, AdjustmentResult, Method};
use crate::data::{Arm, Dataset};
use crate::error::{Error, Result};
use crate::survival::SurvSample;

/// Gap between switch and the earliest allowed predicted death, in days.
pub const FLOOR_DAYS: f64 = 1.0;

pub fn rf_adjust(d: &Dataset, cfg: &ForestConfig) -> Result<AdjustmentResult> {
    require_both_arms(d)?;
    cfg.validate()?;
    let train: Vec<_> = d
        .patients()
        .iter()
        .filter(|p| p.arm == Arm::Control && !p.is_switcher() && (p.event || cfg.include_censored_training))
        .collect();

    let mut samples: Vec<SurvSample> = d
        .patients()
        .iter()
        .filter(|p| !p.is_switcher())
        .map(|p| SurvSample::new(p.observed_time, p.event, p.arm.group()))
        .collect();

    if d.n_switchers() == 0 {
        let mut r = super::itt(d)?;
        r.method = Method::RandomForest;
        r.diag("n_train", train.len());
        r.diag("n_floored", 0usize);
        return Ok(r);
    }
    if train.len() < 2 * cfg.min_leaf {
        return Err(Error::InsufficientTraining {
            have: train.len(),
            need: 2 * cfg.min_leaf,
        });
    }

    let x: Vec<Vec<f64>> = train.iter().map(|p| p.covariates.as_features().to_vec()).collect();
    let y: Vec<f64> = train.iter().map(|p| p.observed_time).collect();
    let forest = forest_fit(&x, &y, cfg)?;

    let mut n_floored = 0usize;
    for p in d.patients().iter().filter(|p| p.is_switcher()) {
        let w = p.switch.unwrap().time;
        let pred = forest_predict(&forest, &p.covariates.as_features())?;
        let floor = w + FLOOR_DAYS;
        let u = if pred < floor {
            n_floored += 1;
            floor
        } else {
            pred
        };
        samples.push(SurvSample::new(u, true, p.arm.group()));
    }

    let mut r = cox_by_arm(Method::RandomForest, &samples)?;
    r.diag("n_train", train.len());
    r.diag("oob_mse", forest.oob_mse.unwrap_or(f64::NAN));
    r.diag("n_floored", n_floored);
    r.diag("n_trees", cfg.n_trees);
    r.diag("mtry", cfg.mtry_for(x[0].len()));
    r.diag("min_leaf", cfg.min_leaf);
    r.diag("seed", cfg.seed);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::super::testdata::*;
    use super::*;
    use crate::adjust::itt;
    use crate::data::SwitchAnnotation;

    #[test]
    fn zero_switch_equals_itt() {
        let d = no_switch();
        assert!((rf_adjust(&d, &ForestConfig::default()).unwrap().hr - itt(&d).unwrap().hr).abs() < 1e-12);
    }

    #[test]
    fn too_few_training_rows() {
        let mut p = no_switch().into_patients();
        p[2].switch = Some(SwitchAnnotation { time: 1.0, level: 1 });
        let d = Dataset::new(p).unwrap();
        assert!(matches!(
            rf_adjust(&d, &ForestConfig::default()),
            Err(Error::InsufficientTraining { .. })
        ));
    }

    #[test]
    fn predictions_floored_after_switch() {
        let mut p = Vec::new();
        for i in 0..40 {
            let t = 10.0 + 3.0 * i as f64;
            let mut c = patient(&format!("c{i}"), Arm::Control, t, true, None);
            c.covariates.age = 30.0 + i as f64;
            if i >= 30 {
                // late switch after a long time: prediction from young
                // training patients falls below the floor
                c.observed_time = 500.0;
                c.switch = Some(SwitchAnnotation { time: 400.0, level: 1 });
            }
            p.push(c);
            p.push(patient(&format!("t{i}"), Arm::Treatment, t * 1.5, true, None));
        }
        let d = Dataset::new(p).unwrap();
        let cfg = ForestConfig {
            n_trees: 30,
            ..Default::default()
        };
        let r = rf_adjust(&d, &cfg).unwrap();
        assert_eq!(r.diagnostics["n_floored"], crate::adjust::DiagValue::Int(10));
        assert_eq!(r.diagnostics["n_train"], crate::adjust::DiagValue::Int(30));
    }
}
