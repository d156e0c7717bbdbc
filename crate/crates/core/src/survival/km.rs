use super::risk::{for_each_event_time, SortedSamples};
use super::{validate, SurvSample};
use crate::error::Result;

/// Right-continuous nonincreasing step function with `S(0) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    /// Distinct event times, ascending.
    pub times: Vec<f64>,
    /// Survival just after each entry of `times`.
    pub survival: Vec<f64>,
}

impl SurvivalCurve {
    pub fn at(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&x| x <= t);
        if idx == 0 {
            1.0
        } else {
            self.survival[idx - 1]
        }
    }

    pub fn n_steps(&self) -> usize {
        self.times.len()
    }
}

/// Weighted product-limit estimator; groups are pooled.
pub fn kaplan_meier(samples: &[SurvSample]) -> Result<SurvivalCurve> {
    validate(samples)?;
    let pooled: Vec<SurvSample> = samples.iter().map(|s| SurvSample { group: 0, ..*s }).collect();
    let sorted = SortedSamples::new(pooled);
    let mut steps = Vec::new();
    for_each_event_time(&[&sorted], 1, |row| {
        let n = row.total_at_risk();
        let d = row.total_events();
        if n > 0.0 && d > 0.0 {
            steps.push((row.time, 1.0 - d / n));
        }
    });
    steps.reverse();
    let mut s = 1.0;
    let mut times = Vec::with_capacity(steps.len());
    let mut survival = Vec::with_capacity(steps.len());
    for (t, factor) in steps {
        s *= factor.max(0.0);
        times.push(t);
        survival.push(s);
    }
    Ok(SurvivalCurve { times, survival })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn all_censored_is_flat() {
        let s = [SurvSample::new(1.0, false, 0), SurvSample::new(2.0, false, 0)];
        let km = kaplan_meier(&s).unwrap();
        assert_eq!(km.n_steps(), 0);
        assert_eq!(km.at(0.5), 1.0);
        assert_eq!(km.at(100.0), 1.0);
    }

    #[test]
    fn hand_product_limit() {
        // risk sets: t=2 -> {2,3}, one death: 1/2; t=3 -> {3}: 0.
        let s = [
            SurvSample::new(1.0, false, 0),
            SurvSample::new(2.0, true, 0),
            SurvSample::new(3.0, true, 0),
        ];
        let km = kaplan_meier(&s).unwrap();
        assert_eq!(km.at(1.5), 1.0);
        assert_eq!(km.at(2.0), 0.5);
        assert_eq!(km.at(2.9), 0.5);
        assert_eq!(km.at(3.0), 0.0);
    }

    #[test]
    fn duplication_and_weight_scaling_invariant() {
        let s = vec![
            SurvSample::new(1.0, true, 0),
            SurvSample::new(2.5, false, 0),
            SurvSample::new(3.0, true, 0),
            SurvSample::new(4.0, true, 0),
        ];
        let base = kaplan_meier(&s).unwrap();
        let mut dup = s.clone();
        dup.extend(s.iter().copied());
        let doubled: Vec<_> = s.iter().map(|x| x.weighted(2.0)).collect();
        for t in [0.5, 1.0, 2.0, 3.0, 3.5, 4.0, 10.0] {
            assert!((kaplan_meier(&dup).unwrap().at(t) - base.at(t)).abs() < 1e-15);
            assert!((kaplan_meier(&doubled).unwrap().at(t) - base.at(t)).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_input() {
        assert!(matches!(kaplan_meier(&[]), Err(Error::EmptyInput)));
    }
}
