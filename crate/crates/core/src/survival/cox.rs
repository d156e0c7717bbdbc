use super::risk::{for_each_event_time, SortedSamples};
use super::{group_count, validate, SurvSample, Z_95};
use crate::error::{Error, Result};

const MAX_ITER: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct CoxFit {
    pub log_hr: f64,
    /// Model-based standard error, inverse observed information.
    pub se: f64,
    pub hr: f64,
    pub ci95: (f64, f64),
    pub iterations: usize,
    pub converged: bool,
    /// Score of the partial likelihood at `log_hr`.
    pub score: f64,
    pub loglik: f64,
}

/// Per-event-time sufficient statistics for a binary covariate.
struct Stratum {
    d: f64,
    d1: f64,
    r0: f64,
    r1: f64,
}

fn eval(strata: &[Stratum], beta: f64) -> (f64, f64, f64) {
    let eb = beta.exp();
    let (mut ll, mut score, mut info) = (0.0, 0.0, 0.0);
    for s in strata {
        let s0 = s.r0 + s.r1 * eb;
        if s0 <= 0.0 {
            continue;
        }
        let p = s.r1 * eb / s0;
        ll += s.d1 * beta - s.d * s0.ln();
        score += s.d1 - s.d * p;
        info += s.d * p * (1.0 - p);
    }
    (ll, score, info)
}

/// Weighted Cox fit of the group-1 versus group-0 hazard ratio.
///
/// Breslow ties, Newton-Raphson with step halving, at most 50 iterations.
/// Monotone likelihood (the estimate diverges to ±∞) is detected from the
/// limits of the score and reported as non-convergence.
pub fn cox_fit(samples: &[SurvSample]) -> Result<CoxFit> {
    validate(samples)?;
    if group_count(samples) != 2 || samples.iter().all(|s| s.group == 1) {
        return Err(Error::InvalidInput("cox_fit needs exactly groups 0 and 1".into()));
    }
    let sorted = SortedSamples::new(samples.to_vec());
    cox_fit_sorted(&sorted)
}

pub(crate) fn cox_fit_sorted(sorted: &SortedSamples) -> Result<CoxFit> {
    let mut strata = Vec::new();
    for_each_event_time(&[sorted], 2, |row| {
        let d = row.total_events();
        if d > 0.0 {
            strata.push(Stratum {
                d,
                d1: row.events[1],
                r0: row.at_risk[0],
                r1: row.at_risk[1],
            });
        }
    });
    if strata.is_empty() {
        return Err(Error::DegenerateRiskSet);
    }

    // Limits of the score as beta -> -inf / +inf.
    let tol = 1e-12;
    let lower: f64 = strata
        .iter()
        .map(|s| s.d1 - if s.r0 > 0.0 { 0.0 } else { s.d })
        .sum();
    let upper: f64 = strata
        .iter()
        .map(|s| s.d1 - if s.r1 > 0.0 { s.d } else { 0.0 })
        .sum();
    if lower <= tol || upper >= -tol {
        return Err(Error::NonConvergence {
            what: "cox_fit",
            iterations: 0,
            reason: "monotone likelihood (separation)".into(),
        });
    }

    let mut beta = 0.0;
    let (mut ll, mut score, mut info) = eval(&strata, beta);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        if info <= 0.0 {
            break;
        }
        let mut step = score / info;
        let mut next = eval(&strata, beta + step);
        let mut halvings = 0;
        while !(next.0 >= ll - 1e-12 * ll.abs()) && halvings < 30 {
            step *= 0.5;
            next = eval(&strata, beta + step);
            halvings += 1;
        }
        beta += step;
        (ll, score, info) = next;
        if step.abs() < 1e-10 || score.abs() < 1e-10 {
            converged = true;
            break;
        }
    }
    if !converged || info <= 0.0 {
        return Err(Error::NonConvergence {
            what: "cox_fit",
            iterations,
            reason: format!("score {score:.3e} after iteration cap"),
        });
    }
    let se = 1.0 / info.sqrt();
    Ok(CoxFit {
        log_hr: beta,
        se,
        hr: beta.exp(),
        ci95: ((beta - Z_95 * se).exp(), (beta + Z_95 * se).exp()),
        iterations,
        converged,
        score,
        loglik: ll,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_groups_null() {
        let mut s = Vec::new();
        for (i, t) in [1.0, 2.5, 3.0, 4.5, 7.0].iter().enumerate() {
            s.push(SurvSample::new(*t, i % 3 != 0, 0));
            s.push(SurvSample::new(*t, i % 3 != 0, 1));
        }
        let fit = cox_fit(&s).unwrap();
        assert!((fit.hr - 1.0).abs() < 1e-6);
        assert!(fit.ci95.0 < fit.hr && fit.hr < fit.ci95.1);
    }

    #[test]
    fn separation_is_reported() {
        let s = vec![
            SurvSample::new(1.0, true, 0),
            SurvSample::new(2.0, true, 0),
            SurvSample::new(3.0, true, 0),
            SurvSample::new(4.0, true, 1),
            SurvSample::new(5.0, true, 1),
            SurvSample::new(6.0, true, 1),
        ];
        assert!(matches!(cox_fit(&s), Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn exponential_hazard_ratio_recovered() {
        // Exponential hazards 1 and 0.5: the true log HR is log 0.5.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 20_000;
        let mut s = Vec::with_capacity(n);
        for i in 0..n {
            let g = i % 2;
            let rate = if g == 1 { 0.5 } else { 1.0 };
            let t = -(1.0 - rng.random::<f64>()).ln() / rate;
            let c = -(1.0 - rng.random::<f64>()).ln() / 0.3;
            s.push(SurvSample::new(t.min(c), t <= c, g));
        }
        let fit = cox_fit(&s).unwrap();
        assert!((fit.hr - 0.5).abs() < 0.03, "hr {}", fit.hr);
        assert!(fit.score.abs() < 1e-8);
    }

    #[test]
    fn weight_scaling_invariant() {
        let s = vec![
            SurvSample::new(1.0, true, 0),
            SurvSample::new(2.0, true, 1),
            SurvSample::new(3.0, false, 0),
            SurvSample::new(3.5, true, 0),
            SurvSample::new(4.0, true, 1),
            SurvSample::new(6.0, true, 1),
        ];
        let a = cox_fit(&s).unwrap();
        let scaled: Vec<_> = s.iter().map(|x| x.weighted(3.7)).collect();
        let b = cox_fit(&scaled).unwrap();
        assert!((a.log_hr - b.log_hr).abs() < 1e-9);
    }
}
