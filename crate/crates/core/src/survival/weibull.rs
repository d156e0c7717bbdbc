use nalgebra::{Matrix3, Vector3};

use super::{validate, SurvSample};
use crate::error::{Error, Result};

const MAX_ITER: usize = 200;
const LL_TOL: f64 = 1e-8;

/// `log T = intercept + coef_treatment * group + scale * G`, with `G`
/// standard minimum-Gumbel. `coef_treatment` is the log time ratio of group 1
/// versus group 0.
#[derive(Debug, Clone, PartialEq)]
pub struct WeibullAftFit {
    pub intercept: f64,
    pub coef_treatment: f64,
    pub scale: f64,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct Obs {
    y: f64,
    x: f64,
    delta: f64,
    w: f64,
}

/// Log-likelihood, gradient and Hessian in (intercept, coef, log scale).
fn eval(obs: &[Obs], p: &Vector3<f64>, derivs: bool) -> (f64, Vector3<f64>, Matrix3<f64>) {
    let (mu, gamma, theta) = (p[0], p[1], p[2]);
    let sigma = theta.exp();
    let mut ll = 0.0;
    let mut g = Vector3::zeros();
    let mut h = Matrix3::zeros();
    for o in obs {
        let eps = (o.y - mu - gamma * o.x) / sigma;
        let ee = eps.exp();
        ll += o.w * (o.delta * (eps - theta - o.y) - ee);
        if !derivs {
            continue;
        }
        let a = o.delta - ee;
        let xv = [1.0, o.x];
        for i in 0..2 {
            g[i] += o.w * (-a * xv[i] / sigma);
            for j in 0..2 {
                h[(i, j)] += o.w * (-ee * xv[i] * xv[j] / (sigma * sigma));
            }
            let cross = o.w * (-xv[i] * (ee * eps - a) / sigma);
            h[(i, 2)] += cross;
            h[(2, i)] += cross;
        }
        g[2] += o.w * (-a * eps - o.delta);
        h[(2, 2)] += o.w * (-ee * eps * eps + a * eps);
    }
    (ll, g, h)
}

/// Maximum-likelihood Weibull AFT fit with a binary group covariate.
pub fn weibull_aft_fit(samples: &[SurvSample]) -> Result<WeibullAftFit> {
    validate(samples)?;
    if samples.iter().any(|s| s.group > 1 || s.entry > 0.0) {
        return Err(Error::InvalidInput(
            "weibull_aft_fit takes groups 0/1 without delayed entry".into(),
        ));
    }
    let events = |g: usize| samples.iter().filter(|s| s.group == g && s.event && s.weight > 0.0).count();
    let present = |g: usize| samples.iter().any(|s| s.group == g && s.weight > 0.0);
    if !present(0) || !present(1) {
        return Err(Error::NonConvergence {
            what: "weibull_aft_fit",
            iterations: 0,
            reason: "group covariate is constant; coefficient not identifiable".into(),
        });
    }
    if events(0) == 0 || events(1) == 0 {
        return Err(Error::InvalidInput("weibull_aft_fit needs an event in each group".into()));
    }

    let obs: Vec<Obs> = samples
        .iter()
        .map(|s| Obs {
            y: s.time.ln(),
            x: s.group as f64,
            delta: if s.event { 1.0 } else { 0.0 },
            w: s.weight,
        })
        .collect();

    // Exponential start: intercept = log(total time / events) per group.
    let start = |g: usize| {
        let (tt, d) = samples
            .iter()
            .filter(|s| s.group == g)
            .fold((0.0, 0.0), |(tt, d), s| (tt + s.weight * s.time, d + if s.event { s.weight } else { 0.0 }));
        (tt / d).ln()
    };
    let (m0, m1) = (start(0), start(1));
    let mut p = Vector3::new(m0, m1 - m0, 0.0);
    let (mut ll, mut g, mut h) = eval(&obs, &p, true);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        let neg_h = -h;
        let dir = match neg_h.cholesky() {
            Some(ch) => ch.solve(&g),
            None => {
                // not concave here: damped ascent
                let lambda = neg_h.diagonal().abs().max() + 1.0;
                (neg_h + Matrix3::identity() * lambda)
                    .try_inverse()
                    .map(|inv| inv * g)
                    .unwrap_or(g * 1e-3)
            }
        };
        let mut step = 1.0;
        let mut cand = p + dir * step;
        let mut cll = eval(&obs, &cand, false).0;
        while !(cll >= ll) && step > 1e-10 {
            step *= 0.5;
            cand = p + dir * step;
            cll = eval(&obs, &cand, false).0;
        }
        if !(cll >= ll) {
            break;
        }
        let delta_ll = cll - ll;
        p = cand;
        (ll, g, h) = eval(&obs, &p, true);
        if delta_ll.abs() < LL_TOL {
            converged = g.amax() < 1e-4 * (1.0 + ll.abs());
            if converged {
                break;
            }
        }
    }
    if !converged || !p.iter().all(|v| v.is_finite()) {
        return Err(Error::NonConvergence {
            what: "weibull_aft_fit",
            iterations,
            reason: format!("loglik {ll:.6}, |grad| {:.3e}", g.amax()),
        });
    }
    Ok(WeibullAftFit {
        intercept: p[0],
        coef_treatment: p[1],
        scale: p[2].exp(),
        loglik: ll,
        iterations,
        converged,
    })
}
