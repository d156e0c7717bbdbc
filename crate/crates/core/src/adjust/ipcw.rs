//! Inverse probability of censoring weighting.
//!
//! Switchers are censored at their switch time. Control patients who have
//! not yet switched are up-weighted by the inverse of their estimated
//! probability of remaining unswitched, from a discrete-time pooled logistic
//! model on fixed-width intervals.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{cox_by_arm, require_both_arms, AdjustmentResult, Method};
use crate::data::{Arm, Covariates, Dataset, PatientRecord};
use crate::error::{Error, Result};
use crate::survival::SurvSample;

const MAX_ITER: usize = 100;
const P_LIMIT: f64 = 1.0 - 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IpcwConfig {
    pub interval_days: f64,
    pub stabilized: bool,
    pub truncation_quantile: f64,
    pub covariate_set: Vec<String>,
}

impl Default for IpcwConfig {
    fn default() -> Self {
        IpcwConfig {
            interval_days: 30.0,
            stabilized: true,
            truncation_quantile: 0.99,
            covariate_set: Covariates::NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl IpcwConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.interval_days > 0.0 && self.interval_days.is_finite()) {
            return Err(Error::config("ipcw.interval_days", "must be positive"));
        }
        if !(self.truncation_quantile > 0.5 && self.truncation_quantile <= 1.0) {
            return Err(Error::config("ipcw.truncation_quantile", "must be in (0.5, 1]"));
        }
        if let Some(bad) = self.covariate_set.iter().find(|c| !Covariates::NAMES.contains(&c.as_str())) {
            return Err(Error::config("ipcw.covariate_set", format!("unknown covariate {bad:?}")));
        }
        Ok(())
    }
}

/// Fitted per-interval switching probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchModel {
    /// Covariates that entered the model (constant ones are dropped).
    pub covariates: Vec<String>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    /// Intercept first, then one coefficient per standardized covariate.
    pub coefs: Vec<f64>,
    /// Log-odds of the intercept-only model used for stabilization.
    pub marginal_logit: f64,
    pub interval_days: f64,
}

fn expit(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl SwitchModel {
    pub fn switch_prob(&self, c: &Covariates) -> f64 {
        let eta = self.coefs[0]
            + self
                .covariates
                .iter()
                .enumerate()
                .map(|(j, name)| self.coefs[j + 1] * (c.get(name).unwrap() - self.means[j]) / self.sds[j])
                .sum::<f64>();
        expit(eta)
    }

    pub fn marginal_prob(&self) -> f64 {
        expit(self.marginal_logit)
    }
}

/// Number of intervals a control patient is at risk of switching, and
/// whether the last one ends in a switch.
fn exposure(p: &PatientRecord, width: f64) -> (usize, bool) {
    match p.switch {
        Some(sw) => ((sw.time / width).floor() as usize + 1, true),
        None => (((p.observed_time / width).ceil() as usize).max(1), false),
    }
}

/// Binomial logistic fit by Newton; rows are (features, trials, successes).
fn logistic(x: &DMatrix<f64>, trials: &[f64], succ: &[f64]) -> Result<DVector<f64>> {
    let (n, k) = x.shape();
    let total: f64 = trials.iter().sum();
    let rate = succ.iter().sum::<f64>() / total;
    let mut beta = DVector::zeros(k);
    beta[0] = (rate / (1.0 - rate)).ln();
    let loglik = |b: &DVector<f64>| -> f64 {
        (0..n)
            .map(|i| {
                let eta = x.row(i).dot(&b.transpose());
                // log p = -log(1 + e^-eta), log(1-p) = -log(1 + e^eta)
                -succ[i] * softplus(-eta) - (trials[i] - succ[i]) * softplus(eta)
            })
            .sum()
    };
    let mut ll = loglik(&beta);
    for _ in 0..MAX_ITER {
        let mut g = DVector::zeros(k);
        let mut h = DMatrix::zeros(k, k);
        for i in 0..n {
            let xi = x.row(i).transpose();
            let p = expit(xi.dot(&beta));
            g += &xi * (succ[i] - trials[i] * p);
            h += &xi * xi.transpose() * (trials[i] * p * (1.0 - p));
        }
        let step = match h.clone().cholesky() {
            Some(c) => c.solve(&g),
            None => {
                // collinear covariates: small ridge
                let ridge = 1e-6 * (1.0 + h.diagonal().amax());
                match (h + DMatrix::identity(k, k) * ridge).cholesky() {
                    Some(c) => c.solve(&g),
                    None => break,
                }
            }
        };
        let mut t = 1.0;
        let mut cand = &beta + &step * t;
        let mut cll = loglik(&cand);
        while cll < ll - 1e-12 * ll.abs() && t > 1e-8 {
            t *= 0.5;
            cand = &beta + &step * t;
            cll = loglik(&cand);
        }
        let gain = cll - ll;
        beta = cand;
        ll = cll;
        if gain.abs() < 1e-11 * (1.0 + ll.abs()) || step.amax() * t < 1e-10 {
            break;
        }
    }
    Ok(beta)
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Fits the switching-hazard model on control-arm person-intervals.
pub fn fit_switch_model(d: &Dataset, cfg: &IpcwConfig) -> Result<SwitchModel> {
    cfg.validate()?;
    let control: Vec<&PatientRecord> = d.patients().iter().filter(|p| p.arm == Arm::Control).collect();
    let n_sw = control.iter().filter(|p| p.is_switcher()).count();
    if n_sw == 0 || n_sw == control.len() {
        return Err(Error::InvalidInput(
            "switching model needs at least one switcher and one non-switcher in the control arm".into(),
        ));
    }

    let mut covariates = Vec::new();
    let (mut means, mut sds) = (Vec::new(), Vec::new());
    for name in &cfg.covariate_set {
        let v: Vec<f64> = control.iter().map(|p| p.covariates.get(name).unwrap()).collect();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
        if sd > 1e-12 {
            covariates.push(name.clone());
            means.push(m);
            sds.push(sd);
        }
    }

    let mut trials = Vec::with_capacity(control.len());
    let mut succ = Vec::with_capacity(control.len());
    for p in &control {
        let (n, s) = exposure(p, cfg.interval_days);
        trials.push(n as f64);
        succ.push(if s { 1.0 } else { 0.0 });
    }
    let k = covariates.len() + 1;
    let x = DMatrix::from_fn(control.len(), k, |i, j| {
        if j == 0 {
            1.0
        } else {
            (control[i].covariates.get(&covariates[j - 1]).unwrap() - means[j - 1]) / sds[j - 1]
        }
    });
    let beta = logistic(&x, &trials, &succ)?;
    let ones = DMatrix::from_element(control.len(), 1, 1.0);
    let marginal_logit = logistic(&ones, &trials, &succ)?[0];

    let model = SwitchModel {
        covariates,
        means,
        sds,
        coefs: beta.iter().copied().collect(),
        marginal_logit,
        interval_days: cfg.interval_days,
    };
    if let Some(p) = control.iter().find(|p| model.switch_prob(&p.covariates) >= P_LIMIT) {
        return Err(Error::PerfectPrediction(format!(
            "fitted switch probability reaches 1 for patient {}; a covariate determines switching",
            p.id
        )));
    }
    if model.coefs.iter().any(|c| !c.is_finite()) {
        return Err(Error::PerfectPrediction("switching model diverged".into()));
    }
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightTrajectory {
    pub id: String,
    /// Weight in each interval the patient is followed uncensored.
    pub weights: Vec<f64>,
    pub untruncated: Vec<f64>,
}

impl WeightTrajectory {
    pub fn final_weight(&self) -> f64 {
        *self.weights.last().unwrap_or(&1.0)
    }
}

/// Intervals of uncensored follow-up: up to the switch for switchers, up to
/// the observed time otherwise.
fn followed_intervals(p: &PatientRecord, width: f64) -> usize {
    let end = p.switch.map_or(p.observed_time, |s| s.time);
    ((end / width).ceil() as usize).max(1)
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-interval weights for every patient, in dataset order.
///
/// Truncation caps each interval's weights at the configured quantile of
/// the weights of the control patients followed in that interval.
pub fn compute_weights(d: &Dataset, model: &SwitchModel, cfg: &IpcwConfig) -> Vec<WeightTrajectory> {
    let w = model.interval_days;
    let pbar = model.marginal_prob();
    let mut out: Vec<WeightTrajectory> = d
        .patients()
        .iter()
        .map(|p| {
            let m = followed_intervals(p, w);
            let untruncated: Vec<f64> = if p.arm == Arm::Treatment {
                vec![1.0; m]
            } else {
                let q = 1.0 - model.switch_prob(&p.covariates);
                let ratio = if cfg.stabilized { (1.0 - pbar) / q } else { 1.0 / q };
                let mut acc = 1.0;
                (0..m)
                    .map(|_| {
                        acc *= ratio;
                        acc
                    })
                    .collect()
            };
            WeightTrajectory {
                id: p.id.clone(),
                weights: untruncated.clone(),
                untruncated,
            }
        })
        .collect();

    if cfg.truncation_quantile < 1.0 {
        let horizon = out.iter().map(|t| t.weights.len()).max().unwrap_or(0);
        let control: Vec<usize> = (0..out.len()).filter(|&i| d.patients()[i].arm == Arm::Control).collect();
        for j in 0..horizon {
            let mut col: Vec<f64> = control.iter().filter_map(|&i| out[i].weights.get(j).copied()).collect();
            if col.len() < 2 {
                continue;
            }
            col.sort_by(f64::total_cmp);
            let cap = quantile(&col, cfg.truncation_quantile);
            for &i in &control {
                if let Some(v) = out[i].weights.get_mut(j) {
                    if *v > cap {
                        *v = cap;
                    }
                }
            }
        }
    }
    out
}

/// Counting-process pieces with interval weights; switchers censored at switch.
fn weighted_samples(d: &Dataset, traj: &[WeightTrajectory], width: f64) -> Vec<SurvSample> {
    let mut out = Vec::new();
    for (p, t) in d.patients().iter().zip(traj) {
        let g = p.arm.group();
        if p.arm == Arm::Treatment {
            out.push(SurvSample::new(p.observed_time, p.event, g));
            continue;
        }
        let (end, event) = match p.switch {
            Some(sw) => (sw.time, false),
            None => (p.observed_time, p.event),
        };
        for (j, &wt) in t.weights.iter().enumerate() {
            let start = j as f64 * width;
            let stop = ((j + 1) as f64 * width).min(end);
            if stop <= start {
                break;
            }
            let last = stop >= end;
            out.push(SurvSample::new(stop, event && last, g).weighted(wt).entering_at(start));
        }
    }
    out
}

pub fn ipcw(d: &Dataset, cfg: &IpcwConfig) -> Result<AdjustmentResult> {
    require_both_arms(d)?;
    cfg.validate()?;
    if d.n_switchers() == 0 {
        let mut r = super::itt(d)?;
        r.method = Method::Ipcw;
        for k in ["wt_q50", "wt_q90", "wt_q99", "wt_max"] {
            r.diag(k, 1.0);
        }
        r.diag("n_truncated", 0usize);
        return Ok(r);
    }
    let model = fit_switch_model(d, cfg)?;
    let traj = compute_weights(d, &model, cfg);
    let samples = weighted_samples(d, &traj, cfg.interval_days);
    let mut r = cox_by_arm(Method::Ipcw, &samples)?;

    let mut all: Vec<f64> = d
        .patients()
        .iter()
        .zip(&traj)
        .filter(|(p, _)| p.arm == Arm::Control)
        .flat_map(|(_, t)| t.weights.iter().copied())
        .collect();
    all.sort_by(f64::total_cmp);
    let n_truncated: usize = traj
        .iter()
        .map(|t| t.weights.iter().zip(&t.untruncated).filter(|(a, b)| a < b).count())
        .sum();
    let raw_max = traj.iter().flat_map(|t| t.untruncated.iter().copied()).fold(0.0, f64::max);
    r.diag("wt_q50", quantile(&all, 0.5));
    r.diag("wt_q90", quantile(&all, 0.9));
    r.diag("wt_q99", quantile(&all, 0.99));
    r.diag("wt_max", raw_max);
    r.diag("n_truncated", n_truncated);
    r.diag("model_coefs", model.coefs.clone());
    Ok(r)
}
