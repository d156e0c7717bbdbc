//! Factorial simulation sweeps and their summary metrics.
//!
//! Every method in a scenario is run on the same replicate datasets, so
//! method comparisons within a cell are paired. Failed replicates are
//! excluded from a cell's metrics and counted.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adjust::{adjust, AdjustmentResult, DiagValue, Method, MethodConfig};
use crate::error::{Error, Result};
use crate::sim::{ScenarioConfig, Simulator};

/// Scenario coordinates within the factorial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioId {
    pub true_hr: f64,
    pub censor: f64,
    pub switch: f64,
}

impl ScenarioId {
    pub fn of(cfg: &ScenarioConfig) -> Self {
        ScenarioId {
            true_hr: cfg.true_hr,
            censor: cfg.target_censor,
            switch: cfg.target_switch,
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "HR={} censor={:.0}% switch={:.0}%",
            self.true_hr,
            100.0 * self.censor,
            100.0 * self.switch
        )
    }
}

/// One row of `metrics.csv`.
///
/// `bias = true_hr - mean(hr)`, so a positive bias means the method
/// underestimates the hazard ratio. Metrics are NaN when every replicate
/// failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub true_hr: f64,
    pub censor: f64,
    pub switch: f64,
    pub method: Method,
    pub bias: f64,
    pub mse: f64,
    pub coverage: f64,
    pub n_reps_used: u64,
    pub n_failures: u64,
    pub mean_hr: f64,
    pub mean_ci_lo: f64,
    pub mean_ci_hi: f64,
    pub mcse_bias: f64,
    pub mcse_mse: f64,
    pub mcse_coverage: f64,
}

impl MetricsRow {
    pub fn scenario(&self) -> ScenarioId {
        ScenarioId {
            true_hr: self.true_hr,
            censor: self.censor,
            switch: self.switch,
        }
    }

    pub fn is_usable(&self) -> bool {
        self.n_reps_used > 0
    }

    pub fn reps(&self) -> u64 {
        self.n_reps_used + self.n_failures
    }
}

/// One row of `estimates.csv`: a single method on a single replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateEstimate {
    pub true_hr: f64,
    pub censor: f64,
    pub switch: f64,
    pub rep: u64,
    pub method: Method,
    /// `ok`, or the error kind for failed replicates.
    pub status: String,
    pub hr: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// SHA-256 of the replicate dataset; identical across methods.
    pub fingerprint: String,
    pub detail: String,
}

impl ReplicateEstimate {
    pub fn scenario(&self) -> ScenarioId {
        ScenarioId {
            true_hr: self.true_hr,
            censor: self.censor,
            switch: self.switch,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn new(s: ScenarioId, rep: u64, method: Method, fingerprint: &str, outcome: &Result<AdjustmentResult>) -> Self {
        let (status, hr, (lo, hi), detail) = match outcome {
            Ok(r) => match failure_reason(r) {
                None => ("ok".to_string(), r.hr, r.ci95, String::new()),
                Some(why) => ("not_converged".to_string(), r.hr, r.ci95, why),
            },
            Err(e) => (e.kind().to_string(), f64::NAN, (f64::NAN, f64::NAN), e.to_string()),
        };
        ReplicateEstimate {
            true_hr: s.true_hr,
            censor: s.censor,
            switch: s.switch,
            rep,
            method,
            status,
            hr,
            ci_lo: lo,
            ci_hi: hi,
            fingerprint: fingerprint.to_string(),
            detail,
        }
    }
}

/// Why a successful fit still counts as a failed replicate.
fn failure_reason(r: &AdjustmentResult) -> Option<String> {
    if !(r.hr.is_finite() && r.ci95.0.is_finite() && r.ci95.1.is_finite()) {
        return Some("non-finite estimate".into());
    }
    if r.diagnostics.get("converged") == Some(&DiagValue::Bool(false)) {
        return Some("iteration limit reached".into());
    }
    None
}

fn summarize(s: ScenarioId, method: Method, used: &[(f64, f64, f64)], n_failures: u64) -> MetricsRow {
    let n = used.len() as f64;
    let theta = s.true_hr;
    let mean = |f: &dyn Fn(&(f64, f64, f64)) -> f64| used.iter().map(f).sum::<f64>() / n;
    let sd = |f: &dyn Fn(&(f64, f64, f64)) -> f64| {
        if used.len() < 2 {
            return f64::NAN;
        }
        let m = mean(f);
        (used.iter().map(|x| (f(x) - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    let mean_hr = mean(&|x| x.0);
    let mse = mean(&|x| (x.0 - theta).powi(2));
    let coverage = mean(&|x| if x.1 <= theta && theta <= x.2 { 1.0 } else { 0.0 });
    MetricsRow {
        true_hr: s.true_hr,
        censor: s.censor,
        switch: s.switch,
        method,
        bias: theta - mean_hr,
        mse,
        coverage,
        n_reps_used: used.len() as u64,
        n_failures,
        mean_hr,
        mean_ci_lo: mean(&|x| x.1),
        mean_ci_hi: mean(&|x| x.2),
        mcse_bias: sd(&|x| x.0) / n.sqrt(),
        mcse_mse: sd(&|x| (x.0 - theta).powi(2)) / n.sqrt(),
        mcse_coverage: (coverage * (1.0 - coverage) / n).sqrt(),
    }
}

fn failed_row(s: ScenarioId, method: Method, n_failures: u64) -> MetricsRow {
    MetricsRow {
        true_hr: s.true_hr,
        censor: s.censor,
        switch: s.switch,
        method,
        bias: f64::NAN,
        mse: f64::NAN,
        coverage: f64::NAN,
        n_reps_used: 0,
        n_failures,
        mean_hr: f64::NAN,
        mean_ci_lo: f64::NAN,
        mean_ci_hi: f64::NAN,
        mcse_bias: f64::NAN,
        mcse_mse: f64::NAN,
        mcse_coverage: f64::NAN,
    }
}

/// Bias, MSE and coverage of one method's replicate results in a scenario.
pub fn evaluate(scenario: ScenarioId, method: Method, results: &[Result<AdjustmentResult>]) -> Result<MetricsRow> {
    let used: Vec<(f64, f64, f64)> = results
        .iter()
        .filter_map(|r| r.as_ref().ok())
        .filter(|r| failure_reason(r).is_none())
        .map(|r| (r.hr, r.ci95.0, r.ci95.1))
        .collect();
    if used.is_empty() {
        return Err(Error::AllReplicatesFailed);
    }
    let n_failures = (results.len() - used.len()) as u64;
    Ok(summarize(scenario, method, &used, n_failures))
}

/// Rebuilds metrics from per-replicate estimates, keeping replicates with
/// index below `reps` (all of them when `None`).
///
/// Rows come out in first-appearance order of (scenario, method).
pub fn metrics_from_estimates(estimates: &[ReplicateEstimate], reps: Option<u64>) -> Vec<MetricsRow> {
    let mut keys: Vec<(ScenarioId, Method)> = Vec::new();
    let mut cells: Vec<(Vec<(f64, f64, f64)>, u64)> = Vec::new();
    for e in estimates.iter().filter(|e| reps.is_none_or(|r| e.rep < r)) {
        let key = (e.scenario(), e.method);
        let i = match keys.iter().position(|k| *k == key) {
            Some(i) => i,
            None => {
                keys.push(key);
                cells.push((Vec::new(), 0));
                keys.len() - 1
            }
        };
        if e.is_ok() {
            cells[i].0.push((e.hr, e.ci_lo, e.ci_hi));
        } else {
            cells[i].1 += 1;
        }
    }
    keys.into_iter()
        .zip(cells)
        .map(|((s, m), (used, fails))| {
            if used.is_empty() {
                failed_row(s, m, fails)
            } else {
                summarize(s, m, &used, fails)
            }
        })
        .collect()
}

/// Method with the smallest |bias|, then smaller MSE, then higher coverage.
///
/// Cells where every replicate failed are skipped; `None` if nothing is left.
pub fn recommend(rows: &[MetricsRow]) -> Option<Method> {
    rows.iter()
        .filter(|r| r.is_usable() && r.bias.is_finite())
        .min_by(|a, b| {
            a.bias
                .abs()
                .total_cmp(&b.bias.abs())
                .then(a.mse.total_cmp(&b.mse))
                .then(b.coverage.total_cmp(&a.coverage))
        })
        .map(|r| r.method)
}

/// One row of `recommendations.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub true_hr: f64,
    pub censor: f64,
    pub switch: f64,
    pub method: Option<Method>,
}

/// One recommendation per scenario, in the order scenarios first appear.
pub fn recommendations(rows: &[MetricsRow]) -> Vec<Recommendation> {
    let mut out: Vec<Recommendation> = Vec::new();
    for r in rows {
        let s = r.scenario();
        if out.iter().any(|x| x.true_hr == s.true_hr && x.censor == s.censor && x.switch == s.switch) {
            continue;
        }
        let cell: Vec<MetricsRow> = rows.iter().filter(|x| x.scenario() == s).cloned().collect();
        out.push(Recommendation {
            true_hr: s.true_hr,
            censor: s.censor,
            switch: s.switch,
            method: recommend(&cell),
        });
    }
    out
}

/// A full factorial: every combination of true HR, censoring and switching
/// fractions, with everything else taken from `base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FactorialConfig {
    pub true_hrs: Vec<f64>,
    pub censor_rates: Vec<f64>,
    pub switch_rates: Vec<f64>,
    pub reps: u64,
    pub methods: Vec<Method>,
}

impl Default for FactorialConfig {
    fn default() -> Self {
        FactorialConfig {
            true_hrs: vec![0.4, 0.6, 0.8],
            censor_rates: vec![0.25, 0.5, 0.75],
            switch_rates: vec![0.25, 0.5, 0.75],
            reps: 500,
            methods: Method::STUDY.to_vec(),
        }
    }
}

impl FactorialConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, why: &str| Err(Error::config(format!("factorial.{k}"), why));
        if self.true_hrs.is_empty() || self.censor_rates.is_empty() || self.switch_rates.is_empty() {
            return bad("true_hrs", "every factor needs at least one level");
        }
        if self.reps == 0 {
            return bad("reps", "must be positive");
        }
        if self.methods.is_empty() {
            return bad("methods", "need at least one method");
        }
        Ok(())
    }

    /// Scenario configs with HR varying slowest and switching fastest.
    pub fn scenarios(&self, base: &ScenarioConfig) -> Vec<ScenarioConfig> {
        let mut out = Vec::new();
        for &true_hr in &self.true_hrs {
            for &target_censor in &self.censor_rates {
                for &target_switch in &self.switch_rates {
                    out.push(ScenarioConfig {
                        true_hr,
                        target_censor,
                        target_switch,
                        ..base.clone()
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub metrics: Vec<MetricsRow>,
    pub estimates: Vec<ReplicateEstimate>,
}

impl SweepOutput {
    /// Rows with at least one failed replicate.
    pub fn partial_failures(&self) -> impl Iterator<Item = &MetricsRow> {
        self.metrics.iter().filter(|r| r.n_failures > 0)
    }
}

/// Runs every scenario of the factorial, all methods on shared replicates.
///
/// Replicate `rep` of a scenario is the dataset `Simulator::generate(rep)`
/// for that scenario, so results do not depend on `jobs`.
pub fn run_factorial(
    base: &ScenarioConfig,
    factorial: &FactorialConfig,
    methods_cfg: &MethodConfig,
    jobs: usize,
) -> Result<SweepOutput> {
    run_factorial_with_progress(base, factorial, methods_cfg, jobs, |_, _| {})
}

/// As [`run_factorial`], calling `progress(done, total)` after each scenario.
pub fn run_factorial_with_progress(
    base: &ScenarioConfig,
    factorial: &FactorialConfig,
    methods_cfg: &MethodConfig,
    jobs: usize,
    progress: impl Fn(usize, usize),
) -> Result<SweepOutput> {
    factorial.validate()?;
    methods_cfg.validate()?;
    let scenarios = factorial.scenarios(base);
    for s in &scenarios {
        s.validate()?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;

    let mut estimates = Vec::new();
    for (i, cfg) in scenarios.iter().enumerate() {
        estimates.extend(pool.install(|| run_scenario(cfg, factorial, methods_cfg)));
        progress(i + 1, scenarios.len());
    }
    let metrics = metrics_from_estimates(&estimates, None);
    Ok(SweepOutput { metrics, estimates })
}

/// All methods on all replicates of one scenario, ordered by replicate then
/// method.
pub fn run_scenario(cfg: &ScenarioConfig, factorial: &FactorialConfig, methods_cfg: &MethodConfig) -> Vec<ReplicateEstimate> {
    let s = ScenarioId::of(cfg);
    let methods = &factorial.methods;
    let sim = match Simulator::new(cfg) {
        Ok(sim) => sim,
        Err(e) => {
            let err: Result<AdjustmentResult> = Err(e);
            return (0..factorial.reps)
                .flat_map(|rep| methods.iter().map(move |&m| (rep, m)))
                .map(|(rep, m)| ReplicateEstimate::new(s, rep, m, "", &err))
                .collect();
        }
    };
    (0..factorial.reps)
        .into_par_iter()
        .flat_map_iter(|rep| {
            let row = |fp: &str, out: &Result<AdjustmentResult>, m| ReplicateEstimate::new(s, rep, m, fp, out);
            match sim.generate(rep) {
                Ok(d) => {
                    let fp = d.fingerprint();
                    methods
                        .iter()
                        .map(|&m| row(&fp, &adjust(&d, m, methods_cfg), m))
                        .collect::<Vec<_>>()
                }
                Err(e) => {
                    let err = Err(e);
                    methods.iter().map(|&m| row("", &err, m)).collect()
                }
            }
        })
        .collect()
}
