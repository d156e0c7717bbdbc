//! Simulated two-arm trials with control-arm switching.
//!
//! Survival follows an exponential AFT model (Weibull with unit scale), so
//! the treatment coefficient `a1 = -log(true_hr)` is exactly a log hazard
//! ratio. Control patients may switch at a uniform time in the first year;
//! their remaining time is stretched by `F / true_hr` for the chosen level.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{Arm, Covariates, Dataset, PatientRecord, SwitchAnnotation};
use crate::error::{Error, Result};

/// Stream reserved for calibration pilots; replicates use their index.
const PILOT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimCoefficients {
    pub a0: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub sigma: f64,
}

impl Default for SimCoefficients {
    fn default() -> Self {
        SimCoefficients {
            a0: 7.0,
            a2: -0.002,
            a3: -0.05,
            a4: -0.05,
            sigma: 1.0,
        }
    }
}

/// How `target_switch` is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SwitchMode {
    /// Probability of intending to switch; only patients alive at the
    /// drawn switch time actually switch.
    #[default]
    Intent,
    /// Realized switching fraction among control patients; the intent
    /// probability is calibrated on a pilot.
    Realized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub n: usize,
    pub true_hr: f64,
    pub target_censor: f64,
    pub target_switch: f64,
    pub effect_factors: Vec<f64>,
    pub level_mix: Vec<f64>,
    pub seed: u64,
    pub alpha: SimCoefficients,
    pub switch_mode: SwitchMode,
    /// Switch times are uniform on (0, switch_window) days.
    pub switch_window: f64,
    pub pilot_size: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n: 400,
            true_hr: 0.6,
            target_censor: 0.25,
            target_switch: 0.25,
            effect_factors: vec![1.0, 0.7],
            level_mix: vec![0.5, 0.5],
            seed: 1,
            alpha: SimCoefficients::default(),
            switch_mode: SwitchMode::Intent,
            switch_window: 365.0,
            pilot_size: 20_000,
        }
    }
}

impl ScenarioConfig {
    pub fn a1(&self) -> f64 {
        -self.true_hr.ln()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, why: &str| Err(Error::config(format!("scenario.{k}"), why));
        if self.n < 2 {
            return bad("n", "need at least 2 patients");
        }
        if !(self.true_hr > 0.0 && self.true_hr.is_finite()) {
            return bad("true_hr", "must be positive");
        }
        if !(0.0..1.0).contains(&self.target_censor) {
            return bad("target_censor", "must be in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.target_switch) {
            return bad("target_switch", "must be in [0, 1)");
        }
        if self.effect_factors.is_empty() || self.effect_factors.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
            return bad("effect_factors", "need one positive factor per level");
        }
        if self.level_mix.len() != self.effect_factors.len() {
            return bad("level_mix", "must have one probability per effect factor");
        }
        if self.level_mix.iter().any(|p| !(*p >= 0.0)) || (self.level_mix.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad("level_mix", "probabilities must be nonnegative and sum to 1");
        }
        if !(self.alpha.sigma > 0.0 && self.alpha.sigma.is_finite()) {
            return bad("alpha.sigma", "must be positive");
        }
        if !(self.switch_window > 0.0 && self.switch_window.is_finite()) {
            return bad("switch_window", "must be positive");
        }
        if self.pilot_size < 100 {
            return bad("pilot_size", "need at least 100 pilot patients");
        }
        Ok(())
    }

    /// Number of switch levels the scenario can produce.
    pub fn k_levels(&self) -> u32 {
        self.effect_factors.len() as u32
    }
}

fn draw_truncated(rng: &mut ChaCha8Rng, dist: &Normal<f64>, lo: f64, hi: f64) -> f64 {
    loop {
        let v = dist.sample(rng);
        if (lo..=hi).contains(&v) {
            return v;
        }
    }
}

fn draw_covariates(rng: &mut ChaCha8Rng) -> Covariates {
    let age = Normal::new(65.0, 10.0).unwrap();
    let ecog = Normal::new(1.0, 0.7).unwrap();
    let age = draw_truncated(rng, &age, 18.0, 90.0);
    let ecog = draw_truncated(rng, &ecog, 0.0, 4.0);
    let prior_lines = rng.random_range(1..=3u32);
    let u: f64 = rng.random();
    let risk_level = if u < 0.3 {
        0
    } else if u < 0.8 {
        1
    } else {
        2
    };
    Covariates {
        age,
        ecog,
        prior_lines,
        risk_level,
    }
}

/// Age ~ N(65, 10) on [18, 90], ECOG ~ N(1, 0.7) on [0, 4], prior lines
/// uniform on {1, 2, 3}, risk level in {0, 1, 2} with probabilities
/// (0.3, 0.5, 0.2), all independent.
pub fn gen_covariates(n: usize, seed: u64) -> Vec<Covariates> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| draw_covariates(&mut rng)).collect()
}

/// Latent untreated-or-treated death time in days.
pub fn gen_survival<R: Rng + ?Sized>(
    cov: &Covariates,
    arm: Arm,
    a1: f64,
    coef: &SimCoefficients,
    rng: &mut R,
) -> f64 {
    // minimum-Gumbel error: log of a unit exponential
    let e: f64 = Exp1.sample(rng);
    let lp = coef.a0
        + a1 * arm.group() as f64
        + coef.a2 * cov.age
        + coef.a3 * cov.ecog
        + coef.a4 * f64::from(cov.risk_level);
    (lp + coef.sigma * e.ln()).exp()
}

/// Observed death time of a switcher at `w` with latent time `latent`.
pub fn switched_time(latent: f64, w: f64, true_hr: f64, factor: f64) -> f64 {
    w + (latent - w) * factor / true_hr
}

/// Per-patient draws, in a fixed order so that replicates are reproducible.
struct Draw {
    arm: Arm,
    cov: Covariates,
    latent: f64,
    intent_u: f64,
    w: f64,
    level: usize,
    censor_e: f64,
}

fn draw_patient(cfg: &ScenarioConfig, arm: Arm, rng: &mut ChaCha8Rng) -> Draw {
    let cov = draw_covariates(rng);
    let latent = gen_survival(&cov, arm, cfg.a1(), &cfg.alpha, rng);
    let intent_u = rng.random();
    let w = rng.random::<f64>() * cfg.switch_window;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut level = cfg.level_mix.len() - 1;
    for (k, p) in cfg.level_mix.iter().enumerate() {
        acc += p;
        if u < acc {
            level = k;
            break;
        }
    }
    let censor_e = Exp1.sample(rng);
    Draw {
        arm,
        cov,
        latent,
        intent_u,
        w,
        level,
        censor_e,
    }
}

/// Final death time and switch annotation before censoring.
fn apply_switch(cfg: &ScenarioConfig, d: &Draw, p_intent: f64) -> (f64, Option<SwitchAnnotation>) {
    if d.arm == Arm::Control && d.intent_u < p_intent && d.latent > d.w {
        let t = switched_time(d.latent, d.w, cfg.true_hr, cfg.effect_factors[d.level]);
        (
            t,
            Some(SwitchAnnotation {
                time: d.w,
                level: d.level as u32 + 1,
            }),
        )
    } else {
        (d.latent, None)
    }
}

fn arms(n: usize, rng: &mut ChaCha8Rng) -> Vec<Arm> {
    let mut a: Vec<Arm> = (0..n).map(|i| if i < n / 2 { Arm::Control } else { Arm::Treatment }).collect();
    a.shuffle(rng);
    a
}

/// A scenario with its calibrated switching and censoring parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulator {
    pub cfg: ScenarioConfig,
    /// Probability that a control patient intends to switch.
    pub p_intent: f64,
    /// Exponential censoring rate per day; zero means no censoring.
    pub censor_rate: f64,
}

impl Simulator {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(PILOT_STREAM);
        let pilot: Vec<Draw> = arms(cfg.pilot_size, &mut rng)
            .into_iter()
            .map(|a| draw_patient(cfg, a, &mut rng))
            .collect();

        let p_intent = match cfg.switch_mode {
            SwitchMode::Intent => cfg.target_switch,
            SwitchMode::Realized => {
                let ctrl: Vec<&Draw> = pilot.iter().filter(|d| d.arm == Arm::Control).collect();
                let alive = ctrl.iter().filter(|d| d.latent > d.w).count() as f64 / ctrl.len() as f64;
                let p = if cfg.target_switch == 0.0 { 0.0 } else { cfg.target_switch / alive };
                if p > 1.0 {
                    return Err(Error::CalibrationFailure(format!(
                        "switch fraction {} unreachable: only {:.3} of control patients survive to their switch time",
                        cfg.target_switch, alive
                    )));
                }
                p
            }
        };

        let censor_rate = if cfg.target_censor == 0.0 {
            0.0
        } else {
            let times: Vec<f64> = pilot.iter().map(|d| apply_switch(cfg, d, p_intent).0).collect();
            // expected censored fraction under rate r: mean of P(C < T)
            let frac = |r: f64| times.iter().map(|t| -(-r * t).exp_m1()).sum::<f64>() / times.len() as f64;
            let (mut lo, mut hi) = (-30.0f64, 5.0f64);
            if frac(hi.exp()) < cfg.target_censor {
                return Err(Error::CalibrationFailure(format!(
                    "censoring fraction {} unreachable",
                    cfg.target_censor
                )));
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if frac(mid.exp()) < cfg.target_censor {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            (0.5 * (lo + hi)).exp()
        };
        Ok(Simulator {
            cfg: cfg.clone(),
            p_intent,
            censor_rate,
        })
    }

    /// Replicate `rep` of the scenario; depends only on `(cfg, rep)`.
    pub fn generate(&self, rep: u64) -> Result<Dataset> {
        let cfg = &self.cfg;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(rep);
        let mut patients = Vec::with_capacity(cfg.n);
        for (i, arm) in arms(cfg.n, &mut rng).into_iter().enumerate() {
            let d = draw_patient(cfg, arm, &mut rng);
            let (t, mut switch) = apply_switch(cfg, &d, self.p_intent);
            let c = if self.censor_rate > 0.0 {
                d.censor_e / self.censor_rate
            } else {
                f64::INFINITY
            };
            let (observed_time, event) = if t <= c { (t, true) } else { (c, false) };
            if switch.is_some_and(|s| s.time >= observed_time) {
                // censored before the switch: never observed
                switch = None;
            }
            patients.push(PatientRecord {
                id: format!("P{:05}", i + 1),
                arm,
                observed_time,
                event,
                censor_time: c,
                covariates: d.cov,
                switch,
            });
        }
        Dataset::new(patients)
    }
}

/// One-shot convenience: calibrates and generates replicate `rep`.
pub fn generate(cfg: &ScenarioConfig, rep: u64) -> Result<Dataset> {
    Simulator::new(cfg)?.generate(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Arm;

    #[test]
    fn switch_arithmetic() {
        assert!((switched_time(400.0, 100.0, 0.4, 1.0) - 850.0).abs() < 1e-9);
        assert!((switched_time(400.0, 100.0, 0.4, 0.7) - 625.0).abs() < 1e-9);
    }

    #[test]
    fn aft_age_semantics() {
        let coef = SimCoefficients::default();
        let c = Covariates {
            age: 60.0,
            ecog: 1.0,
            prior_lines: 1,
            risk_level: 1,
        };
        let older = Covariates { age: 560.0, ..c };
        let mut r1 = ChaCha8Rng::seed_from_u64(3);
        let mut r2 = ChaCha8Rng::seed_from_u64(3);
        let a = gen_survival(&c, Arm::Control, 0.0, &coef, &mut r1);
        let b = gen_survival(&older, Arm::Control, 0.0, &coef, &mut r2);
        assert!((b / a - (-1f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn balanced_and_deterministic() {
        let cfg = ScenarioConfig::default();
        let sim = Simulator::new(&cfg).unwrap();
        let a = sim.generate(4).unwrap();
        assert_eq!(a.arm_count(Arm::Control), 200);
        assert_eq!(a.arm_count(Arm::Treatment), 200);
        assert_eq!(a, sim.generate(4).unwrap());
        assert_ne!(a, sim.generate(5).unwrap());
    }

    #[test]
    fn no_switch_no_censor_is_latent() {
        let cfg = ScenarioConfig {
            target_switch: 0.0,
            target_censor: 0.0,
            ..Default::default()
        };
        let d = generate(&cfg, 0).unwrap();
        assert_eq!(d.n_switchers(), 0);
        assert!(d.patients().iter().all(|p| p.event && p.censor_time.is_infinite()));
    }

    #[test]
    fn invalid_switch_names_key() {
        let cfg = ScenarioConfig {
            target_switch: 1.2,
            ..Default::default()
        };
        match Simulator::new(&cfg) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "scenario.target_switch"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn realized_mode_can_fail() {
        let cfg = ScenarioConfig {
            target_switch: 0.95,
            switch_mode: SwitchMode::Realized,
            ..Default::default()
        };
        assert!(matches!(Simulator::new(&cfg), Err(Error::CalibrationFailure(_))));
    }

    #[test]
    fn covariate_moments() {
        let c = gen_covariates(100_000, 17);
        let n = c.len() as f64;
        let mean_age = c.iter().map(|x| x.age).sum::<f64>() / n;
        assert!((mean_age - 65.0).abs() < 0.2);
        for (k, p) in [0.3, 0.5, 0.2].iter().enumerate() {
            let f = c.iter().filter(|x| x.risk_level as usize == k).count() as f64 / n;
            assert!((f - p).abs() < 0.01);
        }
        let me = c.iter().map(|x| x.ecog).sum::<f64>() / n;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for x in &c {
            let (a, b) = (x.age - mean_age, x.ecog - me);
            sxy += a * b;
            sxx += a * a;
            syy += b * b;
        }
        assert!((sxy / (sxx * syy).sqrt()).abs() < 0.02);
        assert_eq!(c, gen_covariates(100_000, 17));
    }
}
