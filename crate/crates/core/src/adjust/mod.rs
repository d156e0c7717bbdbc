//! Treatment-switching adjustment methods.
//!
//! Every method ends with a Cox fit of treatment versus control on some
//! (possibly reweighted or reconstructed) version of the data and returns an
//! [`AdjustmentResult`].

pub mod forest;
pub mod ipcw;
pub mod ipe;
pub mod naive;
pub mod rf;
pub mod rpsftm;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::survival::{cox_fit, CoxFit, SurvSample};

pub use forest::{forest_fit, forest_predict, ForestConfig, RegressionForest, RegressionTree};
pub use ipcw::{compute_weights, fit_switch_model, ipcw, IpcwConfig, SwitchModel, WeightTrajectory};
pub use ipe::{ipe, IpeConfig};
pub use naive::{censor_at_switch, exclude_switchers, itt};
pub use rf::rf_adjust;
pub use rpsftm::{
    counterfactual_dataset, counterfactual_time, g_estimate, rpsftm, stratified_rpsftm, BootstrapConfig,
    CounterfactualDataset, CounterfactualRecord, GEstimationConfig, GEstimationResult, GridPoint,
};

/// Serialized as its table label; parsed from either label or key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Itt,
    Exclude,
    CensorAtSwitch,
    Ipcw,
    Rpsftm,
    Ipe,
    StratifiedRpsftm,
    RandomForest,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Itt,
        Method::Exclude,
        Method::CensorAtSwitch,
        Method::Ipcw,
        Method::Rpsftm,
        Method::Ipe,
        Method::StratifiedRpsftm,
        Method::RandomForest,
    ];

    /// The seven methods compared in the simulation study, in table order.
    pub const STUDY: [Method; 7] = [
        Method::Itt,
        Method::Rpsftm,
        Method::Ipe,
        Method::CensorAtSwitch,
        Method::Ipcw,
        Method::RandomForest,
        Method::StratifiedRpsftm,
    ];

    /// Command-line name.
    pub fn key(self) -> &'static str {
        match self {
            Method::Itt => "itt",
            Method::Exclude => "exclude",
            Method::CensorAtSwitch => "censor",
            Method::Ipcw => "ipcw",
            Method::Rpsftm => "rpsftm",
            Method::Ipe => "ipe",
            Method::StratifiedRpsftm => "srp",
            Method::RandomForest => "rf",
        }
    }

    /// Label used in tables and plots.
    pub fn label(self) -> &'static str {
        match self {
            Method::Itt => "ITT",
            Method::Exclude => "Exclude",
            Method::CensorAtSwitch => "Censoring",
            Method::Ipcw => "IPCW",
            Method::Rpsftm => "RPSFTM",
            Method::Ipe => "IPE",
            Method::StratifiedRpsftm => "SRP",
            Method::RandomForest => "RF",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.key() == s || m.label().to_ascii_lowercase() == s)
            .ok_or_else(|| Error::config("method", format!("unknown method {s:?}")))
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DiagValue {
    Bool(bool),
    Int(i64),
    Num(f64),
    List(Vec<f64>),
    Text(String),
}

impl fmt::Display for DiagValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagValue::Bool(b) => write!(f, "{b}"),
            DiagValue::Int(i) => write!(f, "{i}"),
            DiagValue::Num(x) => write!(f, "{x}"),
            DiagValue::List(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "{}", parts.join(";"))
            }
            DiagValue::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for DiagValue {
    fn from(x: f64) -> Self {
        DiagValue::Num(x)
    }
}
impl From<usize> for DiagValue {
    fn from(x: usize) -> Self {
        DiagValue::Int(x as i64)
    }
}
impl From<u64> for DiagValue {
    fn from(x: u64) -> Self {
        DiagValue::Int(x as i64)
    }
}
impl From<bool> for DiagValue {
    fn from(x: bool) -> Self {
        DiagValue::Bool(x)
    }
}
impl From<Vec<f64>> for DiagValue {
    fn from(x: Vec<f64>) -> Self {
        DiagValue::List(x)
    }
}
impl From<&str> for DiagValue {
    fn from(x: &str) -> Self {
        DiagValue::Text(x.to_string())
    }
}

pub type Diagnostics = BTreeMap<String, DiagValue>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentResult {
    pub method: Method,
    pub hr: f64,
    pub ci95: (f64, f64),
    pub log_hr: f64,
    pub se: f64,
    pub diagnostics: Diagnostics,
}

impl AdjustmentResult {
    pub(crate) fn from_cox(method: Method, fit: &CoxFit) -> Self {
        let mut diagnostics = Diagnostics::new();
        diagnostics.insert("cox_iterations".into(), fit.iterations.into());
        AdjustmentResult {
            method,
            hr: fit.hr,
            ci95: fit.ci95,
            log_hr: fit.log_hr,
            se: fit.se,
            diagnostics,
        }
    }

    pub(crate) fn diag(&mut self, key: &str, value: impl Into<DiagValue>) {
        self.diagnostics.insert(key.to_string(), value.into());
    }

    pub fn covers(&self, hr: f64) -> bool {
        self.ci95.0 <= hr && hr <= self.ci95.1
    }
}

/// Cox fit of treatment versus control, with group = arm.
pub(crate) fn cox_by_arm(method: Method, samples: &[SurvSample]) -> Result<AdjustmentResult> {
    let fit = cox_fit(samples)?;
    Ok(AdjustmentResult::from_cox(method, &fit))
}

pub(crate) fn require_both_arms(d: &Dataset) -> Result<()> {
    use crate::data::Arm;
    if d.arm_count(Arm::Control) == 0 || d.arm_count(Arm::Treatment) == 0 {
        return Err(Error::InvalidInput("both arms must be nonempty".into()));
    }
    Ok(())
}

/// Per-method settings bundle used by the dispatcher.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodConfig {
    pub ipcw: IpcwConfig,
    pub gest: GEstimationConfig,
    pub srp: GEstimationConfig,
    pub ipe: IpeConfig,
    pub forest: ForestConfig,
}

impl Default for MethodConfig {
    fn default() -> Self {
        MethodConfig {
            ipcw: IpcwConfig::default(),
            gest: GEstimationConfig::default(),
            srp: GEstimationConfig::stratified(1),
            ipe: IpeConfig::default(),
            forest: ForestConfig::default(),
        }
    }
}

impl MethodConfig {
    pub fn validate(&self) -> Result<()> {
        self.ipcw.validate()?;
        self.gest.validate("gest")?;
        self.srp.validate("srp")?;
        self.ipe.validate()?;
        self.forest.validate()
    }
}

/// Runs one method with its settings from `cfg`.
///
/// Plain RPSFTM always uses a single parameter; the stratified method uses
/// `cfg.srp.k_levels` extra parameters.
pub fn adjust(d: &Dataset, method: Method, cfg: &MethodConfig) -> Result<AdjustmentResult> {
    match method {
        Method::Itt => itt(d),
        Method::Exclude => exclude_switchers(d),
        Method::CensorAtSwitch => censor_at_switch(d),
        Method::Ipcw => ipcw(d, &cfg.ipcw),
        Method::Rpsftm => {
            let gcfg = GEstimationConfig {
                k_levels: 0,
                ..cfg.gest.clone()
            };
            rpsftm(d, &gcfg)
        }
        Method::Ipe => ipe(d, &cfg.ipe),
        Method::StratifiedRpsftm => stratified_rpsftm(d, &cfg.srp),
        Method::RandomForest => rf_adjust(d, &cfg.forest),
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.key().parse::<Method>().unwrap(), m);
            assert_eq!(m.label().parse::<Method>().unwrap(), m);
        }
        assert!("nope".parse::<Method>().is_err());
    }
}
