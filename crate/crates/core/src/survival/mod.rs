//! Survival kernels shared by every adjustment method.
//!
//! All kernels accept counting-process samples: a subject is at risk on
//! `(entry, time]`. Ordinary right-censored data simply uses `entry = 0`.
//! Splitting a subject into consecutive pieces (for time-varying weights or
//! group membership) leaves every risk set unchanged.

mod cox;
mod km;
mod logrank;
pub(crate) mod risk;
mod weibull;

pub use cox::{cox_fit, CoxFit};
pub use km::{kaplan_meier, SurvivalCurve};
pub use logrank::{log_rank, LogRankResult};
pub use weibull::{weibull_aft_fit, WeibullAftFit};

pub(crate) use logrank::k_sample_chi;

use crate::error::{Error, Result};

/// Two-sided 95% normal quantile used for every Wald interval.
pub const Z_95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvSample {
    /// Start of the at-risk interval; 0 for ordinary data.
    pub entry: f64,
    pub time: f64,
    pub event: bool,
    pub group: usize,
    pub weight: f64,
}

impl SurvSample {
    pub fn new(time: f64, event: bool, group: usize) -> Self {
        SurvSample {
            entry: 0.0,
            time,
            event,
            group,
            weight: 1.0,
        }
    }

    pub fn weighted(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn entering_at(mut self, entry: f64) -> Self {
        self.entry = entry;
        self
    }
}

pub(crate) fn validate(samples: &[SurvSample]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    for (i, s) in samples.iter().enumerate() {
        if !(s.time > 0.0) || !s.time.is_finite() {
            return Err(Error::InvalidInput(format!("sample {i}: time must be positive and finite")));
        }
        if !(s.weight >= 0.0) || !s.weight.is_finite() {
            return Err(Error::InvalidInput(format!("sample {i}: weight must be nonnegative")));
        }
        if !(s.entry >= 0.0 && s.entry < s.time) {
            return Err(Error::InvalidInput(format!("sample {i}: entry must lie in [0, time)")));
        }
    }
    Ok(())
}

/// Number of groups, i.e. one past the largest group label.
pub(crate) fn group_count(samples: &[SurvSample]) -> usize {
    samples.iter().map(|s| s.group).max().map_or(0, |g| g + 1)
}
