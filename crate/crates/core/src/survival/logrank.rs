use nalgebra::{DMatrix, DVector};

use super::risk::{for_each_event_time, SortedSamples};
use super::{group_count, validate, SurvSample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LogRankResult {
    /// Signed statistic for two groups: negative when group 1 has fewer
    /// events than expected. `NaN` for more than two groups.
    pub z: f64,
    pub chi_sq: f64,
    pub df: usize,
    /// Observed minus expected events per group.
    pub o_minus_e: Vec<f64>,
}

/// Weighted k-sample log-rank test.
///
/// Tied event times use the pooled risk set with the hypergeometric variance
/// correction computed from unweighted counts.
pub fn log_rank(samples: &[SurvSample]) -> Result<LogRankResult> {
    validate(samples)?;
    let k = group_count(samples);
    if k < 2 {
        return Err(Error::InvalidInput("log-rank needs at least two groups".into()));
    }
    let mut sizes = vec![0usize; k];
    for s in samples {
        sizes[s.group] += 1;
    }
    if let Some(g) = sizes.iter().position(|&n| n == 0) {
        return Err(Error::InvalidInput(format!("log-rank group {g} is empty")));
    }
    let sorted = SortedSamples::new(samples.to_vec());
    log_rank_sorted(&[&sorted], k)
}

/// Log-rank over presorted parts whose union forms the sample.
fn log_rank_sorted(parts: &[&SortedSamples], k: usize) -> Result<LogRankResult> {
    let mut ome = vec![0.0; k];
    let mut var = vec![0.0; k * k];
    let mut any_event = false;
    for_each_event_time(parts, k, |row| {
        let n = row.total_at_risk();
        let d = row.total_events();
        if n <= 0.0 {
            return;
        }
        any_event = true;
        let tie = if row.n_raw > 1 {
            (row.n_raw - row.d_raw) as f64 / (row.n_raw - 1) as f64
        } else {
            1.0
        };
        for g in 0..k {
            let pg = row.at_risk[g] / n;
            ome[g] += row.events[g] - d * pg;
            for h in 0..k {
                let ph = row.at_risk[h] / n;
                let delta = if g == h { 1.0 } else { 0.0 };
                var[g * k + h] += tie * d * pg * (delta - ph);
            }
        }
    });
    if !any_event {
        return Err(Error::DegenerateRiskSet);
    }

    if k == 2 {
        let v = var[3];
        let z = if v > 0.0 { ome[1] / v.sqrt() } else { 0.0 };
        return Ok(LogRankResult {
            z,
            chi_sq: z * z,
            df: 1,
            o_minus_e: ome,
        });
    }

    let chi_sq = k_sample_chi(&ome, &var, k)?;
    Ok(LogRankResult {
        z: f64::NAN,
        chi_sq,
        df: k - 1,
        o_minus_e: ome,
    })
}

/// `U' V^- U` over the first `k - 1` groups of a k-sample log-rank.
pub(crate) fn k_sample_chi(ome: &[f64], var: &[f64], k: usize) -> Result<f64> {
    let m = k - 1;
    let v = DMatrix::from_fn(m, m, |i, j| var[i * k + j]);
    let u = DVector::from_iterator(m, ome[..m].iter().copied());
    let chi_sq = match v.clone().cholesky() {
        Some(ch) => u.dot(&ch.solve(&u)),
        None => {
            // groups without risk mass make V singular
            let pinv = v.pseudo_inverse(1e-12).map_err(|e| Error::InvalidInput(e.to_string()))?;
            u.dot(&(pinv * &u))
        }
    };
    Ok(chi_sq.max(0.0))
}
