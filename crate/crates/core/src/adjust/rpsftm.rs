//! Rank preserving structural failure time model and its stratified variant.
//!
//! Counterfactual untreated time is `U = t_con + exp(psi) * t_trt`, so a
//! beneficial treatment has `psi < 0`. Parameter slot 0 belongs to the
//! treatment arm and to level-1 switchers; level `j >= 2` uses slot `j - 1`.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{cox_by_arm, require_both_arms, AdjustmentResult, Method};
use crate::data::{Arm, Dataset, PatientRecord};
use crate::error::{Error, Result};
use crate::survival::{k_sample_chi, log_rank, SurvSample};

pub const MAX_EXTRA_LEVELS: u32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GEstimationConfig {
    pub psi_min: f64,
    pub psi_max: f64,
    pub grid_step: f64,
    pub recensor: bool,
    /// Number of extra parameters beyond `psi0`.
    pub k_levels: u32,
    /// Forces every level onto `psi0` (collapsed grid).
    pub common_effect: bool,
    pub keep_surface: bool,
    pub bootstrap: Option<BootstrapConfig>,
}

impl Default for GEstimationConfig {
    fn default() -> Self {
        GEstimationConfig {
            psi_min: -1.5,
            psi_max: 0.5,
            grid_step: 0.01,
            recensor: true,
            k_levels: 0,
            common_effect: false,
            keep_surface: false,
            bootstrap: None,
        }
    }
}

impl GEstimationConfig {
    /// Defaults for the stratified method with `k` extra levels.
    pub fn stratified(k: u32) -> Self {
        GEstimationConfig {
            grid_step: 0.025,
            k_levels: k,
            ..Default::default()
        }
    }

    pub fn validate(&self, section: &str) -> Result<()> {
        let key = |k: &str| format!("{section}.{k}");
        if !(self.psi_min.is_finite() && self.psi_max.is_finite() && self.psi_min < self.psi_max) {
            return Err(Error::config(key("psi_min"), "psi_min must be finite and below psi_max"));
        }
        if !(self.grid_step > 0.0 && self.grid_step < self.psi_max - self.psi_min) {
            return Err(Error::config(key("grid_step"), "grid_step must be in (0, psi_max - psi_min)"));
        }
        if self.k_levels > MAX_EXTRA_LEVELS {
            return Err(Error::config(key("k_levels"), format!("at most {MAX_EXTRA_LEVELS} extra levels")));
        }
        if let Some(b) = &self.bootstrap {
            if b.reps < 2 {
                return Err(Error::config(key("bootstrap.reps"), "need at least 2 bootstrap replicates"));
            }
        }
        Ok(())
    }

    fn grid(&self) -> Vec<f64> {
        let n = ((self.psi_max - self.psi_min) / self.grid_step).round() as usize;
        (0..=n)
            .map(|i| (self.psi_min + i as f64 * self.grid_step).min(self.psi_max))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub psi: Vec<f64>,
    /// `|z|` for the two-arm test, chi-square for the stratified test.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GEstimationResult {
    pub psi_hat: Vec<f64>,
    /// Signed log-rank z for the two-arm test; chi-square otherwise.
    pub z_at_solution: f64,
    pub objective: f64,
    /// Per slot: false when the slot was tied to `psi0`.
    pub estimated: Vec<bool>,
    pub objective_surface: Option<Vec<GridPoint>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualRecord {
    pub arm: Arm,
    pub u_time: f64,
    pub u_event: bool,
}

pub type CounterfactualDataset = Vec<CounterfactualRecord>;

fn psi_slot(p: &PatientRecord) -> Option<usize> {
    match (p.arm, p.switch) {
        (Arm::Treatment, _) => Some(0),
        (Arm::Control, Some(sw)) => Some(sw.level.saturating_sub(1) as usize),
        (Arm::Control, None) => None,
    }
}

/// Counterfactual time of an exposed patient under a single `psi`.
pub(super) fn transform(p: &PatientRecord, psi: f64, recensor: bool) -> (f64, bool) {
    let (t_con, t_trt) = p.split_exposure();
    let f = psi.exp();
    let u = t_con + f * t_trt;
    if !recensor {
        return (u, p.event);
    }
    let c = p.censor_time;
    let u_star = u.min(c).min(f * c);
    (u_star, p.event && u_star >= u)
}

pub fn counterfactual_time(p: &PatientRecord, psi: &[f64], recensor: bool) -> Result<(f64, bool)> {
    match psi_slot(p) {
        None => Ok((p.observed_time, p.event)),
        Some(slot) => {
            let level = p.switch.map_or(1, |s| s.level);
            let v = *psi.get(slot).ok_or(Error::MissingLevelParameter(level))?;
            Ok(transform(p, v, recensor))
        }
    }
}

pub fn counterfactual_dataset(d: &Dataset, psi: &[f64], recensor: bool) -> Result<CounterfactualDataset> {
    d.patients()
        .iter()
        .map(|p| {
            let (u_time, u_event) = counterfactual_time(p, psi, recensor)?;
            Ok(CounterfactualRecord {
                arm: p.arm,
                u_time,
                u_event,
            })
        })
        .collect()
}

/// Orders candidates by objective, then by distance from `center`, then
/// lexicographically, so the winner does not depend on evaluation order.
fn better(a: &GridPoint, b: &GridPoint, center: &[f64]) -> bool {
    let dist = |v: &[f64]| v.iter().zip(center).map(|(x, c)| (x - c).powi(2)).sum::<f64>();
    let ord = a
        .objective
        .total_cmp(&b.objective)
        .then(dist(&a.psi).total_cmp(&dist(&b.psi)))
        .then_with(|| {
            a.psi
                .iter()
                .zip(&b.psi)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        });
    ord == Ordering::Less
}

fn argmin(points: &[GridPoint], center: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..points.len() {
        if better(&points[i], &points[best], center) {
            best = i;
        }
    }
    best
}

/// Two-arm log-rank z on counterfactual times with one common `psi`.
fn arm_z(d: &Dataset, psi: f64, recensor: bool) -> f64 {
    let samples: Vec<SurvSample> = d
        .patients()
        .iter()
        .map(|p| {
            let (u, e) = match psi_slot(p) {
                None => (p.observed_time, p.event),
                Some(_) => transform(p, psi, recensor),
            };
            SurvSample::new(u, e, p.arm.group())
        })
        .collect();
    log_rank(&samples).map_or(f64::NAN, |r| r.z)
}

fn abs_or_inf(z: f64) -> f64 {
    if z.is_nan() {
        f64::INFINITY
    } else {
        z.abs()
    }
}

fn search_1d(d: &Dataset, cfg: &GEstimationConfig, width: usize) -> Result<GEstimationResult> {
    let grid = cfg.grid();
    let zs: Vec<f64> = grid.iter().map(|&psi| arm_z(d, psi, cfg.recensor)).collect();
    let mut points: Vec<GridPoint> = grid
        .iter()
        .zip(&zs)
        .map(|(&psi, &z)| GridPoint {
            psi: vec![psi],
            objective: abs_or_inf(z),
        })
        .collect();
    let mut signed: Vec<f64> = zs.clone();
    let origin = [0.0];
    let i = argmin(&points, &origin);
    if points[i].objective.is_infinite() {
        return Err(Error::DegenerateRiskSet);
    }
    let min = points[i].objective;

    // Z is a step function, so |z| is often flat over a whole interval.
    // Among grid minima, prefer one next to a sign change and bisect there.
    let crosses = |a: usize, b: usize| zs[a] == 0.0 || zs[b] == 0.0 || zs[a].signum() == -zs[b].signum();
    let bracket = (0..grid.len() - 1)
        .filter(|&j| crosses(j, j + 1) && (points[j].objective == min || points[j + 1].objective == min))
        .min_by(|&a, &b| (grid[a] + grid[a + 1]).abs().total_cmp(&(grid[b] + grid[b + 1]).abs()));
    let mut center = origin.to_vec();
    if let Some(j) = bracket {
        let (mut lo, mut hi, mut z_lo) = (grid[j], grid[j + 1], zs[j]);
        if z_lo != 0.0 && zs[j + 1] != 0.0 {
            for _ in 0..60 {
                if hi - lo < 1e-9 {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                let z = arm_z(d, mid, cfg.recensor);
                points.push(GridPoint {
                    psi: vec![mid],
                    objective: abs_or_inf(z),
                });
                signed.push(z);
                if z == 0.0 || z.is_nan() {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if z.signum() == z_lo.signum() {
                    lo = mid;
                    z_lo = z;
                } else {
                    hi = mid;
                }
            }
            center = vec![0.5 * (lo + hi)];
        } else {
            center = vec![if zs[j] == 0.0 { grid[j] } else { grid[j + 1] }];
        }
    }
    let best = argmin(&points, &center);
    let edge = |v: f64| v <= grid[0] || v >= grid[grid.len() - 1];
    if edge(points[best].psi[0]) {
        return Err(Error::NoSolutionInRange {
            boundary: points[best].psi.clone(),
        });
    }
    let psi0 = points[best].psi[0];
    Ok(GEstimationResult {
        psi_hat: vec![psi0; width],
        z_at_solution: signed[best],
        objective: points[best].objective,
        estimated: (0..width).map(|j| j == 0).collect(),
        objective_surface: cfg.keep_surface.then_some(points),
    })
}

/// Pieces of one switcher for the stratified test: untreated-control group
/// up to the switch, level group afterwards.
fn switcher_pieces(p: &PatientRecord, psi: f64, group: usize, recensor: bool, out: &mut Vec<SurvSample>) {
    let w = p.switch.expect("switcher").time;
    let (u, e) = transform(p, psi, recensor);
    if u > w {
        out.push(SurvSample::new(w, false, 0));
        out.push(SurvSample::new(u, e, group).entering_at(w));
    } else {
        out.push(SurvSample::new(u, false, 0));
    }
}

/// Most groups the stratified test can have: two arms plus four levels.
const MAX_GROUPS: usize = 2 + MAX_EXTRA_LEVELS as usize + 1;

/// Unweighted at-risk and event counts at each distinct exit time of a
/// piece set. Every entry time must also be an exit time of the same set,
/// so the at-risk count at any `t` is the row of the first exit `>= t`.
struct RiskTable {
    k: usize,
    times: Vec<f64>,
    risk: Vec<f64>,
    events: Vec<f64>,
    n_events: Vec<u32>,
}

impl RiskTable {
    fn new(mut pieces: Vec<SurvSample>, k: usize) -> Self {
        pieces.sort_by(|a, b| a.time.total_cmp(&b.time));
        let mut entries: Vec<(f64, usize)> =
            pieces.iter().filter(|s| s.entry > 0.0).map(|s| (s.entry, s.group)).collect();
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut t = RiskTable {
            k,
            times: Vec::new(),
            risk: Vec::new(),
            events: Vec::new(),
            n_events: Vec::new(),
        };
        for s in &pieces {
            if t.times.last() != Some(&s.time) {
                t.times.push(s.time);
                t.events.extend(std::iter::repeat_n(0.0, k));
                t.n_events.push(0);
            }
            if s.event {
                let row = t.times.len() - 1;
                t.events[row * k + s.group] += 1.0;
                t.n_events[row] += 1;
            }
        }
        t.risk = vec![0.0; t.times.len() * k];
        let mut count = [0.0; MAX_GROUPS];
        let (mut pi, mut ei) = (pieces.len(), entries.len());
        for row in (0..t.times.len()).rev() {
            let tau = t.times[row];
            while pi > 0 && pieces[pi - 1].time >= tau {
                count[pieces[pi - 1].group] += 1.0;
                pi -= 1;
            }
            while ei > 0 && entries[ei - 1].0 >= tau {
                count[entries[ei - 1].1] -= 1.0;
                ei -= 1;
            }
            t.risk[row * k..(row + 1) * k].copy_from_slice(&count[..k]);
        }
        t
    }

    fn len(&self) -> usize {
        self.times.len()
    }
}

/// k-sample log-rank chi-square of the union of two tables.
fn merged_chi(a: &RiskTable, b: &RiskTable) -> f64 {
    let k = a.k;
    let mut ome = [0.0; MAX_GROUPS];
    let mut var = [0.0; MAX_GROUPS * MAX_GROUPS];
    let (mut i, mut j) = (0, 0);
    let mut any = false;
    while i < a.len() || j < b.len() {
        let ta = a.times.get(i).copied().unwrap_or(f64::INFINITY);
        let tb = b.times.get(j).copied().unwrap_or(f64::INFINITY);
        let t = ta.min(tb);
        let (on_a, on_b) = (ta == t, tb == t);
        let d_raw = if on_a { a.n_events[i] } else { 0 } + if on_b { b.n_events[j] } else { 0 };
        if d_raw > 0 {
            let mut r = [0.0; MAX_GROUPS];
            let mut e = [0.0; MAX_GROUPS];
            for g in 0..k {
                if i < a.len() {
                    r[g] += a.risk[i * k + g];
                    if on_a {
                        e[g] += a.events[i * k + g];
                    }
                }
                if j < b.len() {
                    r[g] += b.risk[j * k + g];
                    if on_b {
                        e[g] += b.events[j * k + g];
                    }
                }
            }
            let n: f64 = r[..k].iter().sum();
            if n > 0.0 {
                any = true;
                let d = f64::from(d_raw);
                let c = d * if n > 1.0 { (n - d) / (n - 1.0) } else { 1.0 };
                let inv = 1.0 / n;
                let mut pr = [0.0; MAX_GROUPS];
                for g in 0..k - 1 {
                    pr[g] = r[g] * inv;
                    ome[g] += e[g] - d * pr[g];
                }
                for g in 0..k - 1 {
                    let cg = c * pr[g];
                    var[g * k + g] += cg;
                    for h in 0..k - 1 {
                        var[g * k + h] -= cg * pr[h];
                    }
                }
            }
        }
        if on_a {
            i += 1;
        }
        if on_b {
            j += 1;
        }
    }
    if !any {
        return f64::INFINITY;
    }
    small_chi(&ome, &var, k).unwrap_or_else(|| k_sample_chi(&ome[..k], &var[..k * k], k).unwrap_or(f64::INFINITY))
}

/// `U' V^-1 U` by an in-place Cholesky; `None` when V is not positive definite.
fn small_chi(ome: &[f64; MAX_GROUPS], var: &[f64; MAX_GROUPS * MAX_GROUPS], k: usize) -> Option<f64> {
    let m = k - 1;
    let mut l = [0.0; MAX_GROUPS * MAX_GROUPS];
    for i in 0..m {
        for j in 0..=i {
            let mut sum = var[i * k + j];
            for p in 0..j {
                sum -= l[i * MAX_GROUPS + p] * l[j * MAX_GROUPS + p];
            }
            if i == j {
                if sum <= 1e-12 * var[i * k + i].abs().max(1e-300) {
                    return None;
                }
                l[i * MAX_GROUPS + i] = sum.sqrt();
            } else {
                l[i * MAX_GROUPS + j] = sum / l[j * MAX_GROUPS + j];
            }
        }
    }
    // chi = |L^-1 U|^2
    let mut y = [0.0; MAX_GROUPS];
    let mut chi = 0.0;
    for i in 0..m {
        let mut v = ome[i];
        for p in 0..i {
            v -= l[i * MAX_GROUPS + p] * y[p];
        }
        y[i] = v / l[i * MAX_GROUPS + i];
        chi += y[i] * y[i];
    }
    Some(chi)
}

fn search_grid(d: &Dataset, cfg: &GEstimationConfig, free: &[usize]) -> Result<GEstimationResult> {
    let width = cfg.k_levels as usize + 1;
    let grid = cfg.grid();
    let last = grid.len() - 1;

    // Groups: 0 untreated control time, 1 treatment arm, then one per level.
    let mut levels: Vec<u32> = d.patients().iter().filter_map(|p| p.switch.map(|s| s.level)).collect();
    levels.sort_unstable();
    levels.dedup();
    let group_of = |level: u32| 2 + levels.iter().position(|&l| l == level).unwrap();
    let k = 2 + levels.len();

    let is_free = |p: &PatientRecord| p.switch.is_some_and(|s| free.contains(&((s.level - 1) as usize)));
    let fixed_patients: Vec<&PatientRecord> = d.patients().iter().filter(|p| !is_free(p)).collect();
    let free_patients: Vec<(&PatientRecord, usize)> = d
        .patients()
        .iter()
        .filter(|p| is_free(p))
        .map(|p| {
            let s = p.switch.unwrap();
            (p, free.iter().position(|&f| f == (s.level - 1) as usize).unwrap())
        })
        .collect();

    let var_table = |idx: &[usize]| {
        let mut var = Vec::with_capacity(2 * free_patients.len());
        for (p, f) in &free_patients {
            let s = p.switch.unwrap();
            switcher_pieces(p, grid[idx[*f]], group_of(s.level), cfg.recensor, &mut var);
        }
        RiskTable::new(var, k)
    };
    // Free-level pieces do not depend on psi0; cache their tables when the
    // free grid is small.
    let combos: Vec<Vec<usize>> = {
        let mut all = vec![Vec::new()];
        for _ in free {
            all = all
                .into_iter()
                .flat_map(|prefix: Vec<usize>| {
                    (0..=last).map(move |i| {
                        let mut v = prefix.clone();
                        v.push(i);
                        v
                    })
                })
                .collect();
        }
        all
    };
    let cached: Option<Vec<RiskTable>> = (free.len() <= 2).then(|| combos.iter().map(|c| var_table(c)).collect());

    let mut points = Vec::with_capacity(grid.len() * combos.len());
    let mut buf = Vec::new();
    for &psi0 in &grid {
        buf.clear();
        for p in &fixed_patients {
            match p.switch {
                Some(s) => switcher_pieces(p, psi0, group_of(s.level), cfg.recensor, &mut buf),
                None if p.arm == Arm::Treatment => {
                    let (u, e) = transform(p, psi0, cfg.recensor);
                    buf.push(SurvSample::new(u, e, 1));
                }
                None => buf.push(SurvSample::new(p.observed_time, p.event, 0)),
            }
        }
        let fixed = RiskTable::new(std::mem::take(&mut buf), k);
        for (c, idx) in combos.iter().enumerate() {
            let objective = match &cached {
                Some(tables) => merged_chi(&fixed, &tables[c]),
                None => merged_chi(&fixed, &var_table(idx)),
            };
            let mut psi = vec![psi0; width];
            for (f, &slot) in free.iter().enumerate() {
                psi[slot] = grid[idx[f]];
            }
            points.push(GridPoint { psi, objective });
        }
    }

    let best = argmin(&points, &vec![0.0; width]);
    let sol = points[best].clone();
    if sol.objective.is_infinite() {
        return Err(Error::DegenerateRiskSet);
    }
    let on_edge = |v: f64| v <= grid[0] || v >= grid[last];
    if on_edge(sol.psi[0]) || free.iter().any(|&s| on_edge(sol.psi[s])) {
        return Err(Error::NoSolutionInRange { boundary: sol.psi });
    }
    let mut estimated = vec![false; width];
    estimated[0] = true;
    for &s in free {
        estimated[s] = true;
    }
    Ok(GEstimationResult {
        psi_hat: sol.psi,
        z_at_solution: sol.objective,
        objective: sol.objective,
        estimated,
        objective_surface: cfg.keep_surface.then_some(points),
    })
}

/// Estimates the acceleration parameters by g-estimation.
///
/// With one free parameter the randomized arms are compared by a two-sample
/// log-rank test on counterfactual times. With several, switchers move from
/// the untreated control group into their level's group at the switch time,
/// and the k-sample chi-square is minimized over the full grid.
pub fn g_estimate(d: &Dataset, cfg: &GEstimationConfig) -> Result<GEstimationResult> {
    require_both_arms(d)?;
    cfg.validate("gest")?;
    let width = cfg.k_levels as usize + 1;
    if cfg.k_levels > 0 && d.k_levels() > width as u32 {
        return Err(Error::MissingLevelParameter(d.k_levels()));
    }
    let free: Vec<usize> = if cfg.k_levels == 0 || cfg.common_effect {
        Vec::new()
    } else {
        (1..width).filter(|&s| d.n_switchers_at(s as u32 + 1) > 0).collect()
    };
    if free.is_empty() {
        search_1d(d, cfg, width)
    } else {
        search_grid(d, cfg, &free)
    }
}

/// Observed data for the treatment arm and non-switchers, counterfactual
/// times for switchers.
fn rebuild(d: &Dataset, psi: &[f64], recensor: bool) -> Result<Vec<SurvSample>> {
    d.patients()
        .iter()
        .map(|p| {
            let (t, e) = if p.is_switcher() {
                counterfactual_time(p, psi, recensor)?
            } else {
                (p.observed_time, p.event)
            };
            Ok(SurvSample::new(t, e, p.arm.group()))
        })
        .collect()
}

fn fit_once(d: &Dataset, cfg: &GEstimationConfig, method: Method) -> Result<(GEstimationResult, AdjustmentResult)> {
    let g = g_estimate(d, cfg)?;
    let psi = if cfg.k_levels == 0 {
        vec![g.psi_hat[0]; d.k_levels().max(1) as usize]
    } else {
        g.psi_hat.clone()
    };
    let r = cox_by_arm(method, &rebuild(d, &psi, cfg.recensor)?)?;
    Ok((g, r))
}

fn resample(d: &Dataset, rng: &mut ChaCha8Rng) -> Result<Dataset> {
    let mut out = Vec::with_capacity(d.len());
    for arm in [Arm::Control, Arm::Treatment] {
        let pool: Vec<&PatientRecord> = d.patients().iter().filter(|p| p.arm == arm).collect();
        for _ in 0..pool.len() {
            out.push(pool[rng.random_range(0..pool.len())].clone());
        }
    }
    Dataset::new(out)
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn finish(d: &Dataset, cfg: &GEstimationConfig, method: Method) -> Result<AdjustmentResult> {
    let (g, mut r) = match fit_once(d, cfg, method) {
        Ok(x) => x,
        Err(e) if d.n_switchers() == 0 => {
            // psi has no effect on the rebuilt data
            let mut r = super::itt(d)?;
            r.method = method;
            r.diag("g_estimation_error", e.to_string().as_str());
            return Ok(r);
        }
        Err(e) => return Err(e),
    };
    for (j, v) in g.psi_hat.iter().enumerate() {
        r.diag(&format!("psi{j}"), *v);
    }
    if g.estimated.iter().any(|e| !e) {
        let tied: Vec<f64> = (0..g.estimated.len()).filter(|&j| !g.estimated[j]).map(|j| j as f64).collect();
        r.diag("tied_slots", tied);
    }
    r.diag("z_at_solution", g.z_at_solution);
    r.diag("grid_min", cfg.psi_min);
    r.diag("grid_max", cfg.psi_max);
    r.diag("grid_step", cfg.grid_step);
    r.diag("recensor", cfg.recensor);

    if let Some(b) = &cfg.bootstrap {
        let mut rng = ChaCha8Rng::seed_from_u64(b.seed);
        let mut hrs = Vec::with_capacity(b.reps);
        for _ in 0..b.reps {
            let bd = resample(d, &mut rng)?;
            if let Ok((_, br)) = fit_once(&bd, cfg, method) {
                hrs.push(br.hr);
            }
        }
        r.diag("boot_reps_ok", hrs.len());
        if hrs.len() >= 2 {
            hrs.sort_by(f64::total_cmp);
            r.diag("wald_ci_lo", r.ci95.0);
            r.diag("wald_ci_hi", r.ci95.1);
            r.ci95 = (percentile(&hrs, 0.025), percentile(&hrs, 0.975));
        }
    }
    Ok(r)
}

/// RPSFTM with a single acceleration parameter shared by all switchers.
pub fn rpsftm(d: &Dataset, cfg: &GEstimationConfig) -> Result<AdjustmentResult> {
    if cfg.k_levels != 0 {
        return Err(Error::InvalidInput("rpsftm takes k_levels = 0; use stratified_rpsftm".into()));
    }
    finish(d, cfg, Method::Rpsftm)
}

/// RPSFTM with one acceleration parameter per switch level.
pub fn stratified_rpsftm(d: &Dataset, cfg: &GEstimationConfig) -> Result<AdjustmentResult> {
    if cfg.k_levels == 0 {
        return Err(Error::StratifiedRequiresLevels);
    }
    if cfg.k_levels > MAX_EXTRA_LEVELS {
        return Err(Error::LevelCountExceeded(cfg.k_levels as usize));
    }
    finish(d, cfg, Method::StratifiedRpsftm)
}
