//! The four batch commands behind the `switchadj` binary.
//!
//! Each command writes its files through one [`OutputWriter`] and finishes
//! with a `manifest.json` carrying the full config snapshot and the hash of
//! every output. CSV outputs depend only on the config and seed.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::adjust::{adjust, AdjustmentResult, Method};
use crate::config::RunConfig;
use crate::data::{load_dataset, write_csv, DataFormat, Dataset};
use crate::error::{Error, Result};
use crate::eval::{metrics_from_estimates, recommendations, run_factorial_with_progress, MetricsRow, ReplicateEstimate, SweepOutput};
use crate::report::{
    forest_plot_svg, plot_file_name, read_csv_rows, timestamp, true_hrs, OutputWriter, RunManifest, ESTIMATES_FILE,
    MANIFEST_FILE, METRICS_FILE, RECOMMENDATIONS_FILE,
};
use crate::sim::Simulator;

/// Exit code for a sweep that finished with some failed replicates.
pub const EXIT_PARTIAL_FAILURE: i32 = 5;

pub fn dataset_file_name(rep: u64) -> String {
    format!("rep_{rep:04}.csv")
}

/// Writes replicates `0..reps` of the configured scenario as CSV datasets.
pub fn cmd_simulate(cfg: &RunConfig, reps: u64, out: &Path) -> Result<RunManifest> {
    let started = timestamp();
    cfg.validate()?;
    if reps == 0 {
        return Err(Error::config("reps", "must be positive"));
    }
    let sim = Simulator::new(&cfg.scenario)?;
    let mut w = OutputWriter::new(out)?;
    for rep in 0..reps {
        let d = sim.generate(rep)?;
        let mut buf = Vec::new();
        write_csv(&d, &mut buf)?;
        w.write(&dataset_file_name(rep), &buf)?;
    }
    w.finish("simulate", cfg, started, Vec::new())
}

/// `psi` diagnostics and friends, flattened for the one-row result file.
#[derive(Debug, Serialize)]
struct ResultRow<'a> {
    method: Method,
    hr: f64,
    ci_lo: f64,
    ci_hi: f64,
    log_hr: f64,
    se: f64,
    dataset: &'a str,
}

/// Header plus one CSV row for an adjustment result.
pub fn result_csv(r: &AdjustmentResult, dataset: &str) -> Result<String> {
    let bytes = crate::report::to_csv(&[ResultRow {
        method: r.method,
        hr: r.hr,
        ci_lo: r.ci95.0,
        ci_hi: r.ci95.1,
        log_hr: r.log_hr,
        se: r.se,
        dataset,
    }])?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Settings for `method` on `d`; the stratified method takes one extra
/// parameter per switch level beyond the first.
pub fn method_config_for(cfg: &RunConfig, d: &Dataset, method: Method) -> Result<crate::adjust::MethodConfig> {
    let mut m = cfg.methods();
    if method == Method::StratifiedRpsftm {
        if d.k_levels() == 0 {
            return Err(Error::StratifiedRequiresLevels);
        }
        m.srp.k_levels = d.k_levels().saturating_sub(1).max(1);
    }
    Ok(m)
}

/// Adjusts one dataset. With `out`, also writes `result.csv`,
/// `diagnostics.json` and a manifest there.
pub fn cmd_adjust(cfg: &RunConfig, dataset: &Path, method: Method, out: Option<&Path>) -> Result<AdjustmentResult> {
    let started = timestamp();
    cfg.methods().validate()?;
    let d = load_dataset(dataset, DataFormat::Csv)?;
    let mcfg = method_config_for(cfg, &d, method)?;
    let r = adjust(&d, method, &mcfg)?;
    if let Some(out) = out {
        let mut w = OutputWriter::new(out)?;
        w.write("result.csv", result_csv(&r, &dataset.display().to_string())?.as_bytes())?;
        let diag = serde_json::to_string_pretty(&r.diagnostics).expect("diagnostics serialize");
        w.write("diagnostics.json", diag.as_bytes())?;
        let mut snapshot = cfg.clone();
        snapshot.srp = mcfg.srp;
        w.finish("adjust", &snapshot, started, Vec::new())?;
    }
    Ok(r)
}

fn failure_list(rows: &[MetricsRow]) -> Vec<String> {
    rows.iter()
        .filter(|r| r.n_failures > 0)
        .map(|r| format!("{} / {}: {} of {} failed", r.scenario(), r.method, r.n_failures, r.reps()))
        .collect()
}

fn write_tables(w: &mut OutputWriter, metrics: &[MetricsRow]) -> Result<()> {
    w.write_csv(METRICS_FILE, metrics)?;
    w.write_csv(RECOMMENDATIONS_FILE, &recommendations(metrics))?;
    for hr in true_hrs(metrics) {
        w.write(&plot_file_name(hr), forest_plot_svg(metrics, hr).as_bytes())?;
    }
    Ok(())
}

#[derive(Debug)]
pub struct SweepRun {
    pub output: SweepOutput,
    pub manifest: RunManifest,
}

impl SweepRun {
    pub fn exit_code(&self) -> i32 {
        if self.output.partial_failures().next().is_some() {
            EXIT_PARTIAL_FAILURE
        } else {
            0
        }
    }
}

/// Runs the configured factorial and writes metrics, per-replicate
/// estimates, recommendations and one forest plot per true HR.
pub fn cmd_sweep(cfg: &RunConfig, out: &Path, jobs: usize, progress: impl Fn(usize, usize)) -> Result<SweepRun> {
    let started = timestamp();
    cfg.validate()?;
    let output = run_factorial_with_progress(&cfg.scenario, &cfg.factorial, &cfg.methods(), jobs, progress)?;
    let mut w = OutputWriter::new(out)?;
    w.write_csv(ESTIMATES_FILE, &output.estimates)?;
    write_tables(&mut w, &output.metrics)?;
    let manifest = w.finish("sweep", cfg, started, failure_list(&output.metrics))?;
    Ok(SweepRun { output, manifest })
}

/// Rebuilds tables and plots from a sweep directory, optionally keeping only
/// the first `reps` replicates of every cell.
pub fn cmd_report(input: &Path, reps: Option<u64>, out: &Path) -> Result<Vec<MetricsRow>> {
    let started = timestamp();
    let est_path = input.join(ESTIMATES_FILE);
    let metrics = if est_path.exists() {
        let est: Vec<ReplicateEstimate> = read_csv_rows(&est_path)?;
        metrics_from_estimates(&est, reps)
    } else if reps.is_none() {
        read_csv_rows(input.join(METRICS_FILE))?
    } else {
        return Err(Error::config("reps", "replicate subsets need estimates.csv in the input directory"));
    };
    if metrics.is_empty() {
        return Err(Error::EmptyInput);
    }
    let manifest_path = input.join(MANIFEST_FILE);
    let mut cfg = if manifest_path.exists() {
        RunConfig::load(&manifest_path)?
    } else {
        RunConfig::default()
    };
    if let Some(r) = reps {
        cfg.factorial.reps = r;
    }
    let mut w = OutputWriter::new(out)?;
    write_tables(&mut w, &metrics)?;
    w.finish("report", &cfg, started, failure_list(&metrics))?;
    Ok(metrics)
}

/// Config from a TOML file or a previous run's manifest, or the defaults.
pub fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

/// Paths of the dataset files `cmd_simulate` writes into `dir`.
pub fn simulated_paths(dir: &Path, reps: u64) -> Vec<PathBuf> {
    (0..reps).map(|r| dir.join(dataset_file_name(r))).collect()
}
