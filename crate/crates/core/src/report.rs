//! Output files: CSV tables, SVG forest plots and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adjust::Method;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::eval::{MetricsRow, ScenarioId};

pub const METRICS_FILE: &str = "metrics.csv";
pub const ESTIMATES_FILE: &str = "estimates.csv";
pub const RECOMMENDATIONS_FILE: &str = "recommendations.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))
}

pub fn read_csv_rows<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::io(path, std::io::Error::other(e.to_string())),
        _ => Error::Csv(e),
    })?;
    let mut out = Vec::new();
    for (i, row) in r.deserialize().enumerate() {
        out.push(row.map_err(|e| Error::row((i + 1).to_string(), e.to_string()))?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Everything needed to rerun a command: its config, seed and outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: RunConfig,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<OutputFile>,
    /// Cells with failed replicates, as `scenario / method: n failed`.
    pub failures: Vec<String>,
}

/// Sole writer for a command's output directory; records each file's hash.
#[derive(Debug)]
pub struct OutputWriter {
    dir: PathBuf,
    files: Vec<OutputFile>,
}

impl OutputWriter {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(OutputWriter { dir, files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.files.retain(|f| f.path != name);
        self.files.push(OutputFile {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len() as u64,
        });
        Ok(path)
    }

    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<PathBuf> {
        self.write(name, &to_csv(rows)?)
    }

    /// Writes `manifest.json` listing every file written so far.
    pub fn finish(self, command: &str, config: &RunConfig, started: String, failures: Vec<String>) -> Result<RunManifest> {
        let manifest = RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.scenario.seed,
            config: config.clone(),
            started,
            finished: timestamp(),
            outputs: self.files,
            failures,
        };
        let path = self.dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Plot geometry shared by the drawing code and the mapping comment.
struct Frame {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn y(&self, hr: f64) -> f64 {
        self.top + self.height * (self.y_hi - hr) / (self.y_hi - self.y_lo)
    }
}

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    let pad = 0.05 * (hi - lo).max(0.1);
    ((((lo - pad) * 10.0).floor() / 10.0).max(0.0), ((hi + pad) * 10.0).ceil() / 10.0)
}

const PALETTE: [&str; 8] = [
    "#1b6ca8", "#d1495b", "#edae49", "#00798c", "#6a4c93", "#3d8b37", "#8c564b", "#555555",
];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Grouped forest plot for one true HR: one group per (censor, switch) cell,
/// one mean estimate with mean CI endpoints per method, and a reference line
/// at the true HR.
///
/// The SVG opens with a comment `y-mapping: y = A - B * hr` giving the exact
/// affine map from HR to vertical position.
pub fn forest_plot_svg(rows: &[MetricsRow], true_hr: f64) -> String {
    let rows: Vec<&MetricsRow> = rows.iter().filter(|r| r.true_hr == true_hr).collect();
    let mut cells: Vec<ScenarioId> = Vec::new();
    let mut methods: Vec<Method> = Vec::new();
    for r in &rows {
        if !cells.contains(&r.scenario()) {
            cells.push(r.scenario());
        }
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }

    let mut lo = true_hr;
    let mut hi = true_hr;
    for r in rows.iter().filter(|r| r.is_usable()) {
        for v in [r.mean_ci_lo, r.mean_ci_hi, r.mean_hr] {
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    let (y_lo, y_hi) = nice_range(lo, hi);
    let cell_w = 28.0 + 14.0 * methods.len() as f64;
    let f = Frame {
        left: 70.0,
        top: 40.0,
        width: cell_w * cells.len().max(1) as f64,
        height: 360.0,
        y_lo,
        y_hi,
    };
    let total_w = f.left + f.width + 150.0;
    let total_h = f.top + f.height + 70.0;
    let scale = f.height / (y_hi - y_lo);
    let offset = f.top + f.height * y_hi / (y_hi - y_lo);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(s, "<!-- y-mapping: y = {offset} - {scale} * hr -->");
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{total_h}" viewBox="0 0 {total_w} {total_h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" font-size="14">Estimated HR by scenario, true HR = {true_hr}</text>"#,
        f.left
    );

    // axis and gridlines
    let _ = writeln!(
        s,
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#999"/>"##,
        f.left, f.top, f.width, f.height
    );
    let steps = ((y_hi - y_lo) / 0.1).round() as usize;
    let stride = steps.div_ceil(10).max(1);
    for i in (0..=steps).step_by(stride) {
        let v = y_lo + i as f64 * 0.1;
        let y = f.y(v);
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#eee"/><text x="{}" y="{}" text-anchor="end">{v:.1}</text>"##,
            f.left,
            f.left + f.width,
            f.left - 6.0,
            y + 4.0
        );
    }
    let ry = f.y(true_hr);
    let _ = writeln!(
        s,
        r##"<line id="reference" x1="{}" y1="{ry}" x2="{}" y2="{ry}" stroke="#000" stroke-dasharray="5,3"/>"##,
        f.left,
        f.left + f.width
    );

    for (ci, cell) in cells.iter().enumerate() {
        let x0 = f.left + ci as f64 * cell_w;
        let label_y = f.top + f.height + 18.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{label_y}" text-anchor="middle">C{:.0}/S{:.0}</text>"#,
            x0 + cell_w / 2.0,
            100.0 * cell.censor,
            100.0 * cell.switch
        );
        for (mi, m) in methods.iter().enumerate() {
            let Some(r) = rows.iter().find(|r| r.scenario() == *cell && r.method == *m) else {
                continue;
            };
            let x = x0 + 14.0 + 14.0 * mi as f64;
            let color = PALETTE[mi % PALETTE.len()];
            let title = format!("{} {}: {} of {} replicates failed", esc(m.label()), cell, r.n_failures, r.reps());
            if !r.is_usable() {
                let _ = writeln!(
                    s,
                    r##"<g class="failed"><title>{title}</title><path d="M{} {} l8 8 M{} {} l-8 8" stroke="#c00" stroke-width="2"/></g>"##,
                    x - 4.0,
                    ry - 4.0,
                    x + 4.0,
                    ry - 4.0
                );
                continue;
            }
            let (y1, y2, yp) = (f.y(r.mean_ci_lo), f.y(r.mean_ci_hi), f.y(r.mean_hr));
            let _ = writeln!(
                s,
                r#"<g><title>{}: mean HR {:.3} ({:.3}, {:.3})</title><line x1="{x}" y1="{y1}" x2="{x}" y2="{y2}" stroke="{color}" stroke-width="2"/><circle cx="{x}" cy="{yp}" r="3.5" fill="{color}"/></g>"#,
                esc(m.label()),
                r.mean_hr,
                r.mean_ci_lo,
                r.mean_ci_hi
            );
            if r.n_failures > 0 {
                let _ = writeln!(
                    s,
                    r##"<g class="failed"><title>{title}</title><path d="M{x} {} l-4 7 h8 z" fill="#c00"/></g>"##,
                    y2 - 12.0
                );
            }
        }
    }

    let lx = f.left + f.width + 16.0;
    for (mi, m) in methods.iter().enumerate() {
        let y = f.top + 10.0 + 16.0 * mi as f64;
        let _ = writeln!(
            s,
            r#"<circle cx="{lx}" cy="{y}" r="4" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            PALETTE[mi % PALETTE.len()],
            lx + 10.0,
            y + 4.0,
            esc(m.label())
        );
    }
    let y = f.top + 16.0 * methods.len() as f64 + 20.0;
    let _ = writeln!(
        s,
        r##"<path d="M{} {} l-4 7 h8 z" fill="#c00"/><text x="{}" y="{}">failed replicates</text>"##,
        lx,
        y - 4.0,
        lx + 10.0,
        y + 4.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}">C = censored %, S = switched %</text>"#,
        f.left,
        f.top + f.height + 40.0
    );
    s.push_str("</svg>\n");
    s
}

/// File name for the plot of one true HR, e.g. `forest_hr0.4.svg`.
pub fn plot_file_name(true_hr: f64) -> String {
    format!("forest_hr{true_hr}.svg")
}

/// Distinct true HRs in first-appearance order.
pub fn true_hrs(rows: &[MetricsRow]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for r in rows {
        if !out.contains(&r.true_hr) {
            out.push(r.true_hr);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn y_mapping_comment_matches_frame() {
        let f = Frame {
            left: 0.0,
            top: 40.0,
            width: 100.0,
            height: 360.0,
            y_lo: 0.2,
            y_hi: 1.1,
        };
        let scale = f.height / (f.y_hi - f.y_lo);
        let offset = f.top + f.height * f.y_hi / (f.y_hi - f.y_lo);
        for hr in [0.2, 0.6, 1.1] {
            assert!((f.y(hr) - (offset - scale * hr)).abs() < 1e-9);
        }
        assert_eq!(f.y(1.1), 40.0);
    }

    #[test]
    fn nice_range_contains_inputs() {
        let (lo, hi) = nice_range(0.43, 0.91);
        assert!(lo <= 0.43 && hi >= 0.91 && lo >= 0.0);
    }
}
