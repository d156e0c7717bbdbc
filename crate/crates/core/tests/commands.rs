use std::path::Path;

use switchadj::adjust::{DiagValue, Method};
use switchadj::commands::{cmd_adjust, cmd_report, cmd_simulate, cmd_sweep, dataset_file_name, simulated_paths};
use switchadj::config::RunConfig;
use switchadj::data::{load_dataset, DataFormat};
use switchadj::eval::{FactorialConfig, MetricsRow};
use switchadj::report::{forest_plot_svg, read_csv_rows, RunManifest, MANIFEST_FILE};
use switchadj::Error;

fn quick_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.scenario.n = 120;
    cfg.scenario.pilot_size = 2000;
    cfg.forest.n_trees = 40;
    cfg
}

fn write_doubling(path: &Path) {
    let mut s = String::from("id,arm,observed_time,event,censor_time,age,ecog,prior_lines,risk_level,switch_time,switch_level\n");
    for (i, t) in [2.0, 4.0, 6.0].iter().enumerate() {
        s += &format!("c{i},control,{t},1,1000,60,1,1,1,,\n");
        s += &format!("t{i},treatment,{},1,1000,60,1,1,1,,\n", 2.0 * t);
    }
    std::fs::write(path, s).unwrap();
}

#[test]
fn simulate_writes_loadable_distinct_replicates() {
    let tmp = tempfile::tempdir().unwrap();
    let m = cmd_simulate(&quick_config(), 3, tmp.path()).unwrap();
    assert_eq!(m.outputs.len(), 3);
    let paths = simulated_paths(tmp.path(), 3);
    let fps: Vec<String> = paths
        .iter()
        .map(|p| load_dataset(p, DataFormat::Csv).unwrap().fingerprint())
        .collect();
    assert!(fps[0] != fps[1] && fps[1] != fps[2]);
    let manifest: RunManifest =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(manifest.command, "simulate");
    assert_eq!(manifest.outputs[0].path, dataset_file_name(0));
}

#[test]
fn invalid_switch_fraction_names_key() {
    let mut cfg = quick_config();
    cfg.scenario.target_switch = 1.2;
    let tmp = tempfile::tempdir().unwrap();
    match cmd_simulate(&cfg, 1, tmp.path()) {
        Err(Error::Config { key, .. }) => assert_eq!(key, "scenario.target_switch"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn manifest_config_reproduces_run() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = quick_config();
    cfg.scenario.seed = 4242;
    cmd_simulate(&cfg, 2, &tmp.path().join("a")).unwrap();
    let again = RunConfig::load(tmp.path().join("a").join(MANIFEST_FILE)).unwrap();
    assert_eq!(again, cfg);
    cmd_simulate(&again, 2, &tmp.path().join("b")).unwrap();
    for name in [dataset_file_name(0), dataset_file_name(1)] {
        assert_eq!(
            std::fs::read(tmp.path().join("a").join(&name)).unwrap(),
            std::fs::read(tmp.path().join("b").join(&name)).unwrap()
        );
    }
}

#[test]
fn adjust_itt_and_recovery() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("doubling.csv");
    write_doubling(&data);
    let out = tmp.path().join("out");
    let r = cmd_adjust(&RunConfig::default(), &data, Method::Itt, Some(&out)).unwrap();
    let text = std::fs::read_to_string(out.join("result.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.starts_with("method,hr,ci_lo,ci_hi"));
    assert!(r.ci95.0 < r.hr && r.hr < r.ci95.1);

    let r = cmd_adjust(&RunConfig::default(), &data, Method::Rpsftm, None).unwrap();
    match r.diagnostics["psi0"] {
        DiagValue::Num(psi) => assert!((psi - 0.5f64.ln()).abs() < 0.01),
        ref v => panic!("{v:?}"),
    }
}

#[test]
fn srp_without_levels_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("doubling.csv");
    write_doubling(&data);
    let err = cmd_adjust(&RunConfig::default(), &data, Method::StratifiedRpsftm, None).unwrap_err();
    assert!(matches!(err, Error::StratifiedRequiresLevels));
    assert!(err.to_string().contains("stratified method requires levels"));
}

fn svg_mapping(svg: &str) -> (f64, f64) {
    let line = svg.lines().find(|l| l.contains("y-mapping")).expect("mapping comment");
    let nums: Vec<f64> = line
        .split(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-' || c == 'e'))
        .filter_map(|t| t.parse().ok())
        .collect();
    (nums[0], nums[1])
}

#[test]
fn full_factorial_sweep_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = quick_config();
    cfg.factorial = FactorialConfig {
        reps: 2,
        ..Default::default()
    };
    let run = cmd_sweep(&cfg, tmp.path(), 2, |_, _| {}).unwrap();
    assert_eq!(run.output.metrics.len(), 189);
    let rows: Vec<MetricsRow> = read_csv_rows(tmp.path().join("metrics.csv")).unwrap();
    assert_eq!(rows.len(), 189);
    for r in &rows {
        assert_eq!(r.n_reps_used + r.n_failures, 2);
        if r.is_usable() {
            assert!(r.mse >= r.bias * r.bias - 1e-12);
        }
    }

    // shared replicates: all methods on a replicate saw the same data
    for chunk in run.output.estimates.chunks(7) {
        assert!(chunk.iter().all(|e| e.fingerprint == chunk[0].fingerprint && e.rep == chunk[0].rep));
    }

    for hr in [0.4, 0.6, 0.8] {
        let svg = std::fs::read_to_string(tmp.path().join(format!("forest_hr{hr}.svg"))).unwrap();
        let doc = roxmltree::Document::parse(&svg).expect("well-formed SVG");
        assert!(!svg.contains("href") && !svg.contains("url("), "self-contained");
        let (offset, scale) = svg_mapping(&svg);
        let line = doc
            .descendants()
            .find(|n| n.attribute("id") == Some("reference"))
            .unwrap();
        let y: f64 = line.attribute("y1").unwrap().parse().unwrap();
        assert!((y - (offset - scale * hr)).abs() < 1e-9);
    }

    // report rebuilds the same tables from estimates.csv
    let rep = tmp.path().join("report");
    let again = cmd_report(tmp.path(), None, &rep).unwrap();
    assert_eq!(
        std::fs::read(rep.join("metrics.csv")).unwrap(),
        std::fs::read(tmp.path().join("metrics.csv")).unwrap()
    );
    assert_eq!(again.len(), 189);
    let one = cmd_report(tmp.path(), Some(1), &tmp.path().join("r1")).unwrap();
    assert!(one.iter().all(|r| r.reps() == 1));
}

#[test]
fn failure_glyph_marks_failed_cells() {
    let mut cfg = quick_config();
    cfg.factorial = FactorialConfig {
        true_hrs: vec![0.6],
        censor_rates: vec![0.25],
        switch_rates: vec![0.5],
        reps: 3,
        methods: vec![Method::Itt, Method::Rpsftm],
    };
    // the estimate always lies below this range
    cfg.gest.psi_min = 0.2;
    let tmp = tempfile::tempdir().unwrap();
    let run = cmd_sweep(&cfg, tmp.path(), 1, |_, _| {}).unwrap();
    assert_eq!(run.exit_code(), 5);
    assert_eq!(run.manifest.failures.len(), 1);
    let svg = forest_plot_svg(&run.output.metrics, 0.6);
    assert!(svg.contains(r#"class="failed""#));
    roxmltree::Document::parse(&svg).unwrap();
}
