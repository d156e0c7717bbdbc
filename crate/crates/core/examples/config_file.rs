//! Loading a run configuration and seeing which key a bad value is
//! reported under.

use switchadj::config::RunConfig;

const GOOD: &str = r#"
[scenario]
n = 600
true_hr = 0.4
target_censor = 0.5
target_switch = 0.75
seed = 17

[factorial]
reps = 200
methods = ["itt", "rpsftm", "srp", "rf"]

[forest]
n_trees = 300
"#;

fn main() {
    let cfg = RunConfig::from_toml(GOOD).expect("valid config");
    println!("parsed: n = {}, reps = {}, methods = {:?}", cfg.scenario.n, cfg.factorial.reps, cfg.factorial.methods);
    println!("srp grid step defaults to {}", cfg.srp.grid_step);

    for bad in [
        "[scenario]\ntarget_switch = 1.2",
        "[ipcw]\ntruncation_quantile = 2.0",
        "[gest]\npsi_mn = -2.0",
        "[forest]\nmin_leaf = \"five\"",
    ] {
        let err = RunConfig::from_toml(bad).unwrap_err();
        println!("{bad:?}\n  -> {err} (exit code {})", err.exit_code());
    }
}
