use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_noma-tradeoff");

fn cli(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const FEASIBLE: &str = r#"
mode = "ergodic_full"
distances_km = [0.1, 0.5]
n_states = 2000
sweep_axis = "rbar"
sweep_values = [0.0, 1.0]
"#;

#[test]
fn run_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", FEASIBLE);
    let out = dir.path().join("o.csv");
    let o = cli(&["run", &cfg, "--seed", "3", "--n-states", "1500", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("axis,scheme,objective"));
    assert_eq!(text.lines().count(), 7);

    // stdout output matches the file
    let o = cli(&["run", &cfg, "--seed", "3", "--n-states", "1500"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), text);
}

#[test]
fn infeasible_everywhere_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &FEASIBLE.replace("[0.0, 1.0]", "[50.0, 60.0]"));
    assert_eq!(cli(&["run", &cfg]).status.code(), Some(2));
}

#[test]
fn errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "mode = \"nope\"\n");
    assert_eq!(cli(&["run", &bad]).status.code(), Some(1));
    assert_eq!(cli(&["run", "/nonexistent/config.toml"]).status.code(), Some(1));
    let cfg = write(dir.path(), "c.toml", FEASIBLE);
    assert_eq!(cli(&["run", &cfg, "--n-states", "0"]).status.code(), Some(1));
    assert_eq!(cli(&["run", &cfg, "--bogus"]).status.code(), Some(1));
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cli(&["--help"]).status.code(), Some(0));
}

#[test]
fn validate_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "v.toml",
        "mode = \"dlt_partial\"\ndistances_km = [0.1, 0.5]\nsweep_axis = \"zetabar_prime\"\n\
         sweep_values = [0.5]\ntarget_rates_bps_hz = [1.0, 1.0]\n",
    );
    let out = dir.path().join("r.json");
    let o = cli(&["validate", &cfg, "--n-states", "200000", "--seed", "2", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["n_states"], 200000);
}

#[test]
fn rmax_prints_frontier() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", FEASIBLE);
    let o = cli(&["rmax", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "scheme,quantity,value");
    assert_eq!(lines.len(), 4);
    let v: Vec<f64> = lines[1..].iter().map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert!(v[0] >= v[1] - 1e-3 && v[1] >= v[2] - 1e-3, "{v:?}");
}
