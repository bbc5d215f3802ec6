use noma_tradeoff::experiment::{
    emit_csv, feasibility_frontier, run_experiment, write_curves_csv, ExperimentConfig, PointStatus, CSV_HEADER,
};
use noma_tradeoff::Scheme;

const ERGODIC: &str = r#"
mode = "ergodic_full"
distances_km = [0.1, 0.5]
n_states = 4000
seed = 9
sweep_axis = "rbar"
sweep_values = [0.0, 1.0, 2.5, 4.0]
"#;

fn csv_of(cfg: &ExperimentConfig) -> String {
    let mut buf = vec![];
    write_curves_csv(&run_experiment(cfg).unwrap(), &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn matches_golden_csv() {
    let cfg = ExperimentConfig::from_toml_str(ERGODIC).unwrap();
    let got = csv_of(&cfg);
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/golden_ergodic_full.csv");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(path, &got).unwrap();
    }
    assert_eq!(got, std::fs::read_to_string(path).unwrap());
}

#[test]
fn csv_layout_and_file_output() {
    let cfg = ExperimentConfig::from_toml_str(ERGODIC).unwrap();
    let curves = run_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    emit_csv(&curves, &path).unwrap();
    let mut rd = csv::Reader::from_path(&path).unwrap();
    assert_eq!(rd.headers().unwrap().iter().collect::<Vec<_>>(), CSV_HEADER);
    let rows: Vec<_> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 12);
    // axis-major, then scheme order
    assert_eq!(&rows[0][1], "NOMA");
    assert_eq!(&rows[1][1], "OMA-II");
    assert_eq!(&rows[2][1], "OMA-I");
    for r in &rows {
        if &r[9] == "infeasible" {
            assert!(r[2].is_empty());
        } else {
            let obj: f64 = r[2].parse().unwrap();
            let sum: f64 = r[3].parse::<f64>().unwrap() + r[4].parse::<f64>().unwrap();
            assert!((obj - sum).abs() <= 1e-6 * obj);
        }
    }
}

#[test]
fn tightening_sweep_stays_infeasible() {
    let cfg = ExperimentConfig::from_toml_str(ERGODIC).unwrap();
    for c in run_experiment(&cfg).unwrap() {
        let first = c.points.iter().position(|p| p.status == PointStatus::Infeasible);
        if let Some(i) = first {
            assert!(c.points[i..].iter().all(|p| p.status == PointStatus::Infeasible));
        }
    }
}

#[test]
fn frontier_orders_schemes() {
    let cfg = ExperimentConfig::from_toml_str(ERGODIC).unwrap();
    let f = feasibility_frontier(&cfg).unwrap();
    let get = |s| f.iter().find(|e| e.scheme == s).unwrap().value;
    assert!(f.iter().all(|e| e.quantity == "rbar_max"));
    assert!(get(Scheme::Noma) >= get(Scheme::Oma2) - 1e-3);
    assert!(get(Scheme::Oma2) >= get(Scheme::Oma1) - 1e-3);
}

#[test]
fn partial_modes_run() {
    for body in [
        "mode = \"ergodic_partial\"\nsweep_axis = \"pbar\"\nsweep_values = [0.5, 1.0]\nrbar_bps_hz = 0.5\n",
        "mode = \"dlt_partial\"\nsweep_axis = \"zetabar_prime\"\nsweep_values = [0.2, 0.6]\ntarget_rates_bps_hz = [1.0, 1.0]\n",
    ] {
        let cfg = ExperimentConfig::from_toml_str(&format!("distances_km = [0.1, 0.5]\ngrid_n = 101\n{body}")).unwrap();
        let curves = run_experiment(&cfg).unwrap();
        assert_eq!(curves.len(), 3);
        assert!(curves.iter().all(|c| c.points.len() == 2));
    }
}

#[test]
fn config_round_trip_and_rejections() {
    let cfg = ExperimentConfig::from_toml_str(ERGODIC).unwrap();
    assert_eq!(ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap(), cfg);

    let bad = [
        ERGODIC.replace("sweep_values = [0.0, 1.0, 2.5, 4.0]", "sweep_values = [2.0, 1.0]"),
        ERGODIC.replace("rbar", "zetabar"),
        format!("{ERGODIC}bogus = 1\n"),
        format!("{ERGODIC}pbar_w = 9.0\n"),
        ERGODIC.replace("ergodic_full", "dlt_full").replace("\"rbar\"", "\"zetabar\""),
    ];
    for b in bad {
        assert!(ExperimentConfig::from_toml_str(&b).is_err(), "{b}");
    }
}
