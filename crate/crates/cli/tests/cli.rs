use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ddjcs_core::experiments::read_csv;
use ddjcs_core::{ComplexGrid, TrialResult};

const SMALL: &str = r#"{
    "system": {"M": 256, "N": 32},
    "scenario": {"users": [
        {"range_m": 15.0, "velocity_ms": 14.0, "M_cu": 48, "N_cu": 14},
        {"range_m": 30.0, "velocity_ms": -8.0, "M_cu": 48, "N_cu": 14}
    ]}
}"#;

fn ddjcs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddjcs")).args(args).output().expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.json");
    fs::write(&path, SMALL).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn resolutions_table() {
    let out = ddjcs(&["resolutions"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("1024x128\t"));
    assert!(lines[1].contains("\t1.2199\t1.8797\t"));
    assert!(lines[3].contains("\t0.3050\t0.4699\t"));
}

#[test]
fn sweep_writes_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let csv = dir.path().join("out.csv");
    let out = ddjcs(&[
        "sweep", "--config", &config, "--cases", "256x32,512x32", "--beta-min", "-5e-3", "--beta-max", "-1e-4",
        "--beta-points", "3", "--trials", "2", "--out", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("beta,M,N,mean_ber,rmse_range_m,rmse_velocity_ms,mean_snr_ft_db,mean_snr_dd_db,trials\n"));
    let points = read_csv(&csv).unwrap();
    assert_eq!(points.len(), 6);
    assert!(points.iter().all(|p| p.trials == 2));
}

#[test]
fn sweep_to_stdout_is_reproducible_and_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let run = |seed: &str| {
        let out = ddjcs(&["sweep", "--config", &config, "--cases", "256x32", "--beta-points", "2", "--trials", "3", "--seed", seed]);
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(run("5"), run("5"));
    assert_ne!(run("5"), run("6"));
}

#[test]
fn trial_prints_json_and_dumps_grids() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let tx = dir.path().join("tx.bin");
    let y = dir.path().join("y.csv");
    let out = ddjcs(&[
        "trial", "--config", &config, "--beta", "-2e-3", "--index", "4", "--dump-txft", tx.to_str().unwrap(),
        "--dump-ydd", y.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let result: TrialResult = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!((result.beta, result.trial), (-2e-3, 4));
    assert_eq!(result.user_ber.len(), 2);

    let grid = ComplexGrid::read_binary(fs::File::open(&tx).unwrap()).unwrap();
    assert_eq!(grid.dims(), (256, 32));
    assert!(grid.energy() > 0.0);
    let power = fs::read_to_string(&y).unwrap();
    assert_eq!(power.lines().count(), 256);
    assert_eq!(power.lines().next().unwrap().split(',').count(), 32);
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    for args in [
        vec!["sweep", "--beta-min", "0.1", "--trials", "1"],
        vec!["trial", "--config", "/nonexistent/ddjcs.json"],
        vec!["trial", "--case", "12by4"],
        vec!["trial", "--case", "128x16"],
    ] {
        let out = ddjcs(&args);
        assert!(!out.status.success(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}
