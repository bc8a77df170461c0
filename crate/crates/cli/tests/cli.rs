use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use jcm_cli::emit::{echo_from_csv, strip_timestamp};
use jcm_cli::RunConfig;
use serde_json::Value;

const SMALL: &str = "\
[model]
beta0_re = 2.0
delta_omega = 5.0
nu = 50.0
omega21 = 200.0
[input]
alpha_re = 1.0
[truncation]
n_max = 30
[scan]
t_end = 1.0
n_points = 5
";

fn jcm(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("run.toml");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_jcm"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("out").join(name)).unwrap()).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn malformed_key_exits_with_config_status() {
    let dir = tempfile::tempdir().unwrap();
    let out = jcm(dir.path(), "[scan]\nn_pionts = 3\n", &["criteria"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_pionts"));
}

#[test]
fn bad_shots_flag_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = jcm(dir.path(), SMALL, &["measure", "--shots", "lots"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn single_point_at_zero_is_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SMALL.replace("n_points = 5", "n_points = 1");
    let out = jcm(dir.path(), &cfg, &["criteria"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("out/criteria.csv")).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "t,c_sq,phi_sq,c_sp,c_sp_defined,c_ac,phi_ac");
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][4], "true");
    for i in [0, 1, 3, 5] {
        let v: f64 = rows[0][i].parse().unwrap();
        assert!(v.abs() < 1e-12, "column {i}: {v}");
    }
}

#[test]
fn criteria_are_deterministic_and_echo_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    assert!(jcm(dir.path(), SMALL, &["criteria"]).status.success());
    let first = fs::read_to_string(dir.path().join("out/criteria.csv")).unwrap();
    assert!(jcm(dir.path(), SMALL, &["criteria"]).status.success());
    let second = fs::read_to_string(dir.path().join("out/criteria.csv")).unwrap();
    assert_eq!(strip_timestamp(&first), strip_timestamp(&second));

    // the echo names the output directory, so the rerun lands in the same place
    let echo = echo_from_csv(&first);
    let parsed = RunConfig::parse(&echo).unwrap();
    assert_eq!(parsed.output.directory, dir.path().join("out"));
    assert!(jcm(dir.path(), &echo, &["criteria"]).status.success());
    let third = fs::read_to_string(dir.path().join("out/criteria.csv")).unwrap();
    assert_eq!(strip_timestamp(&first), strip_timestamp(&third));
}

#[test]
fn fig1a_scan_shows_anomalous_correlations_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = jcm(dir.path(), "[scan]\nn_points = 50\n", &["criteria"]);
    assert!(out.status.success());
    let rows = data_rows(&fs::read_to_string(dir.path().join("out/criteria.csv")).unwrap());
    let col = |i: usize| rows.iter().map(move |r| r[i].parse::<f64>().unwrap());
    assert!(col(5).fold(f64::INFINITY, f64::min) < 0.0);
    assert!(col(1).fold(f64::INFINITY, f64::min) > -1e-9);
}

#[test]
fn oracle_check_passes_and_detects_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SMALL.replace("n_max = 30", "n_max = 19");
    let out = jcm(dir.path(), &cfg, &["oracle-check"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(dir.path(), "oracle_check.json");
    assert_eq!(report["data"]["pass"], Value::Bool(true));
    let rows = report["data"]["rows"].as_array().unwrap();
    assert_eq!(rows[0]["t"].as_f64(), Some(0.0));
    assert!(rows[0]["trace_distance"].as_f64().unwrap() < 1e-12);

    let out = jcm(dir.path(), &format!("{cfg}[oracle]\neta_mismatch = 0.02\n"), &["oracle-check"]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(dir.path(), "oracle_check.json");
    assert_eq!(report["data"]["pass"], Value::Bool(false));
    assert!(report["data"]["max_distance"].as_f64().unwrap() > 1e-4);
}

#[test]
fn oracle_check_rejects_large_cavity_amplitude() {
    let dir = tempfile::tempdir().unwrap();
    let out = jcm(dir.path(), "", &["oracle-check"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn pfunc_vacuum_is_nonnegative_and_methods_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[model]\nbeta0_re = 2.0\n[input]\nkind = \"vacuum\"\n[grid]\nhalf_extent = 3.0\nn_side = 21\n";
    assert!(jcm(dir.path(), cfg, &["pfunc"]).status.success());
    let doc = json(dir.path(), "pfunc.json");
    assert!(doc["data"]["min_value"].as_f64().unwrap() >= -1e-6);

    let cfg = format!("{SMALL}[snapshot]\nt = 0.3\n[grid]\ncenter_re = 0.0\nhalf_extent = 4.0\nn_side = 21\n");
    assert!(jcm(dir.path(), &cfg, &["pfunc", "--method", "series"]).status.success());
    let series = json(dir.path(), "pfunc.json");
    assert!(jcm(dir.path(), &cfg, &["pfunc", "--method", "integral"]).status.success());
    let integral = json(dir.path(), "pfunc.json");
    assert_eq!(integral["data"]["method"], "integral");
    let a = series["data"]["values"].as_array().unwrap();
    let b = integral["data"]["values"].as_array().unwrap();
    assert_eq!(a.len(), 21 * 21);
    let worst = a.iter().zip(b).map(|(x, y)| (x.as_f64().unwrap() - y.as_f64().unwrap()).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-3, "{worst}");
}

const MEASURE: &str = "\
[model]
beta0_re = 2.0
[input]
alpha_re = 1.0
[truncation]
n_max = 30
[grid]
half_extent = 2.0
n_side = 9
[measurement]
alpha_half_extent = 5.0
probe_n_max = 15
tau0 = 2.5
";

#[test]
fn measure_matches_direct_moments_in_ideal_mode() {
    let dir = tempfile::tempdir().unwrap();
    let out = jcm(dir.path(), MEASURE, &["measure"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["measure_rho_nn.csv", "measure_wigner.csv", "measure_pmatrix.csv", "measure.json"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
    let doc = json(dir.path(), "measure.json");
    let m = &doc["data"]["moments"];
    let get = |k: &str, s: &str| m[s][k].as_f64().unwrap();
    assert!((get("mean_n", "extracted") - get("mean_n", "direct")).abs() < 1e-4);
    assert!((get("mean_n2", "extracted") - get("mean_n2", "direct")).abs() < 1e-3);
    let tables = doc["data"]["probe_tables"].as_array().unwrap();
    assert!(tables[0]["max_abs_deviation_to_direct"].as_f64().unwrap() < 1e-8);
}

#[test]
fn shot_errors_shrink_tenfold_for_hundredfold_shots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{MEASURE}p_matrix = false\n");
    let mut errs = Vec::new();
    for shots in ["10000", "1000000"] {
        let out = jcm(dir.path(), &cfg, &["measure", "--shots", shots, "--seed", "5"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let doc = json(dir.path(), "measure.json");
        assert_eq!(doc["data"]["statistics"]["shots"].as_u64(), Some(shots.parse().unwrap()));
        errs.push(doc["data"]["moments"]["errors"].clone());
    }
    for k in ["mean_a", "mean_a2", "mean_n", "mean_na", "mean_n2"] {
        let ratio = errs[0][k].as_f64().unwrap() / errs[1][k].as_f64().unwrap();
        assert!((ratio - 10.0).abs() < 1e-6, "{k}: {ratio}");
    }
}

#[test]
fn empty_probe_ladder_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = jcm(dir.path(), &format!("{MEASURE}ladder = []\n"), &["measure"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("measurement.ladder"));
}

#[test]
fn underdetermined_probe_design_exits_with_status_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = jcm(dir.path(), &format!("{MEASURE}ladder = [1.0, 2.0]\n"), &["measure"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn displaced_state_beyond_probe_space_is_a_truncation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = jcm(dir.path(), &format!("{MEASURE}table_points = [[-2.5, 0.0]]\n"), &["measure"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}
