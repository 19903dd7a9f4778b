use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const REPORT_COLUMNS: &str = "spec_version,seed,protocol,realization,space,N,K,delta_T,d_V,n,T,fidelity,\
worst_case_error,probe_error,fock_leakage,dicke_boundary_weight,dropped_norm,paper_budget_ok,time_budget,\
oracle_overlap,params,warnings";

fn fastham(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fastham")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn simulate(dir: &TempDir, cfg: &str, out: &str, extra: &[&str]) -> Output {
    let out = dir.path().join(out);
    let mut args = vec!["simulate", "--config", cfg, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    fastham(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(str::to_string).collect()).collect()
}

#[test]
fn delta_t_out_of_range_exits_1() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bad.json", "{\n  \"protocol\": \"fast-cz\",\n  \"N\": 64,\n  \"delta_T\": 1.5\n}\n");
    let o = simulate(&dir, &cfg, "out", &[]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let msg = stderr(&o);
    assert!(msg.contains("(0,1)") && msg.contains("bad.json:4:"), "{msg}");
}

#[test]
fn malformed_config_names_the_line() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", "{\n  \"protocol\": \"ghz\",\n  \"N\": 64,\n  \"bogus\": 1\n}\n");
    let o = simulate(&dir, &cfg, "out", &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("c.json:4:"), "{}", stderr(&o));
}

#[test]
fn randomized_protocol_requires_seed() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"protocol": "fourier-layer", "N": 8}"#);
    let o = simulate(&dir, &cfg, "out", &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("seed"));
}

#[test]
fn report_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"protocol": "fourier-layer", "N": 8, "seed": 11}"#);
    for out in ["a", "b"] {
        let o = simulate(&dir, &cfg, out, &[]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = fs::read(dir.path().join("a/report.csv")).unwrap();
    let b = fs::read(dir.path().join("b/report.csv")).unwrap();
    assert_eq!(a, b);
    let rows = csv_rows(&dir.path().join("a/report.csv"));
    assert_eq!(rows[0][1], "11");
}

#[test]
fn report_header_and_state_dump_columns() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"protocol": "ms-exact", "N": 16, "dump_state": true}"#);
    let o = simulate(&dir, &cfg, "out", &["--seed", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    let mut lines = report.lines();
    assert_eq!(lines.next(), Some(REPORT_COLUMNS));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..3], &["1.0", "5", "ms-exact"]);
    assert_eq!(lines.next(), None);

    let state = fs::read_to_string(dir.path().join("out/state_final.csv")).unwrap();
    assert_eq!(state.lines().next(), Some("spec_version,seed,input,data_index,ancilla_index,re,im"));
    let norm: f64 = csv_rows(&dir.path().join("out/state_final.csv"))
        .iter()
        .map(|r| r[5].parse::<f64>().unwrap().powi(2) + r[6].parse::<f64>().unwrap().powi(2))
        .sum();
    assert!((norm - 1.0).abs() < 1e-9, "norm {norm}");
    assert!(dir.path().join("out/schedule.json").exists());
}

#[test]
fn ghz_row_fidelity_in_unit_interval() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"protocol": "ghz", "N": 128, "n": 4}"#);
    let o = simulate(&dir, &cfg, "out", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("out/report.csv"));
    let f: f64 = rows[0][11].parse().unwrap();
    assert!((0.0..=1.0).contains(&f), "fidelity {f}");
    assert!(["true", "false"].contains(&rows[0][17].as_str()));
}

#[test]
fn single_point_scan_matches_simulate() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"protocol": "fast-cz", "N": 32, "n": 1, "grid": {"N": [32]}}"#);
    let o = simulate(&dir, &cfg, "sim", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("scan");
    let o = fastham(&["scan", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sim = csv_rows(&dir.path().join("sim/report.csv"));
    let scan = csv_rows(&out.join("scan.csv"));
    assert_eq!(scan.len(), 1);
    assert_eq!(scan[0][..22], sim[0][..]);
    assert_eq!(scan[0][22], "");
}

#[test]
fn ms_exact_scan_time_slope() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"protocol": "ms-exact", "N": 64, "grid": {"N": [64, 256, 1024]}}"#);
    let out = dir.path().join("scan");
    let o = fastham(&["scan", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let header = fs::read_to_string(out.join("scan.csv")).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, format!("{REPORT_COLUMNS},slope_error_vs_N,slope_T_vs_N"));
    let rows = csv_rows(&out.join("scan.csv"));
    let ns: Vec<&str> = rows.iter().map(|r| r[5].as_str()).collect();
    assert_eq!(ns, ["64", "256", "1024"]);
    let slope: f64 = rows[0][23].parse().unwrap();
    assert!((slope + 0.5).abs() <= 0.05, "slope {slope}");
}

#[test]
fn oversized_grid_rejected() {
    let dir = TempDir::new().unwrap();
    let ns: Vec<String> = (1..=200).map(|n| n.to_string()).collect();
    let ks: Vec<String> = (1..=60).map(|n| n.to_string()).collect();
    let body = format!(r#"{{"protocol": "ms-exact", "N": 8, "grid": {{"N": [{}], "K": [{}]}}}}"#, ns.join(","), ks.join(","));
    let cfg = write_config(dir.path(), "c.json", &body);
    let out = dir.path().join("scan");
    let o = fastham(&["scan", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("12000 points"), "{}", stderr(&o));
}

#[test]
fn validate_pass_fail_and_malformed() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"protocol": "ms-exact", "N": 16}"#);
    assert!(simulate(&dir, &cfg, "out", &[]).status.success());
    let good = dir.path().join("out/schedule.json");

    let o = fastham(&["validate", good.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.contains("verdict: ok") && text.contains("worst tuple"), "{text}");

    let doc = fs::read_to_string(&good).unwrap();
    let unit = "\"coeff\": \"1.0000000000000000e0\"";
    assert!(doc.contains(unit));
    let bad = dir.path().join("bad.json");
    fs::write(&bad, doc.replacen(unit, "\"coeff\": \"3.0e0\"", 1)).unwrap();
    let o = fastham(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("violation"));

    let broken = dir.path().join("broken.json");
    fs::write(&broken, &doc[..doc.len() / 2]).unwrap();
    let o = fastham(&["validate", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));
}

#[test]
fn circuit_file_resolves_relative_to_config() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("bell.json"),
        r#"{"n_qubits": 2, "layers": [{"rotations": [{"qubit": 0, "axis": "Y", "angle": 1.5707963267948966}]}, {"cz": [[0, 1]]}]}"#,
    )
    .unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"protocol": "circuit-par", "N": 16, "circuit_file": "bell.json"}"#);
    let o = simulate(&dir, &cfg, "out", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("out/report.csv"));
    let f: f64 = rows[0][11].parse().unwrap();
    assert!(f > 0.9, "fidelity {f}");
}
