use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn coxradar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coxradar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_owned()
}

/// Rows of a CSV file keyed by column name.
fn read_rows(path: &Path) -> Vec<HashMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().clone();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            headers.iter().zip(rec.iter()).map(|(h, v)| (h.to_owned(), v.to_owned())).collect()
        })
        .collect()
}

fn column(rows: &[HashMap<String, String>], name: &str) -> Vec<f64> {
    rows.iter().map(|r| r[name].parse().unwrap()).collect()
}

const SMALL_BOTH: &str = r#"{
  "name": "small",
  "network": { "model": "BLCP", "n_b": 300, "r_g": 1500.0, "r0": 0.0 },
  "radar": { "omega_deg": 15.0 },
  "lambda": 0.01,
  "sweep": { "variable": "beta", "grid": [-5.0, 5.0, 15.0] },
  "method": "both",
  "seed": 7,
  "n_realizations": 400,
  "pdf": { "range_lo": 5.0, "range_hi": 15.0, "samples": 2000, "bins": 40 }
}"#;

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "small.json", SMALL_BOTH);
    let mut listings = Vec::new();
    for (dir, threads) in [("a", "1"), ("b", "3")] {
        let out = tmp.path().join(dir);
        let o = coxradar(&["detect", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", threads]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let mut files: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
        files.sort();
        listings.push((out, files));
    }
    let (a, b) = (&listings[0], &listings[1]);
    assert_eq!(a.1, b.1);
    assert!(a.1.len() >= 5, "{:?}", a.1);
    for f in &a.1 {
        assert_eq!(fs::read(a.0.join(f)).unwrap(), fs::read(b.0.join(f)).unwrap(), "{f:?} differs");
    }
}

#[test]
fn seed_override_changes_monte_carlo_output() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "small.json", SMALL_BOTH);
    let run = |seed: &str, dir: &str| {
        let out = tmp.path().join(dir);
        let o = coxradar(&["montecarlo", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", seed]);
        assert!(o.status.success());
        fs::read(out.join("small_monte_carlo.csv")).unwrap()
    };
    assert_ne!(run("1", "s1"), run("2", "s2"));
    assert!(!tmp.path().join("s1/small_analytic.csv").exists());
}

#[test]
fn zero_intensity_gives_certain_detection_by_both_methods() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "silent.json",
        r#"{
          "name": "silent",
          "network": { "model": "PLCP", "lambda_l": 0.01 },
          "lambda": 0.0,
          "sweep": { "variable": "beta", "grid": { "start": -10.0, "stop": 30.0, "points": 5 } },
          "method": "both",
          "seed": 1,
          "n_realizations": 200
        }"#,
    );
    let out = tmp.path().join("out");
    let o = coxradar(&["detect", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_rows(&out.join("silent_comparison.csv"));
    assert_eq!(rows.len(), 5);
    assert!(column(&rows, "p_d_analytic").iter().all(|&p| p == 1.0));
    assert!(column(&rows, "p_d_monte_carlo").iter().all(|&p| p == 1.0));
    assert!(rows.iter().all(|r| r["method"] == "both" && r["within_tolerance"] == "true"));
}

#[test]
fn range_recipe_is_monotone_and_methods_agree() {
    let tmp = TempDir::new().unwrap();
    let cfg = manifest_dir().join("configs/plcp_target_range.json");
    let o = coxradar(&["detect", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_rows(&tmp.path().join("plcp_target_range_comparison.csv"));
    let analytic = column(&rows, "p_d_analytic");
    assert_eq!(analytic.len(), 10);
    assert!(analytic.windows(2).all(|w| w[1] <= w[0]), "{analytic:?}");
    assert!(rows.iter().all(|r| r["within_tolerance"] == "true"));
}

#[test]
fn offset_recipe_shows_a_plateau() {
    let tmp = TempDir::new().unwrap();
    let cfg = manifest_dir().join("configs/blcp_offset.json");
    let o = coxradar(&["detect", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_rows(&tmp.path().join("blcp_offset_analytic.csv"));
    let r0 = column(&rows, "sweep_value");
    let p = column(&rows, "p_d");
    let centre = p[r0.iter().position(|&x| x == 0.0).unwrap()];
    for (x, v) in r0.iter().zip(&p) {
        if x.abs() <= 2500.0 {
            assert!((v - centre).abs() < 1e-6, "r0 {x}: {v} vs {centre}");
        }
    }
    assert!(p[0] > centre + 0.05 && p[p.len() - 1] > centre + 0.05);
}

#[test]
fn configuration_errors_exit_with_code_2() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();
    let cases = [
        r#"{ "name": "x", "network": { "model": "PLCP", "lambda_l": 0.01 }, "lambda": -1.0 }"#,
        r#"{ "name": "x", "network": { "model": "PLCP", "lambda_l": 0.01 }, "lambda": 0.01, "bogus": 1 }"#,
        r#"{ "name": "x", "network": { "model": "BLCP", "n_b": 10, "r_g": 1500.0, "r0": 0.0 }, "lambda": 0.01,
             "sweep": { "variable": "lambda_l", "grid": [0.01, 0.02] } }"#,
        r#"{ "name": "x", "radar": { "target_range": 600.0 }, "network": { "model": "PLCP", "lambda_l": 0.01 },
             "lambda": 0.01 }"#,
        "",
    ];
    for (i, json) in cases.iter().enumerate() {
        let cfg = write_config(tmp.path(), &format!("bad{i}.json"), json);
        let o = coxradar(&["detect", "--config", &cfg, "--out", out]);
        assert_eq!(o.status.code(), Some(2), "case {i}: {}", String::from_utf8_lossy(&o.stderr));
        let report: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
        assert_eq!(report["exit_code"], 2);
    }
    let o = coxradar(&["detect", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
}

fn copy_city(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for f in ["street_curve.csv", "congestion.csv", "city_meta.csv"] {
        fs::copy(from.join(f), to.join(f)).unwrap();
    }
}

#[test]
fn unidentifiable_fit_exits_with_code_3() {
    let tmp = TempDir::new().unwrap();
    let city = tmp.path().join("data/flat");
    copy_city(&manifest_dir().join("fixtures/synthetic_cities/delhi"), &city);
    fs::write(city.join("street_curve.csv"), "box_side_m,total_length_m\n1000,0\n2000,0\n3000,0\n4000,0\n").unwrap();
    let o = coxradar(&[
        "fit",
        "--data",
        tmp.path().join("data").to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(report["error"], "numerical");
}

#[test]
fn empty_city_file_is_an_input_error() {
    let tmp = TempDir::new().unwrap();
    let city = tmp.path().join("data/empty");
    copy_city(&manifest_dir().join("fixtures/synthetic_cities/paris"), &city);
    fs::write(city.join("street_curve.csv"), "").unwrap();
    let o = coxradar(&[
        "fit",
        "--data",
        tmp.path().join("data").to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn hourly_detection_orders_the_synthetic_cities() {
    let tmp = TempDir::new().unwrap();
    let data = manifest_dir().join("fixtures/synthetic_cities");
    let cfg = manifest_dir().join("configs/hourly.json");
    let o = coxradar(&[
        "hourly",
        "--data",
        data.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_rows(&tmp.path().join("hourly.csv"));
    assert_eq!(rows.len(), 4 * 24);
    let mut mean: HashMap<String, f64> = HashMap::new();
    for r in &rows {
        *mean.entry(r["city"].clone()).or_default() += r["p_d_plcp"].parse::<f64>().unwrap() / 24.0;
        let (c, e): (f64, f64) = (r["p_d_blcp_center"].parse().unwrap(), r["p_d_blcp_outskirts"].parse().unwrap());
        assert!(e >= c - 1e-12);
    }
    let lowest = mean.iter().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    let highest = mean.iter().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert_eq!(lowest, "paris");
    assert_eq!(highest, "johannesburg");

    let fits: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("fits.json")).unwrap()).unwrap();
    let delhi = &fits["delhi"]["blp"];
    assert!((delhi["n_b_continuous"].as_f64().unwrap() / 662.0 - 1.0).abs() < 0.05);
    assert!((delhi["r_g"].as_f64().unwrap() / 12_960.0 - 1.0).abs() < 0.05);
}

#[test]
fn interferers_command_reports_both_mean_variants() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "int.json",
        r#"{ "name": "int", "radar": { "omega_deg": 15.0 },
             "network": { "model": "BLCP", "n_b": 300, "r_g": 1500.0, "r0": 0.0 },
             "lambda": 0.01, "seed": 3, "n_realizations": 1000 }"#,
    );
    let o = coxradar(&["interferers", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("int_interferers.json")).unwrap()).unwrap();
    let (analytic, empirical) = (s["analytic_mean"].as_f64().unwrap(), s["empirical_mean"].as_f64().unwrap());
    assert!((analytic / empirical - 1.0).abs() < 0.1, "{analytic} vs {empirical}");
    assert!(s["as_printed_log10"].as_f64().unwrap() > 100.0);
    let rows = read_rows(&tmp.path().join("int_intervals.csv"));
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.contains_key("case_id")));
}
