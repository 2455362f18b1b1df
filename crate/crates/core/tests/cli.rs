use std::path::Path;
use std::process::Command;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use dracc::data::{write_ate_csv, AteDataset, AteSchema};
use dracc::rng::stream;

fn dracc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dracc"))
}

#[test]
fn simulate_writes_tables_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.cfg");
    std::fs::write(
        &cfg,
        "sample_sizes = 100\nreplications = 20\nscenarios = CC,II\ninference.bootstrap_b = 1000\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let st = dracc()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .args(["--seed", "5", "--workers", "2", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    for f in [
        "metrics.csv",
        "metrics.md",
        "records.csv",
        "plots/hist_n100_II_acc.svg",
        "plots/hist_n100_CC_dr.csv",
        "plots/scatter_n100_II_acc_vs_dr.svg",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let records = std::fs::read_to_string(out.join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 1 + 2 * 20);
    let svg = std::fs::read_to_string(out.join("plots/hist_n100_CC_or.svg")).unwrap();
    assert_eq!(svg.matches("<rect").count(), 30);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "replications = zero\n").unwrap();
    let st = dracc().args(["simulate", "--config"]).arg(&bad).status().unwrap();
    assert_eq!(st.code(), Some(1));
    let st = dracc()
        .args(["simulate", "--config", "/nonexistent/study.cfg"])
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
    let st = dracc()
        .args([
            "analyze",
            "--data",
            "/nonexistent/x.csv",
            "--treatment",
            "a",
            "--covariates",
            "x",
        ])
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
    let st = dracc().args(["simulate", "--bogus"]).status().unwrap();
    assert_eq!(st.code(), Some(1));
}

#[test]
fn help_lists_config_keys() {
    let out = dracc().args(["simulate", "--help"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for (k, _) in dracc::harness::CONFIG_KEYS {
        assert!(text.contains(k), "{k}");
    }
}

fn two_arm_csv(path: &Path) -> AteSchema {
    let n = 400;
    let mut rng = stream(17);
    let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let cov = DMatrix::from_column_slice(n, 1, &x);
    let a: Vec<u8> = (0..n).map(|i| u8::from(i % 2 == 0)).collect();
    let y1: Vec<f64> = (0..n)
        .map(|i| 5.0 * f64::from(a[i]) + rng.sample::<f64, _>(StandardNormal))
        .collect();
    let y2: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let schema = AteSchema {
        covariates: vec!["x".into()],
        treatment: "a".into(),
    };
    let data = vec![
        AteDataset::new("effect", cov.clone(), a.clone(), y1).unwrap(),
        AteDataset::new("noise", cov, a, y2).unwrap(),
    ];
    write_ate_csv(path, &schema, &data).unwrap();
    schema
}

#[test]
fn analyze_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("two_arm.csv");
    two_arm_csv(&csv);
    let out = dir.path().join("ate");
    let st = dracc()
        .args(["analyze", "--data"])
        .arg(&csv)
        .args([
            "--treatment",
            "a",
            "--covariates",
            "x",
            "--outcomes",
            "all",
            "--b",
            "2000",
            "--out",
        ])
        .arg(&out)
        .output()
        .unwrap();
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let mut rdr = csv::Reader::from_path(out.join("ate_results.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = rdr.records().collect::<Result<_, _>>().unwrap();
    assert_eq!(rows.len(), 2);
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let acc: f64 = rows[0][col("ate_acc")].parse().unwrap();
    assert!((acc - 5.0).abs() <= 0.3, "{acc}");
    assert_eq!(&rows[0][col("sig_acc")], "1");
    assert!(out.join("ate_summary.md").exists());
    assert!(out.join("ate_hist_dr_minus_acc.svg").exists());
}
