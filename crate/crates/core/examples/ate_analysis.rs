//! Two-arm analysis of several outcomes from one CSV: a synthetic table
//! with a confounded treatment, one shifted outcome and two null outcomes.
//!
//!     cargo run --release --example ate_analysis [out_dir]

use std::path::PathBuf;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use dracc::data::{write_ate_csv, AteDataset, AteSchema};
use dracc::harness::{analyze_ate, AteConfig};
use dracc::rng::stream;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&out)?;
    let n = 400;
    let mut rng = stream(42);
    let x: Vec<f64> = (0..2 * n).map(|_| rng.sample(StandardNormal)).collect();
    let cov = DMatrix::from_column_slice(n, 2, &x);
    let a: Vec<u8> = (0..n)
        .map(|i| u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-0.8 * cov[(i, 0)]).exp())))
        .collect();
    let noise = |rng: &mut dracc::rng::StreamRng| -> f64 { rng.sample(StandardNormal) };
    let shifted: Vec<f64> = (0..n)
        .map(|i| 2.0 * f64::from(a[i]) + cov[(i, 1)] + noise(&mut rng))
        .collect();
    let null1: Vec<f64> = (0..n).map(|_| noise(&mut rng)).collect();
    let null2: Vec<f64> = (0..n).map(|i| 0.5 * cov[(i, 0)] + noise(&mut rng)).collect();
    let schema = AteSchema {
        covariates: vec!["x1".into(), "x2".into()],
        treatment: "treated".into(),
    };
    let data = [("shifted", shifted), ("null", null1), ("null_confounded", null2)]
        .into_iter()
        .map(|(name, y)| AteDataset::new(name, cov.clone(), a.clone(), y))
        .collect::<Result<Vec<_>, _>>()?;
    let csv = out.join("two_arm.csv");
    write_ate_csv(&csv, &schema, &data)?;

    let report = analyze_ate(&csv, &schema, &[], &AteConfig::default())?;
    for o in &report.outcomes {
        let r = o.result.as_ref().map_err(|e| e.clone())?;
        let e = &r.estimate;
        println!(
            "{:<16} OR {:>7.3}  IPW {:>7.3}  DR {:>7.3}  DR+ACC {:>7.3}  [{:.3}, {:.3}]  significant {}",
            o.name, e.ate_or, e.ate_ipw, e.ate_dr, e.ate_acc, r.acc_ci.lo, r.acc_ci.hi, r.significant[3]
        );
    }
    print!("\n{}", report.summary_markdown());
    Ok(())
}
