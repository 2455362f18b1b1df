//! Estimation from a CSV with missing outcomes: load, fit both nuisances,
//! compute all four estimators with their intervals.
//!
//!     cargo run --release --example missing_outcomes_csv [out_dir]

use std::path::PathBuf;

use dracc::data::{load_missing_csv, Dataset, MissingSchema};
use dracc::estimators::compute_bundle;
use dracc::inference::{acc_interval, covariance, influence_matrix, wald_interval};
use dracc::nuisance::{fit_logistic, fit_ols_subset, LogisticOptions};
use dracc::rng::stream;
use dracc::simgen::{generate, Scenario, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&out)?;
    let schema = MissingSchema {
        covariates: ["x1", "x2", "x3", "x4"].map(String::from).to_vec(),
        response: "r".into(),
        outcome: "y".into(),
    };
    let path = out.join("missing.csv");
    let s = generate(&ScenarioConfig {
        n: 1000,
        scenario: Scenario::ALL[3],
        seed: 11,
    })?;
    Dataset::new(s.observed.clone(), s.response.clone(), s.outcome.clone())?.write_csv(&path, &schema)?;

    let data = load_missing_csv(&path, &schema)?;
    let y = data.outcome().filled(0.0);
    let mu_hat = fit_ols_subset(data.covariates(), &y, data.response())?.predict(data.covariates(), None)?;
    let pi_hat =
        fit_logistic(data.covariates(), data.response(), &LogisticOptions::default())?.predict(data.covariates())?;
    let b = compute_bundle(&mu_hat, &pi_hat, data.response(), data.outcome())?;
    let infl = influence_matrix(&mu_hat, &pi_hat, data.response(), data.outcome(), &b)?;

    for (name, theta, col) in [
        ("OR", b.theta_or, infl.column(0)),
        ("IPW", b.theta_ipw, infl.column(1)),
        ("DR", b.theta_dr, infl.dr_column()),
    ] {
        let ci = wald_interval(theta, &col, b.n, 0.05)?;
        println!("{name:<7} {theta:9.3}  [{:.3}, {:.3}]", ci.lo, ci.hi);
    }
    let ci = acc_interval(&b, &covariance(&infl), 10_000, 0.05, &mut stream(5))?;
    println!(
        "DR+ACC  {:9.3}  [{:.3}, {:.3}]  lambda {:.3}",
        b.theta_acc, ci.lo, ci.hi, b.lambda_hat
    );
    println!("masked outcome reads: {}", data.outcome().masked_reads());
    Ok(())
}
