//! Outcome regression and propensity fits on the latent versus the observed
//! (transformed) covariates of one large sample.
//!
//!     cargo run --release --example nuisance_fits

use dracc::nuisance::{fit_logistic, fit_ols_subset, LogisticOptions, OutcomeModel};
use dracc::simgen::{generate, Scenario, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = generate(&ScenarioConfig {
        n: 20_000,
        scenario: Scenario::ALL[0],
        seed: 3,
    })?;
    let y = s.outcome.filled(0.0);
    for (label, design) in [("latent T", &s.latent), ("observed X", &s.observed)] {
        let mu = fit_ols_subset(design, &y, &s.response)?;
        if let OutcomeModel::Linear {
            intercept,
            coefficients,
        } = &mu
        {
            println!("OLS on {label:<10}: intercept {intercept:9.3}, coefficients {coefficients:.3?}");
        }
        let pi = fit_logistic(design, &s.response, &LogisticOptions::default())?;
        println!(
            "logit on {label:<10}: intercept {:9.3}, coefficients {:.3?} ({} iterations)",
            pi.intercept, pi.coefficients, pi.iterations
        );
    }
    println!("generating values: OLS (210, 27.4, 13.7, 13.7, 13.7); logit (0, -1, 0.5, -0.25, -0.1)");
    Ok(())
}
