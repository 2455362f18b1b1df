//! A reduced simulation grid with the metrics table printed as markdown.
//!
//!     cargo run --release --example simulate_study [replications]

use dracc::harness::{compute_metrics, run_study, Estimator, StudyConfig};
use dracc::simgen::{Scenario, THETA_STAR};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reps: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(200);
    let cfg = StudyConfig {
        sample_sizes: vec![200, 1000],
        replications: reps,
        bootstrap_b: 2000,
        ..StudyConfig::default()
    };
    let records = run_study(&cfg)?;
    let table = compute_metrics(&records, THETA_STAR)?;
    for &n in &cfg.sample_sizes {
        println!("n = {n}");
        println!("| scenario | estimator | bias | RMSE | MAE | coverage | width |");
        for sc in Scenario::ALL {
            for e in Estimator::ALL {
                let m = table.get(n, sc, e).expect("cell present");
                println!(
                    "| {} | {} | {:.3} | {:.3} | {:.3} | {:.3} | {:.2} |",
                    sc.code(),
                    e,
                    m.bias,
                    m.rmse,
                    m.mae,
                    m.coverage,
                    m.ci_width
                );
            }
        }
        println!();
    }
    Ok(())
}
