//! Simulation study driver, metrics, reports, plots and the two-arm
//! analysis pipeline behind the `dracc` binary.

mod ate;
mod config;
mod metrics;
mod plots;
mod study;

use thiserror::Error;

pub use ate::{analyze_ate, analyze_datasets, AteCiMode, AteConfig, AteOutcomeReport, AteReport, OutcomeResult};
pub use config::{StudyConfig, CONFIG_KEYS};
pub use metrics::{compute_metrics, emit_report, summarize, Metrics, MetricsRow, MetricsTable, ReportFormat};
pub use plots::{emit_density_overlay_svg, emit_histogram_svg, emit_scatter_svg, Histogram};
pub use study::{
    check_safety, run_replication_set, run_study, write_records_csv, Estimator, Intervals, RecordStatus,
    ReplicationRecord,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("no usable records")]
    NoData,
    #[error("safety audit failed for n={n} {scenario} replication {replication}")]
    SafetyViolation {
        n: usize,
        scenario: String,
        replication: usize,
    },
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
    #[error(transparent)]
    Fit(#[from] crate::nuisance::FitError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit code: 1 for configuration or input problems, 2 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Io(_) => 2,
            HarnessError::Csv(e) if e.is_io_error() => 2,
            HarnessError::Data(crate::data::DataError::Io(_)) => 2,
            HarnessError::Data(crate::data::DataError::Csv(e)) if e.is_io_error() => 2,
            _ => 1,
        }
    }
}
