use std::fmt;
use std::path::Path;

use rayon::prelude::*;

use crate::estimators::{compute_bundle, EstimateBundle};
use crate::inference::{acc_interval, covariance, influence_matrix, wald_interval, Interval};
use crate::nuisance::{fit_logistic, fit_ols_subset, hajek_rescale, LogisticOptions};
use crate::rng::derive_seed;
use crate::simgen::{generate, Scenario, ScenarioConfig, SimError, SimulatedSample};

use super::{HarnessError, StudyConfig};

/// The four estimators compared in the study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    Or,
    Ipw,
    Dr,
    Acc,
}

impl Estimator {
    pub const ALL: [Estimator; 4] = [Estimator::Or, Estimator::Ipw, Estimator::Dr, Estimator::Acc];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Or => "OR",
            Estimator::Ipw => "IPW",
            Estimator::Dr => "DR",
            Estimator::Acc => "DR+ACC",
        }
    }

    /// File-name friendly tag.
    pub fn tag(self) -> &'static str {
        match self {
            Estimator::Or => "or",
            Estimator::Ipw => "ipw",
            Estimator::Dr => "dr",
            Estimator::Acc => "acc",
        }
    }

    pub fn estimate(self, b: &EstimateBundle) -> f64 {
        match self {
            Estimator::Or => b.theta_or,
            Estimator::Ipw => b.theta_ipw,
            Estimator::Dr => b.theta_dr,
            Estimator::Acc => b.theta_acc,
        }
    }

    pub fn interval(self, iv: &Intervals) -> Interval {
        match self {
            Estimator::Or => iv.or,
            Estimator::Ipw => iv.ipw,
            Estimator::Dr => iv.dr,
            Estimator::Acc => iv.acc,
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intervals {
    pub or: Interval,
    pub ipw: Interval,
    pub dr: Interval,
    pub acc: Interval,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RecordStatus {
    Ok,
    Degenerate,
    Failed(String),
}

impl RecordStatus {
    fn label(&self) -> String {
        match self {
            RecordStatus::Ok => "ok".into(),
            RecordStatus::Degenerate => "degenerate".into(),
            RecordStatus::Failed(msg) => format!("failed: {msg}"),
        }
    }
}

/// Outcome of one (sample size, scenario, replication) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub n: usize,
    pub scenario: Scenario,
    pub replication: usize,
    pub seed: u64,
    pub status: RecordStatus,
    pub bundle: Option<EstimateBundle>,
    pub intervals: Option<Intervals>,
}

impl ReplicationRecord {
    pub fn is_ok(&self) -> bool {
        self.status == RecordStatus::Ok
    }
}

/// Interval and safety properties of the clipped estimate against `target`.
pub fn check_safety(b: &EstimateBundle, target: f64) -> bool {
    let (lo, hi) = (b.theta_or.min(b.theta_ipw), b.theta_or.max(b.theta_ipw));
    let inside = lo <= b.theta_acc && b.theta_acc <= hi;
    let worst = (b.theta_or - target).abs().max((b.theta_ipw - target).abs());
    inside && (b.theta_acc - target).abs() <= worst + 1e-9
}

fn analyze_sample(
    sample: &SimulatedSample,
    logistic: &LogisticOptions,
    hajek: bool,
    bootstrap_b: usize,
    alpha: f64,
    boot_seed: u64,
) -> Result<(EstimateBundle, Intervals), String> {
    let y_full = sample.outcome.filled(0.0);
    let od = sample.outcome_design();
    let mu_model = fit_ols_subset(od.matrix, &y_full, &sample.response).map_err(|e| format!("outcome fit: {e}"))?;
    let mu_hat = mu_model.predict(od.matrix, None).map_err(|e| e.to_string())?;
    let pd = sample.propensity_design();
    let pi_model = fit_logistic(pd.matrix, &sample.response, logistic).map_err(|e| format!("propensity fit: {e}"))?;
    let mut pi_hat = pi_model.predict(pd.matrix).map_err(|e| e.to_string())?;
    if hajek {
        // Only the R = 1 entries enter the estimators, and those get the
        // treated-arm factor.
        pi_hat = hajek_rescale(&pi_hat, &sample.response, logistic.eps).map_err(|e| e.to_string())?;
    }

    let bundle = compute_bundle(&mu_hat, &pi_hat, &sample.response, &sample.outcome).map_err(|e| e.to_string())?;
    let infl =
        influence_matrix(&mu_hat, &pi_hat, &sample.response, &sample.outcome, &bundle).map_err(|e| e.to_string())?;
    let n = bundle.n;
    let wald = |theta, col: Vec<f64>| wald_interval(theta, &col, n, alpha).map_err(|e| e.to_string());
    let sigma = covariance(&infl);
    let acc = acc_interval(&bundle, &sigma, bootstrap_b, alpha, &mut crate::rng::stream(boot_seed))
        .map_err(|e| e.to_string())?;
    let intervals = Intervals {
        or: wald(bundle.theta_or, infl.column(0))?,
        ipw: wald(bundle.theta_ipw, infl.column(1))?,
        dr: wald(bundle.theta_dr, infl.dr_column())?,
        acc,
    };
    Ok((bundle, intervals))
}

fn scenario_index(sc: Scenario) -> u64 {
    Scenario::ALL.iter().position(|&s| s == sc).unwrap_or(0) as u64
}

/// Runs every requested scenario on the single dataset drawn for
/// `(n, replication)`. All scenarios share the draw, so estimators whose
/// nuisance is specified the same way coincide across scenarios.
pub fn run_replication_set(cfg: &StudyConfig, n: usize, replication: usize) -> Vec<ReplicationRecord> {
    let seed = derive_seed(cfg.master_seed, &[n as u64, replication as u64]);
    cfg.scenarios
        .iter()
        .map(|&scenario| {
            let base = ReplicationRecord {
                n,
                scenario,
                replication,
                seed,
                status: RecordStatus::Ok,
                bundle: None,
                intervals: None,
            };
            let sample = match generate(&ScenarioConfig { n, scenario, seed }) {
                Ok(s) => s,
                Err(SimError::DegenerateSample(_)) => {
                    return ReplicationRecord {
                        status: RecordStatus::Degenerate,
                        ..base
                    }
                }
                Err(e) => {
                    return ReplicationRecord {
                        status: RecordStatus::Failed(e.to_string()),
                        ..base
                    }
                }
            };
            let boot_seed = derive_seed(seed, &[1 + scenario_index(scenario)]);
            match analyze_sample(&sample, &cfg.logistic, cfg.hajek, cfg.bootstrap_b, cfg.alpha, boot_seed) {
                Ok((bundle, intervals)) => {
                    debug_assert_eq!(sample.outcome.masked_reads(), 0);
                    ReplicationRecord {
                        bundle: Some(bundle),
                        intervals: Some(intervals),
                        ..base
                    }
                }
                Err(msg) => ReplicationRecord {
                    status: RecordStatus::Failed(msg),
                    ..base
                },
            }
        })
        .collect()
}

/// Runs the full grid. Records are ordered by sample size, scenario and
/// replication, independent of the worker count.
pub fn run_study(cfg: &StudyConfig) -> Result<Vec<ReplicationRecord>, HarnessError> {
    cfg.validate()?;
    let units: Vec<(usize, usize)> = cfg
        .sample_sizes
        .iter()
        .flat_map(|&n| (0..cfg.replications).map(move |r| (n, r)))
        .collect();
    let run =
        || -> Vec<Vec<ReplicationRecord>> { units.par_iter().map(|&(n, r)| run_replication_set(cfg, n, r)).collect() };
    let sets = if cfg.workers == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| HarnessError::Config(e.to_string()))?
            .install(run)
    };

    let k = cfg.scenarios.len();
    let mut out = Vec::with_capacity(units.len() * k);
    for (ni, _) in cfg.sample_sizes.iter().enumerate() {
        let block = &sets[ni * cfg.replications..(ni + 1) * cfg.replications];
        for s in 0..k {
            out.extend(block.iter().map(|set| set[s].clone()));
        }
    }
    for rec in &out {
        if let Some(b) = &rec.bundle {
            if !check_safety(b, crate::simgen::THETA_STAR) {
                return Err(HarnessError::SafetyViolation {
                    n: rec.n,
                    scenario: rec.scenario.code(),
                    replication: rec.replication,
                });
            }
        }
    }
    Ok(out)
}

const RECORD_HEADER: [&str; 19] = [
    "n",
    "scenario",
    "replication",
    "seed",
    "status",
    "theta_or",
    "theta_ipw",
    "correction",
    "theta_dr",
    "theta_acc",
    "lambda_hat",
    "or_lo",
    "or_hi",
    "ipw_lo",
    "ipw_hi",
    "dr_lo",
    "dr_hi",
    "acc_lo",
    "acc_hi",
];

/// Raw per-replication output, one row per record. Floats use the shortest
/// round-trip representation so the file is byte-stable.
pub fn write_records_csv(records: &[ReplicationRecord], path: &Path) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RECORD_HEADER)?;
    for r in records {
        let mut row = vec![
            r.n.to_string(),
            r.scenario.code(),
            r.replication.to_string(),
            r.seed.to_string(),
            r.status.label(),
        ];
        match &r.bundle {
            Some(b) => row.extend(
                [
                    b.theta_or,
                    b.theta_ipw,
                    b.correction,
                    b.theta_dr,
                    b.theta_acc,
                    b.lambda_hat,
                ]
                .map(|v| v.to_string()),
            ),
            None => row.extend(std::iter::repeat_n(String::new(), 6)),
        }
        match &r.intervals {
            Some(iv) => {
                for e in Estimator::ALL {
                    let i = e.interval(iv);
                    row.push(i.lo.to_string());
                    row.push(i.hi.to_string());
                }
            }
            None => row.extend(std::iter::repeat_n(String::new(), 8)),
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
