//! Multi-outcome two-arm analysis: difference-in-means outcome model,
//! logistic propensity on external covariates with Hájek rescaling, and
//! OR/IPW/DR/DR+ACC contrasts with their intervals for every outcome column.
//! No multiple-testing correction is applied.

use std::path::Path;

use crate::data::{load_ate_csv, AteDataset, AteSchema};
use crate::estimators::{arm_inputs, compute_bundle, AteClipMode, AteEstimate, EstimateError};
use crate::inference::{
    acc_interval, bootstrap_interval, covariance, influence_matrix, sample_w, wald_interval, InferenceError,
    InfluenceMatrix, Interval, DEFAULT_BOOTSTRAP,
};
use crate::nuisance::{fit_diff_in_means, fit_logistic, hajek_rescale, LogisticOptions, PropensityModel};
use crate::rng::{derive_seed, stream};

use super::HarnessError;

/// How the clipped estimator's contrast interval is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AteCiMode {
    /// Sum independent per-arm `W` draws (treated minus control) and form
    /// one interval around the contrast.
    #[default]
    SumArms,
    /// Report one bootstrap interval per arm; the contrast is significant
    /// when the two arm intervals are disjoint.
    PerArmReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AteConfig {
    pub alpha: f64,
    pub bootstrap_b: usize,
    pub seed: u64,
    pub ci_mode: AteCiMode,
    pub clip_mode: AteClipMode,
    /// IRLS settings; `eps` is the propensity floor used before and after
    /// rescaling.
    pub logistic: LogisticOptions,
}

impl Default for AteConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            bootstrap_b: DEFAULT_BOOTSTRAP,
            seed: 20_250_101,
            ci_mode: AteCiMode::default(),
            clip_mode: AteClipMode::default(),
            logistic: LogisticOptions {
                eps: 0.01,
                ..LogisticOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AteOutcomeReport {
    pub estimate: AteEstimate,
    pub or_ci: Interval,
    pub ipw_ci: Interval,
    pub dr_ci: Interval,
    /// Contrast interval for the clipped estimator.
    pub acc_ci: Interval,
    /// Per-arm bootstrap intervals (treated, control).
    pub acc_arm_ci: [Interval; 2],
    /// Significance of OR, IPW, DR, DR+ACC in that order.
    pub significant: [bool; 4],
    /// Whether the two ACC significance rules disagree for this outcome.
    pub modes_diverge: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeResult {
    pub name: String,
    pub result: Result<AteOutcomeReport, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AteReport {
    pub propensity: PropensityModel,
    pub outcomes: Vec<OutcomeResult>,
    pub alpha: f64,
}

impl AteReport {
    /// Number of outcomes flagged significant by each estimator.
    pub fn significant_counts(&self) -> [usize; 4] {
        let mut c = [0; 4];
        for o in &self.outcomes {
            if let Ok(r) = &o.result {
                for (ck, &sig) in c.iter_mut().zip(&r.significant) {
                    *ck += usize::from(sig);
                }
            }
        }
        c
    }

    pub fn divergent_count(&self) -> usize {
        self.outcomes
            .iter()
            .filter(|o| matches!(&o.result, Ok(r) if r.modes_diverge))
            .count()
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "outcome", "status", "ate_or", "ate_ipw", "ate_dr", "ate_acc", "or_lo", "or_hi", "ipw_lo", "ipw_hi",
            "dr_lo", "dr_hi", "acc_lo", "acc_hi", "acc1_lo", "acc1_hi", "acc0_lo", "acc0_hi", "sig_or", "sig_ipw",
            "sig_dr", "sig_acc",
        ])?;
        for o in &self.outcomes {
            let mut row = vec![o.name.clone()];
            match &o.result {
                Ok(r) => {
                    row.push("ok".into());
                    let e = &r.estimate;
                    row.extend([e.ate_or, e.ate_ipw, e.ate_dr, e.ate_acc].map(|v| v.to_string()));
                    for iv in [r.or_ci, r.ipw_ci, r.dr_ci, r.acc_ci, r.acc_arm_ci[0], r.acc_arm_ci[1]] {
                        row.push(iv.lo.to_string());
                        row.push(iv.hi.to_string());
                    }
                    row.extend(r.significant.map(|s| u8::from(s).to_string()));
                }
                Err(msg) => {
                    row.push(format!("failed: {msg}"));
                    row.extend(std::iter::repeat_n(String::new(), 20));
                }
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary_markdown(&self) -> String {
        let [or, ipw, dr, acc] = self.significant_counts();
        let failed = self.outcomes.iter().filter(|o| o.result.is_err()).count();
        format!(
            "Outcomes analysed: {}\nFailed: {failed}\nSignificance level: {} (no multiple-testing correction)\n\n\
             | Estimator | Significant |\n|---|---:|\n| OR | {or} |\n| IPW | {ipw} |\n| DR | {dr} |\n| DR+ACC | {acc} |\n\n\
             Outcomes where sum-arms and per-arm ACC rules disagree: {}\n",
            self.outcomes.len(),
            self.alpha,
            self.divergent_count()
        )
    }
}

/// Zero lies outside the interval by more than rounding on the outcome's
/// scale.
fn excludes_zero(iv: &Interval, tol: f64) -> bool {
    iv.lo > tol || iv.hi < -tol
}

fn analyze_outcome(
    index: usize,
    data: &AteDataset,
    pi_hat: &[f64],
    cfg: &AteConfig,
) -> Result<AteOutcomeReport, String> {
    let err = |e: &dyn std::fmt::Display| e.to_string();
    let mu = fit_diff_in_means(data.outcome(), data.treatment()).map_err(|e| err(&e))?;
    let arms = arm_inputs(data, &mu, &mu, pi_hat).map_err(|e: EstimateError| err(&e))?;
    let mut bundles = Vec::with_capacity(2);
    let mut infl: Vec<InfluenceMatrix> = Vec::with_capacity(2);
    for a in &arms {
        let b = compute_bundle(&a.mu_hat, &a.pi_hat, &a.r, &a.y).map_err(|e| err(&e))?;
        infl.push(influence_matrix(&a.mu_hat, &a.pi_hat, &a.r, &a.y, &b).map_err(|e| err(&e))?);
        bundles.push(b);
    }
    let estimate = AteEstimate::from_arms(bundles[0], bundles[1], cfg.clip_mode);
    let contrast = infl[0].difference(&infl[1]);
    let n = data.n();
    let alpha = cfg.alpha;
    let inf_err = |e: InferenceError| e.to_string();

    let or_ci = wald_interval(estimate.ate_or, &contrast.column(0), n, alpha).map_err(inf_err)?;
    let ipw_ci = wald_interval(estimate.ate_ipw, &contrast.column(1), n, alpha).map_err(inf_err)?;
    let dr_ci = wald_interval(estimate.ate_dr, &contrast.dr_column(), n, alpha).map_err(inf_err)?;

    let arm_seed = |arm: u64| derive_seed(cfg.seed, &[index as u64, arm]);
    let acc_ci = match cfg.clip_mode {
        crate::estimators::AteClipMode::PerArm => {
            let w1 = sample_w(&covariance(&infl[0]), cfg.bootstrap_b, &mut stream(arm_seed(1))).map_err(inf_err)?;
            let w0 = sample_w(&covariance(&infl[1]), cfg.bootstrap_b, &mut stream(arm_seed(0))).map_err(inf_err)?;
            let w: Vec<f64> = w1.iter().zip(&w0).map(|(a, b)| a - b).collect();
            bootstrap_interval(estimate.ate_acc, n, w, alpha).map_err(inf_err)?
        }
        crate::estimators::AteClipMode::Contrast => {
            let w = sample_w(&covariance(&contrast), cfg.bootstrap_b, &mut stream(arm_seed(2))).map_err(inf_err)?;
            bootstrap_interval(estimate.ate_acc, n, w, alpha).map_err(inf_err)?
        }
    };
    let acc_arm_ci = [
        acc_interval(
            &bundles[0],
            &covariance(&infl[0]),
            cfg.bootstrap_b,
            alpha,
            &mut stream(arm_seed(1)),
        )
        .map_err(inf_err)?,
        acc_interval(
            &bundles[1],
            &covariance(&infl[1]),
            cfg.bootstrap_b,
            alpha,
            &mut stream(arm_seed(0)),
        )
        .map_err(inf_err)?,
    ];
    let tol = 64.0 * f64::EPSILON * data.outcome().iter().fold(1.0_f64, |m, y| m.max(y.abs()));
    let excludes_zero = |iv: &Interval| excludes_zero(iv, tol);
    let sum_rule = excludes_zero(&acc_ci);
    let arm_rule = acc_arm_ci[0].hi + tol < acc_arm_ci[1].lo || acc_arm_ci[1].hi + tol < acc_arm_ci[0].lo;
    let acc_sig = match cfg.ci_mode {
        AteCiMode::SumArms => sum_rule,
        AteCiMode::PerArmReport => arm_rule,
    };
    Ok(AteOutcomeReport {
        estimate,
        or_ci,
        ipw_ci,
        dr_ci,
        acc_ci,
        acc_arm_ci,
        significant: [
            excludes_zero(&or_ci),
            excludes_zero(&ipw_ci),
            excludes_zero(&dr_ci),
            acc_sig,
        ],
        modes_diverge: sum_rule != arm_rule,
    })
}

/// Fits the shared propensity model and analyses every outcome. Per-outcome
/// failures are recorded and do not stop the analysis.
pub fn analyze_datasets(datasets: &[AteDataset], cfg: &AteConfig) -> Result<AteReport, HarnessError> {
    let first = datasets.first().ok_or(HarnessError::NoData)?;
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(HarnessError::Config(format!("alpha = {}", cfg.alpha)));
    }
    let propensity = fit_logistic(first.covariates(), first.treatment(), &cfg.logistic)?;
    let pi_tilde = propensity.predict(first.covariates())?;
    let pi_hat = hajek_rescale(&pi_tilde, first.treatment(), cfg.logistic.eps)?;
    let outcomes = datasets
        .iter()
        .enumerate()
        .map(|(i, d)| OutcomeResult {
            name: d.name.clone(),
            result: analyze_outcome(i, d, &pi_hat, cfg),
        })
        .collect();
    Ok(AteReport {
        propensity,
        outcomes,
        alpha: cfg.alpha,
    })
}

/// Loads a two-arm CSV and runs [`analyze_datasets`]. An empty
/// `outcome_columns` selects every non-covariate, non-treatment column.
pub fn analyze_ate(
    path: &Path,
    schema: &AteSchema,
    outcome_columns: &[String],
    cfg: &AteConfig,
) -> Result<AteReport, HarnessError> {
    let datasets = load_ate_csv(path, schema, outcome_columns)?;
    analyze_datasets(&datasets, cfg)
}
