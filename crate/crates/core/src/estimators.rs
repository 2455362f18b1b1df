//! Outcome-regression, inverse-probability-weighting and doubly robust
//! estimators of a mean under missingness, plus the clipped variant.
//!
//! The doubly robust estimate decomposes as `OR + IPW − C`, where `C` is the
//! mean of `R μ̂(X) / π̂(X)`. The clipped estimator replaces `C` with its
//! projection onto the interval spanned by `OR` and `IPW`, which keeps the
//! final estimate between the two simpler ones.

use thiserror::Error;

use crate::data::{AteDataset, MaskedOutcome};
use crate::nuisance::{FitError, OutcomeModel};

#[derive(Debug, Error, PartialEq)]
pub enum EstimateError {
    #[error("read of masked outcome at index {0}")]
    MaskedAccess(usize),
    #[error("propensity {value} at index {index} is not in (0, 1]")]
    NonPositivePropensity { index: usize, value: f64 },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("empty sample")]
    Empty,
    #[error("treatment arm {0} has no units")]
    EmptyArm(u8),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Limits `x` to the closed interval spanned by `a` and `b` (in either order).
pub fn clip(x: f64, a: f64, b: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    lo.max(hi.min(x))
}

/// All point estimates for one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateBundle {
    pub theta_or: f64,
    pub theta_ipw: f64,
    pub correction: f64,
    pub theta_dr: f64,
    pub theta_acc: f64,
    pub lambda_hat: f64,
    pub n: usize,
}

impl EstimateBundle {
    /// Assembles a bundle from its three components.
    ///
    /// `λ̂ = (OR − clip(C)) / (OR − IPW)`, defined as 1 when `OR == IPW`.
    pub fn from_components(theta_or: f64, theta_ipw: f64, correction: f64, n: usize) -> Self {
        let (lo, hi) = (theta_or.min(theta_ipw), theta_or.max(theta_ipw));
        let clipped = clip(correction, theta_or, theta_ipw);
        let theta_dr = theta_or + theta_ipw - correction;
        // the clamp only absorbs last-bit rounding of the sum
        let theta_acc = (theta_or + theta_ipw - clipped).clamp(lo, hi);
        let lambda_hat = if theta_or == theta_ipw {
            1.0
        } else {
            // `+ 0.0` maps −0 to 0
            ((theta_or - clipped) / (theta_or - theta_ipw)).clamp(0.0, 1.0) + 0.0
        };
        Self {
            theta_or,
            theta_ipw,
            correction,
            theta_dr,
            theta_acc,
            lambda_hat,
            n,
        }
    }

    /// Correction term after clipping.
    pub fn clipped_correction(&self) -> f64 {
        clip(self.correction, self.theta_or, self.theta_ipw)
    }

    pub fn correction_inside(&self) -> bool {
        self.correction >= self.theta_or.min(self.theta_ipw) && self.correction <= self.theta_or.max(self.theta_ipw)
    }
}

pub(crate) fn check_inputs(
    mu_hat: &[f64],
    pi_hat: &[f64],
    r: &[u8],
    y: &MaskedOutcome,
) -> Result<usize, EstimateError> {
    let n = mu_hat.len();
    if n == 0 {
        return Err(EstimateError::Empty);
    }
    for got in [pi_hat.len(), r.len(), y.len()] {
        if got != n {
            return Err(EstimateError::LengthMismatch { expected: n, got });
        }
    }
    for (index, &value) in pi_hat.iter().enumerate() {
        if !(value > 0.0 && value <= 1.0) {
            return Err(EstimateError::NonPositivePropensity { index, value });
        }
    }
    Ok(n)
}

/// Per-unit contributions `(μ̂ᵢ, RᵢYᵢ/π̂ᵢ, Rᵢμ̂ᵢ/π̂ᵢ)`; masked outcomes are
/// only read where `Rᵢ = 1`.
pub(crate) fn contributions(
    mu_hat: &[f64],
    pi_hat: &[f64],
    r: &[u8],
    y: &MaskedOutcome,
) -> Result<Vec<[f64; 3]>, EstimateError> {
    check_inputs(mu_hat, pi_hat, r, y)?;
    (0..mu_hat.len())
        .map(|i| {
            if r[i] == 1 {
                let yi = y.get(i).ok_or(EstimateError::MaskedAccess(i))?;
                Ok([mu_hat[i], yi / pi_hat[i], mu_hat[i] / pi_hat[i]])
            } else {
                Ok([mu_hat[i], 0.0, 0.0])
            }
        })
        .collect()
}

/// OR, IPW, correction, DR, clipped DR and λ̂ from fitted nuisance values.
pub fn compute_bundle(
    mu_hat: &[f64],
    pi_hat: &[f64],
    r: &[u8],
    y: &MaskedOutcome,
) -> Result<EstimateBundle, EstimateError> {
    let terms = contributions(mu_hat, pi_hat, r, y)?;
    let n = terms.len();
    let mut sums = [0.0; 3];
    for t in &terms {
        for k in 0..3 {
            sums[k] += t[k];
        }
    }
    let nf = n as f64;
    Ok(EstimateBundle::from_components(
        sums[0] / nf,
        sums[1] / nf,
        sums[2] / nf,
        n,
    ))
}

/// How the clipping is applied to a two-arm contrast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AteClipMode {
    /// Clip each arm's correction, then difference the arms.
    #[default]
    PerArm,
    /// Difference the unclipped components, then clip the contrast's
    /// correction between the contrast's OR and IPW.
    Contrast,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AteEstimate {
    pub arm1: EstimateBundle,
    pub arm0: EstimateBundle,
    pub ate_or: f64,
    pub ate_ipw: f64,
    pub ate_dr: f64,
    pub ate_acc: f64,
    pub mode: AteClipMode,
}

impl AteEstimate {
    pub fn from_arms(arm1: EstimateBundle, arm0: EstimateBundle, mode: AteClipMode) -> Self {
        let ate_or = arm1.theta_or - arm0.theta_or;
        let ate_ipw = arm1.theta_ipw - arm0.theta_ipw;
        let ate_acc = match mode {
            AteClipMode::PerArm => arm1.theta_acc - arm0.theta_acc,
            AteClipMode::Contrast => {
                EstimateBundle::from_components(ate_or, ate_ipw, arm1.correction - arm0.correction, arm1.n).theta_acc
            }
        };
        Self {
            arm1,
            arm0,
            ate_or,
            ate_ipw,
            ate_dr: arm1.theta_dr - arm0.theta_dr,
            ate_acc,
            mode,
        }
    }
}

/// Nuisance values for one arm treated as a missing-outcome problem.
#[derive(Debug, Clone)]
pub struct ArmInputs {
    pub mu_hat: Vec<f64>,
    pub pi_hat: Vec<f64>,
    pub r: Vec<u8>,
    pub y: MaskedOutcome,
}

/// Splits a two-arm dataset into the two missing-outcome problems: the
/// treated arm with propensity `π̂`, the control arm with `1 − π̂`.
pub fn arm_inputs(
    data: &AteDataset,
    mu1: &OutcomeModel,
    mu0: &OutcomeModel,
    pi_hat: &[f64],
) -> Result<[ArmInputs; 2], EstimateError> {
    let n = data.n();
    if pi_hat.len() != n {
        return Err(EstimateError::LengthMismatch {
            expected: n,
            got: pi_hat.len(),
        });
    }
    for arm in [1u8, 0] {
        if !data.treatment().contains(&arm) {
            return Err(EstimateError::EmptyArm(arm));
        }
    }
    let build = |arm: u8, model: &OutcomeModel| -> Result<ArmInputs, EstimateError> {
        let mu_hat = model.predict_arm(data.covariates(), arm)?;
        let pi = if arm == 1 {
            pi_hat.to_vec()
        } else {
            pi_hat.iter().map(|p| 1.0 - p).collect()
        };
        let (r, y) = data.arm_view(arm);
        Ok(ArmInputs {
            mu_hat,
            pi_hat: pi,
            r,
            y,
        })
    };
    Ok([build(1, mu1)?, build(0, mu0)?])
}

/// Average treatment effect as the difference of two clipped arm means.
pub fn estimate_ate(
    data: &AteDataset,
    mu1: &OutcomeModel,
    mu0: &OutcomeModel,
    pi_hat: &[f64],
    mode: AteClipMode,
) -> Result<AteEstimate, EstimateError> {
    let [a1, a0] = arm_inputs(data, mu1, mu0, pi_hat)?;
    let b1 = compute_bundle(&a1.mu_hat, &a1.pi_hat, &a1.r, &a1.y)?;
    let b0 = compute_bundle(&a0.mu_hat, &a0.pi_hat, &a0.r, &a0.y)?;
    Ok(AteEstimate::from_arms(b1, b0, mode))
}
