//! Nuisance models: least-squares outcome regression, logistic propensity
//! score, the arm-wise difference-in-means outcome model and Hájek-style
//! propensity rescaling.
//!
//! Both fitters standardize their design internally (center and scale every
//! column, then prepend an intercept) and report coefficients on the
//! original scale.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("too few rows: {rows} rows for {params} parameters")]
    TooFewRows { rows: usize, params: usize },
    #[error("design is rank deficient")]
    RankDeficient,
    #[error("response has a single class")]
    NoVariation,
    #[error("coefficient norm exceeded {0} (separation)")]
    Separation(f64),
    #[error("not converged after {0} iterations")]
    NotConverged(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("treatment arm {0} has no units")]
    EmptyArm(u8),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Fitted outcome regression.
#[derive(Debug, Clone, PartialEq)]
pub enum OutcomeModel {
    Linear {
        intercept: f64,
        coefficients: Vec<f64>,
    },
    /// Arm means; the prediction for a row is the mean of its arm.
    DiffInMeans {
        mean1: f64,
        mean0: f64,
    },
}

impl OutcomeModel {
    /// Predictions for every row. `DiffInMeans` needs an arm label per row.
    pub fn predict(&self, covariates: &DMatrix<f64>, arms: Option<&[u8]>) -> Result<Vec<f64>, FitError> {
        match self {
            OutcomeModel::Linear {
                intercept,
                coefficients,
            } => {
                check_cols(covariates, coefficients.len())?;
                Ok(linear_predictor(covariates, *intercept, coefficients))
            }
            OutcomeModel::DiffInMeans { mean1, mean0 } => {
                let arms = arms
                    .ok_or_else(|| FitError::InvalidInput("difference-in-means prediction needs arm labels".into()))?;
                if arms.len() != covariates.nrows() {
                    return Err(FitError::DimensionMismatch {
                        expected: covariates.nrows(),
                        got: arms.len(),
                    });
                }
                Ok(arms.iter().map(|&a| if a == 1 { *mean1 } else { *mean0 }).collect())
            }
        }
    }

    /// Predictions as if every row belonged to `arm`.
    pub fn predict_arm(&self, covariates: &DMatrix<f64>, arm: u8) -> Result<Vec<f64>, FitError> {
        let arms = vec![arm; covariates.nrows()];
        self.predict(covariates, Some(&arms))
    }
}

/// Convenience wrapper matching the free-function style of the other fitters.
pub fn predict_mu(model: &OutcomeModel, covariates: &DMatrix<f64>, arms: Option<&[u8]>) -> Result<Vec<f64>, FitError> {
    model.predict(covariates, arms)
}

/// Fitted logistic propensity model with a probability floor.
#[derive(Debug, Clone, PartialEq)]
pub struct PropensityModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub floor: f64,
    pub iterations: usize,
}

impl PropensityModel {
    /// Inverse-logit of the linear predictor clamped to `[floor, 1 - floor]`.
    pub fn predict(&self, covariates: &DMatrix<f64>) -> Result<Vec<f64>, FitError> {
        check_cols(covariates, self.coefficients.len())?;
        Ok(linear_predictor(covariates, self.intercept, &self.coefficients)
            .into_iter()
            .map(|eta| sigmoid(eta).clamp(self.floor, 1.0 - self.floor))
            .collect())
    }
}

pub fn predict_pi(model: &PropensityModel, covariates: &DMatrix<f64>) -> Result<Vec<f64>, FitError> {
    model.predict(covariates)
}

/// IRLS settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Probability floor stored in the fitted model.
    pub eps: f64,
    /// Cap on the standardized coefficient norm; exceeding it is reported
    /// as separation.
    pub coef_cap: f64,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            eps: 1e-6,
            coef_cap: 50.0,
        }
    }
}

fn check_cols(covariates: &DMatrix<f64>, p: usize) -> Result<(), FitError> {
    if covariates.ncols() != p {
        return Err(FitError::DimensionMismatch {
            expected: p,
            got: covariates.ncols(),
        });
    }
    Ok(())
}

fn linear_predictor(x: &DMatrix<f64>, intercept: f64, coefs: &[f64]) -> Vec<f64> {
    (0..x.nrows())
        .map(|i| intercept + coefs.iter().enumerate().map(|(j, b)| b * x[(i, j)]).sum::<f64>())
        .collect()
}

pub(crate) fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// Column centering/scaling of a design, with an intercept column prepended.
struct Standardized {
    z: DMatrix<f64>,
    means: Vec<f64>,
    scales: Vec<f64>,
}

impl Standardized {
    fn new(design: &DMatrix<f64>) -> Result<Self, FitError> {
        let (m, p) = design.shape();
        let mut z = DMatrix::from_element(m, p + 1, 1.0);
        let mut means = Vec::with_capacity(p);
        let mut scales = Vec::with_capacity(p);
        for j in 0..p {
            let col = design.column(j);
            let mean = col.mean();
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m as f64).sqrt();
            // constant column is collinear with the intercept
            if !(sd > 1e-12 * mean.abs().max(1.0)) {
                return Err(FitError::RankDeficient);
            }
            for i in 0..m {
                z[(i, j + 1)] = (col[i] - mean) / sd;
            }
            means.push(mean);
            scales.push(sd);
        }
        Ok(Self { z, means, scales })
    }

    /// Maps standardized coefficients (intercept first) to the original scale.
    fn unstandardize(&self, beta: &DVector<f64>) -> (f64, Vec<f64>) {
        let coefs: Vec<f64> = self.scales.iter().enumerate().map(|(j, s)| beta[j + 1] / s).collect();
        let shift: f64 = coefs.iter().zip(&self.means).map(|(c, m)| c * m).sum();
        (beta[0] - shift, coefs)
    }
}

/// Ordinary least squares with intercept via Householder QR.
pub fn fit_ols(design: &DMatrix<f64>, y: &[f64]) -> Result<OutcomeModel, FitError> {
    let (m, p) = design.shape();
    if y.len() != m {
        return Err(FitError::DimensionMismatch {
            expected: m,
            got: y.len(),
        });
    }
    if m <= p + 1 {
        return Err(FitError::TooFewRows { rows: m, params: p + 1 });
    }
    let st = Standardized::new(design)?;
    let qr = st.z.clone().qr();
    let r = qr.r();
    let diag_max = r.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if r.diagonal().iter().any(|v| v.abs() <= 1e-10 * diag_max) {
        return Err(FitError::RankDeficient);
    }
    let qty = qr.q().transpose() * DVector::from_column_slice(y);
    let beta = r.solve_upper_triangular(&qty).ok_or(FitError::RankDeficient)?;
    let (intercept, coefficients) = st.unstandardize(&beta);
    Ok(OutcomeModel::Linear {
        intercept,
        coefficients,
    })
}

/// OLS restricted to the rows where `keep[i] == 1`.
pub fn fit_ols_subset(design: &DMatrix<f64>, y: &[f64], keep: &[u8]) -> Result<OutcomeModel, FitError> {
    let rows: Vec<usize> = (0..design.nrows()).filter(|&i| keep[i] == 1).collect();
    let sub = design.select_rows(rows.iter());
    let ys: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
    fit_ols(&sub, &ys)
}

fn log_likelihood(z: &DMatrix<f64>, r: &[u8], beta: &DVector<f64>) -> f64 {
    let eta = z * beta;
    eta.iter()
        .zip(r)
        .map(|(&e, &ri)| {
            // log(1 + exp(e)) computed stably
            let softplus = if e > 0.0 {
                e + (-e).exp().ln_1p()
            } else {
                e.exp().ln_1p()
            };
            f64::from(ri) * e - softplus
        })
        .sum()
}

/// Logistic regression with intercept by Newton/IRLS with step halving.
///
/// Converges when the largest score component on the standardized design
/// falls below `tol`, or when the relative log-likelihood change does.
pub fn fit_logistic(design: &DMatrix<f64>, r: &[u8], opts: &LogisticOptions) -> Result<PropensityModel, FitError> {
    let (n, p) = design.shape();
    if r.len() != n {
        return Err(FitError::DimensionMismatch {
            expected: n,
            got: r.len(),
        });
    }
    if r.iter().any(|&v| v > 1) {
        return Err(FitError::InvalidInput("response not binary".into()));
    }
    let ones = r.iter().filter(|&&v| v == 1).count();
    if ones == 0 || ones == n {
        return Err(FitError::NoVariation);
    }
    if n <= p + 1 {
        return Err(FitError::TooFewRows { rows: n, params: p + 1 });
    }
    if !(opts.eps > 0.0 && opts.eps < 0.5) {
        return Err(FitError::InvalidInput(format!("eps = {} outside (0, 0.5)", opts.eps)));
    }
    let st = Standardized::new(design)?;
    let z = &st.z;
    let k = p + 1;
    let rv = DVector::from_iterator(n, r.iter().map(|&v| f64::from(v)));

    let mut beta = DVector::zeros(k);
    let mut ll = log_likelihood(z, r, &beta);
    let mut converged = false;
    let mut iterations = 0;
    for iter in 0..opts.max_iter {
        iterations = iter + 1;
        let pi = (z * &beta).map(sigmoid);
        let score = z.tr_mul(&(&rv - &pi));
        if score.amax() < opts.tol {
            converged = true;
            break;
        }
        let w = pi.map(|q| q * (1.0 - q));
        let mut h = DMatrix::zeros(k, k);
        for i in 0..n {
            let row = z.row(i);
            for a in 0..k {
                let wa = w[i] * row[a];
                for b in a..k {
                    h[(a, b)] += wa * row[b];
                }
            }
        }
        h.fill_lower_triangle_with_upper_triangle();
        let step = h
            .cholesky()
            .map(|c| c.solve(&score))
            .ok_or(FitError::Separation(opts.coef_cap))?;

        let mut scale = 1.0;
        let (next, next_ll) = loop {
            let cand = &beta + &step * scale;
            let cand_ll = log_likelihood(z, r, &cand);
            if cand_ll >= ll || scale < 1e-10 {
                break (cand, cand_ll);
            }
            scale *= 0.5;
        };
        if next.norm() > opts.coef_cap {
            return Err(FitError::Separation(opts.coef_cap));
        }
        let rel = (next_ll - ll).abs() / ll.abs().max(1e-300);
        beta = next;
        ll = next_ll;
        if rel < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(FitError::NotConverged(opts.max_iter));
    }
    let (intercept, coefficients) = st.unstandardize(&beta);
    Ok(PropensityModel {
        intercept,
        coefficients,
        floor: opts.eps,
        iterations,
    })
}

/// Arm-wise outcome means.
pub fn fit_diff_in_means(y: &[f64], a: &[u8]) -> Result<OutcomeModel, FitError> {
    if y.len() != a.len() {
        return Err(FitError::DimensionMismatch {
            expected: a.len(),
            got: y.len(),
        });
    }
    let mean_of = |arm: u8| {
        let (s, c) = y
            .iter()
            .zip(a)
            .filter(|(_, &ai)| ai == arm)
            .fold((0.0, 0usize), |(s, c), (v, _)| (s + v, c + 1));
        if c == 0 {
            Err(FitError::EmptyArm(arm))
        } else {
            Ok(s / c as f64)
        }
    };
    Ok(OutcomeModel::DiffInMeans {
        mean1: mean_of(1)?,
        mean0: mean_of(0)?,
    })
}

/// Rescales treated propensities `π̃` by `n⁻¹ Σ A/π̃` and control
/// complements `1 − π̃` by `n⁻¹ Σ (1−A)/(1−π̃)`, so that the inverse weights
/// of each arm average to one, then clamps to `[eps, 1 − eps]`.
pub fn hajek_rescale(pi_tilde: &[f64], a: &[u8], eps: f64) -> Result<Vec<f64>, FitError> {
    let n = pi_tilde.len();
    if a.len() != n {
        return Err(FitError::DimensionMismatch {
            expected: n,
            got: a.len(),
        });
    }
    if pi_tilde.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
        return Err(FitError::InvalidInput("propensity outside (0,1)".into()));
    }
    for arm in [1u8, 0] {
        if !a.contains(&arm) {
            return Err(FitError::EmptyArm(arm));
        }
    }
    let nf = n as f64;
    let treated: f64 = pi_tilde
        .iter()
        .zip(a)
        .filter(|(_, &ai)| ai == 1)
        .map(|(p, _)| 1.0 / p)
        .sum::<f64>()
        / nf;
    let control: f64 = pi_tilde
        .iter()
        .zip(a)
        .filter(|(_, &ai)| ai == 0)
        .map(|(p, _)| 1.0 / (1.0 - p))
        .sum::<f64>()
        / nf;
    Ok(pi_tilde
        .iter()
        .zip(a)
        .map(|(&p, &ai)| {
            let q = if ai == 1 {
                p * treated
            } else {
                1.0 - (1.0 - p) * control
            };
            q.clamp(eps, 1.0 - eps)
        })
        .collect())
}
