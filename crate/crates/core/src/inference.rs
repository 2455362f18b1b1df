//! Influence-function covariance, Wald intervals and the parametric
//! bootstrap interval for the clipped estimator.
//!
//! The clipped estimator's limit law is `W = Z_OR + Z_IPW − clip(Z_C)`,
//! with `(Z_OR, Z_IPW, Z_C)` jointly normal and the clip bounds taken per
//! draw as the min/max of `(Z_OR, Z_IPW)`. Its quantiles are simulated from
//! the estimated covariance of the three influence columns.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::data::MaskedOutcome;
use crate::estimators::{clip, contributions, EstimateBundle, EstimateError};
use crate::rng::StreamRng;

/// Smallest accepted bootstrap size.
pub const MIN_BOOTSTRAP: usize = 1000;
/// Default bootstrap size.
pub const DEFAULT_BOOTSTRAP: usize = 10_000;

#[derive(Debug, Error, PartialEq)]
pub enum InferenceError {
    #[error("covariance factorization failed")]
    FactorizationFailure,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
}

/// Centered per-observation contributions, columns `(OR, IPW, correction)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceMatrix {
    pub values: Vec<[f64; 3]>,
}

impl InfluenceMatrix {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[k]).collect()
    }

    /// Influence of the unclipped doubly robust estimator, `φ_OR + φ_IPW − φ_C`.
    pub fn dr_column(&self) -> Vec<f64> {
        self.values.iter().map(|r| r[0] + r[1] - r[2]).collect()
    }

    /// Row-wise difference `self − other`, used for two-arm contrasts.
    pub fn difference(&self, other: &InfluenceMatrix) -> InfluenceMatrix {
        InfluenceMatrix {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| [a[0] - b[0], a[1] - b[1], a[2] - b[2]])
                .collect(),
        }
    }
}

pub fn influence_matrix(
    mu_hat: &[f64],
    pi_hat: &[f64],
    r: &[u8],
    y: &MaskedOutcome,
    bundle: &EstimateBundle,
) -> Result<InfluenceMatrix, InferenceError> {
    let centers = [bundle.theta_or, bundle.theta_ipw, bundle.correction];
    let values = contributions(mu_hat, pi_hat, r, y)?
        .into_iter()
        .map(|t| [t[0] - centers[0], t[1] - centers[1], t[2] - centers[2]])
        .collect();
    Ok(InfluenceMatrix { values })
}

/// Symmetric 3×3 covariance of the influence columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovMatrix3 {
    pub sigma: [[f64; 3]; 3],
}

impl CovMatrix3 {
    pub fn diag(d: [f64; 3]) -> Self {
        let mut sigma = [[0.0; 3]; 3];
        for k in 0..3 {
            sigma[k][k] = d[k];
        }
        Self { sigma }
    }

    pub fn trace(&self) -> f64 {
        self.sigma[0][0] + self.sigma[1][1] + self.sigma[2][2]
    }

    pub fn max_diag(&self) -> f64 {
        self.sigma[0][0].max(self.sigma[1][1]).max(self.sigma[2][2])
    }

    /// Lower Cholesky factor. Semidefinite directions (zero pivots) get a
    /// zero column; a negative pivot triggers one retry with `1e−12·trace`
    /// added to the diagonal.
    pub fn factor(&self) -> Result<[[f64; 3]; 3], InferenceError> {
        let tr = self.trace();
        if !tr.is_finite() || self.sigma.iter().flatten().any(|v| !v.is_finite()) {
            return Err(InferenceError::FactorizationFailure);
        }
        cholesky3(&self.sigma, tr)
            .or_else(|| {
                let mut s = self.sigma;
                for (k, row) in s.iter_mut().enumerate() {
                    row[k] += 1e-12 * tr;
                }
                cholesky3(&s, tr)
            })
            .ok_or(InferenceError::FactorizationFailure)
    }
}

fn cholesky3(a: &[[f64; 3]; 3], trace: f64) -> Option<[[f64; 3]; 3]> {
    let zero_tol = 1e-14 * trace;
    let mut l = [[0.0; 3]; 3];
    for j in 0..3 {
        let d = a[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
        if d > zero_tol {
            let ljj = d.sqrt();
            l[j][j] = ljj;
            for i in (j + 1)..3 {
                l[i][j] = (a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>()) / ljj;
            }
        } else if d < -zero_tol {
            return None;
        }
    }
    Some(l)
}

/// `Σ̂_jk = n⁻¹ Σᵢ φᵢⱼ φᵢₖ`.
pub fn covariance(infl: &InfluenceMatrix) -> CovMatrix3 {
    let n = infl.n() as f64;
    let mut sigma = [[0.0; 3]; 3];
    for row in &infl.values {
        for j in 0..3 {
            for k in j..3 {
                sigma[j][k] += row[j] * row[k];
            }
        }
    }
    for j in 0..3 {
        for k in j..3 {
            sigma[j][k] /= n;
            sigma[k][j] = sigma[j][k];
        }
    }
    CovMatrix3 { sigma }
}

/// The clipping transformation of one normal draw.
pub fn w_transform(z: [f64; 3]) -> f64 {
    z[0] + z[1] - clip(z[2], z[0], z[1])
}

/// `b_count` draws of `W` from `N(0, Σ̂)`.
pub fn sample_w(sigma: &CovMatrix3, b_count: usize, rng: &mut StreamRng) -> Result<Vec<f64>, InferenceError> {
    if b_count < MIN_BOOTSTRAP {
        return Err(InferenceError::InvalidInput(format!(
            "bootstrap size {b_count} below {MIN_BOOTSTRAP}"
        )));
    }
    let l = sigma.factor()?;
    Ok((0..b_count)
        .map(|_| {
            let e: [f64; 3] = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            let z = [
                l[0][0] * e[0],
                l[1][0] * e[0] + l[1][1] * e[1],
                l[2][0] * e[0] + l[2][1] * e[1] + l[2][2] * e[2],
            ];
            w_transform(z)
        })
        .collect())
}

/// Linear-interpolation quantile of sorted data (type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Sorts `values` in place and returns the `α/2` and `1 − α/2` quantiles.
pub fn tail_quantiles(values: &mut [f64], alpha: f64) -> (f64, f64) {
    values.sort_by(f64::total_cmp);
    (
        quantile_sorted(values, alpha / 2.0),
        quantile_sorted(values, 1.0 - alpha / 2.0),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalMethod {
    Wald,
    ParametricBootstrap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub method: IntervalMethod,
}

impl Interval {
    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

fn check_alpha(alpha: f64) -> Result<(), InferenceError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(InferenceError::InvalidInput(format!("alpha = {alpha}")))
    }
}

/// `[θ̂ − q_{1−α/2}/√n, θ̂ − q_{α/2}/√n]` from simulated `W` draws.
pub fn bootstrap_interval(theta: f64, n: usize, mut w: Vec<f64>, alpha: f64) -> Result<Interval, InferenceError> {
    check_alpha(alpha)?;
    if w.is_empty() {
        return Err(InferenceError::InvalidInput("no bootstrap draws".into()));
    }
    let (q_lo, q_hi) = tail_quantiles(&mut w, alpha);
    let rn = (n as f64).sqrt();
    Ok(Interval {
        lo: theta - q_hi / rn,
        hi: theta - q_lo / rn,
        level: 1.0 - alpha,
        method: IntervalMethod::ParametricBootstrap,
    })
}

/// Parametric-bootstrap interval for the clipped estimator.
pub fn acc_interval(
    bundle: &EstimateBundle,
    sigma: &CovMatrix3,
    b_count: usize,
    alpha: f64,
    rng: &mut StreamRng,
) -> Result<Interval, InferenceError> {
    check_alpha(alpha)?;
    let w = sample_w(sigma, b_count, rng)?;
    bootstrap_interval(bundle.theta_acc, bundle.n, w, alpha)
}

/// `θ̂ ± z_{1−α/2} · sqrt(var(φ)/n)` with `1/n` variance normalization.
pub fn wald_interval(theta: f64, influence: &[f64], n: usize, alpha: f64) -> Result<Interval, InferenceError> {
    check_alpha(alpha)?;
    if n < 2 || influence.len() != n {
        return Err(InferenceError::InvalidInput(format!(
            "influence length {} for n = {n}",
            influence.len()
        )));
    }
    let nf = n as f64;
    let mean = influence.iter().sum::<f64>() / nf;
    let var = influence.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf;
    let half = normal_quantile(1.0 - alpha / 2.0) * (var / nf).sqrt();
    Ok(Interval {
        lo: theta - half,
        hi: theta + half,
        level: 1.0 - alpha,
        method: IntervalMethod::Wald,
    })
}

/// Standard normal quantile by Acklam's rational approximation
/// (relative error below 1.2e−9).
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - P_LOW {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::compute_bundle;
    use crate::rng::stream;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn two_unit() -> (Vec<f64>, Vec<f64>, Vec<u8>, MaskedOutcome) {
        (
            vec![2.0, 4.0],
            vec![0.5, 0.5],
            vec![1, 0],
            MaskedOutcome::from_options([Some(2.0), None]),
        )
    }

    #[test]
    fn influence_two_unit() {
        let (mu, pi, r, y) = two_unit();
        let b = compute_bundle(&mu, &pi, &r, &y).unwrap();
        let m = influence_matrix(&mu, &pi, &r, &y, &b).unwrap();
        assert_eq!(m.values, vec![[-1.0, 2.0, 2.0], [1.0, -2.0, -2.0]]);
        let s = covariance(&m);
        assert_eq!(s.sigma, [[1.0, -2.0, -2.0], [-2.0, 4.0, 4.0], [-2.0, 4.0, 4.0]]);
        assert_eq!(y.masked_reads(), 0);
    }

    #[test]
    fn influence_constant_case() {
        let y = MaskedOutcome::from_response(vec![3.0; 4], &[1; 4]);
        let b = compute_bundle(&[3.0; 4], &[1.0; 4], &[1; 4], &y).unwrap();
        let m = influence_matrix(&[3.0; 4], &[1.0; 4], &[1; 4], &y, &b).unwrap();
        assert!(m.values.iter().flatten().all(|&v| v == 0.0));
        assert_eq!(covariance(&m).sigma, [[0.0; 3]; 3]);
    }

    #[test]
    fn zero_covariance_gives_zero_w() {
        let w = sample_w(&CovMatrix3::diag([0.0; 3]), 1000, &mut stream(1)).unwrap();
        assert!(w.iter().all(|&v| v == 0.0));
        let b = EstimateBundle::from_components(209.0, 211.0, 210.0, 50);
        let iv = acc_interval(&b, &CovMatrix3::diag([0.0; 3]), 1000, 0.05, &mut stream(2)).unwrap();
        assert_eq!((iv.lo, iv.hi), (210.0, 210.0));
    }

    #[test]
    fn diag_factor() {
        let l = CovMatrix3::diag([4.0, 1.0, 0.25]).factor().unwrap();
        assert_eq!(l, [[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.5]]);
        // rank-one semidefinite matrix from the two-unit example
        let s = CovMatrix3 {
            sigma: [[1.0, -2.0, -2.0], [-2.0, 4.0, 4.0], [-2.0, 4.0, 4.0]],
        };
        let l = s.factor().unwrap();
        assert_abs_diff_eq!(l[1][0], -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l[2][0], -2.0, epsilon = 1e-12);
        let bad = CovMatrix3 {
            sigma: [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]],
        };
        assert_eq!(bad.factor(), Err(InferenceError::FactorizationFailure));
    }

    #[test]
    fn sample_w_determinism() {
        let s = CovMatrix3::diag([4.0, 1.0, 0.25]);
        assert_eq!(
            sample_w(&s, 2000, &mut stream(9)).unwrap(),
            sample_w(&s, 2000, &mut stream(9)).unwrap()
        );
        assert!(sample_w(&s, 10, &mut stream(9)).is_err());
    }

    #[test]
    fn bootstrap_interval_formula() {
        // quantiles (−2, 2) from a symmetric 5-point W sample at alpha chosen
        // so the type-7 positions land on the end points
        let iv = bootstrap_interval(210.0, 100, vec![2.0, -2.0, 0.0, 1.0, -1.0], 1e-12).unwrap();
        assert_abs_diff_eq!(iv.lo, 209.8, epsilon = 1e-9);
        assert_abs_diff_eq!(iv.hi, 210.2, epsilon = 1e-9);
    }

    #[test]
    fn wald_cases() {
        let iv = wald_interval(5.0, &[0.0; 10], 10, 0.05).unwrap();
        assert_eq!((iv.lo, iv.hi), (5.0, 5.0));
        // ±1 column has variance exactly 1
        let col: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let iv = wald_interval(0.0, &col, 100, 0.05).unwrap();
        assert_abs_diff_eq!(iv.hi, 0.195_996, epsilon = 1e-6);
        assert_abs_diff_eq!(iv.lo, -0.195_996, epsilon = 1e-6);
        let col4: Vec<f64> = (0..400).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let iv4 = wald_interval(0.0, &col4, 400, 0.05).unwrap();
        assert_abs_diff_eq!(iv4.width() * 2.0, iv.width(), epsilon = 1e-15);
    }

    #[test]
    fn normal_quantile_accuracy() {
        let nd = Normal::standard();
        assert_abs_diff_eq!(normal_quantile(0.975), 1.959_963_984_540_054, epsilon = 1e-8);
        let mut p = 1e-6;
        while p < 1.0 - 1e-6 {
            assert_abs_diff_eq!(normal_quantile(p), nd.inverse_cdf(p), epsilon = 1e-8);
            p += 0.000_731;
        }
        for p in [1e-9, 1e-7, 0.02425, 0.5, 1.0 - 0.02425] {
            assert_abs_diff_eq!(normal_quantile(p), nd.inverse_cdf(p), epsilon = 1e-8);
        }
    }

    #[test]
    fn quantile_type7() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
        assert_eq!(quantile_sorted(&v, 0.5), 2.5);
        assert_abs_diff_eq!(quantile_sorted(&v, 0.25), 1.75, epsilon = 1e-15);
    }

    fn random_psd(seed: u64) -> CovMatrix3 {
        let mut rng = stream(seed);
        let a: [[f64; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-2.0..2.0)));
        let mut sigma = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                sigma[i][j] = (0..3).map(|k| a[i][k] * a[j][k]).sum();
            }
        }
        CovMatrix3 { sigma }
    }

    #[test]
    fn w_centered_interval_straddles_estimate() {
        for seed in 0..20 {
            let s = random_psd(seed);
            let mut w = sample_w(&s, 20_000, &mut stream(seed + 100)).unwrap();
            let (lo, hi) = tail_quantiles(&mut w, 0.05);
            assert!(lo < 0.0 && 0.0 < hi, "seed {seed}: {lo} {hi}");
            let b = EstimateBundle::from_components(1.0, 2.0, 1.5, 100);
            let iv = bootstrap_interval(b.theta_acc, b.n, w, 0.05).unwrap();
            assert!(iv.contains(b.theta_acc));
        }
    }

    #[test]
    fn acc_width_scales_with_root_n() {
        let s = random_psd(3);
        let a = acc_interval(
            &EstimateBundle::from_components(0.0, 1.0, 0.5, 100),
            &s,
            5000,
            0.05,
            &mut stream(1),
        )
        .unwrap();
        let b = acc_interval(
            &EstimateBundle::from_components(0.0, 1.0, 0.5, 400),
            &s,
            5000,
            0.05,
            &mut stream(1),
        )
        .unwrap();
        assert_abs_diff_eq!(a.width(), 2.0 * b.width(), epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn covariance_is_symmetric_psd(rows in prop::collection::vec(prop::array::uniform3(-100f64..100.0), 2..40)) {
            let m = InfluenceMatrix { values: rows };
            let s = covariance(&m);
            for j in 0..3 {
                for k in 0..3 {
                    prop_assert!((s.sigma[j][k] - s.sigma[k][j]).abs() <= 1e-12);
                }
            }
            prop_assert!(s.factor().is_ok());
            let v = nalgebra::Matrix3::from_fn(|i, j| s.sigma[i][j]);
            let tr = s.trace();
            for e in v.symmetric_eigenvalues().iter() {
                prop_assert!(*e >= -1e-10 * tr.max(1e-300));
            }
        }

        #[test]
        fn quantiles_monotone(alpha in 0.001f64..0.999, seed in 0u64..1000) {
            let mut w = sample_w(&random_psd(seed), 1000, &mut stream(seed)).unwrap();
            let (lo, hi) = tail_quantiles(&mut w, alpha);
            prop_assert!(lo <= hi);
        }

        #[test]
        fn influence_columns_center(
            data in prop::collection::vec((1f64..300.0, 0.05f64..1.0, any::<bool>(), 100f64..300.0), 2..60)
        ) {
            let mu: Vec<f64> = data.iter().map(|d| d.0).collect();
            let pi: Vec<f64> = data.iter().map(|d| d.1).collect();
            let r: Vec<u8> = data.iter().map(|d| u8::from(d.2)).collect();
            let y = MaskedOutcome::from_response(data.iter().map(|d| d.3).collect(), &r);
            let b = compute_bundle(&mu, &pi, &r, &y).unwrap();
            let m = influence_matrix(&mu, &pi, &r, &y, &b).unwrap();
            let n = m.n() as f64;
            for k in 0..3 {
                let c = m.column(k);
                let rms = (c.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
                let scale = [b.theta_or, b.theta_ipw, b.correction][k].abs().max(rms);
                prop_assert!(c.iter().sum::<f64>().abs() <= 1e-8 * n * scale.max(1e-300));
            }
            prop_assert_eq!(y.masked_reads(), 0);
        }
    }
}
