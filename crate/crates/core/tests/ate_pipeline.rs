use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use dracc::data::AteDataset;
use dracc::estimators::{estimate_ate, AteClipMode};
use dracc::harness::{analyze_datasets, AteCiMode, AteConfig};
use dracc::nuisance::{fit_diff_in_means, fit_logistic, hajek_rescale, LogisticOptions};
use dracc::rng::stream;

fn outcomes(seed: u64, n: usize, shifts: &[f64]) -> Vec<AteDataset> {
    let mut rng = stream(seed);
    let x: Vec<f64> = (0..2 * n).map(|_| rng.sample(StandardNormal)).collect();
    let cov = DMatrix::from_column_slice(n, 2, &x);
    let a: Vec<u8> = (0..n)
        .map(|i| u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-0.5 * cov[(i, 0)]).exp())))
        .collect();
    shifts
        .iter()
        .enumerate()
        .map(|(k, &d)| {
            let y = (0..n)
                .map(|i| d * f64::from(a[i]) + cov[(i, 1)] + rng.sample::<f64, _>(StandardNormal))
                .collect();
            AteDataset::new(format!("y{k}"), cov.clone(), a.clone(), y).unwrap()
        })
        .collect()
}

#[test]
fn known_shift_is_recovered() {
    let data = outcomes(1, 400, &[5.0, 0.0]);
    let rep = analyze_datasets(
        &data,
        &AteConfig {
            bootstrap_b: 4000,
            ..Default::default()
        },
    )
    .unwrap();
    let r = rep.outcomes[0].result.as_ref().unwrap();
    assert!((r.estimate.ate_acc - 5.0).abs() <= 0.3, "{}", r.estimate.ate_acc);
    assert!(r.significant[3]);
    assert!(r.acc_ci.contains(r.estimate.ate_acc));
}

#[test]
fn significance_shrinks_with_alpha() {
    let shifts: Vec<f64> = (0..12).map(|k| 0.04 * k as f64).collect();
    let data = outcomes(2, 300, &shifts);
    let mut last = [usize::MAX; 4];
    for alpha in [0.5, 0.2, 0.1, 0.05, 0.01, 0.001] {
        let cfg = AteConfig {
            alpha,
            bootstrap_b: 4000,
            ..Default::default()
        };
        let counts = analyze_datasets(&data, &cfg).unwrap().significant_counts();
        for k in 0..4 {
            assert!(counts[k] <= last[k], "alpha {alpha}: {counts:?} after {last:?}");
        }
        last = counts;
    }
}

#[test]
fn label_swap_negates_estimates() {
    let data = &outcomes(3, 200, &[1.5])[0];
    let swapped_a: Vec<u8> = data.treatment().iter().map(|a| 1 - a).collect();
    let swapped = AteDataset::new("swap", data.covariates().clone(), swapped_a, data.outcome().to_vec()).unwrap();
    let opts = LogisticOptions {
        eps: 0.01,
        ..LogisticOptions::default()
    };
    let est = |d: &AteDataset| {
        let pi = fit_logistic(d.covariates(), d.treatment(), &opts).unwrap();
        let pi_hat = hajek_rescale(&pi.predict(d.covariates()).unwrap(), d.treatment(), opts.eps).unwrap();
        let mu = fit_diff_in_means(d.outcome(), d.treatment()).unwrap();
        estimate_ate(d, &mu, &mu, &pi_hat, AteClipMode::PerArm).unwrap()
    };
    let (e, s) = (est(data), est(&swapped));
    for (x, y) in [
        (e.ate_or, s.ate_or),
        (e.ate_ipw, s.ate_ipw),
        (e.ate_dr, s.ate_dr),
        (e.ate_acc, s.ate_acc),
    ] {
        assert!((x + y).abs() < 1e-8, "{x} vs {y}");
    }
}

#[test]
fn ci_modes_and_clip_modes() {
    let data = outcomes(4, 300, &[0.0, 0.3, 2.0]);
    let sum = analyze_datasets(
        &data,
        &AteConfig {
            bootstrap_b: 2000,
            ..Default::default()
        },
    )
    .unwrap();
    let per_arm = analyze_datasets(
        &data,
        &AteConfig {
            bootstrap_b: 2000,
            ci_mode: AteCiMode::PerArmReport,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(sum.divergent_count(), per_arm.divergent_count());
    for (a, b) in sum.outcomes.iter().zip(&per_arm.outcomes) {
        let (a, b) = (a.result.as_ref().unwrap(), b.result.as_ref().unwrap());
        assert_eq!(a.estimate, b.estimate);
        assert_eq!(a.significant[..3], b.significant[..3]);
        assert_eq!(a.significant[3] != b.significant[3], a.modes_diverge);
    }
    let contrast = analyze_datasets(
        &data,
        &AteConfig {
            bootstrap_b: 2000,
            clip_mode: AteClipMode::Contrast,
            ..Default::default()
        },
    )
    .unwrap();
    for o in &contrast.outcomes {
        let e = o.result.as_ref().unwrap().estimate;
        let (lo, hi) = (e.ate_or.min(e.ate_ipw), e.ate_or.max(e.ate_ipw));
        assert!(lo <= e.ate_acc && e.ate_acc <= hi);
    }
}

#[test]
fn failing_outcome_does_not_stop_analysis() {
    let mut data = outcomes(5, 200, &[1.0, 1.0, 1.0]);
    // An outcome whose rows do not match the shared propensity fit.
    let short = &data[1];
    let m = short.n() - 1;
    data[1] = AteDataset::new(
        "short",
        short.covariates().rows(0, m).into_owned(),
        short.treatment()[..m].to_vec(),
        short.outcome()[..m].to_vec(),
    )
    .unwrap();
    let rep = analyze_datasets(
        &data,
        &AteConfig {
            bootstrap_b: 1000,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(rep.outcomes.len(), 3);
    assert!(rep.outcomes[0].result.is_ok());
    assert!(rep.outcomes[1].result.is_err());
    assert!(rep.outcomes[2].result.is_ok());
    assert!(rep.summary_markdown().contains("Failed: 1"));
}
