use proptest::prelude::*;

use dracc::estimators::{compute_bundle, EstimateBundle};
use dracc::harness::{compute_metrics, run_study, Estimator, StudyConfig};
use dracc::inference::w_transform;
use dracc::nuisance::{fit_logistic, fit_ols_subset, LogisticOptions};
use dracc::simgen::{generate, Scenario, ScenarioConfig, Spec, THETA_STAR};

#[test]
fn clipped_error_shrinks_when_a_nuisance_is_correct() {
    let cfg = StudyConfig {
        sample_sizes: vec![100, 400, 1600],
        replications: 200,
        scenarios: Scenario::ALL[..3].to_vec(),
        bootstrap_b: 1000,
        master_seed: 31,
        ..StudyConfig::default()
    };
    let table = compute_metrics(&run_study(&cfg).unwrap(), THETA_STAR).unwrap();
    for sc in &cfg.scenarios {
        let rmse: Vec<f64> = cfg
            .sample_sizes
            .iter()
            .map(|&n| table.get(n, *sc, Estimator::Acc).unwrap().rmse)
            .collect();
        assert!(rmse[0] > rmse[1] && rmse[1] > rmse[2], "{}: {rmse:?}", sc.code());
        assert!(rmse[2] < 0.6 * rmse[0], "{}: {rmse:?}", sc.code());
    }
}

#[test]
fn estimation_never_reads_masked_outcomes() {
    for scenario in Scenario::ALL {
        let s = generate(&ScenarioConfig {
            n: 500,
            scenario,
            seed: 8,
        })
        .unwrap();
        let y = s.outcome.filled(f64::NAN);
        let mu = fit_ols_subset(s.outcome_design().matrix, &y, &s.response).unwrap();
        let pi = fit_logistic(s.propensity_design().matrix, &s.response, &LogisticOptions::default()).unwrap();
        let b = compute_bundle(
            &mu.predict(s.outcome_design().matrix, None).unwrap(),
            &pi.predict(s.propensity_design().matrix).unwrap(),
            &s.response,
            &s.outcome,
        )
        .unwrap();
        assert!(b.theta_acc.is_finite());
        assert_eq!(s.outcome.masked_reads(), 0);
    }
}

#[test]
fn shared_draw_makes_matching_specs_coincide() {
    let cfg = StudyConfig {
        sample_sizes: vec![200],
        replications: 5,
        bootstrap_b: 1000,
        ..StudyConfig::default()
    };
    let recs = run_study(&cfg).unwrap();
    let get = |o, p, rep| {
        recs.iter()
            .find(|r| r.scenario == Scenario::new(o, p) && r.replication == rep)
            .and_then(|r| r.bundle)
            .unwrap()
    };
    for rep in 0..5 {
        assert_eq!(
            get(Spec::Correct, Spec::Correct, rep).theta_or,
            get(Spec::Correct, Spec::Incorrect, rep).theta_or
        );
        assert_eq!(
            get(Spec::Correct, Spec::Correct, rep).theta_ipw,
            get(Spec::Incorrect, Spec::Correct, rep).theta_ipw
        );
    }
}

proptest! {
    // Centering and scaling pass through the clip, so the scaled error of
    // DR+ACC is exactly the W transform of the scaled component errors.
    #[test]
    fn scaled_error_is_w_of_component_errors(
        or in 150f64..270.0, ipw in 150f64..270.0, c in 100f64..320.0, t in 190f64..230.0, n in 10usize..100_000,
    ) {
        let b = EstimateBundle::from_components(or, ipw, c, n);
        let k = (n as f64).sqrt();
        let w = w_transform([k * (or - t), k * (ipw - t), k * (c - t)]);
        prop_assert!((k * (b.theta_acc - t) - w).abs() <= 1e-9 * k * 400.0);
    }

    #[test]
    fn clip_is_continuous_along_sequences(
        x in -1e3f64..1e3, a in -1e3f64..1e3, b in -1e3f64..1e3, step in 1e-9f64..1.0,
    ) {
        let mut prev = f64::INFINITY;
        for k in 1..=20 {
            let xk = x + step / k as f64;
            let gap = (dracc::estimators::clip(xk, a, b) - dracc::estimators::clip(x, a, b)).abs();
            prop_assert!(gap <= (xk - x).abs());
            prop_assert!(gap <= prev);
            prev = gap;
        }
    }
}
