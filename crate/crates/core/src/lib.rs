//! Doubly robust estimation of a mean under missing-at-random outcomes, with
//! adaptive correction clipping (DR+ACC) and a parametric bootstrap for its
//! non-Gaussian limit.
//!
//! The clipped estimator keeps the bias correction of the doubly robust
//! estimator only as far as it stays between the outcome-regression and
//! inverse-weighting estimates:
//!
//! ```
//! use dracc::estimators::EstimateBundle;
//!
//! let b = EstimateBundle::from_components(209.0, 212.0, 230.0, 500);
//! assert_eq!(b.theta_dr, 191.0);
//! assert_eq!(b.theta_acc, 209.0);
//! assert!(b.theta_acc >= b.theta_or.min(b.theta_ipw));
//! ```
//!
//! Modules, bottom up: [`data`] (containers and CSV), [`simgen`]
//! (Kang–Schafer generator), [`nuisance`] (OLS, logistic IRLS,
//! difference-in-means), [`estimators`], [`inference`] (influence
//! covariance, bootstrap and Wald intervals), [`harness`] (study driver,
//! metrics, plots, two-arm analysis). [`rng`] holds the seeding scheme.

pub mod data;
pub mod estimators;
pub mod harness;
pub mod inference;
pub mod nuisance;
pub mod rng;
pub mod simgen;
