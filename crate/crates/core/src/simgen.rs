//! Kang–Schafer style data generator.
//!
//! Four latent standard normals drive a linear outcome (population mean 210)
//! and a logistic response mechanism; the analyst only sees a nonlinear
//! transformation of the latents. "Correct" nuisance specifications are fit
//! on the latents, "incorrect" ones on the transformed covariates.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::data::MaskedOutcome;
use crate::rng::{stream, StreamRng};

/// True population mean of the simulated outcome.
pub const THETA_STAR: f64 = 210.0;

const OUTCOME_INTERCEPT: f64 = 210.0;
const OUTCOME_COEFS: [f64; 4] = [27.4, 13.7, 13.7, 13.7];
const RESPONSE_COEFS: [f64; 4] = [-1.0, 0.5, -0.25, -0.1];

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("degenerate sample: every unit has response {0}")]
    DegenerateSample(u8),
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
}

/// Whether a nuisance model is fit on the latent variables or on the
/// observed transformations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spec {
    Correct,
    Incorrect,
}

impl Spec {
    fn letter(self) -> char {
        match self {
            Spec::Correct => 'C',
            Spec::Incorrect => 'I',
        }
    }
}

/// Outcome/propensity specification pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scenario {
    pub outcome: Spec,
    pub propensity: Spec,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::new(Spec::Correct, Spec::Correct),
        Scenario::new(Spec::Correct, Spec::Incorrect),
        Scenario::new(Spec::Incorrect, Spec::Correct),
        Scenario::new(Spec::Incorrect, Spec::Incorrect),
    ];

    pub const fn new(outcome: Spec, propensity: Spec) -> Self {
        Self { outcome, propensity }
    }

    /// Two-letter code, outcome first: `CC`, `CI`, `IC`, `II`.
    pub fn code(self) -> String {
        format!("{}{}", self.outcome.letter(), self.propensity.letter())
    }

    pub fn label(self) -> String {
        let w = |s: Spec| match s {
            Spec::Correct => "Correct",
            Spec::Incorrect => "Incorrect",
        };
        format!("{} mu, {} pi", w(self.outcome), w(self.propensity))
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

impl FromStr for Scenario {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let spec = |c| match c {
            'C' | 'c' => Ok(Spec::Correct),
            'I' | 'i' => Ok(Spec::Incorrect),
            _ => Err(SimError::InvalidConfig(format!("scenario code `{s}`"))),
        };
        let mut chars = s.trim().chars();
        match (chars.next(), chars.next(), chars.next()) {
            (Some(a), Some(b), None) => Ok(Scenario::new(spec(a)?, spec(b)?)),
            _ => Err(SimError::InvalidConfig(format!("scenario code `{s}`"))),
        }
    }
}

/// One simulation draw: sample size, specification and seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioConfig {
    pub n: usize,
    pub scenario: Scenario,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n < 20 {
            return Err(SimError::InvalidConfig(format!("n = {} < 20", self.n)));
        }
        Ok(())
    }
}

/// Where a design matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Latent,
    Observed,
}

/// Borrowed design matrix tagged with its provenance.
#[derive(Debug, Clone, Copy)]
pub struct Design<'a> {
    pub matrix: &'a DMatrix<f64>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone)]
pub struct SimulatedSample {
    pub latent: DMatrix<f64>,
    pub observed: DMatrix<f64>,
    pub response: Vec<u8>,
    pub outcome: MaskedOutcome,
    pub true_propensity: Vec<f64>,
    pub theta_star: f64,
    pub scenario: Scenario,
}

impl SimulatedSample {
    pub fn n(&self) -> usize {
        self.response.len()
    }

    fn design(&self, spec: Spec) -> Design<'_> {
        match spec {
            Spec::Correct => Design {
                matrix: &self.latent,
                provenance: Provenance::Latent,
            },
            Spec::Incorrect => Design {
                matrix: &self.observed,
                provenance: Provenance::Observed,
            },
        }
    }

    /// Design the outcome regression is fit on under this sample's scenario.
    pub fn outcome_design(&self) -> Design<'_> {
        self.design(self.scenario.outcome)
    }

    /// Design the propensity model is fit on under this sample's scenario.
    pub fn propensity_design(&self) -> Design<'_> {
        self.design(self.scenario.propensity)
    }
}

/// `n × 4` matrix of i.i.d. standard normals, drawn row by row.
pub fn draw_latent(n: usize, rng: &mut StreamRng) -> DMatrix<f64> {
    let mut t = DMatrix::zeros(n, 4);
    for i in 0..n {
        for j in 0..4 {
            t[(i, j)] = rng.sample(StandardNormal);
        }
    }
    t
}

/// Noise-free outcome for one latent row.
pub fn outcome_mean(t: [f64; 4]) -> f64 {
    OUTCOME_INTERCEPT + t.iter().zip(OUTCOME_COEFS).map(|(a, b)| a * b).sum::<f64>()
}

/// Outcome for every row of `t` plus independent `N(0,1)` noise.
pub fn gen_outcome(t: &DMatrix<f64>, rng: &mut StreamRng) -> Vec<f64> {
    (0..t.nrows())
        .map(|i| {
            let eps: f64 = rng.sample(StandardNormal);
            outcome_mean(row4(t, i)) + eps
        })
        .collect()
}

fn row4(t: &DMatrix<f64>, i: usize) -> [f64; 4] {
    [t[(i, 0)], t[(i, 1)], t[(i, 2)], t[(i, 3)]]
}

pub fn propensity_row(t: [f64; 4]) -> f64 {
    let eta: f64 = t.iter().zip(RESPONSE_COEFS).map(|(a, b)| a * b).sum();
    1.0 / (1.0 + (-eta).exp())
}

/// Probability of being labeled given the latents.
pub fn true_propensity(t: &DMatrix<f64>) -> Vec<f64> {
    (0..t.nrows()).map(|i| propensity_row(row4(t, i))).collect()
}

pub fn transform_row(t: [f64; 4]) -> [f64; 4] {
    let [t1, t2, t3, t4] = t;
    [
        (t1 / 2.0).exp(),
        t2 / (1.0 + t1.exp()) + 10.0,
        (t1 * t3 / 25.0 + 0.6).powi(3),
        (t2 + t4 + 20.0).powi(2),
    ]
}

/// The covariates the analyst observes.
pub fn transform_covariates(t: &DMatrix<f64>) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(t.nrows(), 4);
    for i in 0..t.nrows() {
        for (j, v) in transform_row(row4(t, i)).into_iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    x
}

/// Draws latents, outcome, propensity and response for one configuration.
pub fn generate(config: &ScenarioConfig) -> Result<SimulatedSample, SimError> {
    config.validate()?;
    let mut rng = stream(config.seed);
    let latent = draw_latent(config.n, &mut rng);
    let y = gen_outcome(&latent, &mut rng);
    let true_propensity = true_propensity(&latent);
    let response: Vec<u8> = true_propensity
        .iter()
        .map(|&p| u8::from(rng.random::<f64>() < p))
        .collect();
    let labeled = response.iter().filter(|&&r| r == 1).count();
    if labeled == 0 {
        return Err(SimError::DegenerateSample(0));
    }
    if labeled == response.len() {
        return Err(SimError::DegenerateSample(1));
    }
    let observed = transform_covariates(&latent);
    let outcome = MaskedOutcome::from_response(y, &response);
    Ok(SimulatedSample {
        latent,
        observed,
        response,
        outcome,
        true_propensity,
        theta_star: THETA_STAR,
        scenario: config.scenario,
    })
}
