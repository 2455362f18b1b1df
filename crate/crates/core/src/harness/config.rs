use std::path::Path;

use crate::inference::DEFAULT_BOOTSTRAP;
use crate::nuisance::LogisticOptions;
use crate::simgen::Scenario;

use super::HarnessError;

/// Keys accepted in a study config file, with a short description each.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("sample_sizes", "comma-separated sample sizes (default 100,200,1000)"),
    ("replications", "replications per cell (default 1000)"),
    (
        "scenarios",
        "comma-separated outcome/propensity codes among CC,CI,IC,II (default all)",
    ),
    ("master_seed", "64-bit master seed (default 20250101)"),
    ("workers", "worker threads, 0 = available parallelism (default 0)"),
    ("inference.alpha", "miscoverage level (default 0.05)"),
    ("inference.bootstrap_b", "parametric bootstrap draws (default 10000)"),
    ("nuisance.tol", "IRLS convergence tolerance (default 1e-8)"),
    ("nuisance.max_iter", "IRLS iteration cap (default 100)"),
    ("nuisance.eps", "propensity floor (default 1e-6)"),
    (
        "nuisance.hajek",
        "rescale fitted propensities so inverse weights average to one (default false)",
    ),
];

/// A full simulation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub scenarios: Vec<Scenario>,
    pub master_seed: u64,
    pub bootstrap_b: usize,
    pub alpha: f64,
    /// 0 selects the available parallelism.
    pub workers: usize,
    pub logistic: LogisticOptions,
    /// Self-normalize the fitted propensities before estimation.
    pub hajek: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            sample_sizes: vec![100, 200, 1000],
            replications: 1000,
            scenarios: Scenario::ALL.to_vec(),
            master_seed: 20_250_101,
            bootstrap_b: DEFAULT_BOOTSTRAP,
            alpha: 0.05,
            workers: 0,
            logistic: LogisticOptions::default(),
            hajek: false,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, HarnessError> {
    value
        .trim()
        .parse()
        .map_err(|_| HarnessError::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, HarnessError> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl StudyConfig {
    /// Sets one key. Unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        match key {
            "sample_sizes" => self.sample_sizes = parse_list(key, value)?,
            "replications" => self.replications = parse(key, value)?,
            "scenarios" => {
                self.scenarios = value
                    .split(',')
                    .map(|s| s.parse().map_err(|e| HarnessError::Config(format!("{e}"))))
                    .collect::<Result<_, _>>()?
            }
            "master_seed" => self.master_seed = parse(key, value)?,
            "workers" => self.workers = parse(key, value)?,
            "inference.alpha" => self.alpha = parse(key, value)?,
            "inference.bootstrap_b" => self.bootstrap_b = parse(key, value)?,
            "nuisance.tol" => self.logistic.tol = parse(key, value)?,
            "nuisance.max_iter" => self.logistic.max_iter = parse(key, value)?,
            "nuisance.eps" => self.logistic.eps = parse(key, value)?,
            "nuisance.hajek" => self.hajek = parse(key, value)?,
            _ => return Err(HarnessError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Parses flat `key = value` lines on top of the defaults. Blank lines
    /// and `#` comments are ignored.
    pub fn from_kv_str(text: &str) -> Result<Self, HarnessError> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("line {}: expected key=value", lineno + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        Self::from_kv_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_kv_string(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        [
            format!(
                "sample_sizes = {}",
                join(self.sample_sizes.iter().map(|n| n.to_string()).collect())
            ),
            format!("replications = {}", self.replications),
            format!(
                "scenarios = {}",
                join(self.scenarios.iter().map(|s| s.code()).collect())
            ),
            format!("master_seed = {}", self.master_seed),
            format!("workers = {}", self.workers),
            format!("inference.alpha = {}", self.alpha),
            format!("inference.bootstrap_b = {}", self.bootstrap_b),
            format!("nuisance.tol = {}", self.logistic.tol),
            format!("nuisance.max_iter = {}", self.logistic.max_iter),
            format!("nuisance.eps = {}", self.logistic.eps),
            format!("nuisance.hajek = {}", self.hajek),
        ]
        .join("\n")
            + "\n"
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.replications < 1 {
            return bad("replications must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha = {} outside (0,1)", self.alpha));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.iter().any(|&n| n < 20) {
            return bad("sample sizes must be non-empty and at least 20".into());
        }
        if self.scenarios.is_empty() {
            return bad("no scenarios".into());
        }
        if self.bootstrap_b < crate::inference::MIN_BOOTSTRAP {
            return bad(format!("bootstrap_b below {}", crate::inference::MIN_BOOTSTRAP));
        }
        if !(self.logistic.eps > 0.0 && self.logistic.eps < 0.5) {
            return bad(format!("nuisance.eps = {} outside (0, 0.5)", self.logistic.eps));
        }
        Ok(())
    }

    /// Records a default study produces.
    pub fn record_count(&self) -> usize {
        self.sample_sizes.len() * self.scenarios.len() * self.replications
    }
}
