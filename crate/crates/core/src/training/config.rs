use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Adam hyper-parameters; defaults are the published ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            alpha: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// Number of mini-batch steps, not epochs.
    pub max_iterations: usize,
    /// L1 strength on weight-matrix entries.
    pub lambda: f64,
    pub adam: AdamParams,
    pub seed: u64,
    /// Fit a z-score standardizer on the training bags and attach it to the model.
    pub standardize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 100,
            max_iterations: 10_000,
            lambda: 1e-5,
            adam: AdamParams::default(),
            seed: 0,
            standardize: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch-size must be at least 1"));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::config("lambda must be a non-negative finite number"));
        }
        let a = &self.adam;
        // alpha = 0 is accepted as a null optimizer
        if !(a.alpha >= 0.0) || !a.alpha.is_finite() {
            return Err(Error::config("alpha must be non-negative"));
        }
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) {
            return Err(Error::config("beta1 and beta2 must lie in [0, 1)"));
        }
        if !(a.epsilon > 0.0) {
            return Err(Error::config("epsilon must be positive"));
        }
        Ok(())
    }

    /// Sets one `key=value` entry. Returns `Ok(false)` for keys this config does not own.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::config(format!("invalid value `{value}` for `{key}`")))
        }
        match key {
            "batch-size" | "batch" => self.batch_size = num(key, value)?,
            "max-iterations" | "iters" => self.max_iterations = num(key, value)?,
            "lambda" => self.lambda = num(key, value)?,
            "alpha" => self.adam.alpha = num(key, value)?,
            "beta1" => self.adam.beta1 = num(key, value)?,
            "beta2" => self.adam.beta2 = num(key, value)?,
            "epsilon" => self.adam.epsilon = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "standardize" => self.standardize = num(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "batch-size={}", self.batch_size);
        let _ = writeln!(s, "max-iterations={}", self.max_iterations);
        let _ = writeln!(s, "lambda={}", self.lambda);
        let _ = writeln!(s, "alpha={}", self.adam.alpha);
        let _ = writeln!(s, "beta1={}", self.adam.beta1);
        let _ = writeln!(s, "beta2={}", self.adam.beta2);
        let _ = writeln!(s, "epsilon={}", self.adam.epsilon);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "standardize={}", self.standardize);
        s
    }

    /// Parses a full config text; unknown keys are an error.
    pub fn from_kv_str(text: &str) -> Result<TrainConfig> {
        let mut cfg = TrainConfig::default();
        for (key, value) in parse_kv(text)? {
            if !cfg.set(&key, &value)? {
                return Err(Error::config(format!("unknown config key `{key}`")));
            }
        }
        Ok(cfg)
    }
}

/// Flat `key=value` lines; blank lines and `#` comments are ignored.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            row: i + 1,
            message: format!("expected key=value, found `{line}`"),
        })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn read_kv_file(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_kv(&text)
}
