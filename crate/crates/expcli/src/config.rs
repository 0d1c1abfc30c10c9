//! Flat `key = value` experiment configuration with CLI flag overrides.
//! Lines starting with `#` and blank lines are skipped; unknown keys are
//! rejected so a typo cannot silently fall back to a default.

use std::path::{Path, PathBuf};

use smpred::error::{Error, Result};
use smpred::lti::BenchmarkConfig;
use smpred::smident::{SmConfig, TauInflation};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    // Benchmark generation.
    pub ts: f64,
    pub samples: usize,
    pub levels: Vec<f64>,
    pub hold_seconds: f64,
    pub d_bound: f64,
    pub noise_filter_tc: f64,
    pub seed: u64,
    // Identification.
    pub order: usize,
    pub p_max: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub omega_box: f64,
    pub tau_inflation: TauInflation,
    // Sweeps.
    pub sweep_orders: Vec<usize>,
    pub sweep_fractions: Vec<f64>,
    pub sweep_p: Vec<usize>,
    // Validation data (fresh seed, same generating process).
    pub val_samples: usize,
    pub val_seed: Option<u64>,
    // Output.
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            ts: 0.2,
            samples: 500,
            levels: vec![-1.0, 0.0, 1.0],
            hold_seconds: 4.0,
            d_bound: 0.2,
            noise_filter_tc: 0.2,
            seed: 1,
            order: 3,
            p_max: 10,
            alpha: 1.2,
            gamma: 1.2,
            omega_box: 1e6,
            tau_inflation: TauInflation::SpreadOnly,
            sweep_orders: (1..=6).collect(),
            sweep_fractions: (1..=10).map(|k| k as f64 / 10.0).collect(),
            sweep_p: vec![3, 6, 9],
            val_samples: 500,
            val_seed: None,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("config line {}: missing `=`", lineno + 1)))?;
            cfg.apply_kv(key.trim(), value.trim())
                .map_err(|e| Error::Parse(format!("config line {}: {e}", lineno + 1)))?;
        }
        Ok(cfg)
    }

    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "ts" => self.ts = parse_num(key, value)?,
            "samples" => self.samples = parse_num(key, value)?,
            "levels" => self.levels = parse_list(key, value)?,
            "hold" => self.hold_seconds = parse_num(key, value)?,
            "dbar" => self.d_bound = parse_num(key, value)?,
            "filter_tc" => self.noise_filter_tc = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "order" => self.order = parse_num(key, value)?,
            "pmax" => self.p_max = parse_num(key, value)?,
            "alpha" => self.alpha = parse_num(key, value)?,
            "gamma" => self.gamma = parse_num(key, value)?,
            "omega_box" => self.omega_box = parse_num(key, value)?,
            "tau_inflation" => {
                self.tau_inflation = match value {
                    "spread" => TauInflation::SpreadOnly,
                    "full" => TauInflation::Full,
                    other => {
                        return Err(Error::Parse(format!(
                            "tau_inflation must be `spread` or `full`, got `{other}`"
                        )))
                    }
                }
            }
            "sweep_orders" => self.sweep_orders = parse_list(key, value)?,
            "sweep_fractions" => self.sweep_fractions = parse_list(key, value)?,
            "sweep_p" => self.sweep_p = parse_list(key, value)?,
            "val_samples" => self.val_samples = parse_num(key, value)?,
            "val_seed" => self.val_seed = Some(parse_num(key, value)?),
            "out" => self.out_dir = PathBuf::from(value),
            other => {
                return Err(Error::Parse(format!("unknown config key `{other}`")));
            }
        }
        Ok(())
    }

    pub fn sm_config(&self) -> SmConfig {
        SmConfig {
            o: self.order,
            p_max: self.p_max,
            d_bound: self.d_bound,
            alpha: self.alpha,
            gamma: self.gamma,
            omega_box: self.omega_box,
            tau_inflation: self.tau_inflation,
        }
    }

    pub fn benchmark_config(&self) -> BenchmarkConfig {
        BenchmarkConfig {
            ts: self.ts,
            samples: self.samples,
            levels: self.levels.clone(),
            hold_seconds: self.hold_seconds,
            noise_bound: self.d_bound,
            noise_filter_tc: self.noise_filter_tc,
            seed: self.seed,
        }
    }

    /// Held-out data come from the same generating process with a fresh seed
    /// (`seed + 1` unless overridden).
    pub fn validation_config(&self) -> BenchmarkConfig {
        BenchmarkConfig {
            samples: self.val_samples,
            seed: self.val_seed.unwrap_or_else(|| self.seed.wrapping_add(1)),
            ..self.benchmark_config()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sm_config().validate()?;
        if self.samples < self.order + self.p_max {
            return Err(Error::InvalidConfig(format!(
                "{} samples cannot support order {} with horizon {}",
                self.samples, self.order, self.p_max
            )));
        }
        if self.val_samples < self.order + self.p_max {
            return Err(Error::InvalidConfig(format!(
                "{} validation samples cannot support order {} with horizon {}",
                self.val_samples, self.order, self.p_max
            )));
        }
        if self.sweep_orders.is_empty()
            || self.sweep_p.is_empty()
            || self.sweep_fractions.is_empty()
        {
            return Err(Error::InvalidConfig("sweep lists must be nonempty".into()));
        }
        for &o in &self.sweep_orders {
            for &p in &self.sweep_p {
                if o == 0 || p == 0 || self.samples < o + p {
                    return Err(Error::InvalidConfig(format!(
                        "sweep point (order {o}, p {p}) is not admissible for {} samples",
                        self.samples
                    )));
                }
            }
        }
        for &f in &self.sweep_fractions {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "sweep fraction {f} outside (0, 1]"
                )));
            }
            let prefix = (f * self.samples as f64).round() as usize;
            let p_worst = *self.sweep_p.iter().max().expect("nonempty");
            if prefix < self.order + p_worst {
                return Err(Error::InvalidConfig(format!(
                    "fraction {f} leaves only {prefix} samples, too few for (order {}, p {p_worst})",
                    self.order
                )));
            }
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::Parse(format!("key `{key}`: cannot parse `{value}`")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|item| parse_num(key, item.trim()))
        .collect()
}
