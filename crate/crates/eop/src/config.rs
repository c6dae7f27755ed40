//! Run configuration: every pipeline constant in one place, with a small
//! human-editable `key = value` file format.
//!
//! Resolution order, lowest to highest: built-in defaults, config file,
//! command-line flags. The config file accepts `#` comments and blank lines:
//!
//! ```text
//! # production constants
//! minutes_per_day = 510
//! J = 11
//! jstar = 4
//! calibration_bounds = 0.1:3.0
//! ```

use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::calibration;
use crate::marketdata;
use crate::pricing;
use crate::wavelet;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: expected `key = value`")]
    MissingEquals { path: String, line: usize },
    #[error("{path} line {line}: unknown key {key:?}")]
    UnknownKey { path: String, line: usize, key: String },
    #[error("{path} line {line}: cannot parse {value:?} for {key}")]
    BadValue { path: String, line: usize, key: String, value: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// All tunable constants of the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunConfig {
    /// Minutes per trading session.
    pub minutes_per_day: u32,
    /// Trading minutes per year for rate/volatility conversions.
    pub minutes_per_year: u32,
    /// Outlier threshold in global standard deviations.
    pub outlier_sigma: f64,
    /// Trailing window for drift estimation, in minutes.
    pub drift_window_minutes: usize,
    /// Largest wavelet scale index; subseries hold `2^(J+1)` samples.
    #[serde(rename = "J")]
    pub max_scale: u32,
    /// Low-pass threshold: scales below it survive.
    #[serde(rename = "jstar")]
    pub cutoff_scale: u32,
    /// Window translation step of the pricing ensemble, in minutes.
    pub ensemble_stride: usize,
    /// Annualized risk-free rate used when no flag overrides it.
    pub rate_annual: f64,
    /// `g` search interval for calibration.
    pub calibration_bounds: (f64, f64),
    /// Seed for synthetic-data consumers (examples, tests); the pipeline
    /// itself is deterministic and never draws random numbers.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            minutes_per_day: marketdata::DEFAULT_MINUTES_PER_DAY,
            minutes_per_year: pricing::DEFAULT_MINUTES_PER_YEAR,
            outlier_sigma: marketdata::DEFAULT_OUTLIER_SIGMA,
            drift_window_minutes: marketdata::DEFAULT_DRIFT_WINDOW_MINUTES,
            max_scale: wavelet::DEFAULT_MAX_SCALE,
            cutoff_scale: wavelet::DEFAULT_CUTOFF_SCALE,
            ensemble_stride: pricing::DEFAULT_ENSEMBLE_STRIDE,
            rate_annual: 0.045,
            calibration_bounds: calibration::DEFAULT_BOUNDS,
            seed: 0,
        }
    }
}

impl RunConfig {
    /// Parses a key-value file on top of the defaults.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let content = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut config = Self::default();
        for (i, raw) in content.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::MissingEquals {
                path: path.display().to_string(),
                line: i + 1,
            })?;
            let key = key.trim();
            let value = value.trim();
            config.set(key, value).map_err(|_| match config.is_known_key(key) {
                true => ConfigError::BadValue {
                    path: path.display().to_string(),
                    line: i + 1,
                    key: key.to_string(),
                    value: value.to_string(),
                },
                false => ConfigError::UnknownKey {
                    path: path.display().to_string(),
                    line: i + 1,
                    key: key.to_string(),
                },
            })?;
        }
        config.validate()?;
        Ok(config)
    }

    fn is_known_key(&self, key: &str) -> bool {
        matches!(
            key,
            "minutes_per_day"
                | "minutes_per_year"
                | "outlier_sigma"
                | "drift_window_minutes"
                | "J"
                | "jstar"
                | "ensemble_stride"
                | "rate_annual"
                | "calibration_bounds"
                | "seed"
        )
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), ()> {
        match key {
            "minutes_per_day" => self.minutes_per_day = value.parse().map_err(|_| ())?,
            "minutes_per_year" => self.minutes_per_year = value.parse().map_err(|_| ())?,
            "outlier_sigma" => self.outlier_sigma = value.parse().map_err(|_| ())?,
            "drift_window_minutes" => {
                self.drift_window_minutes = value.parse().map_err(|_| ())?
            }
            "J" => self.max_scale = value.parse().map_err(|_| ())?,
            "jstar" => self.cutoff_scale = value.parse().map_err(|_| ())?,
            "ensemble_stride" => self.ensemble_stride = value.parse().map_err(|_| ())?,
            "rate_annual" => self.rate_annual = value.parse().map_err(|_| ())?,
            "calibration_bounds" => self.calibration_bounds = parse_bounds(value).ok_or(())?,
            "seed" => self.seed = value.parse().map_err(|_| ())?,
            _ => return Err(()),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.minutes_per_day == 0 || self.minutes_per_year == 0 {
            return Err(ConfigError::Invalid("minute counts must be positive".into()));
        }
        if self.outlier_sigma <= 0.0 || self.outlier_sigma.is_nan() {
            return Err(ConfigError::Invalid("outlier_sigma must be positive".into()));
        }
        if self.drift_window_minutes < 2 {
            return Err(ConfigError::Invalid("drift_window_minutes must be >= 2".into()));
        }
        if self.ensemble_stride == 0 {
            return Err(ConfigError::Invalid("ensemble_stride must be positive".into()));
        }
        if self.cutoff_scale < 1 || self.cutoff_scale > self.max_scale + 1 {
            return Err(ConfigError::Invalid(format!(
                "jstar must lie in 1..={} for J = {}",
                self.max_scale + 1,
                self.max_scale
            )));
        }
        let (lo, hi) = self.calibration_bounds;
        if !lo.is_finite() || !hi.is_finite() || lo <= 0.0 || lo >= hi {
            return Err(ConfigError::Invalid(format!(
                "calibration_bounds {lo}:{hi} must satisfy 0 < lower < upper"
            )));
        }
        Ok(())
    }
}

/// Parses `lower:upper`.
pub fn parse_bounds(value: &str) -> Option<(f64, f64)> {
    let (lo, hi) = value.split_once(':')?;
    let lo: f64 = lo.trim().parse().ok()?;
    let hi: f64 = hi.trim().parse().ok()?;
    Some((lo, hi))
}
