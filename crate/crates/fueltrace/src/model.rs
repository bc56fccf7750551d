//! Core domain types shared by every pipeline stage.

use thiserror::Error;

/// One sensor reading: a sample ordinal and a fuel level in liters.
///
/// `level` is `None` while the sample is missing (empty field at ingestion, or
/// repaired away by a cleaning stage); every pipeline stage beyond repair
/// requires fully filled traces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub index: u64,
    pub level: Option<f64>,
}

impl Sample {
    pub fn new(index: u64, level: f64) -> Self {
        Sample {
            index,
            level: Some(level),
        }
    }

    pub fn missing(index: u64) -> Self {
        Sample { index, level: None }
    }
}

/// An ordered fuel-level time series for one vehicle.
///
/// Indices are strictly increasing sample ordinals; there are no timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub vehicle_id: String,
    pub samples: Vec<Sample>,
}

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("sample indices must be strictly increasing (violation at position {0})")]
    NonMonotoneIndex(usize),
    #[error("trace has missing levels; run repair first")]
    NotFilled,
    #[error("trace too short: {got} samples, need at least {need}")]
    TooShort { got: usize, need: usize },
}

impl Trace {
    /// Builds a trace, validating index monotonicity.
    pub fn new(vehicle_id: impl Into<String>, samples: Vec<Sample>) -> Result<Self, TraceError> {
        for (pos, pair) in samples.windows(2).enumerate() {
            if pair[1].index <= pair[0].index {
                return Err(TraceError::NonMonotoneIndex(pos + 1));
            }
        }
        Ok(Trace {
            vehicle_id: vehicle_id.into(),
            samples,
        })
    }

    /// Builds a trace from raw levels, numbering samples 0..n.
    pub fn from_levels(vehicle_id: impl Into<String>, levels: &[f64]) -> Self {
        let samples = levels
            .iter()
            .enumerate()
            .map(|(i, &v)| Sample::new(i as u64, v))
            .collect();
        Trace {
            vehicle_id: vehicle_id.into(),
            samples,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_fully_filled(&self) -> bool {
        self.samples.iter().all(|s| s.level.is_some())
    }

    /// Extracts the level sequence; errors if any sample is still missing.
    pub fn filled_levels(&self) -> Result<Vec<f64>, TraceError> {
        self.samples
            .iter()
            .map(|s| s.level.ok_or(TraceError::NotFilled))
            .collect()
    }

    /// Returns a copy with the same indices and new levels.
    pub fn with_levels(&self, levels: &[f64]) -> Trace {
        assert_eq!(levels.len(), self.samples.len());
        let samples = self
            .samples
            .iter()
            .zip(levels)
            .map(|(s, &v)| Sample::new(s.index, v))
            .collect();
        Trace {
            vehicle_id: self.vehicle_id.clone(),
            samples,
        }
    }
}

/// A detected refill rise: where it starts and the levels on both sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidatePeak {
    /// Sample ordinal of the last point before the rise.
    pub index: u64,
    /// Level immediately before the rise, liters.
    pub pre_level: f64,
    /// First stabilized level after the rise, liters.
    pub post_level: f64,
}

impl CandidatePeak {
    pub fn volume(&self) -> f64 {
        self.post_level - self.pre_level
    }
}

/// A validated refill event, mirroring the report row schema.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefillEvent {
    pub start_index: u64,
    pub stop_index: u64,
    pub detected_volume: f64,
}

/// A labeled true refill: jump position and volume in liters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthEvent {
    pub index: u64,
    pub volume: f64,
}

/// All thresholds and window sizes used by the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// White-noise elision passes during preprocessing.
    pub white_noise_passes: usize,
    /// Standard-deviation threshold selecting the clustering branch per window.
    pub cluster_threshold_t: f64,
    /// Clustering window length in samples.
    pub cluster_window_size: usize,
    /// Clustering window advance in samples.
    pub cluster_window_step: usize,
    /// Multiplier in the wavelet shrinkage threshold.
    pub wavelet_alpha: f64,
    /// Wavelet decomposition depth.
    pub wavelet_levels: usize,
    /// Median filter window (odd).
    pub median_window: usize,
    /// Rise size, in liters, that flags a candidate peak.
    pub peak_deviation: f64,
    /// Max index distance when matching peaks across branches.
    pub match_tolerance: u64,
    /// Index-gap bound in the final triple rule.
    pub final_distance: u64,
    /// Level-difference bound, liters, in the final triple rule.
    pub final_difference: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            white_noise_passes: 2,
            cluster_threshold_t: 0.1,
            cluster_window_size: 200,
            cluster_window_step: 200,
            wavelet_alpha: 1.0,
            wavelet_levels: 4,
            median_window: 5,
            peak_deviation: 4.0,
            match_tolerance: 100,
            final_distance: 30,
            final_difference: 5.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` has invalid value `{value}`")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
    #[error("line {line}: expected `key = value`")]
    BadLine { line: usize },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl PipelineConfig {
    /// Checks the structural invariants every stage relies on.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.white_noise_passes < 1 {
            return Err(ConfigError::Invalid(
                "white_noise_passes must be >= 1".into(),
            ));
        }
        if self.cluster_window_size < 2 || self.cluster_window_step < 1 {
            return Err(ConfigError::Invalid(
                "cluster window size/step must be positive (size >= 2)".into(),
            ));
        }
        if !(self.cluster_threshold_t.is_finite() && self.cluster_threshold_t >= 0.0) {
            return Err(ConfigError::Invalid(
                "cluster_threshold_t must be >= 0".into(),
            ));
        }
        if self.wavelet_levels < 1 {
            return Err(ConfigError::Invalid("wavelet_levels must be >= 1".into()));
        }
        if !(self.wavelet_alpha.is_finite() && self.wavelet_alpha >= 0.0) {
            return Err(ConfigError::Invalid("wavelet_alpha must be >= 0".into()));
        }
        if self.median_window < 3 || self.median_window.is_multiple_of(2) {
            return Err(ConfigError::Invalid(
                "median_window must be odd and >= 3".into(),
            ));
        }
        if !(self.peak_deviation.is_finite() && self.peak_deviation > 0.0) {
            return Err(ConfigError::Invalid("peak_deviation must be > 0".into()));
        }
        if !(self.final_difference.is_finite() && self.final_difference >= 0.0) {
            return Err(ConfigError::Invalid("final_difference must be >= 0".into()));
        }
        Ok(())
    }

    /// Parses a flat `key = value` document. Missing keys keep their defaults;
    /// unknown keys are rejected so typos surface immediately.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = PipelineConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or(ConfigError::BadLine { line })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |k: &str, v: &str| ConfigError::BadValue {
                line,
                key: k.to_string(),
                value: v.to_string(),
            };
            match key {
                "white_noise_passes" => {
                    cfg.white_noise_passes = value.parse().map_err(|_| bad(key, value))?
                }
                "cluster_threshold_t" => {
                    cfg.cluster_threshold_t = value.parse().map_err(|_| bad(key, value))?
                }
                "cluster_window_size" => {
                    cfg.cluster_window_size = value.parse().map_err(|_| bad(key, value))?
                }
                "cluster_window_step" => {
                    cfg.cluster_window_step = value.parse().map_err(|_| bad(key, value))?
                }
                "wavelet_alpha" => {
                    cfg.wavelet_alpha = value.parse().map_err(|_| bad(key, value))?
                }
                "wavelet_levels" => {
                    cfg.wavelet_levels = value.parse().map_err(|_| bad(key, value))?
                }
                "median_window" => {
                    cfg.median_window = value.parse().map_err(|_| bad(key, value))?
                }
                "peak_deviation" => {
                    cfg.peak_deviation = value.parse().map_err(|_| bad(key, value))?
                }
                "match_tolerance" => {
                    cfg.match_tolerance = value.parse().map_err(|_| bad(key, value))?
                }
                "final_distance" => {
                    cfg.final_distance = value.parse().map_err(|_| bad(key, value))?
                }
                "final_difference" => {
                    cfg.final_difference = value.parse().map_err(|_| bad(key, value))?
                }
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.to_string(),
                    });
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
