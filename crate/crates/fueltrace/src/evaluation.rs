//! Scoring of detected refills against ground truth: per-event errors,
//! coefficient of determination, root-mean-square error.

use thiserror::Error;

use crate::model::{RefillEvent, TruthEvent};

/// Index tolerance used when pairing detected events with truth.
pub const DEFAULT_MATCH_TOLERANCE: u64 = 100;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("need at least {need} values, got {got}")]
    TooFew { got: usize, need: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("truth values have zero variance")]
    DegenerateTruth,
    #[error("empty input")]
    EmptyInput,
    #[error("truth volume must be positive, got {0}")]
    NonPositiveTruth(f64),
}

/// One detected event paired with its true volume.
#[derive(Debug, Clone, PartialEq)]
pub struct EventMatch {
    pub detected: RefillEvent,
    /// Position of the event in the detected slice passed to [`match_events`].
    pub detected_position: usize,
    pub truth_volume: f64,
    pub error: f64,
    pub percentage_error: f64,
}

/// Aggregate score: metrics over matched events plus miss/spurious counts.
/// Metrics are `None` when undefined (no matches, or degenerate truth).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub r_squared: Option<f64>,
    pub rmse: Option<f64>,
    pub matches: Vec<EventMatch>,
    pub missed: usize,
    pub spurious: usize,
}

/// Absolute and percentage error of one detected volume against truth.
pub fn event_error(detected_volume: f64, truth_volume: f64) -> Result<(f64, f64), EvalError> {
    if truth_volume.is_nan() || truth_volume <= 0.0 {
        return Err(EvalError::NonPositiveTruth(truth_volume));
    }
    let error = (detected_volume - truth_volume).abs();
    Ok((error, 100.0 * error / truth_volume))
}

/// Greedy nearest-index matching: candidate pairs within `tolerance` are
/// taken closest-first, each side matched at most once. Returns the matches
/// plus counts of unmatched truth (missed) and unmatched detected (spurious).
pub fn match_events(
    detected: &[RefillEvent],
    truth: &[TruthEvent],
    tolerance: u64,
) -> (Vec<EventMatch>, usize, usize) {
    let mut pairs: Vec<(u64, usize, usize)> = Vec::new();
    for (di, d) in detected.iter().enumerate() {
        for (ti, t) in truth.iter().enumerate() {
            let dist = d.start_index.abs_diff(t.index);
            if dist <= tolerance {
                pairs.push((dist, di, ti));
            }
        }
    }
    pairs.sort_unstable();

    let mut detected_used = vec![false; detected.len()];
    let mut truth_used = vec![false; truth.len()];
    let mut matches = Vec::new();
    for (_, di, ti) in pairs {
        if detected_used[di] || truth_used[ti] {
            continue;
        }
        detected_used[di] = true;
        truth_used[ti] = true;
        let truth_volume = truth[ti].volume;
        let (error, percentage_error) =
            event_error(detected[di].detected_volume, truth_volume).unwrap_or((f64::NAN, f64::NAN));
        matches.push(EventMatch {
            detected: detected[di],
            detected_position: di,
            truth_volume,
            error,
            percentage_error,
        });
    }
    matches.sort_by_key(|m| m.detected.start_index);
    let missed = truth_used.iter().filter(|&&u| !u).count();
    let spurious = detected_used.iter().filter(|&&u| !u).count();
    (matches, missed, spurious)
}

/// Coefficient of determination, `1 - SS_res / SS_tot`.
pub fn r_squared(detected: &[f64], truth: &[f64]) -> Result<f64, EvalError> {
    if detected.len() != truth.len() {
        return Err(EvalError::LengthMismatch(detected.len(), truth.len()));
    }
    if truth.len() < 2 {
        return Err(EvalError::TooFew {
            got: truth.len(),
            need: 2,
        });
    }
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean) * (t - mean)).sum();
    if ss_tot == 0.0 {
        return Err(EvalError::DegenerateTruth);
    }
    let ss_res: f64 = detected
        .iter()
        .zip(truth)
        .map(|(d, t)| (d - t) * (d - t))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Root-mean-square error between two equal-length sequences.
pub fn rmse(detected: &[f64], truth: &[f64]) -> Result<f64, EvalError> {
    if detected.len() != truth.len() {
        return Err(EvalError::LengthMismatch(detected.len(), truth.len()));
    }
    if truth.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mse: f64 = detected
        .iter()
        .zip(truth)
        .map(|(d, t)| (d - t) * (d - t))
        .sum::<f64>()
        / truth.len() as f64;
    Ok(mse.sqrt())
}

/// Scores detected events against truth at the given tolerance.
pub fn score(detected: &[RefillEvent], truth: &[TruthEvent], tolerance: u64) -> ScoreReport {
    let (matches, missed, spurious) = match_events(detected, truth, tolerance);
    let d: Vec<f64> = matches.iter().map(|m| m.detected.detected_volume).collect();
    let t: Vec<f64> = matches.iter().map(|m| m.truth_volume).collect();
    ScoreReport {
        r_squared: r_squared(&d, &t).ok(),
        rmse: rmse(&d, &t).ok(),
        matches,
        missed,
        spurious,
    }
}

impl ScoreReport {
    /// Serializes the report as `key: value` lines plus a per-event table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self.r_squared {
            Some(v) => out.push_str(&format!("r_squared: {v}\n")),
            None => out.push_str("r_squared: n/a\n"),
        }
        match self.rmse {
            Some(v) => out.push_str(&format!("rmse: {v}\n")),
            None => out.push_str("rmse: n/a\n"),
        }
        out.push_str(&format!("matched: {}\n", self.matches.len()));
        out.push_str(&format!("missed: {}\n", self.missed));
        out.push_str(&format!("spurious: {}\n", self.spurious));
        out.push_str("start,stop,detected,real,error,percentage_error\n");
        for m in &self.matches {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                m.detected.start_index,
                m.detected.stop_index,
                m.detected.detected_volume,
                m.truth_volume,
                m.error,
                m.percentage_error
            ));
        }
        out
    }
}
