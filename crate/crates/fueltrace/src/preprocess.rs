//! Missing-sample repair and white-noise elision.
//!
//! Repair order matters: zeros become missing first, interior gaps are
//! interpolated next, and boundary gaps are extrapolated last so interior
//! fills can sharpen the boundary estimates.

use thiserror::Error;

use crate::model::Trace;

#[derive(Debug, Error, PartialEq)]
pub enum PreprocessError {
    #[error("no known samples to interpolate from")]
    UnboundedGap,
    #[error("need at least two known samples, found {0}")]
    InsufficientData(usize),
    #[error("trace has missing samples; fill it before this stage")]
    NotFilled,
    #[error("trace too short: {got} samples, need at least {need}")]
    TooShort { got: usize, need: usize },
}

/// A sample elided as white noise: its ordinal and the spike indicator
/// `alpha = (x_i - x_{i+1}) * (x_i - x_{i-1})`, positive exactly when the
/// value pokes above or below both neighbors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhiteNoiseMark {
    pub index: u64,
    pub alpha: f64,
}

/// Marks every exactly-zero level as missing; a fuel sensor reporting 0 is
/// treated as a dropped reading, not an empty tank.
pub fn zeros_to_missing(trace: &Trace) -> Trace {
    let mut out = trace.clone();
    for s in &mut out.samples {
        if s.level == Some(0.0) {
            s.level = None;
        }
    }
    out
}

/// Fills interior missing runs with the line through the nearest known
/// neighbors on each side: `y = y1 + (y2-y1)/(x2-x1) * (x-x1)`.
///
/// Runs touching a trace boundary are left for [`extrapolate_midpoint`].
/// Errors only when there is nothing to interpolate from at all.
pub fn interpolate_linear(trace: &Trace) -> Result<Trace, PreprocessError> {
    if trace.samples.iter().all(|s| s.level.is_none()) && !trace.is_empty() {
        return Err(PreprocessError::UnboundedGap);
    }
    let mut out = trace.clone();
    let n = out.samples.len();
    let mut pos = 0;
    while pos < n {
        if out.samples[pos].level.is_some() {
            pos += 1;
            continue;
        }
        let run_start = pos;
        let mut run_end = pos;
        while run_end + 1 < n && out.samples[run_end + 1].level.is_none() {
            run_end += 1;
        }
        // Interior run: known neighbors on both sides.
        if run_start > 0 && run_end + 1 < n {
            let left = out.samples[run_start - 1];
            let right = out.samples[run_end + 1];
            let (x1, y1) = (left.index as f64, left.level.unwrap());
            let (x2, y2) = (right.index as f64, right.level.unwrap());
            let slope = (y2 - y1) / (x2 - x1);
            for s in &mut out.samples[run_start..=run_end] {
                s.level = Some(y1 + slope * (s.index as f64 - x1));
            }
        }
        pos = run_end + 1;
    }
    Ok(out)
}

/// Fills boundary missing runs with the midpoint of the two nearest known
/// samples, `y = (y1+y2)/2`, applied repeatedly moving outward until no
/// missing samples remain.
pub fn extrapolate_midpoint(trace: &Trace) -> Result<Trace, PreprocessError> {
    let known = trace.samples.iter().filter(|s| s.level.is_some()).count();
    if trace.samples.iter().any(|s| s.level.is_none()) && known < 2 {
        return Err(PreprocessError::InsufficientData(known));
    }
    let mut out = trace.clone();
    let n = out.samples.len();

    // Head: fill right-to-left so each fill can use the previous one.
    if let Some(first_known) = out.samples.iter().position(|s| s.level.is_some()) {
        for pos in (0..first_known).rev() {
            let y1 = out.samples[pos + 1].level.unwrap();
            let y2 = out.samples[pos + 2].level.unwrap();
            out.samples[pos].level = Some((y1 + y2) / 2.0);
        }
    }
    // Tail: mirror of the head.
    if let Some(last_known) = out.samples.iter().rposition(|s| s.level.is_some()) {
        for pos in last_known + 1..n {
            let y1 = out.samples[pos - 1].level.unwrap();
            let y2 = out.samples[pos - 2].level.unwrap();
            out.samples[pos].level = Some((y1 + y2) / 2.0);
        }
    }
    Ok(out)
}

/// A sample is never elided when its neighbors straddle a jump this large:
/// re-interpolating across a refill-sized step would smear the step into a
/// ramp no detector can see. White-noise fluctuations sit far below this.
const JUMP_GUARD: f64 = 4.0;

/// Removes white noise: interior samples that differ from both neighbors and
/// poke above or below both (`alpha > 0`) are elided and re-interpolated.
/// Repeats `passes` times or until a pass marks nothing.
pub fn remove_white_noise(
    trace: &Trace,
    passes: usize,
) -> Result<(Trace, Vec<WhiteNoiseMark>), PreprocessError> {
    if !trace.is_fully_filled() {
        return Err(PreprocessError::NotFilled);
    }
    let mut cur = trace.clone();
    let mut marks = Vec::new();
    for _ in 0..passes {
        let n = cur.samples.len();
        let mut marked_any = false;
        let mut next = cur.clone();
        for pos in 1..n.saturating_sub(1) {
            let prev = cur.samples[pos - 1].level.unwrap();
            let here = cur.samples[pos].level.unwrap();
            let after = cur.samples[pos + 1].level.unwrap();
            if here == after || here == prev {
                continue;
            }
            if (after - prev).abs() > JUMP_GUARD {
                continue;
            }
            let alpha = (here - after) * (here - prev);
            if alpha > 0.0 {
                marks.push(WhiteNoiseMark {
                    index: cur.samples[pos].index,
                    alpha,
                });
                next.samples[pos].level = None;
                marked_any = true;
            }
        }
        if !marked_any {
            break;
        }
        cur = interpolate_linear(&next)?;
    }
    Ok((cur, marks))
}

/// First differences of the level sequence, `d_i = x_i - x_{i-1}`.
///
/// Exposed as a derived feature; the default pipeline does not consume it.
pub fn difference_feature(trace: &Trace) -> Result<Vec<f64>, PreprocessError> {
    if trace.len() < 2 {
        return Err(PreprocessError::TooShort {
            got: trace.len(),
            need: 2,
        });
    }
    let levels = trace
        .filled_levels()
        .map_err(|_| PreprocessError::NotFilled)?;
    Ok(levels.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Full repair chain: zeros to missing, interior interpolation, boundary
/// extrapolation, then white-noise elision.
pub fn repair(
    trace: &Trace,
    passes: usize,
) -> Result<(Trace, Vec<WhiteNoiseMark>), PreprocessError> {
    let t = zeros_to_missing(trace);
    let t = interpolate_linear(&t)?;
    let t = extrapolate_midpoint(&t)?;
    remove_white_noise(&t, passes)
}
