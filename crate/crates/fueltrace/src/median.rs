//! Sliding-window median smoothing.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MedianError {
    #[error("median window must be odd, got {0}")]
    EvenWindow(usize),
    #[error("median window must be at least 3, got {0}")]
    WindowTooSmall(usize),
    #[error("empty input")]
    EmptyInput,
}

/// Replaces each value with the median of its window, `output[i] =
/// median(values[i-h ..= i+h])` with `h = (window-1)/2`.
///
/// Boundaries truncate the window symmetrically (half-width `min(i, n-1-i,
/// h)`) rather than padding, so windows stay odd, every output value is a
/// member of its window, and no synthetic values enter the output. Monotone
/// sequences are exact fixed points.
pub fn median_filter(values: &[f64], window: usize) -> Result<Vec<f64>, MedianError> {
    if window.is_multiple_of(2) {
        return Err(MedianError::EvenWindow(window));
    }
    if window < 3 {
        return Err(MedianError::WindowTooSmall(window));
    }
    if values.is_empty() {
        return Err(MedianError::EmptyInput);
    }
    let n = values.len();
    let h = (window - 1) / 2;
    let mut out = Vec::with_capacity(n);
    let mut scratch: Vec<f64> = Vec::with_capacity(window);
    for i in 0..n {
        let half = i.min(n - 1 - i).min(h);
        scratch.clear();
        scratch.extend_from_slice(&values[i - half..=i + half]);
        scratch.sort_by(|a, b| a.partial_cmp(b).expect("levels are finite"));
        out.push(scratch[scratch.len() / 2]);
    }
    Ok(out)
}
