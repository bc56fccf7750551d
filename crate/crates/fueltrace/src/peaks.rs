//! Rise detection and the three peak-validation stages.

use thiserror::Error;

use crate::model::CandidatePeak;

#[derive(Debug, Error, PartialEq)]
pub enum PeaksError {
    #[error("index {i} outside interior of {n}-sample sequence")]
    IndexOutOfRange { i: usize, n: usize },
    #[error("sequence too short: {got} samples, need at least {need}")]
    TooShort { got: usize, need: usize },
}

/// Which transforms produced a branch's peak set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchId {
    Cluster,
    ClusterWavelet,
    ClusterMedian,
    ClusterMedianWavelet,
}

impl std::fmt::Display for BranchId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            BranchId::Cluster => "cluster",
            BranchId::ClusterWavelet => "cluster+wavelet",
            BranchId::ClusterMedian => "cluster+median",
            BranchId::ClusterMedianWavelet => "cluster+median+wavelet",
        };
        f.write_str(name)
    }
}

/// Peaks detected on one transform branch.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchOutput {
    pub branch_id: BranchId,
    pub peaks: Vec<CandidatePeak>,
    /// True for every branch that ran the wavelet stage and undid its lag.
    pub shift_compensated: bool,
}

/// Consumption between two consecutive refills.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsumptionSegment {
    pub from_index: u64,
    pub to_index: u64,
    pub consumed_volume: f64,
}

/// Three-point simple moving average centered on interior index `i`.
pub fn sma3(values: &[f64], i: usize) -> Result<f64, PeaksError> {
    let n = values.len();
    if i == 0 || i + 1 >= n {
        return Err(PeaksError::IndexOutOfRange { i, n });
    }
    Ok((values[i - 1] + values[i] + values[i + 1]) / 3.0)
}

/// First position at or after `from` where three consecutive samples vary by
/// less than `deviation`; the trace end if it never stabilizes.
pub(crate) fn stabilization_index(values: &[f64], from: usize, deviation: f64) -> usize {
    let n = values.len();
    for j in from..n {
        let hi = (j + 3).min(n);
        let window = &values[j..hi];
        let max = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = window.iter().cloned().fold(f64::INFINITY, f64::min);
        if max - min < deviation {
            return j;
        }
    }
    n - 1
}

/// Scans for upward rises: position `i` is a rise point when the next sample
/// exceeds the centered moving average by more than `deviation`. Consecutive
/// rise points coalesce into one candidate anchored at the first, with
/// `pre_level` just before the rise and `post_level` at the first stabilized
/// sample after it. Only upward events (positive volume) are returned.
pub fn detect_peaks(values: &[f64], deviation: f64) -> Result<Vec<CandidatePeak>, PeaksError> {
    let n = values.len();
    if n < 3 {
        return Err(PeaksError::TooShort { got: n, need: 3 });
    }
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        let mean = (values[i - 1] + values[i] + values[i + 1]) / 3.0;
        if values[i + 1] - mean <= deviation {
            i += 1;
            continue;
        }
        let rise_start = i;
        while i + 1 < n {
            let mean = (values[i - 1] + values[i] + values[i + 1]) / 3.0;
            if values[i + 1] - mean > deviation {
                i += 1;
            } else {
                break;
            }
        }
        let stop = stabilization_index(values, rise_start + 1, deviation);
        let peak = CandidatePeak {
            index: rise_start as u64,
            pre_level: values[rise_start],
            post_level: values[stop],
        };
        if peak.volume() > 0.0 {
            peaks.push(peak);
        }
    }
    Ok(peaks)
}

/// Keeps the peaks of branch `a` that pair with a peak of branch `b` within
/// `tolerance` index units. Pairing is greedy closest-first with each peak
/// matched at most once; levels come from branch `a`.
pub fn validate_cross_branch(
    a: &BranchOutput,
    b: &BranchOutput,
    tolerance: u64,
) -> Vec<CandidatePeak> {
    let mut pairs: Vec<(u64, usize, usize)> = Vec::new();
    for (ai, ap) in a.peaks.iter().enumerate() {
        for (bi, bp) in b.peaks.iter().enumerate() {
            let dist = ap.index.abs_diff(bp.index);
            if dist <= tolerance {
                pairs.push((dist, ai, bi));
            }
        }
    }
    pairs.sort_unstable();
    let mut a_used = vec![false; a.peaks.len()];
    let mut b_used = vec![false; b.peaks.len()];
    let mut kept = Vec::new();
    for (_, ai, bi) in pairs {
        if a_used[ai] || b_used[bi] {
            continue;
        }
        a_used[ai] = true;
        b_used[bi] = true;
        kept.push(a.peaks[ai]);
    }
    kept.sort_by_key(|p| p.index);
    kept
}

/// Final triple rule over post-rise levels: an interior peak is dropped when
/// both neighbor gaps are below `final_distance` and the two neighbor level
/// differences nearly cancel (|A - B| < final_difference). One left-to-right
/// pass with the original neighbors; the first and last peaks always survive.
pub fn validate_final(
    peaks: &[CandidatePeak],
    final_distance: u64,
    final_difference: f64,
) -> Vec<CandidatePeak> {
    if peaks.len() < 3 {
        return peaks.to_vec();
    }
    let mut keep = vec![true; peaks.len()];
    for i in 1..peaks.len() - 1 {
        let prev = &peaks[i - 1];
        let here = &peaks[i];
        let next = &peaks[i + 1];
        let gap_prev = here.index.abs_diff(prev.index);
        let gap_next = next.index.abs_diff(here.index);
        let a = prev.post_level - here.post_level;
        let b = here.post_level - next.post_level;
        if gap_prev < final_distance
            && gap_next < final_distance
            && (a - b).abs() < final_difference
        {
            keep[i] = false;
        }
    }
    peaks
        .iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(*p))
        .collect()
}
