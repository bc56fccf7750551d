//! End-to-end wiring: repair, cluster, then four detection branches whose
//! peak sets must agree before an event is accepted.
//!
//! Branch layout after clustering:
//!   (1) peaks on the clustered series,
//!   (2) peaks on wavelet-denoised clustered data (shift-compensated),
//!   (3) peaks on median-filtered clustered data,
//!   (4) peaks on median-filtered then wavelet-denoised data (compensated).
//! The first validation intersects (1) with (2), the second intersects (3)
//! with (4), and the final candidate set intersects both survivor sets before
//! the triple rule runs. Event levels always come from branch (1), the least
//! transformed series.

use rayon::join;
use thiserror::Error;

use crate::clustering::{self, ClusterError};
use crate::median::{self, MedianError};
use crate::model::{PipelineConfig, RefillEvent, Trace};
use crate::peaks::{self, BranchId, BranchOutput, ConsumptionSegment, PeaksError};
use crate::preprocess::{self, PreprocessError};
use crate::wavelet::{self, WaveletError};

/// Default search half-width for wavelet shift compensation, in samples.
pub const SHIFT_MAX_LAG: usize = 6000;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("trace too short: {got} samples, need at least {need}")]
    TooShort { got: usize, need: usize },
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Wavelet(#[from] WaveletError),
    #[error(transparent)]
    Median(#[from] MedianError),
    #[error(transparent)]
    Peaks(#[from] PeaksError),
    #[error("invalid config: {0}")]
    Config(#[from] crate::model::ConfigError),
}

/// Every intermediate the pipeline produces, for stage dumps and diagnostics.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub events: Vec<RefillEvent>,
    pub segments: Vec<ConsumptionSegment>,
    pub preprocessed: Trace,
    pub clustered: Trace,
    /// Wavelet-denoised clustered series, shift-compensated (branch 2).
    pub wavelet_series: Vec<f64>,
    /// Median-filtered clustered series (branch 3).
    pub median_series: Vec<f64>,
    /// Median + wavelet series, shift-compensated (branch 4).
    pub final_series: Vec<f64>,
    pub branches: Vec<BranchOutput>,
    pub wavelet_lag: i64,
    pub median_wavelet_lag: i64,
}

fn denoise_and_align(
    values: &[f64],
    config: &PipelineConfig,
) -> Result<(Vec<f64>, i64), WaveletError> {
    let denoised = wavelet::denoise(values, config)?;
    let max_lag = SHIFT_MAX_LAG.min(values.len() / 2 - 1);
    let lag = wavelet::align_shift(values, &denoised, max_lag)?;
    Ok((wavelet::shift_series(&denoised, -lag), lag))
}

/// Runs the full pipeline and keeps every stage output.
pub fn run_pipeline_detailed(
    trace: &Trace,
    config: &PipelineConfig,
) -> Result<PipelineOutput, PipelineError> {
    config.validate()?;
    if trace.len() < 3 {
        return Err(PipelineError::TooShort {
            got: trace.len(),
            need: 3,
        });
    }
    // The wavelet stage needs room for its decomposition depth and the shift
    // search needs a two-sample margin.
    let min_len = (1usize << config.wavelet_levels).max(8);
    if trace.len() < min_len {
        return Err(PipelineError::TooShort {
            got: trace.len(),
            need: min_len,
        });
    }

    let (preprocessed, _marks) = preprocess::repair(trace, config.white_noise_passes)?;
    let clustered = clustering::hybrid_cluster_denoise(&preprocessed, config)?;
    let values = clustered
        .filled_levels()
        .expect("clustering refills every sample");

    let deviation = config.peak_deviation;
    // Branches (1,2) and (3,4) run as two independent chains.
    let (chain_a, chain_b) = join(
        || -> Result<_, PipelineError> {
            let b1 = BranchOutput {
                branch_id: BranchId::Cluster,
                peaks: peaks::detect_peaks(&values, deviation)?,
                shift_compensated: false,
            };
            let (wavelet_series, wavelet_lag) = denoise_and_align(&values, config)?;
            let b2 = BranchOutput {
                branch_id: BranchId::ClusterWavelet,
                peaks: peaks::detect_peaks(&wavelet_series, deviation)?,
                shift_compensated: true,
            };
            Ok((b1, b2, wavelet_series, wavelet_lag))
        },
        || -> Result<_, PipelineError> {
            let median_series = median::median_filter(&values, config.median_window)?;
            let b3 = BranchOutput {
                branch_id: BranchId::ClusterMedian,
                peaks: peaks::detect_peaks(&median_series, deviation)?,
                shift_compensated: false,
            };
            let (final_series, median_wavelet_lag) = denoise_and_align(&median_series, config)?;
            let b4 = BranchOutput {
                branch_id: BranchId::ClusterMedianWavelet,
                peaks: peaks::detect_peaks(&final_series, deviation)?,
                shift_compensated: true,
            };
            Ok((b3, b4, median_series, final_series, median_wavelet_lag))
        },
    );
    let (b1, b2, wavelet_series, wavelet_lag) = chain_a?;
    let (b3, b4, median_series, final_series, median_wavelet_lag) = chain_b?;

    let first = peaks::validate_cross_branch(&b1, &b2, config.match_tolerance);
    let second = peaks::validate_cross_branch(&b3, &b4, config.match_tolerance);
    let survivors_first = BranchOutput {
        branch_id: BranchId::Cluster,
        peaks: first,
        shift_compensated: false,
    };
    let survivors_second = BranchOutput {
        branch_id: BranchId::ClusterMedian,
        peaks: second,
        shift_compensated: false,
    };
    let both =
        peaks::validate_cross_branch(&survivors_first, &survivors_second, config.match_tolerance);
    let validated = peaks::validate_final(&both, config.final_distance, config.final_difference);

    // Events carry trace ordinals; detection worked in positions.
    let events: Vec<RefillEvent> = validated
        .iter()
        .map(|p| {
            let pos = p.index as usize;
            let stop_pos = peaks::stabilization_index(&values, pos + 1, deviation);
            RefillEvent {
                start_index: clustered.samples[pos].index,
                stop_index: clustered.samples[stop_pos].index,
                detected_volume: p.volume(),
            }
        })
        .collect();

    let segments: Vec<ConsumptionSegment> = validated
        .windows(2)
        .zip(events.windows(2))
        .filter(|(_, event_pair)| event_pair[0].stop_index < event_pair[1].start_index)
        .map(|(peak_pair, event_pair)| ConsumptionSegment {
            from_index: event_pair[0].stop_index,
            to_index: event_pair[1].start_index,
            consumed_volume: (peak_pair[0].post_level - peak_pair[1].pre_level).max(0.0),
        })
        .collect();

    Ok(PipelineOutput {
        events,
        segments,
        preprocessed,
        clustered,
        wavelet_series,
        median_series,
        final_series,
        branches: vec![b1, b2, b3, b4],
        wavelet_lag,
        median_wavelet_lag,
    })
}

/// Runs the full pipeline, returning refill events and the consumption
/// between consecutive refills.
pub fn run_pipeline(
    trace: &Trace,
    config: &PipelineConfig,
) -> Result<(Vec<RefillEvent>, Vec<ConsumptionSegment>), PipelineError> {
    let out = run_pipeline_detailed(trace, config)?;
    Ok((out.events, out.segments))
}
