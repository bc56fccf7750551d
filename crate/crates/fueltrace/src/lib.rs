//! Noise removal and refill extraction for fuel-level sensor traces.
//!
//! Vehicle fuel sensors produce time series that mix slow consumption drifts,
//! sharp refill steps, engine-off plateaus, and heavy noise (white noise,
//! impulse spikes, stuck readings, dropped samples). This crate cleans such
//! traces and extracts validated refill events plus the consumption between
//! them, using a staged pipeline:
//!
//! 1. [`preprocess`] — zero-row repair, linear interpolation, midpoint
//!    extrapolation, iterative white-noise elision.
//! 2. [`clustering`] — windowed hybrid clustering (spectral or agglomerative,
//!    chosen per window by a standard-deviation threshold) that isolates and
//!    removes outlier clusters.
//! 3. [`wavelet`] — discrete wavelet shrinkage denoising with cross-correlation
//!    shift compensation.
//! 4. [`median`] — sliding-window median smoothing.
//! 5. [`peaks`] / [`pipeline`] — moving-average rise detection, cross-branch
//!    peak validation, final triple-rule filtering, event extraction.
//! 6. [`evaluation`] — per-event errors, R², RMSE against ground truth.
//! 7. [`synth`] — labeled synthetic trace generation for benchmarking.
//!
//! All operations are pure functions over immutable inputs and are safe to run
//! concurrently on distinct traces.

pub mod clustering;
pub mod evaluation;
pub mod io;
pub mod median;
pub mod model;
pub mod peaks;
pub mod pipeline;
pub mod preprocess;
pub mod synth;
pub mod wavelet;

pub use model::{CandidatePeak, PipelineConfig, RefillEvent, Sample, Trace, TruthEvent};
pub use pipeline::run_pipeline;
