//! Batch CLI: generate synthetic traces, run the denoising pipeline, and
//! score detection reports against ground truth.
//!
//! Exit codes: 0 success, 1 configuration/flag errors, 2 data errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fueltrace::evaluation;
use fueltrace::io;
use fueltrace::model::{PipelineConfig, Trace};
use fueltrace::pipeline;
use fueltrace::synth::{self, NoiseProfile};

const EXIT_CONFIG: u8 = 1;
const EXIT_DATA: u8 = 2;

#[derive(Parser)]
#[command(
    name = "fueltrace",
    about = "Fuel-trace denoising and refill extraction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the denoising pipeline over a trace CSV and write reports.
    Run {
        /// Input trace CSV (`index,level`).
        trace: PathBuf,
        /// Pipeline config as flat `key = value` lines; defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (created if absent).
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Generate a synthetic trace plus its ground-truth refill labels.
    Synth {
        /// Trace length in samples.
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        /// Number of refills to inject.
        #[arg(long, default_value_t = 37)]
        refills: usize,
        /// Generator seed (signal and noise).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Tank capacity in liters.
        #[arg(long, default_value_t = 2000.0)]
        tank: f64,
        /// Gaussian noise sigma, liters.
        #[arg(long, default_value_t = 0.0)]
        white_sigma: f64,
        /// Impulse spike probability per sample.
        #[arg(long, default_value_t = 0.0)]
        spike_prob: f64,
        /// Spike magnitude bound, liters.
        #[arg(long, default_value_t = 20.0)]
        spike_max: f64,
        /// Stuck-run probability per candidate segment.
        #[arg(long, default_value_t = 0.0)]
        stuck_prob: f64,
        /// Dropped-reading probability per sample.
        #[arg(long, default_value_t = 0.0)]
        zero_prob: f64,
        /// Output directory (created if absent).
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Score a refill report against a ground-truth CSV.
    Score {
        /// Refill report CSV produced by `run`.
        report: PathBuf,
        /// Ground-truth CSV (`index,volume`).
        truth: PathBuf,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { trace, config, out } => cmd_run(&trace, config.as_deref(), &out),
        Command::Synth {
            n,
            refills,
            seed,
            tank,
            white_sigma,
            spike_prob,
            spike_max,
            stuck_prob,
            zero_prob,
            out,
        } => {
            let profile = NoiseProfile {
                white_sigma,
                spike_prob,
                spike_max,
                stuck_prob,
                stuck_len: (20, 80),
                zero_prob,
                seed,
            };
            cmd_synth(n, refills, tank, seed, &profile, &out)
        }
        Command::Score { report, truth } => cmd_score(&report, &truth),
    }
}

fn cmd_run(trace_path: &Path, config_path: Option<&Path>, out_dir: &Path) -> ExitCode {
    let config = match config_path {
        None => PipelineConfig::default(),
        Some(path) => {
            let text = match fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read config {}: {e}", path.display());
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            match PipelineConfig::parse(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: config {}: {e}", path.display());
                    return ExitCode::from(EXIT_CONFIG);
                }
            }
        }
    };

    let trace = match io::load_trace(trace_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: trace {}: {e}", trace_path.display());
            return ExitCode::from(EXIT_DATA);
        }
    };

    let output = match pipeline::run_pipeline_detailed(&trace, &config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: pipeline failed: {e}");
            return ExitCode::from(EXIT_DATA);
        }
    };

    if let Err(e) = fs::create_dir_all(out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return ExitCode::from(EXIT_DATA);
    }
    let write =
        |name: &str, action: &dyn Fn(&Path) -> Result<(), io::CsvError>| -> Result<(), String> {
            let path = out_dir.join(name);
            action(&path).map_err(|e| format!("{}: {e}", path.display()))
        };

    let stage = |t: &Trace, series: &[f64]| t.with_levels(series);
    let result = write("refills.csv", &|p| {
        io::write_refill_report(&output.events, None, p)
    })
    .and_then(|_| {
        write("consumption.csv", &|p| {
            io::write_consumption(&output.segments, p)
        })
    })
    .and_then(|_| {
        write("stage_preprocessed.csv", &|p| {
            io::write_trace(&output.preprocessed, p)
        })
    })
    .and_then(|_| {
        write("stage_clustered.csv", &|p| {
            io::write_trace(&output.clustered, p)
        })
    })
    .and_then(|_| {
        write("stage_wavelet.csv", &|p| {
            io::write_trace(&stage(&output.clustered, &output.wavelet_series), p)
        })
    })
    .and_then(|_| {
        write("stage_median.csv", &|p| {
            io::write_trace(&stage(&output.clustered, &output.median_series), p)
        })
    })
    .and_then(|_| {
        write("stage_final.csv", &|p| {
            io::write_trace(&stage(&output.clustered, &output.final_series), p)
        })
    })
    .and_then(|_| {
        let summary = run_summary(&trace, &config, &output);
        let path = out_dir.join("summary.txt");
        fs::write(&path, summary).map_err(|e| format!("{}: {e}", path.display()))
    });

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: write failed: {msg}");
            ExitCode::from(EXIT_DATA)
        }
    }
}

fn run_summary(
    trace: &Trace,
    config: &PipelineConfig,
    output: &pipeline::PipelineOutput,
) -> String {
    let mut s = String::new();
    s.push_str(&format!("vehicle_id: {}\n", trace.vehicle_id));
    s.push_str(&format!("samples: {}\n", trace.len()));
    s.push_str(&format!("events: {}\n", output.events.len()));
    s.push_str(&format!(
        "consumption_segments: {}\n",
        output.segments.len()
    ));
    s.push_str(&format!("wavelet_lag: {}\n", output.wavelet_lag));
    s.push_str(&format!(
        "median_wavelet_lag: {}\n",
        output.median_wavelet_lag
    ));
    for branch in &output.branches {
        s.push_str(&format!(
            "branch_{}_peaks: {}\n",
            branch.branch_id,
            branch.peaks.len()
        ));
    }
    s.push_str(&format!("config: {config:?}\n"));
    s
}

fn cmd_synth(
    n: usize,
    refills: usize,
    tank: f64,
    seed: u64,
    profile: &NoiseProfile,
    out_dir: &Path,
) -> ExitCode {
    let truth = match synth::generate_clean(n, tank, refills, seed) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let trace = synth::corrupt(&truth, profile);
    if let Err(e) = fs::create_dir_all(out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return ExitCode::from(EXIT_DATA);
    }
    let trace_path = out_dir.join("trace.csv");
    let truth_path = out_dir.join("truth.csv");
    if let Err(e) = io::write_trace(&trace, &trace_path) {
        eprintln!("error: {}: {e}", trace_path.display());
        return ExitCode::from(EXIT_DATA);
    }
    if let Err(e) = io::write_truth(&truth.refills, &truth_path) {
        eprintln!("error: {}: {e}", truth_path.display());
        return ExitCode::from(EXIT_DATA);
    }
    ExitCode::SUCCESS
}

fn cmd_score(report_path: &Path, truth_path: &Path) -> ExitCode {
    let detected = match io::load_refill_report(report_path) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: report {}: {e}", report_path.display());
            return ExitCode::from(EXIT_DATA);
        }
    };
    let truth = match io::load_truth(truth_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: truth {}: {e}", truth_path.display());
            return ExitCode::from(EXIT_DATA);
        }
    };
    let report = evaluation::score(&detected, &truth, evaluation::DEFAULT_MATCH_TOLERANCE);
    print!("{}", report.to_text());
    ExitCode::SUCCESS
}
