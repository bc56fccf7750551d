//! CSV ingestion and report persistence.
//!
//! All files are UTF-8 with a one-line header; LF and CRLF both accepted.
//! Numbers are written with Rust's shortest round-trip formatting, so levels
//! survive a load/write cycle bit-exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::evaluation;
use crate::model::{RefillEvent, Sample, Trace, TruthEvent};
use crate::peaks::ConsumptionSegment;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("missing file {path}: {source}")]
    MissingFile {
        path: String,
        source: std::io::Error,
    },
    #[error("line {0}: malformed row")]
    MalformedRow(usize),
    #[error("line {0}: index not strictly increasing")]
    NonMonotoneIndex(usize),
    #[error("write failed: {0}")]
    IoFailure(#[from] std::io::Error),
}

fn read_to_string(path: &Path) -> Result<String, CsvError> {
    fs::read_to_string(path).map_err(|source| CsvError::MissingFile {
        path: path.display().to_string(),
        source,
    })
}

/// Loads an `index,level` trace. Empty level fields become missing samples;
/// literal zeros are kept as-is (zero repair happens in preprocessing).
pub fn load_trace(path: &Path) -> Result<Trace, CsvError> {
    let text = read_to_string(path)?;
    let vehicle_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".to_string());

    let mut samples: Vec<Sample> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        if lineno == 0 {
            continue; // header
        }
        let line = raw.trim_end_matches('\r').trim();
        if line.is_empty() {
            continue;
        }
        let row = lineno + 1;
        let (idx_field, level_field) = line.split_once(',').ok_or(CsvError::MalformedRow(row))?;
        let index: u64 = idx_field
            .trim()
            .parse()
            .map_err(|_| CsvError::MalformedRow(row))?;
        if let Some(last) = samples.last() {
            if index <= last.index {
                return Err(CsvError::NonMonotoneIndex(row));
            }
        }
        let level_field = level_field.trim();
        let level = if level_field.is_empty() {
            None
        } else {
            let v: f64 = level_field
                .parse()
                .map_err(|_| CsvError::MalformedRow(row))?;
            if !v.is_finite() {
                return Err(CsvError::MalformedRow(row));
            }
            Some(v)
        };
        samples.push(Sample { index, level });
    }
    Ok(Trace {
        vehicle_id,
        samples,
    })
}

/// Writes a trace as `index,level`; missing levels become empty fields.
pub fn write_trace(trace: &Trace, path: &Path) -> Result<(), CsvError> {
    let mut out = String::from("index,level\n");
    for s in &trace.samples {
        match s.level {
            Some(v) => out.push_str(&format!("{},{}\n", s.index, v)),
            None => out.push_str(&format!("{},\n", s.index)),
        }
    }
    write_atomic(path, out.as_bytes())
}

pub const REPORT_HEADER: &str =
    "Start_index_refill,Stop_index_refill,Deducted_value,Real_value,Error,Percentage_error";

/// Writes the refill report. Without ground truth only the first three columns
/// are filled; with truth, events are matched greedily by start index and the
/// error columns computed per matched row.
pub fn write_refill_report(
    events: &[RefillEvent],
    truth: Option<&[TruthEvent]>,
    path: &Path,
) -> Result<(), CsvError> {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');

    let truth_volume_by_event: Vec<Option<f64>> = match truth {
        Some(truth) => {
            let (matches, _missed, _spurious) =
                evaluation::match_events(events, truth, evaluation::DEFAULT_MATCH_TOLERANCE);
            let mut volumes = vec![None; events.len()];
            for m in &matches {
                volumes[m.detected_position] = Some(m.truth_volume);
            }
            volumes
        }
        None => vec![None; events.len()],
    };

    for (event, truth_volume) in events.iter().zip(&truth_volume_by_event) {
        match truth_volume {
            Some(tv) => {
                let (error, pct) = evaluation::event_error(event.detected_volume, *tv)
                    .expect("matched truth volumes are positive");
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    event.start_index, event.stop_index, event.detected_volume, tv, error, pct
                ));
            }
            None => out.push_str(&format!(
                "{},{},{},,,\n",
                event.start_index, event.stop_index, event.detected_volume
            )),
        }
    }
    write_atomic(path, out.as_bytes())
}

/// Reads back a refill report written by [`write_refill_report`].
pub fn load_refill_report(path: &Path) -> Result<Vec<RefillEvent>, CsvError> {
    let text = read_to_string(path)?;
    let mut events = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        if lineno == 0 {
            continue;
        }
        let line = raw.trim_end_matches('\r').trim();
        if line.is_empty() {
            continue;
        }
        let row = lineno + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 3 {
            return Err(CsvError::MalformedRow(row));
        }
        let start_index = fields[0]
            .trim()
            .parse()
            .map_err(|_| CsvError::MalformedRow(row))?;
        let stop_index = fields[1]
            .trim()
            .parse()
            .map_err(|_| CsvError::MalformedRow(row))?;
        let detected_volume = fields[2]
            .trim()
            .parse()
            .map_err(|_| CsvError::MalformedRow(row))?;
        events.push(RefillEvent {
            start_index,
            stop_index,
            detected_volume,
        });
    }
    Ok(events)
}

/// Writes ground-truth refills as `index,volume`.
pub fn write_truth(refills: &[TruthEvent], path: &Path) -> Result<(), CsvError> {
    let mut out = String::from("index,volume\n");
    for r in refills {
        out.push_str(&format!("{},{}\n", r.index, r.volume));
    }
    write_atomic(path, out.as_bytes())
}

/// Reads an `index,volume` ground-truth file.
pub fn load_truth(path: &Path) -> Result<Vec<TruthEvent>, CsvError> {
    let text = read_to_string(path)?;
    let mut refills = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        if lineno == 0 {
            continue;
        }
        let line = raw.trim_end_matches('\r').trim();
        if line.is_empty() {
            continue;
        }
        let row = lineno + 1;
        let (idx, vol) = line.split_once(',').ok_or(CsvError::MalformedRow(row))?;
        refills.push(TruthEvent {
            index: idx
                .trim()
                .parse()
                .map_err(|_| CsvError::MalformedRow(row))?,
            volume: vol
                .trim()
                .parse()
                .map_err(|_| CsvError::MalformedRow(row))?,
        });
    }
    Ok(refills)
}

/// Writes consumption segments as `from_index,to_index,consumed_volume`.
pub fn write_consumption(segments: &[ConsumptionSegment], path: &Path) -> Result<(), CsvError> {
    let mut out = String::from("from_index,to_index,consumed_volume\n");
    for s in segments {
        out.push_str(&format!(
            "{},{},{}\n",
            s.from_index, s.to_index, s.consumed_volume
        ));
    }
    write_atomic(path, out.as_bytes())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CsvError> {
    let mut file = fs::File::create(path)?;
    file.write_all(bytes)?;
    Ok(())
}
