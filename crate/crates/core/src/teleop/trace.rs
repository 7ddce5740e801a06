use super::frame::TendonFrame;
use crate::arm_model::TENDONS;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("trace I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace line {line}: {message}")]
    Malformed { line: u64, message: String },
}

/// Column names of a trace file.
pub fn trace_header() -> Vec<String> {
    let mut h = vec!["seq".to_string(), "t_us".to_string()];
    h.extend((1..=TENDONS).map(|k| format!("dl_{k}")));
    h.extend((1..=TENDONS).map(|k| format!("i_{k}")));
    h
}

// 9 significant digits, enough to round-trip any f32
fn fmt_f32(v: f32) -> String {
    format!("{v:.8e}")
}

fn csv_error(e: csv::Error) -> TraceError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => TraceError::Io(io),
        kind => TraceError::Malformed {
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Writes frames as CSV, one per line after the header.
pub fn record_trace<W: Write>(frames: &[TendonFrame], writer: W) -> Result<(), TraceError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(trace_header()).map_err(csv_error)?;
    for f in frames {
        let mut row = Vec::with_capacity(2 + 2 * TENDONS);
        row.push(f.seq.to_string());
        row.push(f.t_us.to_string());
        row.extend(f.displacements.iter().map(|v| fmt_f32(*v)));
        row.extend(f.currents.iter().map(|v| fmt_f32(*v)));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(path: &Path, frames: &[TendonFrame]) -> Result<(), TraceError> {
    record_trace(frames, File::create(path)?)
}

/// Parses a trace. An empty input or a lone header yields no frames.
pub fn read_trace<R: Read>(reader: R) -> Result<Vec<TendonFrame>, TraceError> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
    let expected = trace_header();
    let mut frames = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut first = true;
    while r.read_record(&mut record).map_err(csv_error)? {
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let malformed = |message: String| TraceError::Malformed { line, message };
        if first {
            first = false;
            if record.iter().ne(expected.iter().map(String::as_str)) {
                return Err(malformed(format!("expected header {}", expected.join(","))));
            }
            continue;
        }
        if record.len() != expected.len() {
            return Err(malformed(format!("expected {} fields, found {}", expected.len(), record.len())));
        }
        let field = |k: usize| record.get(k).unwrap().trim();
        let seq = field(0).parse::<u32>().map_err(|e| malformed(format!("seq: {e}")))?;
        let t_us = field(1).parse::<u64>().map_err(|e| malformed(format!("t_us: {e}")))?;
        let mut values = [0f32; 2 * TENDONS];
        for (k, v) in values.iter_mut().enumerate() {
            *v = field(2 + k)
                .parse::<f32>()
                .map_err(|e| malformed(format!("{}: {e}", expected[2 + k])))?;
        }
        frames.push(TendonFrame {
            seq,
            t_us,
            displacements: values[..TENDONS].try_into().unwrap(),
            currents: values[TENDONS..].try_into().unwrap(),
        });
    }
    Ok(frames)
}

/// Frames read back from a trace file, in file order.
pub type TraceReplay = std::vec::IntoIter<TendonFrame>;

pub fn replay_trace(path: &Path) -> Result<TraceReplay, TraceError> {
    Ok(read_trace(File::open(path)?)?.into_iter())
}
