//! Onset text files: one event per line, `time_seconds<TAB>instrument_label`.
//!
//! Blank lines and lines starting with `#` are ignored, and any whitespace
//! separates the two fields. Annotation times are written in the shortest
//! form that reads back to the same `f64`; detections are written to the
//! millisecond.

use std::fmt::Write;
use std::path::Path;

use drumaug_core::eval::{DetectionList, Onset, OnsetAnnotation};

use crate::audio::file_id;
use crate::error::{read, write_atomic, Error, Result};

pub fn parse_annotation(text: &str, source_id: &str) -> std::result::Result<OnsetAnnotation, String> {
    let mut events = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(t), Some(label)) = (fields.next(), fields.next()) else {
            return Err(format!("line {}: expected time and instrument", n + 1));
        };
        let time: f64 = t.parse().map_err(|_| format!("line {}: bad time {t:?}", n + 1))?;
        let instrument = label.parse().map_err(|e| format!("line {}: {e}", n + 1))?;
        events.push(Onset { time, instrument });
    }
    OnsetAnnotation::new(events, source_id).map_err(|e| e.to_string())
}

/// Reads an annotation file; the source id is the file name without extension.
pub fn read_annotation(path: &Path) -> Result<OnsetAnnotation> {
    let bytes = read(path)?;
    let text = String::from_utf8(bytes).map_err(|_| Error::format(path, "not UTF-8"))?;
    parse_annotation(&text, &file_id(path)).map_err(|m| Error::format(path, m))
}

pub fn format_annotation(a: &OnsetAnnotation) -> String {
    let mut out = String::new();
    for e in a.events() {
        let _ = writeln!(out, "{}\t{}", e.time, e.instrument);
    }
    out
}

pub fn format_detections(d: &DetectionList) -> String {
    let mut out = String::new();
    for e in d.detections() {
        let _ = writeln!(out, "{:.3}\t{}", e.time, e.instrument);
    }
    out
}

pub fn write_annotation(path: &Path, a: &OnsetAnnotation) -> Result<()> {
    write_atomic(path, format_annotation(a).as_bytes())
}
