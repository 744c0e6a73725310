use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

/// The three drum instruments transcribed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Instrument {
    /// Bass drum.
    Bd,
    /// Snare drum.
    Sd,
    /// Hi-hat.
    Hh,
}

impl Instrument {
    pub const ALL: [Instrument; 3] = [Instrument::Bd, Instrument::Sd, Instrument::Hh];

    pub fn label(self) -> &'static str {
        match self {
            Instrument::Bd => "bd",
            Instrument::Sd => "sd",
            Instrument::Hh => "hh",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Instrument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Instrument {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bd" | "kd" | "kick" => Ok(Instrument::Bd),
            "sd" | "snare" => Ok(Instrument::Sd),
            "hh" | "hihat" | "hi-hat" => Ok(Instrument::Hh),
            other => Err(Error::InvalidAnnotation(format!("unknown instrument label {other:?}"))),
        }
    }
}

/// An annotated drum onset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Onset {
    pub time: f64,
    pub instrument: Instrument,
}

/// Ground-truth onsets of one track, sorted by time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OnsetAnnotation {
    events: Vec<Onset>,
    source_id: String,
}

impl OnsetAnnotation {
    /// Sorts the events by time (stably); rejects negative or non-finite times.
    pub fn new(mut events: Vec<Onset>, source_id: impl Into<String>) -> Result<Self> {
        if let Some(e) = events.iter().find(|e| !(e.time.is_finite() && e.time >= 0.0)) {
            return Err(Error::InvalidAnnotation(format!("invalid onset time {}", e.time)));
        }
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        Ok(Self { events, source_id: source_id.into() })
    }

    pub fn events(&self) -> &[Onset] {
        &self.events
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Sorted onset times of one instrument.
    pub fn times(&self, instrument: Instrument) -> Vec<f64> {
        self.events.iter().filter(|e| e.instrument == instrument).map(|e| e.time).collect()
    }

    /// Every time multiplied by `scale`, under a new identity.
    pub fn scaled(&self, scale: f64, source_id: impl Into<String>) -> Self {
        Self {
            events: self.events.iter().map(|e| Onset { time: e.time * scale, instrument: e.instrument }).collect(),
            source_id: source_id.into(),
        }
    }
}

/// A detected onset with the detector's score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub time: f64,
    pub instrument: Instrument,
    pub score: f64,
}

/// Detections sorted by time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectionList {
    detections: Vec<Detection>,
}

impl DetectionList {
    pub fn new(mut detections: Vec<Detection>) -> Self {
        detections.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.instrument.cmp(&b.instrument)));
        Self { detections }
    }

    pub fn detections(&self) -> &[Detection] {
        &self.detections
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }

    pub fn times(&self, instrument: Instrument) -> Vec<f64> {
        self.detections.iter().filter(|d| d.instrument == instrument).map(|d| d.time).collect()
    }

    pub fn merge(lists: impl IntoIterator<Item = DetectionList>) -> Self {
        Self::new(lists.into_iter().flat_map(|l| l.detections).collect())
    }
}
