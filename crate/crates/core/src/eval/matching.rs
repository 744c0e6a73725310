use core::ops::{Add, AddAssign};

use super::{DetectionList, Instrument, OnsetAnnotation};

/// Evaluation tolerance around each annotated onset, in seconds.
pub const DEFAULT_TOLERANCE: f64 = 0.050;

// Absorbs rounding when a distance sits exactly on the tolerance.
const TOLERANCE_SLACK: f64 = 1e-9;

/// True positive, false positive and false negative counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatchCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Add for MatchCounts {
    type Output = MatchCounts;
    fn add(self, o: MatchCounts) -> MatchCounts {
        MatchCounts { tp: self.tp + o.tp, fp: self.fp + o.fp, fn_: self.fn_ + o.fn_ }
    }
}

impl AddAssign for MatchCounts {
    fn add_assign(&mut self, o: MatchCounts) {
        *self = *self + o;
    }
}

/// Maximum one-to-one matching between sorted detection and truth times,
/// pairing only within `|d - t| <= tol`.
///
/// Truths are visited in time order and each takes the earliest unused
/// detection inside its window. All windows have the same width, so this
/// sweep yields a maximum matching.
pub fn match_times(detections: &[f64], truths: &[f64], tol: f64) -> MatchCounts {
    debug_assert!(detections.windows(2).all(|w| w[0] <= w[1]));
    debug_assert!(truths.windows(2).all(|w| w[0] <= w[1]));
    let tol = tol + TOLERANCE_SLACK;
    let mut j = 0;
    let mut tp = 0;
    for &t in truths {
        while j < detections.len() && detections[j] < t - tol {
            j += 1;
        }
        if j < detections.len() && detections[j] <= t + tol {
            tp += 1;
            j += 1;
        }
    }
    MatchCounts { tp, fp: detections.len() - tp, fn_: truths.len() - tp }
}

/// Per-instrument counts, indexed by [`Instrument::index`].
pub fn match_onsets(detections: &DetectionList, truth: &OnsetAnnotation, tol: f64) -> [MatchCounts; 3] {
    Instrument::ALL.map(|inst| match_times(&detections.times(inst), &truth.times(inst), tol))
}
