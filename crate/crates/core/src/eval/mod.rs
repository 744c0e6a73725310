//! Onset evaluation: peak picking, tolerance matching, precision / recall /
//! F-measure and the cross-database validation protocol.

mod annotation;
mod crossval;
mod matching;
mod metrics;
mod peaks;
mod strategy;

pub use annotation::{Detection, DetectionList, Instrument, Onset, OnsetAnnotation};
pub use crossval::{
    aggregate, run_crossval, run_job, test_counts, train_job, validation_score, CrossValJob, CrossValPlan, EvalConfig,
    Fold, JobOutcome, StrategyReport, TrackData, TrackInfo, DEFAULT_VALIDATION_FRACTION,
};
pub use matching::{match_onsets, match_times, MatchCounts, DEFAULT_TOLERANCE};
pub use metrics::{compute_metrics, Metrics, Scores};
pub use peaks::{pick_peaks, pooled_counts, select_threshold, threshold_grid, ScoredCurve, DEFAULT_MIN_GAP};
pub use strategy::Strategy;
