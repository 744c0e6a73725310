use alloc::vec::Vec;

use super::{compute_metrics, match_times, Detection, DetectionList, Instrument, MatchCounts};
use crate::model::ActivationCurve;

/// Minimum spacing between two detections of one instrument, in seconds.
pub const DEFAULT_MIN_GAP: f64 = 0.030;

/// Candidate thresholds `0.05, 0.10, ..., 0.95`.
pub fn threshold_grid() -> Vec<f64> {
    (1..20).map(|i| i as f64 / 20.0).collect()
}

/// Frames holding a local maximum strictly above `threshold`. A plateau
/// counts once, at its first frame, when both sides are lower (or the curve
/// ends). A curve that is constant from end to end has no maximum.
fn local_maxima(v: &[f64], threshold: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let n = v.len();
    let mut i = 0;
    while i < n {
        let rising = i == 0 || v[i] > v[i - 1];
        let mut j = i;
        while j + 1 < n && v[j + 1] == v[i] {
            j += 1;
        }
        let whole = i == 0 && j + 1 == n;
        if rising && !whole && v[i] > threshold && (j + 1 == n || v[j + 1] < v[i]) {
            out.push(i);
        }
        i = j + 1;
    }
    out
}

/// Converts an activation curve into onsets: local maxima above
/// `threshold`, accepted in order of decreasing score unless closer than
/// `min_gap` to an already accepted peak. Times are frame centers.
pub fn pick_peaks(curve: &ActivationCurve, instrument: Instrument, threshold: f64, min_gap: f64) -> DetectionList {
    debug_assert!(min_gap >= 0.0);
    let v = &curve.values;
    let mut cands = local_maxima(v, threshold);
    cands.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    // 1 ns of slack keeps exact multiples of the hop on the accepting side
    let gap_frames = |a: usize, b: usize| a.abs_diff(b) as f64 * curve.hop_seconds + 1e-9 >= min_gap;
    let mut kept: Vec<usize> = Vec::new();
    for c in cands {
        if kept.iter().all(|&k| gap_frames(c, k)) {
            kept.push(c);
        }
    }
    DetectionList::new(
        kept.into_iter().map(|f| Detection { time: curve.time(f), instrument, score: v[f].clamp(0.0, 1.0) }).collect(),
    )
}

/// Validation material for threshold selection: a curve with the
/// ground-truth onset times of the same instrument.
#[derive(Debug, Clone, Copy)]
pub struct ScoredCurve<'a> {
    pub curve: &'a ActivationCurve,
    pub truths: &'a [f64],
}

/// Counts pooled over every curve at one threshold.
pub fn pooled_counts(curves: &[ScoredCurve<'_>], threshold: f64, min_gap: f64, tol: f64) -> MatchCounts {
    let mut total = MatchCounts::default();
    for c in curves {
        let det = pick_peaks(c.curve, Instrument::Bd, threshold, min_gap).times(Instrument::Bd);
        total += match_times(&det, c.truths, tol);
    }
    total
}

/// Grid-searches the threshold with the best pooled F-measure (the lowest
/// one on ties). Returns the threshold and its pooled counts.
pub fn select_threshold(curves: &[ScoredCurve<'_>], grid: &[f64], min_gap: f64, tol: f64) -> (f64, MatchCounts) {
    let mut best = (grid.first().copied().unwrap_or(0.5), MatchCounts::default());
    let mut best_f = -1.0;
    for &t in grid {
        let counts = pooled_counts(curves, t, min_gap, tol);
        let f = compute_metrics(counts).f_measure;
        if f > best_f {
            best_f = f;
            best = (t, counts);
        }
    }
    best
}
