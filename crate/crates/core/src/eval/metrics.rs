use super::{Instrument, MatchCounts};

/// Recall, precision and F-measure.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scores {
    pub recall: f64,
    pub precision: f64,
    pub f_measure: f64,
}

impl Scores {
    /// Elementwise mean; all zeros for an empty input.
    pub fn mean<'a>(items: impl IntoIterator<Item = &'a Scores>) -> Scores {
        let mut acc = Scores::default();
        let mut n = 0usize;
        for s in items {
            acc.recall += s.recall;
            acc.precision += s.precision;
            acc.f_measure += s.f_measure;
            n += 1;
        }
        if n > 0 {
            let k = n as f64;
            acc.recall /= k;
            acc.precision /= k;
            acc.f_measure /= k;
        }
        acc
    }
}

/// R = TP/(TP+FN), P = TP/(TP+FP), F = 2PR/(P+R); each is 0 when its
/// denominator vanishes.
pub fn compute_metrics(c: MatchCounts) -> Scores {
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let recall = ratio(c.tp, c.tp + c.fn_);
    let precision = ratio(c.tp, c.tp + c.fp);
    // 2PR/(P+R) over counts, rounded once
    let f_measure = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_);
    Scores { recall, precision, f_measure }
}

/// Counts and scores for the three instruments.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Metrics {
    pub counts: [MatchCounts; 3],
    pub scores: [Scores; 3],
}

impl Metrics {
    pub fn from_counts(counts: [MatchCounts; 3]) -> Self {
        Self { counts, scores: counts.map(compute_metrics) }
    }

    pub fn get(&self, inst: Instrument) -> Scores {
        self.scores[inst.index()]
    }
}
