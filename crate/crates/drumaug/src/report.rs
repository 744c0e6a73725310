//! Strategy-by-instrument result tables.

use std::fmt::Write;

use drumaug_core::eval::{CrossValJob, Instrument, MatchCounts, Scores, StrategyReport};
use serde::Serialize;

/// Test result of one checkpoint.
#[derive(Debug, Clone, Serialize)]
pub struct ReportJob {
    pub test_subset: String,
    pub seed: u64,
    pub instrument: Instrument,
    pub threshold: f64,
    pub counts: MatchCounts,
    pub scores: Scores,
    #[serde(skip)]
    pub job: CrossValJob,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub strategy: String,
    pub report: StrategyReport,
    pub jobs: Vec<ReportJob>,
}

/// Machine-readable form of the table.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub config_hash: String,
    pub tool_version: String,
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn row(&self, label: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.report.label == label)
    }
}

/// One row per strategy, R/P/F per instrument in percent, then the number
/// of runs averaged.
pub fn format_report_tsv(report: &Report) -> String {
    let mut out = String::from("strategy");
    for inst in Instrument::ALL {
        for m in ["R", "P", "F"] {
            let _ = write!(out, "\t{inst} {m}");
        }
    }
    out.push_str("\truns\n");
    for row in &report.rows {
        out.push_str(&row.report.label);
        for inst in Instrument::ALL {
            let s = row.report.get(inst);
            for v in [s.recall, s.precision, s.f_measure] {
                let _ = write!(out, "\t{:.1}", 100.0 * v);
            }
        }
        let _ = writeln!(out, "\t{}", row.report.runs);
    }
    out
}
