//! JSON solve reports.

use serde::{Deserialize, Serialize};
use tot_core::{SolveReport, TraceRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub eta: f64,
    pub decrement: f64,
    pub objective: f64,
    pub gap_bound: f64,
    pub residual: f64,
    pub min_entry: f64,
}

impl From<&TraceRow> for TraceEntry {
    fn from(r: &TraceRow) -> Self {
        Self {
            eta: r.eta,
            decrement: r.decrement,
            objective: r.objective,
            gap_bound: r.gap_bound,
            residual: r.residual,
            min_entry: r.min_entry,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub solve_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub value: f64,
    pub iterations: usize,
    pub predicted_bound: f64,
    pub eta_final: f64,
    /// `theta / eta_final`.
    pub gap_bound: f64,
    pub theta: f64,
    pub centering_iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_value: Option<f64>,
    /// `|value - oracle_value|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_gap: Option<f64>,
    pub timing: Timing,
}

impl ReportFile {
    pub fn new(report: &SolveReport, with_trace: bool, solve_seconds: f64) -> Self {
        Self {
            value: report.value,
            iterations: report.iterations,
            predicted_bound: report.predicted_bound,
            eta_final: report.eta_final,
            gap_bound: report.gap_bound,
            theta: report.theta,
            centering_iterations: report.centering_iterations,
            trace: with_trace.then(|| report.trace.iter().map(TraceEntry::from).collect()),
            oracle_value: None,
            oracle_gap: None,
            timing: Timing {
                solve_seconds,
                oracle_seconds: None,
            },
        }
    }

    pub fn with_oracle(mut self, oracle_value: f64, seconds: f64) -> Self {
        self.oracle_value = Some(oracle_value);
        self.oracle_gap = Some((self.value - oracle_value).abs());
        self.timing.oracle_seconds = Some(seconds);
        self
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}
