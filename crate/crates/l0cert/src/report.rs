//! Run reports and the report CSV.
//!
//! Every command that evaluates λ₀ values produces a [`RunReport`]: one
//! [`ReportRow`] per (trial, λ₀) pair plus free-form notes (condition
//! diagnostics, skip counts) and wall-clock timings.  Reports are
//! deterministic except for the timings, which exist for humans and never
//! enter the CSV.
//!
//! # CSV format
//!
//! One header line, then one line per row, columns:
//!
//! ```text
//! trial,seed,lambda0,certified,interval_lo,interval_hi,bf_support,bf_objective,oracle_match,solver_objective,solver_critical
//! ```
//!
//! - booleans are `1`/`0`;
//! - absent values (a stage that did not run) are empty fields;
//! - supports are semicolon-joined 0-based indices (`0;3;5`), the empty
//!   support is the empty string — distinguishable from "stage skipped" only
//!   via `bf_objective`, which is always present when brute force ran;
//! - floats use Rust's shortest-roundtrip `Display`, so re-reading the CSV
//!   reproduces every value bit-for-bit.

use std::fmt::Write as _;

use bregman_l0::prelude::{ConditionCheck, LambdaInterval, Support};

/// Outcome of one (trial, λ₀) evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    /// Trial index (0 for single-instance commands).
    pub trial: usize,
    /// Seed the trial's instance was generated from (0 for file problems).
    pub seed: u64,
    /// The λ₀ this row evaluates.
    pub lambda0: f64,
    /// Whether λ₀ lies strictly inside the certified interval.
    pub certified: bool,
    /// The certified interval (may be empty: `lo ≥ hi`); `None` when the
    /// command did not certify (plain solver runs).
    pub interval: Option<LambdaInterval>,
    /// Brute-force optimal support, when verification ran.
    pub bf_support: Option<Support>,
    /// Brute-force optimal value, when verification ran.
    pub bf_objective: Option<f64>,
    /// Whether brute force confirmed the oracle promise: true support is the
    /// unique optimal support and the optimum matches the restricted solve.
    pub oracle_match: Option<bool>,
    /// Final objective of the forward–backward run, when solving ran.
    pub solver_objective: Option<f64>,
    /// Whether the solver converged to a point passing the criticality test.
    pub solver_critical: Option<bool>,
}

/// Everything one command run produced.
#[derive(Clone, Debug, Default)]
pub struct RunReport {
    /// One row per (trial, λ₀), in deterministic order.
    pub rows: Vec<ReportRow>,
    /// Certificate condition diagnostics, keyed by condition ID, for the
    /// last certified instance (single-instance commands).
    pub conditions: Vec<ConditionCheck>,
    /// Free-form diagnostics: skip counts, interval routes, guard notes.
    pub notes: Vec<String>,
    /// Wall-clock timings per phase, seconds.  Excluded from determinism
    /// comparisons and from the CSV.
    pub timings: Vec<(String, f64)>,
}

fn push_opt_float(line: &mut String, v: Option<f64>) {
    line.push(',');
    if let Some(x) = v {
        let _ = write!(line, "{x}");
    }
}

fn push_opt_bool(line: &mut String, v: Option<bool>) {
    line.push(',');
    if let Some(b) = v {
        line.push(if b { '1' } else { '0' });
    }
}

impl ReportRow {
    /// Render this row as one CSV line (no trailing newline).
    pub fn to_csv_line(&self) -> String {
        let mut line = String::new();
        let _ = write!(
            line,
            "{},{},{},{}",
            self.trial,
            self.seed,
            self.lambda0,
            if self.certified { 1 } else { 0 }
        );
        match &self.interval {
            Some(iv) => {
                let _ = write!(line, ",{},{}", iv.lower, iv.upper);
            }
            None => line.push_str(",,"),
        }
        line.push(',');
        if let Some(s) = &self.bf_support {
            let joined: Vec<String> = s.indices().iter().map(|i| i.to_string()).collect();
            line.push_str(&joined.join(";"));
        }
        push_opt_float(&mut line, self.bf_objective);
        push_opt_bool(&mut line, self.oracle_match);
        push_opt_float(&mut line, self.solver_objective);
        push_opt_bool(&mut line, self.solver_critical);
        line
    }
}

/// The fixed CSV header.
pub const CSV_HEADER: &str = "trial,seed,lambda0,certified,interval_lo,interval_hi,bf_support,bf_objective,oracle_match,solver_objective,solver_critical";

impl RunReport {
    /// Render the full report CSV (header + rows, trailing newline).
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.to_csv_line());
            out.push('\n');
        }
        out
    }

    /// Human-readable summary for stdout: notes, condition verdicts, and one
    /// line per row.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for note in &self.notes {
            let _ = writeln!(out, "note: {note}");
        }
        for c in &self.conditions {
            let _ = writeln!(
                out,
                "condition {:?}: {} (margin {:+.3e})",
                c.id,
                if c.satisfied { "satisfied" } else { "violated" },
                c.margin
            );
        }
        for r in &self.rows {
            let mut line = format!(
                "trial {} seed {} lambda0 {}: {}",
                r.trial,
                r.seed,
                r.lambda0,
                if r.certified { "certified" } else { "not certified" }
            );
            if let Some(iv) = &r.interval {
                let _ = write!(line, " interval [{}, {}]", iv.lower, iv.upper);
            }
            if let Some(m) = r.oracle_match {
                let _ = write!(line, " bf {}", if m { "match" } else { "MISMATCH" });
            }
            if let Some(c) = r.solver_critical {
                let _ = write!(line, " solver {}", if c { "critical" } else { "not critical" });
            }
            let _ = writeln!(out, "{line}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn absent_stages_render_as_empty_fields() {
        let row = ReportRow {
            trial: 3,
            seed: 42,
            lambda0: 0.25,
            certified: false,
            interval: Some(LambdaInterval { lower: 1.0, upper: 0.5 }),
            bf_support: None,
            bf_objective: None,
            oracle_match: None,
            solver_objective: None,
            solver_critical: None,
        };
        assert_eq!(row.to_csv_line(), "3,42,0.25,0,1,0.5,,,,,");
    }

    #[test]
    fn support_is_semicolon_joined() {
        let row = ReportRow {
            trial: 0,
            seed: 7,
            lambda0: 1.0,
            certified: true,
            interval: Some(LambdaInterval { lower: 0.5, upper: 2.0 }),
            bf_support: Some(Support::new(vec![0, 3, 5]).unwrap()),
            bf_objective: Some(0.125),
            oracle_match: Some(true),
            solver_objective: Some(0.125),
            solver_critical: Some(true),
        };
        assert_eq!(row.to_csv_line(), "0,7,1,1,0.5,2,0;3;5,0.125,1,0.125,1");
    }
}
