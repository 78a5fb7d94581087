//! Simulation reports: JSON and an aligned plain-text table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::stats::Moments;

/// Moment checks pass within this many standard errors.
pub const SE_BAND: f64 = 5.0;

/// One theoretical value confronted with its empirical estimate.
///
/// Pass/fail comes from `std_error` (|deviation| ≤ 5 SE) or from `tolerance`
/// (|deviation| ≤ tolerance). Rows with neither are informational.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRecord {
    pub name: String,
    /// The operation that produced the theoretical value.
    pub source: String,
    pub theoretical: f64,
    pub empirical: f64,
    pub std_error: Option<f64>,
    pub tolerance: Option<f64>,
    pub deviation: f64,
    pub pass: Option<bool>,
}

impl StatRecord {
    pub fn within_se(
        name: impl Into<String>,
        source: impl Into<String>,
        theoretical: f64,
        empirical: f64,
        se: f64,
    ) -> Self {
        let deviation = empirical - theoretical;
        Self {
            name: name.into(),
            source: source.into(),
            theoretical,
            empirical,
            std_error: Some(se),
            tolerance: None,
            deviation,
            pass: Some(deviation.abs() <= SE_BAND * se),
        }
    }

    pub fn mean(name: impl Into<String>, source: impl Into<String>, theoretical: f64, m: &Moments) -> Self {
        Self::within_se(name, source, theoretical, m.mean, m.se_mean)
    }

    pub fn variance(name: impl Into<String>, source: impl Into<String>, theoretical: f64, m: &Moments) -> Self {
        Self::within_se(name, source, theoretical, m.var, m.se_var)
    }

    pub fn within_tolerance(
        name: impl Into<String>,
        source: impl Into<String>,
        theoretical: f64,
        empirical: f64,
        tolerance: f64,
    ) -> Self {
        let deviation = empirical - theoretical;
        Self {
            name: name.into(),
            source: source.into(),
            theoretical,
            empirical,
            std_error: None,
            tolerance: Some(tolerance),
            deviation,
            pass: Some(deviation.abs() <= tolerance),
        }
    }

    pub fn info(name: impl Into<String>, source: impl Into<String>, theoretical: f64, empirical: f64) -> Self {
        Self {
            name: name.into(),
            source: source.into(),
            theoretical,
            empirical,
            std_error: None,
            tolerance: None,
            deviation: empirical - theoretical,
            pass: None,
        }
    }
}

/// An empirical-CDF distance against a fixed threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRecord {
    pub name: String,
    pub source: String,
    pub distance: f64,
    pub threshold: f64,
    /// `None` when the check does not apply (reported for information).
    pub pass: Option<bool>,
}

/// A yes/no property of the experiment as a whole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub detail: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub experiment: String,
    pub seed: u64,
    pub replications: usize,
    pub wall_clock_seconds: f64,
    pub statistics: Vec<StatRecord>,
    pub distances: Vec<DistanceRecord>,
    pub checks: Vec<CheckRecord>,
    /// Descriptive quantities of the simulated setting (λ's, traces, …).
    pub diagnostics: BTreeMap<String, f64>,
    pub all_pass: bool,
}

impl SimReport {
    pub(crate) fn new(experiment: &str, seed: u64, replications: usize) -> Self {
        Self {
            experiment: experiment.to_string(),
            seed,
            replications,
            wall_clock_seconds: 0.0,
            statistics: Vec::new(),
            distances: Vec::new(),
            checks: Vec::new(),
            diagnostics: BTreeMap::new(),
            all_pass: true,
        }
    }

    pub(crate) fn finish(&mut self) {
        self.all_pass = self.statistics.iter().all(|s| s.pass != Some(false))
            && self.distances.iter().all(|d| d.pass != Some(false))
            && self.checks.iter().all(|c| c.pass);
    }

    /// The report without the wall-clock time, for determinism comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_clock_seconds: 0.0,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "experiment {}  seed {}  replications {}  time {:.3}s",
            self.experiment, self.seed, self.replications, self.wall_clock_seconds
        );
        if !self.diagnostics.is_empty() {
            out.push('\n');
            let rows: Vec<Vec<String>> = self
                .diagnostics
                .iter()
                .map(|(k, v)| vec![k.clone(), fmt_sig(*v)])
                .collect();
            out.push_str(&align(&["diagnostic", "value"], &rows));
        }
        if !self.statistics.is_empty() {
            out.push('\n');
            let rows: Vec<Vec<String>> = self
                .statistics
                .iter()
                .map(|s| {
                    vec![
                        s.name.clone(),
                        fmt_sig(s.theoretical),
                        fmt_sig(s.empirical),
                        s.std_error.map_or("-".into(), fmt_sig),
                        s.tolerance.map_or("-".into(), fmt_sig),
                        verdict(s.pass),
                        s.source.clone(),
                    ]
                })
                .collect();
            out.push_str(&align(
                &[
                    "statistic",
                    "theoretical",
                    "empirical",
                    "std_error",
                    "tolerance",
                    "result",
                    "source",
                ],
                &rows,
            ));
        }
        if !self.distances.is_empty() {
            out.push('\n');
            let rows: Vec<Vec<String>> = self
                .distances
                .iter()
                .map(|d| {
                    vec![
                        d.name.clone(),
                        fmt_sig(d.distance),
                        fmt_sig(d.threshold),
                        verdict(d.pass),
                        d.source.clone(),
                    ]
                })
                .collect();
            out.push_str(&align(&["distance", "value", "threshold", "result", "source"], &rows));
        }
        if !self.checks.is_empty() {
            out.push('\n');
            let rows: Vec<Vec<String>> = self
                .checks
                .iter()
                .map(|c| vec![c.name.clone(), verdict(Some(c.pass)), c.detail.clone()])
                .collect();
            out.push_str(&align(&["check", "result", "detail"], &rows));
        }
        let _ = writeln!(
            out,
            "\n{}",
            if self.all_pass {
                "ALL CHECKS PASS"
            } else {
                "SOME CHECKS FAILED"
            }
        );
        out
    }
}

fn verdict(pass: Option<bool>) -> String {
    match pass {
        Some(true) => "pass".into(),
        Some(false) => "FAIL".into(),
        None => "info".into(),
    }
}

/// Format with 10 significant digits.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    // Take the exponent after rounding, so 0.99999999999 prints as 1.000000000.
    let sci = format!("{x:.9e}");
    let mag: i32 = sci[sci.find('e').expect("exponent") + 1..]
        .parse()
        .expect("integer exponent");
    if (-4..10).contains(&mag) {
        format!("{:.*}", (9 - mag).max(0) as usize, x)
    } else {
        format!("{x:.9e}")
    }
}

/// Left-aligned columns separated by two spaces.
pub fn align(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&width).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            s.push_str(c);
            s.extend(std::iter::repeat_n(' ', w - c.chars().count()));
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(header.to_vec(), &mut out);
    for r in rows {
        line(r.iter().map(String::as_str).collect(), &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(-3.0), "-3.000000000");
        assert_eq!(fmt_sig(0.453_254_704_753_736_4), "0.4532547048");
        assert_eq!(fmt_sig(123_456.789_012_345), "123456.7890");
        assert_eq!(fmt_sig(1.5e-7), "1.500000000e-7");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(0.999_999_999_999_96), "1.000000000");
        for x in [0.453_254_704_753_736_4, -17.25, 9.87e12, 3.3e-9] {
            let back: f64 = fmt_sig(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 1e-9);
        }
    }

    #[test]
    fn pass_rules() {
        assert_eq!(StatRecord::within_se("a", "s", 1.0, 1.4, 0.1).pass, Some(true));
        assert_eq!(StatRecord::within_se("a", "s", 1.0, 1.6, 0.1).pass, Some(false));
        assert_eq!(
            StatRecord::within_tolerance("a", "s", 0.05, 0.061, 0.01).pass,
            Some(false)
        );
        let mut r = SimReport::new("x", 1, 1);
        r.statistics.push(StatRecord::info("a", "s", 1.0, 5.0));
        r.finish();
        assert!(r.all_pass);
        r.checks.push(CheckRecord {
            name: "c".into(),
            detail: String::new(),
            pass: false,
        });
        r.finish();
        assert!(!r.all_pass);
    }

    #[test]
    fn table_has_aligned_columns() {
        let t = align(&["a", "bbb"], &[vec!["xx".into(), "y".into()]]);
        assert_eq!(t, "a   bbb\nxx  y\n");
    }
}
