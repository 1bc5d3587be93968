//! Report assembly: CSV tables, the JSON summary and the text summary.
//!
//! `summary.json` and every CSV are pure functions of the resolved config.
//! The only time-dependent byte is the first line of `summary.txt`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::CliError;

/// One pass/fail flag. `pass` is `None` for values reported without an
/// assertion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: Option<bool>,
    pub measured: f64,
    pub predicted: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, measured: f64) -> Self {
        Self {
            name: name.into(),
            pass: Some(pass),
            measured,
            predicted: None,
            tolerance: None,
            detail: String::new(),
        }
    }

    /// A value recorded without a pass flag.
    pub fn info(name: impl Into<String>, measured: f64) -> Self {
        Self {
            pass: None,
            ..Self::new(name, true, measured)
        }
    }

    pub fn predicted(mut self, value: f64) -> Self {
        self.predicted = Some(value);
        self
    }

    pub fn tolerance(mut self, value: f64) -> Self {
        self.tolerance = Some(value);
        self
    }

    pub fn detail(mut self, text: impl Into<String>) -> Self {
        self.detail = text.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl Summary {
    pub fn new(experiment: ExperimentKind, config: ExperimentConfig, checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass != Some(false));
        Self {
            experiment,
            config,
            checks,
            pass,
        }
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.pass == Some(false))
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    /// Human-readable body, without the timestamp line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment: {}", self.experiment);
        for c in &self.checks {
            let flag = match c.pass {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "INFO",
            };
            let _ = write!(s, "{flag} {} measured={}", c.name, format_float(c.measured));
            if let Some(p) = c.predicted {
                let _ = write!(s, " predicted={}", format_float(p));
            }
            if let Some(t) = c.tolerance {
                let _ = write!(s, " tolerance={}", format_float(t));
            }
            if !c.detail.is_empty() {
                let _ = write!(s, " ({})", c.detail);
            }
            s.push('\n');
        }
        let _ = writeln!(s, "overall: {}", if self.pass { "PASS" } else { "FAIL" });
        s
    }
}

/// One sweep, written as `<name>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&'static str]) -> Self {
        Self {
            name: name.into(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row.iter().map(|v| format_float(*v)).collect());
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(io_error)?;
        for row in &self.rows {
            w.write_record(row).map_err(io_error)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }
}

/// Shortest round-trip representation; locale independent.
pub fn format_float(v: f64) -> String {
    format!("{v:?}")
}

fn io_error(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub summary: Summary,
    pub tables: Vec<Table>,
}

impl RunOutput {
    /// Writes the CSVs, `summary.json` and `summary.txt`; returns the paths
    /// in that order.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir).map_err(io_error)?;
        let mut paths = Vec::new();
        for table in &self.tables {
            let path = dir.join(format!("{}.csv", table.name));
            fs::write(&path, table.to_csv()?).map_err(io_error)?;
            paths.push(path);
        }
        let json = dir.join("summary.json");
        fs::write(&json, self.summary.to_json()).map_err(io_error)?;
        paths.push(json);
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let text = format!("# generated at unix time {secs}\n{}", self.summary.to_text());
        let txt = dir.join("summary.txt");
        fs::write(&txt, text).map_err(io_error)?;
        paths.push(txt);
        Ok(paths)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_csv() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push(&[0.1 + 0.2, -1.5e-300]);
        let text = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(text, "a,b\n0.30000000000000004,-1.5e-300\n");
        let back: f64 = text.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
        assert_eq!(back, 0.1 + 0.2);
    }

    #[test]
    fn info_checks_do_not_fail_a_summary() {
        let s = Summary::new(
            ExperimentKind::PartitionCheck,
            ExperimentConfig::default(),
            vec![Check::new("a", true, 1.0), Check::info("b", 2.0)],
        );
        assert!(s.pass && s.failed().count() == 0);
        assert!(s.to_text().contains("INFO b measured=2.0"));
        let f = Summary::new(ExperimentKind::PartitionCheck, ExperimentConfig::default(), vec![Check::new("a", false, 1.0)]);
        assert!(!f.pass);
        assert!(f.to_json().contains("\"pass\": false"));
    }
}
