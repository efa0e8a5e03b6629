//! Desk-scale studies. Each suite is a deterministic function of its
//! config and seed and produces an [`ExperimentReport`]: a JSON summary
//! plus tidy CSV tables.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::stats::LinearFit;

pub mod counterexample;
pub mod dimension;
pub mod gap;
pub mod identify;
pub mod scaling;
pub mod words;

pub use counterexample::{counterexample_suite, CounterexampleConfig, CounterexampleProfile};
pub use dimension::{dimension_fit, DimensionConfig};
pub use gap::{gap_study, GapConfig, PairMeasurement};
pub use identify::{identification_probe, IdentifyConfig};
pub use scaling::{scaling_selfconsistency, ScalingConfig};
pub use words::{words_suite, WordsConfig};

/// Trial-level map preserving input order.
pub(crate) fn par_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

/// A thresholded claim. `calibrated` marks thresholds that are tuning
/// knobs rather than exact statements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: String,
    pub passed: bool,
    pub calibrated: bool,
}

impl Check {
    pub fn exact(name: &str, value: f64, threshold: &str, passed: bool) -> Self {
        Check { name: name.into(), value, threshold: threshold.into(), passed, calibrated: false }
    }

    pub fn calibrated(name: &str, value: f64, threshold: &str, passed: bool) -> Self {
        Check { name: name.into(), value, threshold: threshold.into(), passed, calibrated: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub name: String,
    pub slope: f64,
    pub slope_ci: (f64, f64),
    pub intercept: f64,
    pub r2: f64,
}

impl FitSummary {
    pub fn new(name: &str, fit: &LinearFit) -> Self {
        FitSummary { name: name.into(), slope: fit.slope, slope_ci: fit.slope_ci(), intercept: fit.intercept, r2: fit.r2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub suite: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub fits: Vec<FitSummary>,
    pub checks: Vec<Check>,
    /// Tables are written as separate CSV files.
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl ExperimentReport {
    pub fn new<C: Serialize>(suite: &str, seed: u64, config: &C) -> Self {
        ExperimentReport {
            suite: suite.into(),
            seed,
            config: serde_json::to_value(config).expect("configs serialize"),
            fits: Vec::new(),
            checks: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `<suite>.json` and `<suite>_<table>.csv` into `dir` and
    /// returns the paths written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        let json = dir.join(format!("{}.json", self.suite));
        std::fs::write(&json, self.to_json()?)?;
        out.push(json);
        for t in &self.tables {
            let path = dir.join(format!("{}_{}.csv", self.suite, t.name));
            std::fs::write(&path, t.to_csv()?)?;
            out.push(path);
        }
        Ok(out)
    }
}
