//! Report rows, CSV/JSON serialization and per-criterion verdicts.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// One line of the CSV report. For Monte Carlo rows `finite` is the estimate and
/// `limit` the exact reference it is checked against.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub experiment: String,
    pub point: String,
    pub inputs: String,
    pub finite: Option<f64>,
    pub limit: Option<f64>,
    pub abs_error: Option<f64>,
    pub prior_error: Option<f64>,
    pub se: Option<f64>,
    pub pass: Option<bool>,
}

impl ReportRow {
    pub fn new(experiment: &str, point: impl Into<String>, inputs: impl Into<String>) -> Self {
        ReportRow {
            experiment: experiment.to_string(),
            point: point.into(),
            inputs: inputs.into(),
            finite: None,
            limit: None,
            abs_error: None,
            prior_error: None,
            se: None,
            pass: None,
        }
    }

    /// Fill `finite`, `limit` and their absolute difference.
    pub fn compare(mut self, finite: f64, limit: f64) -> Self {
        self.finite = Some(finite);
        self.limit = Some(limit);
        self.abs_error = Some((finite - limit).abs());
        self
    }

    pub fn verdict(mut self, pass: bool) -> Self {
        self.pass = Some(pass);
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentOutcome {
    pub id: String,
    pub kind: String,
    pub criterion: Option<u8>,
    pub rows: Vec<ReportRow>,
}

impl ExperimentOutcome {
    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| r.pass == Some(false)).count()
    }

    pub fn checked(&self) -> usize {
        self.rows.iter().filter(|r| r.pass.is_some()).count()
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub experiments: Vec<ExperimentOutcome>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CriterionStatus {
    pub criterion: u8,
    pub pass: bool,
    pub checks: usize,
    pub failed: usize,
    /// `experiment/point` of each failing row.
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WorstError {
    pub experiment: String,
    pub point: String,
    pub abs_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub rows: usize,
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
    pub criteria: Vec<CriterionStatus>,
    pub worst_errors: Vec<WorstError>,
    pub wall_clock_seconds: f64,
}

impl Report {
    pub fn rows(&self) -> impl Iterator<Item = &ReportRow> {
        self.experiments.iter().flat_map(|e| e.rows.iter())
    }

    pub fn passed(&self) -> bool {
        self.rows().all(|r| r.pass != Some(false))
    }

    pub fn criteria(&self) -> Vec<CriterionStatus> {
        let mut by: BTreeMap<u8, CriterionStatus> = BTreeMap::new();
        for e in &self.experiments {
            let Some(c) = e.criterion else { continue };
            let st = by.entry(c).or_insert(CriterionStatus {
                criterion: c,
                pass: true,
                checks: 0,
                failed: 0,
                failures: vec![],
            });
            st.checks += e.checked();
            for r in e.rows.iter().filter(|r| r.pass == Some(false)) {
                st.failed += 1;
                st.pass = false;
                st.failures.push(format!("{}/{}", r.experiment, r.point));
            }
        }
        by.into_values().collect()
    }

    /// Largest absolute error among checked rows of each experiment.
    pub fn worst_errors(&self) -> Vec<WorstError> {
        self.experiments
            .iter()
            .filter_map(|e| {
                e.rows
                    .iter()
                    .filter(|r| r.pass.is_some())
                    .filter_map(|r| r.abs_error.map(|a| (a, r)))
                    .max_by(|x, y| x.0.total_cmp(&y.0))
                    .map(|(a, r)| WorstError { experiment: e.id.clone(), point: r.point.clone(), abs_error: a })
            })
            .collect()
    }

    pub fn summary(&self, wall_clock_seconds: f64) -> Summary {
        let checks = self.rows().filter(|r| r.pass.is_some()).count();
        let failed = self.rows().filter(|r| r.pass == Some(false)).count();
        Summary {
            rows: self.rows().count(),
            checks,
            passed: checks - failed,
            failed,
            criteria: self.criteria(),
            worst_errors: self.worst_errors(),
            wall_clock_seconds,
        }
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in self.rows() {
            w.serialize(r).map_err(|e| Error::Numerical(format!("csv: {e}")))?;
        }
        // header is emitted with the first row; an empty report still gets one
        if self.rows().next().is_none() {
            w.write_record([
                "experiment",
                "point",
                "inputs",
                "finite",
                "limit",
                "abs_error",
                "prior_error",
                "se",
                "pass",
            ])
            .map_err(|e| Error::Numerical(format!("csv: {e}")))?;
        }
        w.into_inner().map_err(|e| Error::Numerical(format!("csv: {e}")))
    }
}
