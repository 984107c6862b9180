//! Datasets: the covariance-structured synthetic generator and CSV ingestion
//! of expression matrices with an interaction graph.

mod ingest;
mod synthetic;

pub use ingest::{load_real_dataset, read_matrix_csv, read_survival_csv, IngestReport, RealData};
pub use synthetic::{
    covariance_to_graph, derive_class_covariances, gen_synthetic, gen_template_covariance,
    psd_repair, CovariancePair, PsdRepair, SyntheticData, SyntheticSpec,
};

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalRecord {
    pub time: f64,
    pub event: bool,
}

/// Samples x features matrix with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Vec<usize>,
    pub sample_ids: Vec<String>,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub survival: Option<Vec<SurvivalRecord>>,
}

impl Dataset {
    pub fn new(
        x: Array2<f64>,
        y: Vec<usize>,
        sample_ids: Vec<String>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if y.len() != x.nrows() {
            return Err(Error::dims("dataset labels", x.nrows(), y.len()));
        }
        if sample_ids.len() != x.nrows() {
            return Err(Error::dims("dataset sample ids", x.nrows(), sample_ids.len()));
        }
        if feature_names.len() != x.ncols() {
            return Err(Error::dims("dataset feature names", x.ncols(), feature_names.len()));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = feature_names.iter().find(|f| !seen.insert(f.as_str())) {
            return Err(Error::Config(format!("duplicate feature name `{dup}`")));
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= class_names.len()) {
            return Err(Error::LabelOutOfRange {
                label: bad,
                classes: class_names.len(),
            });
        }
        Ok(Dataset {
            x,
            y,
            sample_ids,
            feature_names,
            class_names,
            survival: None,
        })
    }

    pub fn with_survival(mut self, records: Vec<SurvivalRecord>) -> Result<Self> {
        if records.len() != self.num_samples() {
            return Err(Error::dims("survival records", self.num_samples(), records.len()));
        }
        self.survival = Some(records);
        Ok(self)
    }

    pub fn num_samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for &c in &self.y {
            counts[c] += 1;
        }
        counts
    }

    /// Rows `idx`, in the given order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select(Axis(0), idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            sample_ids: idx.iter().map(|&i| self.sample_ids[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
            survival: self
                .survival
                .as_ref()
                .map(|s| idx.iter().map(|&i| s[i]).collect()),
        }
    }

    /// Writes `expression.csv`-style and `labels.csv`-style files.
    pub fn write_csv(&self, expression: &Path, labels: &Path) -> Result<()> {
        let mut text = String::from("sample_id");
        for f in &self.feature_names {
            text.push(',');
            text.push_str(f);
        }
        text.push('\n');
        for (i, row) in self.x.rows().into_iter().enumerate() {
            text.push_str(&self.sample_ids[i]);
            for v in row {
                let _ = write!(text, ",{v}");
            }
            text.push('\n');
        }
        std::fs::write(expression, text).map_err(|e| Error::io(expression, e))?;

        let mut text = String::from("sample_id,label\n");
        for (id, &c) in self.sample_ids.iter().zip(&self.y) {
            let _ = writeln!(text, "{id},{}", self.class_names[c]);
        }
        std::fs::write(labels, text).map_err(|e| Error::io(labels, e))
    }

    pub fn write_survival_csv(&self, path: &Path) -> Result<()> {
        let Some(records) = &self.survival else {
            return Err(Error::Config("dataset has no survival records".into()));
        };
        let mut text = String::from("sample_id,time_days,event\n");
        for (id, r) in self.sample_ids.iter().zip(records) {
            let _ = writeln!(text, "{id},{},{}", r.time, u8::from(r.event));
        }
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}
