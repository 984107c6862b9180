use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::config::ModelConfig;
use super::hybrid::HybridModel;
use super::train::train;
use crate::analysis::{classification_metrics, gaussian_nb, knn, ConfusionMatrix};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::{build_coarsening_hierarchy, CoarseningHierarchy, WeightedGraph};
use crate::numerics::SeededRng;

/// Fraction of each class held out for validation in every split.
pub const VALIDATION_FRACTION: f64 = 0.1;

/// Result of fitting one method on one split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitOutcome {
    /// Validation accuracy after each epoch (a single entry for one-shot
    /// methods).
    pub val_accuracy: Vec<f64>,
    /// Final validation predictions, aligned with the validation rows.
    pub predictions: Vec<usize>,
}

/// A classifier that can be evaluated by Monte-Carlo cross-validation.
pub trait Method: Sync {
    fn name(&self) -> &str;
    fn run_split(&self, train: &Dataset, val: &Dataset, seed: u64) -> Result<SplitOutcome>;
}

/// The graph model (with whatever relation module its config selects).
/// The coarsening hierarchy is built once and shared by all splits; each
/// split initialises and shuffles with its own seed.
pub struct ModelMethod {
    name: String,
    graph: WeightedGraph,
    hierarchy: Arc<CoarseningHierarchy>,
    config: ModelConfig,
}

impl ModelMethod {
    pub fn new(name: impl Into<String>, graph: WeightedGraph, config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let hierarchy = Arc::new(build_coarsening_hierarchy(&graph, config.num_conv_layers(), config.seed));
        Ok(ModelMethod {
            name: name.into(),
            graph,
            hierarchy,
            config,
        })
    }
}

impl Method for ModelMethod {
    fn name(&self) -> &str {
        &self.name
    }

    fn run_split(&self, train_set: &Dataset, val: &Dataset, seed: u64) -> Result<SplitOutcome> {
        let config = ModelConfig {
            seed,
            ..self.config.clone()
        };
        let mut model = HybridModel::with_hierarchy(&self.graph, self.hierarchy.clone(), train_set.num_classes(), &config)?;
        let report = train(&mut model, train_set, Some(val))?;
        Ok(SplitOutcome {
            val_accuracy: report.val_accuracy,
            predictions: report.final_predictions,
        })
    }
}

fn one_shot(val: &Dataset, predictions: Vec<usize>) -> SplitOutcome {
    let correct = predictions.iter().zip(&val.y).filter(|(a, b)| a == b).count();
    SplitOutcome {
        val_accuracy: vec![correct as f64 / val.num_samples().max(1) as f64],
        predictions,
    }
}

pub struct GaussianNbMethod;

impl Method for GaussianNbMethod {
    fn name(&self) -> &str {
        "gnb"
    }

    fn run_split(&self, train_set: &Dataset, val: &Dataset, _seed: u64) -> Result<SplitOutcome> {
        let pred = gaussian_nb(train_set.x.view(), &train_set.y, val.x.view(), train_set.num_classes())?;
        Ok(one_shot(val, pred))
    }
}

pub struct KnnMethod {
    pub k: usize,
}

impl Method for KnnMethod {
    fn name(&self) -> &str {
        "knn"
    }

    fn run_split(&self, train_set: &Dataset, val: &Dataset, _seed: u64) -> Result<SplitOutcome> {
        let pred = knn(train_set.x.view(), &train_set.y, val.x.view(), self.k, train_set.num_classes())?;
        Ok(one_shot(val, pred))
    }
}

/// Stratified hold-out: from every class of `c` samples,
/// `max(1, round(0.1 c))` go to validation. Both index lists are ascending.
pub fn stratified_split(y: &[usize], classes: usize, rng: &mut SeededRng) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &c) in y.iter().enumerate() {
        if c >= classes {
            return Err(Error::LabelOutOfRange { label: c, classes });
        }
        by_class[c].push(i);
    }
    let mut train_idx = Vec::new();
    let mut val_idx = Vec::new();
    for (c, members) in by_class.iter_mut().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(Error::ClassTooSmall {
                class: c,
                count: members.len(),
            });
        }
        rng.shuffle(members);
        let k = ((members.len() as f64 * VALIDATION_FRACTION).round() as usize).clamp(1, members.len() - 1);
        val_idx.extend_from_slice(&members[..k]);
        train_idx.extend_from_slice(&members[k..]);
    }
    train_idx.sort_unstable();
    val_idx.sort_unstable();
    Ok((train_idx, val_idx))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitResult {
    pub split: usize,
    pub seed: u64,
    pub val_size: usize,
    pub peak_accuracy: f64,
    pub final_accuracy: f64,
    pub f1_weighted: f64,
    pub f1_macro: f64,
    pub val_accuracy: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Sample standard deviation across splits (0 for a single split).
    pub std: f64,
}

impl MetricSummary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MetricSummary { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvSummary {
    pub peak_accuracy: MetricSummary,
    pub final_accuracy: MetricSummary,
    pub f1_weighted: MetricSummary,
    pub f1_macro: MetricSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub method: String,
    pub seed: u64,
    pub splits: Vec<SplitResult>,
    pub summary: CvSummary,
}

/// Repeated stratified 90/10 hold-out. Split `s` uses its own seed derived
/// from `seed`, both for the partition and for the method; splits run in
/// parallel and are reported in split order.
pub fn monte_carlo_cv(data: &Dataset, method: &dyn Method, splits: usize, seed: u64) -> Result<CvReport> {
    if splits == 0 {
        return Err(Error::Config("splits must be >= 1".into()));
    }
    let classes = data.num_classes();
    let results: Vec<SplitResult> = (0..splits)
        .into_par_iter()
        .map(|s| {
            let split_seed = SeededRng::derive_seed(seed, s as u64);
            let mut rng = SeededRng::new(split_seed);
            let (tr, va) = stratified_split(&data.y, classes, &mut rng)?;
            let (train_set, val) = (data.subset(&tr), data.subset(&va));
            let out = method.run_split(&train_set, &val, split_seed)?;
            if out.predictions.len() != val.num_samples() || out.val_accuracy.is_empty() {
                return Err(Error::dims("split predictions", val.num_samples(), out.predictions.len()));
            }
            let cm = ConfusionMatrix::from_predictions(&val.y, &out.predictions, classes)?;
            let m = classification_metrics(&cm)?;
            Ok(SplitResult {
                split: s,
                seed: split_seed,
                val_size: val.num_samples(),
                peak_accuracy: out.val_accuracy.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                final_accuracy: *out.val_accuracy.last().unwrap(),
                f1_weighted: m.f1_weighted,
                f1_macro: m.f1_macro,
                val_accuracy: out.val_accuracy,
            })
        })
        .collect::<Result<_>>()?;
    let pick = |f: fn(&SplitResult) -> f64| MetricSummary::of(&results.iter().map(f).collect::<Vec<_>>());
    let summary = CvSummary {
        peak_accuracy: pick(|r| r.peak_accuracy),
        final_accuracy: pick(|r| r.final_accuracy),
        f1_weighted: pick(|r| r.f1_weighted),
        f1_macro: pick(|r| r.f1_macro),
    };
    Ok(CvReport {
        method: method.name().to_string(),
        seed,
        splits: results,
        summary,
    })
}
