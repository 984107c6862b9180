use std::time::Instant;

use ndarray::{Array2, ArrayView2, Axis};
use serde::Serialize;

use super::hybrid::HybridModel;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::layers::softmax_cross_entropy;
use crate::numerics::{Adam, SeededRng};

const SHUFFLE_STREAM: u64 = 0x7368_7566;
const EVAL_CHUNK: usize = 512;

/// Per-epoch learning curve of one training run.
///
/// Equality ignores `wall_time_secs`, so two runs with the same seed compare
/// equal exactly when every recorded number matches bit for bit.
#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub val_accuracy: Vec<f64>,
    pub peak_accuracy: f64,
    pub final_accuracy: f64,
    /// Predictions on the evaluation set after the last epoch.
    pub final_predictions: Vec<usize>,
    pub wall_time_secs: f64,
}

impl PartialEq for TrainReport {
    fn eq(&self, other: &Self) -> bool {
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        bits(&self.train_loss) == bits(&other.train_loss)
            && bits(&self.val_accuracy) == bits(&other.val_accuracy)
            && self.peak_accuracy.to_bits() == other.peak_accuracy.to_bits()
            && self.final_accuracy.to_bits() == other.final_accuracy.to_bits()
            && self.final_predictions == other.final_predictions
    }
}

/// Class predictions (argmax of the logits, lowest index on ties) in
/// inference mode.
pub fn predict(model: &HybridModel, x: ArrayView2<f64>) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(x.nrows());
    for chunk in x.axis_chunks_iter(Axis(0), EVAL_CHUNK) {
        let logits = model.infer(chunk)?.logits;
        out.extend(logits.rows().into_iter().map(|r| {
            r.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b })
                .0
        }));
    }
    Ok(out)
}

/// Predictions and accuracy on a labelled dataset.
pub fn evaluate(model: &HybridModel, data: &Dataset) -> Result<(Vec<usize>, f64)> {
    let pred = predict(model, data.x.view())?;
    let correct = pred.iter().zip(&data.y).filter(|(a, b)| a == b).count();
    let acc = if pred.is_empty() { 0.0 } else { correct as f64 / pred.len() as f64 };
    Ok((pred, acc))
}

/// Minibatch index lists for one epoch. A trailing batch of a single sample
/// is folded into the previous batch because batch normalisation needs two.
fn batches(order: &[usize], size: usize) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = order.chunks(size).collect();
    if out.len() >= 2 && out.last().is_some_and(|b| b.len() < 2) {
        out.pop();
        let k = out.len() - 1;
        let start = k * size;
        out[k] = &order[start..];
    }
    out
}

/// Trains with Adam on the softmax cross-entropy of the fused logits.
///
/// Epochs, batch size, learning rate and seed come from the model's config.
/// The evaluation set is scored in inference mode after every epoch; when
/// `val` is `None` the training set itself is scored.
pub fn train(model: &mut HybridModel, train_set: &Dataset, val: Option<&Dataset>) -> Result<TrainReport> {
    train_with(model, train_set, val, |_, _, _| {})
}

/// [`train`] with a callback receiving `(epoch, mean train loss, accuracy)`.
pub fn train_with(
    model: &mut HybridModel,
    train_set: &Dataset,
    val: Option<&Dataset>,
    mut on_epoch: impl FnMut(usize, f64, f64),
) -> Result<TrainReport> {
    let start = Instant::now();
    let cfg = model.config().clone();
    if train_set.num_samples() < 2 {
        return Err(Error::BatchTooSmall(train_set.num_samples()));
    }
    if let Some(&bad) = train_set.y.iter().find(|&&c| c >= model.classes()) {
        return Err(Error::LabelOutOfRange {
            label: bad,
            classes: model.classes(),
        });
    }
    let eval_set = val.unwrap_or(train_set);
    let mut rng = SeededRng::with_stream(cfg.seed, SHUFFLE_STREAM);
    let mut adam = Adam::new(cfg.optimizer);
    let mut order: Vec<usize> = (0..train_set.num_samples()).collect();
    let mut report = TrainReport {
        train_loss: Vec::with_capacity(cfg.epochs),
        val_accuracy: Vec::with_capacity(cfg.epochs),
        peak_accuracy: 0.0,
        final_accuracy: 0.0,
        final_predictions: Vec::new(),
        wall_time_secs: 0.0,
    };
    model.zero_grad();
    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for idx in batches(&order, cfg.batch_size) {
            let xb: Array2<f64> = train_set.x.select(Axis(0), idx);
            let yb: Vec<usize> = idx.iter().map(|&i| train_set.y[i]).collect();
            let (out, cache) = model.forward_train(xb.view())?;
            let (loss, dlogits) = softmax_cross_entropy(out.logits.view(), &yb)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite("training loss"));
            }
            model.backward(cache, dlogits)?;
            adam.step(&mut model.params_mut())?;
            loss_sum += loss * idx.len() as f64;
        }
        let mean_loss = loss_sum / order.len() as f64;
        let (pred, acc) = evaluate(model, eval_set)?;
        report.train_loss.push(mean_loss);
        report.val_accuracy.push(acc);
        report.final_predictions = pred;
        on_epoch(epoch, mean_loss, acc);
    }
    report.peak_accuracy = report.val_accuracy.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    report.final_accuracy = *report.val_accuracy.last().expect("epochs >= 1");
    report.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;
    use crate::model::{ModelConfig, RelationKind};

    fn toy(samples: usize, seed: u64) -> (WeightedGraph, Dataset) {
        let g = WeightedGraph::new(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 0.5)]).unwrap();
        let mut rng = SeededRng::new(seed);
        let y: Vec<usize> = (0..samples).map(|i| i % 2).collect();
        let x = Array2::from_shape_fn((samples, 4), |(i, j)| {
            let shift = if y[i] == 0 { -1.5 } else { 1.5 };
            shift * if j < 2 { 1.0 } else { -1.0 } + 0.3 * rng.normal()
        });
        let ids = (0..samples).map(|i| format!("s{i}")).collect();
        let names = (0..4).map(|i| format!("g{i}")).collect();
        let d = Dataset::new(x, y, ids, names, vec!["a".into(), "b".into()]).unwrap();
        (g, d)
    }

    fn small_config(epochs: usize, lr: f64) -> ModelConfig {
        let mut c = ModelConfig {
            conv_filters: vec![4],
            cheb_orders: vec![3],
            fc_hidden: vec![16, 8],
            kappa: 4,
            rn_hidden: vec![8],
            epochs,
            batch_size: 16,
            seed: 5,
            relation: RelationKind::Modified,
            ..ModelConfig::default()
        };
        c.optimizer.lr = lr;
        c
    }

    #[test]
    fn batches_never_leave_a_singleton() {
        let order: Vec<usize> = (0..33).collect();
        let b = batches(&order, 16);
        assert_eq!(b.len(), 2);
        assert_eq!(b[1].len(), 17);
        assert_eq!(batches(&order[..32], 16).len(), 2);
    }

    #[test]
    fn separable_toy_is_learned() {
        let (g, d) = toy(200, 1);
        let mut m = HybridModel::new(&g, 2, &small_config(50, 1e-2)).unwrap();
        let r = train(&mut m, &d, None).unwrap();
        assert!(r.final_accuracy >= 0.99, "{:?}", r.val_accuracy);
        assert_eq!(r.peak_accuracy, r.val_accuracy.iter().copied().fold(0.0, f64::max));
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let (g, d) = toy(40, 2);
        let mut m = HybridModel::new(&g, 2, &small_config(2, 0.0)).unwrap();
        let before: Vec<Vec<f64>> = m.params_mut().into_iter().map(|(_, p)| p.value.clone()).collect();
        train(&mut m, &d, None).unwrap();
        let after: Vec<Vec<f64>> = m.params_mut().into_iter().map(|(_, p)| p.value.clone()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn same_seed_same_report() {
        let (g, d) = toy(60, 3);
        let run = || {
            let mut m = HybridModel::new(&g, 2, &small_config(3, 1e-3)).unwrap();
            train(&mut m, &d, None).unwrap()
        };
        assert_eq!(run(), run());
    }
}
