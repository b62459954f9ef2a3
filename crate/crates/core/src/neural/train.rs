//! Mini-batch training with Adam and best-validation selection.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::model::{AnalysisModel, GraphSample};
use crate::domain::Label;
use crate::error::NeuralError;
use crate::evaluation::compute_metrics;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// Seed for the per-epoch shuffle.
    pub seed: u64,
    /// Parameter blocks whose names start with any of these prefixes are not
    /// updated.
    pub frozen: Vec<String>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 16,
            adam: AdamConfig::default(),
            seed: 42,
            frozen: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean training loss per epoch, accumulated over that epoch's batches.
    pub loss_history: Vec<f64>,
    /// Validation macro-F1 after each epoch; empty without a validation set.
    pub val_macro_f1: Vec<f64>,
    /// Zero-based epoch whose parameters were kept.
    pub best_epoch: Option<usize>,
}

/// Predicted label: fake iff `p_fake > p_real`.
pub fn decide(probs: &[f64; 2]) -> Label {
    if probs[1] > probs[0] {
        Label::Fake
    } else {
        Label::Real
    }
}

fn macro_f1(model: &AnalysisModel, samples: &[GraphSample]) -> Result<f64, NeuralError> {
    let mut preds = Vec::with_capacity(samples.len());
    for s in samples {
        preds.push(decide(&model.predict(&s.graph, &s.news)?));
    }
    let labels: Vec<Label> = samples.iter().map(|s| s.label).collect();
    compute_metrics(&preds, &labels)
        .map(|m| m.macro_f1)
        .map_err(|e| NeuralError::Config(e.to_string()))
}

/// Trains in place. With a non-empty `val`, the parameters from the epoch
/// with the highest validation macro-F1 (earliest on ties) are restored at
/// the end.
pub fn train(
    model: &mut AnalysisModel,
    train: &[GraphSample],
    val: &[GraphSample],
    config: &TrainConfig,
) -> Result<TrainReport, NeuralError> {
    if train.is_empty() {
        return Err(NeuralError::Empty("training set"));
    }
    if config.batch_size == 0 {
        return Err(NeuralError::Config("batch_size must be positive".into()));
    }
    let mut frozen = Vec::new();
    for prefix in &config.frozen {
        let hits: Vec<_> = model
            .layout
            .blocks
            .iter()
            .filter(|b| b.name.starts_with(prefix.as_str()))
            .map(|b| b.range())
            .collect();
        if hits.is_empty() {
            return Err(NeuralError::Config(format!("frozen prefix {prefix:?} matches no parameter block")));
        }
        frozen.extend(hits);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = AdamState::new(model.num_params(), config.adam);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut report = TrainReport {
        loss_history: Vec::with_capacity(config.epochs),
        val_macro_f1: Vec::new(),
        best_epoch: None,
    };
    let mut best: Option<(f64, Vec<f64>)> = None;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<GraphSample> = chunk.iter().map(|&i| train[i].clone()).collect();
            let (l, mut grad) = model.loss_and_grad(&batch)?;
            for r in &frozen {
                grad[r.clone()].fill(0.0);
            }
            adam_step(&mut model.params, &grad, &mut state)?;
            epoch_loss += l * chunk.len() as f64;
        }
        let bad = model.layout.non_finite_blocks(&model.params);
        if !bad.is_empty() {
            return Err(NeuralError::NonFinite(bad));
        }
        report.loss_history.push(epoch_loss / train.len() as f64);
        log::debug!("epoch {epoch}: loss {:.6}", epoch_loss / train.len() as f64);

        if !val.is_empty() {
            let f1 = macro_f1(model, val)?;
            report.val_macro_f1.push(f1);
            if best.as_ref().is_none_or(|(b, _)| f1 > *b) {
                best = Some((f1, model.params.clone()));
                report.best_epoch = Some(epoch);
            }
        }
    }
    match best {
        Some((_, params)) => model.params = params,
        None if config.epochs > 0 => report.best_epoch = Some(config.epochs - 1),
        None => {}
    }
    Ok(report)
}
