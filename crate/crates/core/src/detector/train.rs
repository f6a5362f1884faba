//! Mini-batch training with time-ordered splits and early stopping.

use std::ops::Range;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::detector::standardize::Standardizer;
use crate::detector::Detector;
use crate::nn::loss::binary_cross_entropy;
use crate::nn::optim::{Optimizer, OptimizerKind};
use crate::{Error, Result};

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs tolerated without validation-loss improvement.
    pub patience: usize,
    pub optimizer: OptimizerKind,
    pub lr: f64,
    /// Time-ordered train/validation/test fractions; must sum to 1.
    pub splits: [f64; 3],
    pub seed: u64,
    /// Standardize each split with its own statistics instead of reusing
    /// the training-split statistics everywhere.
    pub paper_standardization: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 64,
            max_epochs: 128,
            patience: 16,
            optimizer: OptimizerKind::adam(),
            lr: 1e-3,
            splits: [0.6, 0.2, 0.2],
            seed: 0,
            paper_standardization: false,
        }
    }
}

impl TrainConfig {
    /// Baseline-detector defaults (RMSprop instead of Adam).
    pub fn for_mlp() -> Self {
        TrainConfig { optimizer: OptimizerKind::rmsprop(), ..TrainConfig::default() }
    }
}

/// Hex SHA-256 of a configuration's canonical JSON, recorded next to
/// metrics so runs are attributable to exact settings.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let text = serde_json::to_string(config).expect("config serialization");
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Contiguous time-ordered index ranges of the three splits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

impl Splits {
    pub fn sizes(&self) -> [usize; 3] {
        [self.train.len(), self.val.len(), self.test.len()]
    }
}

/// Splits `t` time-ordered samples by the given fractions: the first block
/// trains, the next validates, the tail evaluates.
pub fn split_by_time(t: usize, fractions: [f64; 3]) -> Result<Splits> {
    if fractions.iter().any(|&f| f < 0.0) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid(format!(
            "split fractions {fractions:?} must be nonnegative and sum to 1"
        )));
    }
    let n_train = (t as f64 * fractions[0]).round() as usize;
    let n_val = (t as f64 * fractions[1]).round() as usize;
    if n_train == 0 || n_val == 0 || n_train + n_val >= t {
        return Err(Error::Invalid(format!(
            "{t} samples leave an empty split under fractions {fractions:?}"
        )));
    }
    Ok(Splits { train: 0..n_train, val: n_train..n_train + n_val, test: n_train + n_val..t })
}

/// One line of the training history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// Everything train() produced besides the mutated model.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
    pub splits: Splits,
    /// Inputs as the model consumed them (pre-standardized when the
    /// per-split mode is active), for evaluating on the same footing.
    pub prepared: Vec<Vec<f64>>,
}

fn mean_loss<M: Detector>(model: &M, inputs: &[Vec<f64>], labels: &[u8], range: &Range<usize>) -> f64 {
    let preds: Vec<f64> = inputs[range.clone()].iter().map(|x| model.forward(x)).collect();
    let truth: Vec<f64> = labels[range.clone()].iter().map(|&y| f64::from(y)).collect();
    binary_cross_entropy(&truth, &preds)
}

/// Trains `model` in place and restores the best-validation weights.
///
/// `inputs` are raw (unstandardized) detector inputs in time order;
/// `labels` are 0/1. Deterministic for a fixed `cfg.seed`: initialization
/// is the caller's, batch order comes from a per-epoch hash-derived
/// stream, and all reductions run in a fixed order.
pub fn train<M: Detector>(
    model: &mut M,
    inputs: &[Vec<f64>],
    labels: &[u8],
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    if inputs.len() != labels.len() {
        return Err(Error::Invalid(format!(
            "{} inputs vs {} labels",
            inputs.len(),
            labels.len()
        )));
    }
    if let Some(bad) = labels.iter().find(|&&y| y > 1) {
        return Err(Error::Invalid(format!("labels must be 0/1, found {bad}")));
    }
    if inputs.iter().any(|x| x.len() != model.n_inputs()) {
        return Err(Error::Invalid(format!(
            "input width does not match the model's {} features",
            model.n_inputs()
        )));
    }
    let splits = split_by_time(inputs.len(), cfg.splits)?;
    let train_labels = &labels[splits.train.clone()];
    let positives = train_labels.iter().filter(|&&y| y == 1).count();
    if positives == 0 || positives == train_labels.len() {
        return Err(Error::Invalid(format!(
            "training split is single-class ({positives} of {} positive); \
             the detector cannot fit a decision boundary",
            train_labels.len()
        )));
    }

    let prepared: Vec<Vec<f64>> = if cfg.paper_standardization {
        // Literal recipe: each split standardized with its own statistics.
        model.set_standardizer(Standardizer::identity(model.n_inputs()));
        let mut prepared = Vec::with_capacity(inputs.len());
        for range in [&splits.train, &splits.val, &splits.test] {
            prepared.extend(Standardizer::fit_apply(&inputs[range.clone()])?);
        }
        prepared
    } else {
        let fitted = Standardizer::fit(&inputs[splits.train.clone()])?;
        model.set_standardizer(fitted);
        inputs.to_vec()
    };

    let mut optimizer = Optimizer::new(cfg.optimizer, cfg.lr, model.param_count());
    let mut history = Vec::new();
    let mut best_val_loss = f64::INFINITY;
    let mut best_epoch = 0;
    let mut best_params = model.params_flat();
    let mut epochs_since_best = 0;
    let mut stopped_early = false;

    let mut order: Vec<usize> = splits.train.clone().collect();
    for epoch in 1..=cfg.max_epochs {
        let mut rng = crate::seeding::stream(cfg.seed, "shuffle", epoch as u64);
        order.shuffle(&mut rng);

        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let xs: Vec<&[f64]> = batch.iter().map(|&i| prepared[i].as_slice()).collect();
            let ys: Vec<f64> = batch.iter().map(|&i| f64::from(labels[i])).collect();
            let (loss, grads) = model.batch_backward(&xs, &ys);
            let mut params = model.params_flat();
            optimizer.step(&mut params, &grads);
            model.set_params_flat(&params);
            epoch_loss += loss * batch.len() as f64;
        }
        let train_loss = epoch_loss / order.len() as f64;
        let val_loss = mean_loss(model, &prepared, labels, &splits.val);
        history.push(EpochRecord { epoch, train_loss, val_loss });

        if val_loss < best_val_loss {
            best_val_loss = val_loss;
            best_epoch = epoch;
            best_params = model.params_flat();
            epochs_since_best = 0;
        } else {
            epochs_since_best += 1;
            if epochs_since_best >= cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }
    model.set_params_flat(&best_params);

    Ok(TrainReport { history, best_epoch, best_val_loss, stopped_early, splits, prepared })
}
