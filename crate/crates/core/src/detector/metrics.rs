//! Detection metrics and their on-disk reports.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detector::train::EpochRecord;
use crate::detector::Detector;
use crate::{Error, Result};

/// Alarm threshold on the predicted attack probability.
pub const DECISION_THRESHOLD: f64 = 0.5;

/// Confusion counts and the derived rates.
///
/// `dr = tp/(tp+fn)` (detection rate / recall), `fa = fp/(fp+tn)` (false
/// alarm rate), `f1 = 2tp/(2tp+fp+fn)`. When a denominator is empty the
/// rate is reported as 0 and `degenerate` is set instead of poisoning
/// downstream comparisons with NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub dr: f64,
    pub fa: f64,
    pub f1: f64,
    pub degenerate: bool,
}

/// Derives the rates from raw confusion counts.
pub fn metrics_from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Metrics {
    let mut degenerate = false;
    let mut rate = |num: usize, den: usize| -> f64 {
        if den == 0 {
            degenerate = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let dr = rate(tp, tp + fn_);
    let fa = rate(fp, fp + tn);
    let f1 = rate(2 * tp, 2 * tp + fp + fn_);
    Metrics { tp, fp, tn, fn_, dr, fa, f1, degenerate }
}

/// Scores a model on one split at the fixed 0.5 threshold.
pub fn evaluate<M: Detector>(model: &M, inputs: &[Vec<f64>], labels: &[u8]) -> Result<Metrics> {
    if inputs.is_empty() {
        return Err(Error::Invalid("cannot evaluate on an empty split".into()));
    }
    if inputs.len() != labels.len() {
        return Err(Error::Invalid(format!(
            "{} inputs vs {} labels",
            inputs.len(),
            labels.len()
        )));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (x, &y) in inputs.iter().zip(labels) {
        let alarm = model.forward(x) > DECISION_THRESHOLD;
        match (y == 1, alarm) {
            (true, true) => tp += 1,
            (true, false) => fn_ += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(metrics_from_counts(tp, fp, tn, fn_))
}

/// The `metrics.json` payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub dr: f64,
    pub fa: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub degenerate: bool,
    pub split_sizes: [usize; 3],
    pub seed: u64,
    pub config_hash: String,
}

impl MetricsReport {
    pub fn new(m: &Metrics, split_sizes: [usize; 3], seed: u64, config_hash: String) -> Self {
        MetricsReport {
            dr: m.dr,
            fa: m.fa,
            f1: m.f1,
            tp: m.tp,
            fp: m.fp,
            tn: m.tn,
            fn_: m.fn_,
            degenerate: m.degenerate,
            split_sizes,
            seed,
            config_hash,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Schema(format!("metrics serialization: {e}")))?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }
}

/// Writes the per-epoch loss history as `epoch,train_loss,val_loss` CSV.
pub fn write_history_csv(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let mut text = String::from("epoch,train_loss,val_loss\n");
    for r in history {
        text.push_str(&format!("{},{:.16e},{:.16e}\n", r.epoch, r.train_loss, r.val_loss));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
