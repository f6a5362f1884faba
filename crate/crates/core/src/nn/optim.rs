//! First-order optimizers over flat parameter vectors.
//!
//! Models expose their parameters as one flat `Vec<f64>` (the same order
//! used by checkpoints and parameter counting), so a single optimizer state
//! covers every trainable value.

use serde::{Deserialize, Serialize};

/// Update rule. Hyperparameters ride along so configurations serialize
/// into run manifests verbatim.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum OptimizerKind {
    /// Plain gradient descent.
    Sgd,
    /// Adam with bias correction.
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
    /// RMSprop with a running mean of squared gradients.
    RmsProp { decay: f64, epsilon: f64 },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam { beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }

    pub fn rmsprop() -> Self {
        OptimizerKind::RmsProp { decay: 0.9, epsilon: 1e-8 }
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::adam()),
            "rmsprop" => Ok(OptimizerKind::rmsprop()),
            other => Err(crate::Error::Invalid(format!(
                "unknown optimizer `{other}` (expected sgd, adam, or rmsprop)"
            ))),
        }
    }
}

/// Optimizer state: step counter plus per-parameter moment accumulators
/// whose length mirrors the parameter vector.
#[derive(Debug, Clone)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub lr: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, param_len: usize) -> Self {
        let moments = match kind {
            OptimizerKind::Sgd => 0,
            _ => param_len,
        };
        let second = match kind {
            OptimizerKind::Adam { .. } => param_len,
            _ => 0,
        };
        Optimizer { kind, lr, step: 0, m: vec![0.0; moments], v: vec![0.0; second] }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one in-place update. Deterministic given (state, grads).
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), grads.len(), "parameter/gradient length mismatch");
        self.step += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, &g) in params.iter_mut().zip(grads) {
                    *p -= self.lr * g;
                }
            }
            OptimizerKind::Adam { beta1, beta2, epsilon } => {
                assert_eq!(self.m.len(), params.len(), "optimizer sized for another model");
                let bc1 = 1.0 - beta1.powi(self.step as i32);
                let bc2 = 1.0 - beta2.powi(self.step as i32);
                for i in 0..params.len() {
                    let g = grads[i];
                    self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
                    self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
                    let m_hat = self.m[i] / bc1;
                    let v_hat = self.v[i] / bc2;
                    params[i] -= self.lr * m_hat / (v_hat.sqrt() + epsilon);
                }
            }
            OptimizerKind::RmsProp { decay, epsilon } => {
                assert_eq!(self.m.len(), params.len());
                for i in 0..params.len() {
                    let g = grads[i];
                    self.m[i] = decay * self.m[i] + (1.0 - decay) * g * g;
                    params[i] -= self.lr * g / (self.m[i].sqrt() + epsilon);
                }
            }
        }
    }
}
