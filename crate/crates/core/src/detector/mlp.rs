//! Dense feed-forward baseline detector.
//!
//! Same interface as the graph detector so training, evaluation, and
//! checkpointing treat both uniformly: standardized flat `[P; Q]` input, a
//! stack of equal-width hidden layers, and a sigmoid dense head.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detector::standardize::Standardizer;
use crate::detector::Detector;
use crate::nn::activation::Activation;
use crate::nn::dense::DenseParams;
use crate::nn::loss::binary_cross_entropy_with_grad;
use crate::nn::sigmoid;

#[derive(Debug, Clone)]
pub struct MlpDetector {
    pub n_inputs: usize,
    pub hidden: Vec<DenseParams>,
    pub head: DenseParams,
    pub activation: Activation,
    pub standardizer: Standardizer,
}

/// Architecture half of an MLP checkpoint manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpDetectorSpec {
    pub n_inputs: usize,
    pub hidden_units: Vec<usize>,
    pub activation: Activation,
}

/// Builds the baseline for an `n`-bus grid: `layers` hidden layers of
/// `units` neurons each on the flattened 2n-feature input.
pub fn build_mlp_baseline<R: Rng>(
    n: usize,
    layers: usize,
    units: usize,
    activation: Activation,
    rng: &mut R,
) -> MlpDetector {
    let n_inputs = 2 * n;
    let mut hidden = Vec::with_capacity(layers);
    let mut c_in = n_inputs;
    for _ in 0..layers {
        hidden.push(DenseParams::glorot(c_in, units, rng));
        c_in = units;
    }
    let head = DenseParams::glorot(c_in, 1, rng);
    MlpDetector {
        n_inputs,
        hidden,
        head,
        activation,
        standardizer: Standardizer::identity(n_inputs),
    }
}

impl MlpDetector {
    /// Defaults for desk-scale grids: 4 hidden layers of 16 ELU units.
    pub fn with_defaults<R: Rng>(n: usize, rng: &mut R) -> Self {
        build_mlp_baseline(n, 4, 16, Activation::Elu, rng)
    }

    pub fn count_parameters(&self) -> usize {
        self.hidden.iter().map(|l| l.param_count()).sum::<usize>() + self.head.param_count()
    }

    pub fn spec(&self) -> MlpDetectorSpec {
        MlpDetectorSpec {
            n_inputs: self.n_inputs,
            hidden_units: self.hidden.iter().map(|l| l.c_out).collect(),
            activation: self.activation,
        }
    }

    pub fn blocks(&self) -> Vec<(String, Vec<usize>)> {
        let mut blocks = Vec::new();
        for (i, l) in self.hidden.iter().enumerate() {
            blocks.push((format!("hidden{i}.weight"), vec![l.c_in, l.c_out]));
            blocks.push((format!("hidden{i}.bias"), vec![l.c_out]));
        }
        blocks.push(("head.weight".to_string(), vec![self.head.c_in, self.head.c_out]));
        blocks.push(("head.bias".to_string(), vec![self.head.c_out]));
        blocks
    }

    /// Post-activation outputs of every hidden layer for one sample.
    fn forward_cached(&self, input: &[f64]) -> (Vec<Vec<f64>>, f64) {
        let mut acts = Vec::with_capacity(self.hidden.len() + 1);
        acts.push(self.standardizer.apply(input));
        for layer in &self.hidden {
            let mut out = layer.forward(acts.last().expect("nonempty"));
            for v in out.iter_mut() {
                *v = self.activation.apply(*v);
            }
            acts.push(out);
        }
        let pred = sigmoid(self.head.forward(acts.last().expect("nonempty"))[0]);
        (acts, pred)
    }
}

impl Detector for MlpDetector {
    fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    fn param_count(&self) -> usize {
        self.count_parameters()
    }

    fn params_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.count_parameters());
        for l in &self.hidden {
            flat.extend_from_slice(&l.weights);
            flat.extend_from_slice(&l.bias);
        }
        flat.extend_from_slice(&self.head.weights);
        flat.extend_from_slice(&self.head.bias);
        flat
    }

    fn set_params_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.count_parameters(), "parameter vector length mismatch");
        let mut at = 0;
        for l in &mut self.hidden {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[at..at + nw]);
            at += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&flat[at..at + nb]);
            at += nb;
        }
        let nw = self.head.weights.len();
        self.head.weights.copy_from_slice(&flat[at..at + nw]);
        at += nw;
        let nb = self.head.bias.len();
        self.head.bias.copy_from_slice(&flat[at..at + nb]);
    }

    fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }

    fn set_standardizer(&mut self, s: Standardizer) {
        assert_eq!(s.len(), self.n_inputs, "standardizer width mismatch");
        self.standardizer = s;
    }

    fn forward(&self, input: &[f64]) -> f64 {
        self.forward_cached(input).1
    }

    fn batch_backward(&self, inputs: &[&[f64]], labels: &[f64]) -> (f64, Vec<f64>) {
        assert_eq!(inputs.len(), labels.len());
        let mut hidden_grads: Vec<DenseParams> =
            self.hidden.iter().map(|l| DenseParams::zeros(l.c_in, l.c_out)).collect();
        let mut head_grads = DenseParams::zeros(self.head.c_in, self.head.c_out);

        let passes: Vec<(Vec<Vec<f64>>, f64)> =
            inputs.iter().map(|x| self.forward_cached(x)).collect();
        let preds: Vec<f64> = passes.iter().map(|p| p.1).collect();
        let (loss, d_pred) = binary_cross_entropy_with_grad(labels, &preds);

        for (s, (acts, pred)) in passes.iter().enumerate() {
            let d_head_pre = d_pred[s] * pred * (1.0 - pred);
            if d_head_pre == 0.0 {
                continue;
            }
            let mut d_cur =
                self.head.backward(acts.last().expect("nonempty"), &[d_head_pre], &mut head_grads);
            for (l, layer) in self.hidden.iter().enumerate().rev() {
                let out = &acts[l + 1];
                for (d, &o) in d_cur.iter_mut().zip(out) {
                    *d *= self.activation.prime_from_output(o);
                }
                d_cur = layer.backward(&acts[l], &d_cur, &mut hidden_grads[l]);
            }
        }

        let mut flat = Vec::with_capacity(self.count_parameters());
        for g in &hidden_grads {
            flat.extend_from_slice(&g.weights);
            flat.extend_from_slice(&g.bias);
        }
        flat.extend_from_slice(&head_grads.weights);
        flat.extend_from_slice(&head_grads.bias);
        (loss, flat)
    }
}
