//! The graph-convolutional attack detector.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detector::cheb::{
    cheb_layer_backward, cheb_layer_forward, ChebLayerParams, LayerCache,
};
use crate::detector::standardize::Standardizer;
use crate::detector::Detector;
use crate::nn::activation::Activation;
use crate::nn::dense::DenseParams;
use crate::nn::loss::binary_cross_entropy_with_grad;
use crate::nn::sigmoid;
use crate::sparse::Csr;

/// Closed-form parameter count of a K-order, L-layer graph detector whose
/// channel chain is `channels = [c_0, …, c_L]` on an `n`-bus grid:
/// `K·Σ_l (c_{l−1}+1)·c_l + n·c_L + 1`.
pub fn formula_parameter_count(n: usize, k: usize, channels: &[usize]) -> usize {
    assert!(!channels.is_empty());
    let conv: usize =
        channels.windows(2).map(|w| k * (w[0] + 1) * w[1]).sum();
    conv + n * channels[channels.len() - 1] + 1
}

/// Graph detector: input standardization, `L` Chebyshev convolution layers
/// over the scaled Laplacian, a flattening step (node-major then channel),
/// and a sigmoid dense head producing the attack probability.
#[derive(Debug, Clone)]
pub struct ChebDetector {
    pub laplacian_scaled: Csr<f64>,
    pub k: usize,
    /// Channel chain `[c_0 = 2, c_1, …, c_L]`.
    pub channels: Vec<usize>,
    pub layers: Vec<ChebLayerParams>,
    pub head: DenseParams,
    pub activation: Activation,
    pub standardizer: Standardizer,
}

/// Architecture half of a detector checkpoint manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChebDetectorSpec {
    pub n: usize,
    pub k: usize,
    pub channels: Vec<usize>,
    pub activation: Activation,
}

pub const INPUT_CHANNELS: usize = 2;

impl ChebDetector {
    /// Fresh Glorot-initialized detector. `hidden` lists the channel width
    /// of each convolution layer; empty means a dense head on the raw
    /// two-channel input.
    pub fn new<R: Rng>(
        laplacian_scaled: Csr<f64>,
        k: usize,
        hidden: &[usize],
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let n = laplacian_scaled.n_rows();
        assert_eq!(laplacian_scaled.n_cols(), n, "Laplacian must be square");
        let mut channels = Vec::with_capacity(hidden.len() + 1);
        channels.push(INPUT_CHANNELS);
        channels.extend_from_slice(hidden);
        let layers: Vec<ChebLayerParams> = channels
            .windows(2)
            .map(|w| ChebLayerParams::glorot(k, w[0], w[1], rng))
            .collect();
        let c_last = channels[channels.len() - 1];
        let head = DenseParams::glorot(n * c_last, 1, rng);
        ChebDetector {
            laplacian_scaled,
            k,
            channels,
            layers,
            head,
            activation,
            standardizer: Standardizer::identity(n * INPUT_CHANNELS),
        }
    }

    /// Default architecture: three 32-channel layers of order K = 3 with
    /// ReLU activations.
    pub fn with_defaults<R: Rng>(laplacian_scaled: Csr<f64>, rng: &mut R) -> Self {
        ChebDetector::new(laplacian_scaled, 3, &[32, 32, 32], Activation::Relu, rng)
    }

    pub fn n(&self) -> usize {
        self.laplacian_scaled.n_rows()
    }

    pub fn spec(&self) -> ChebDetectorSpec {
        ChebDetectorSpec {
            n: self.n(),
            k: self.k,
            channels: self.channels.clone(),
            activation: self.activation,
        }
    }

    /// Allocated parameter count. Always equals
    /// [`formula_parameter_count`] — asserted in tests layer by layer.
    pub fn count_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum::<usize>() + self.head.param_count()
    }

    /// Named parameter blocks in flat order, for checkpoint manifests.
    pub fn blocks(&self) -> Vec<(String, Vec<usize>)> {
        let mut blocks = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            blocks.push((format!("layer{i}.theta"), vec![l.k, l.c_in, l.c_out]));
            blocks.push((format!("layer{i}.bias"), vec![l.k, l.c_out]));
        }
        blocks.push(("head.weight".to_string(), vec![self.head.c_in, self.head.c_out]));
        blocks.push(("head.bias".to_string(), vec![self.head.c_out]));
        blocks
    }

    /// Column-major layer stack output -> node-major-then-channel flat
    /// vector feeding the dense head.
    fn flatten(&self, out: &[f64]) -> Vec<f64> {
        let n = self.n();
        let c = out.len() / n;
        let mut flat = vec![0.0; out.len()];
        for ch in 0..c {
            for node in 0..n {
                flat[node * c + ch] = out[ch * n + node];
            }
        }
        flat
    }

    fn unflatten(&self, flat: &[f64]) -> Vec<f64> {
        let n = self.n();
        let c = flat.len() / n;
        let mut out = vec![0.0; flat.len()];
        for ch in 0..c {
            for node in 0..n {
                out[ch * n + node] = flat[node * c + ch];
            }
        }
        out
    }

    fn forward_cached(&self, input: &[f64]) -> (Vec<LayerCache>, Vec<f64>, f64, f64) {
        let x0 = self.standardizer.apply(input);
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut cur = x0;
        for layer in &self.layers {
            let cache =
                cheb_layer_forward(layer, &self.laplacian_scaled, &cur, self.activation);
            cur = cache.out.clone();
            caches.push(cache);
        }
        let flat_in = self.flatten(&cur);
        let head_pre = self.head.forward(&flat_in)[0];
        let pred = sigmoid(head_pre);
        (caches, flat_in, head_pre, pred)
    }
}

impl Detector for ChebDetector {
    fn n_inputs(&self) -> usize {
        self.n() * INPUT_CHANNELS
    }

    fn param_count(&self) -> usize {
        self.count_parameters()
    }

    fn params_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.count_parameters());
        for l in &self.layers {
            flat.extend_from_slice(&l.theta);
            flat.extend_from_slice(&l.bias);
        }
        flat.extend_from_slice(&self.head.weights);
        flat.extend_from_slice(&self.head.bias);
        flat
    }

    fn set_params_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.count_parameters(), "parameter vector length mismatch");
        let mut at = 0;
        for l in &mut self.layers {
            let nt = l.theta.len();
            l.theta.copy_from_slice(&flat[at..at + nt]);
            at += nt;
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
        assert_eq!(s.len(), self.n_inputs(), "standardizer width mismatch");
        self.standardizer = s;
    }

    fn forward(&self, input: &[f64]) -> f64 {
        self.forward_cached(input).3
    }

    fn batch_backward(&self, inputs: &[&[f64]], labels: &[f64]) -> (f64, Vec<f64>) {
        assert_eq!(inputs.len(), labels.len());
        let mut layer_grads: Vec<ChebLayerParams> = self
            .layers
            .iter()
            .map(|l| ChebLayerParams::zeros(l.k, l.c_in, l.c_out))
            .collect();
        let mut head_grads = DenseParams::zeros(self.head.c_in, self.head.c_out);

        let passes: Vec<(Vec<LayerCache>, Vec<f64>, f64, f64)> =
            inputs.iter().map(|x| self.forward_cached(x)).collect();
        let preds: Vec<f64> = passes.iter().map(|p| p.3).collect();
        let (loss, d_pred) = binary_cross_entropy_with_grad(labels, &preds);

        for (s, (caches, flat_in, _, pred)) in passes.iter().enumerate() {
            let d_head_pre = d_pred[s] * pred * (1.0 - pred);
            if d_head_pre == 0.0 {
                continue;
            }
            let d_flat = self.head.backward(flat_in, &[d_head_pre], &mut head_grads);
            let mut d_cur = self.unflatten(&d_flat);
            for (l, layer) in self.layers.iter().enumerate().rev() {
                let d_in = cheb_layer_backward(
                    layer,
                    &self.laplacian_scaled,
                    &caches[l],
                    &d_cur,
                    self.activation,
                    &mut layer_grads[l],
                    l > 0,
                );
                match d_in {
                    Some(d) => d_cur = d,
                    None => break,
                }
            }
        }

        let mut flat = Vec::with_capacity(self.count_parameters());
        for g in &layer_grads {
            flat.extend_from_slice(&g.theta);
            flat.extend_from_slice(&g.bias);
        }
        flat.extend_from_slice(&head_grads.weights);
        flat.extend_from_slice(&head_grads.bias);
        (loss, flat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{resolve_case, GraphOperators};
    use rand::Rng;

    fn path_laplacian(n: usize) -> Csr<f64> {
        let mut triplets = Vec::new();
        for i in 0..n - 1 {
            triplets.push((i, i + 1, 1.0));
            triplets.push((i + 1, i, 1.0));
        }
        let w = Csr::from_triplets(n, n, &triplets);
        let l = crate::grid::laplacian::normalized_laplacian(&w).unwrap();
        let lmax = crate::grid::laplacian::lambda_max(&l);
        crate::grid::laplacian::scaled_laplacian(&l, lmax)
    }

    #[test]
    fn zero_weights_predict_sigmoid_of_head_bias() {
        let mut rng = crate::seeding::stream(31, "model", 0);
        let mut m = ChebDetector::new(path_laplacian(5), 3, &[4], Activation::Relu, &mut rng);
        let zeros = vec![0.0; m.count_parameters()];
        m.set_params_flat(&zeros);
        let mut flat = m.params_flat();
        *flat.last_mut().unwrap() = 0.75; // head bias
        m.set_params_flat(&flat);
        let x: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
        assert!((m.forward(&x) - sigmoid(0.75)).abs() < 1e-15);
    }

    #[test]
    fn ieee14_default_architecture_has_7073_parameters() {
        let case = resolve_case("ieee14").unwrap();
        let ops = GraphOperators::build(&case).unwrap();
        let mut rng = crate::seeding::stream(31, "model", 1);
        let m = ChebDetector::with_defaults(ops.scaled, &mut rng);
        assert_eq!(m.count_parameters(), 7073);
        assert_eq!(formula_parameter_count(14, 3, &[2, 32, 32, 32]), 7073);
        assert_eq!(m.params_flat().len(), 7073);
    }

    #[test]
    fn dense_only_detector_counts_two_n_plus_one() {
        let mut rng = crate::seeding::stream(31, "model", 2);
        let m = ChebDetector::new(path_laplacian(9), 3, &[], Activation::Relu, &mut rng);
        assert_eq!(m.count_parameters(), 9 * 2 + 1);
        assert_eq!(formula_parameter_count(9, 3, &[2]), 19);
        let x = vec![0.5; 18];
        assert!(m.forward(&x).is_finite());
    }

    #[test]
    fn formula_matches_allocation_across_the_search_grid() {
        let mut rng = crate::seeding::stream(31, "model", 3);
        for n in [5usize, 23] {
            let lap = path_laplacian(n);
            for k in 2..=5 {
                for l in 1..=4 {
                    for c in [8usize, 16, 32, 64] {
                        let hidden = vec![c; l];
                        let m = ChebDetector::new(
                            lap.clone(),
                            k,
                            &hidden,
                            Activation::Relu,
                            &mut rng,
                        );
                        let mut channels = vec![2];
                        channels.extend_from_slice(&hidden);
                        assert_eq!(
                            m.count_parameters(),
                            formula_parameter_count(n, k, &channels),
                            "n={n} K={k} L={l} c={c}"
                        );
                        assert_eq!(m.params_flat().len(), m.count_parameters());
                    }
                }
            }
        }
    }

    #[test]
    fn params_round_trip_through_flat_vector() {
        let mut rng = crate::seeding::stream(31, "model", 4);
        let m = ChebDetector::new(path_laplacian(6), 3, &[4, 4], Activation::Relu, &mut rng);
        let flat = m.params_flat();
        let mut m2 = m.clone();
        let zeroed = vec![0.0; flat.len()];
        m2.set_params_flat(&zeroed);
        assert!(m2.params_flat().iter().all(|&v| v == 0.0));
        m2.set_params_flat(&flat);
        assert_eq!(m2.params_flat(), flat);
        assert_eq!(m2.layers, m.layers);
        assert_eq!(m2.head, m.head);
    }

    #[test]
    fn backward_matches_finite_differences_on_a_tiny_model() {
        let mut rng = crate::seeding::stream(31, "model", 5);
        let mut m = ChebDetector::new(path_laplacian(5), 3, &[4, 4], Activation::Relu, &mut rng);
        // A fitted standardizer must not disturb gradient correctness.
        let fit_samples: Vec<Vec<f64>> =
            (0..6).map(|_| (0..10).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        m.set_standardizer(Standardizer::fit(&fit_samples).unwrap());

        let batch: Vec<Vec<f64>> =
            (0..3).map(|_| (0..10).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let labels = [1.0, 0.0, 1.0];
        let refs: Vec<&[f64]> = batch.iter().map(|v| v.as_slice()).collect();
        let (_, grads) = m.batch_backward(&refs, &labels);
        let params = m.params_flat();

        let mut probe = m.clone();
        let report = crate::nn::finite_difference_check(
            |p: &[f64]| {
                probe.set_params_flat(p);
                let preds: Vec<f64> = batch.iter().map(|x| probe.forward(x)).collect();
                crate::nn::binary_cross_entropy(&labels, &preds)
            },
            &params,
            &grads,
            1e-5,
            1e-4,
        );
        assert!(report.passed, "{report}");
    }

    #[test]
    fn zero_input_channel_gets_zero_theta_gradient() {
        let mut rng = crate::seeding::stream(31, "model", 6);
        let m = ChebDetector::new(path_laplacian(5), 3, &[4], Activation::Relu, &mut rng);
        let n = 5;
        // Channel 1 (reactive column) identically zero across the batch.
        let batch: Vec<Vec<f64>> = (0..4)
            .map(|_| {
                let mut x = vec![0.0; 2 * n];
                for v in x.iter_mut().take(n) {
                    *v = rng.random_range(-1.0..1.0);
                }
                x
            })
            .collect();
        let labels = [1.0, 0.0, 1.0, 0.0];
        let refs: Vec<&[f64]> = batch.iter().map(|v| v.as_slice()).collect();
        let (_, grads) = m.batch_backward(&refs, &labels);
        // theta gradients of layer 0 for input channel c=1: indices
        // (k*c_in + 1)*c_out + o.
        let l = &m.layers[0];
        for k in 0..l.k {
            for o in 0..l.c_out {
                let idx = (k * l.c_in + 1) * l.c_out + o;
                assert_eq!(grads[idx], 0.0, "k={k} o={o}");
            }
        }
    }
}
