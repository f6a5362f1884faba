//! Dense (fully connected) layer.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::nn::init::glorot_uniform_fill;

/// Parameters of one affine map `out = Wᵀ·input + b`.
///
/// `weights` is stored row-major as a `c_in × c_out` matrix
/// (`weights[i * c_out + o]` couples input `i` to output `o`); `bias` holds
/// one real per output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseParams {
    pub c_in: usize,
    pub c_out: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseParams {
    /// All-zero layer of the given shape.
    pub fn zeros(c_in: usize, c_out: usize) -> Self {
        DenseParams { c_in, c_out, weights: vec![0.0; c_in * c_out], bias: vec![0.0; c_out] }
    }

    /// Glorot-uniform weights (±√(6/(fan_in+fan_out))), zero bias.
    pub fn glorot<R: Rng>(c_in: usize, c_out: usize, rng: &mut R) -> Self {
        let mut p = DenseParams::zeros(c_in, c_out);
        glorot_uniform_fill(rng, c_in, c_out, &mut p.weights);
        p
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    /// Affine forward map. Panics on shape mismatch.
    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        assert_eq!(input.len(), self.c_in, "dense input length mismatch");
        let mut out = self.bias.clone();
        for (i, &x) in input.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let row = &self.weights[i * self.c_out..(i + 1) * self.c_out];
            for (o, &w) in row.iter().enumerate() {
                out[o] += w * x;
            }
        }
        out
    }

    /// Accumulates parameter gradients for one sample and returns the
    /// gradient with respect to the input.
    ///
    /// `d_out` is ∂loss/∂output; `grads` mirrors `self` in shape and is
    /// accumulated into (callers zero it per batch).
    pub fn backward(&self, input: &[f64], d_out: &[f64], grads: &mut DenseParams) -> Vec<f64> {
        assert_eq!(input.len(), self.c_in);
        assert_eq!(d_out.len(), self.c_out);
        assert_eq!(grads.c_in, self.c_in);
        assert_eq!(grads.c_out, self.c_out);
        for (o, &g) in d_out.iter().enumerate() {
            grads.bias[o] += g;
        }
        let mut d_in = vec![0.0; self.c_in];
        for (i, &x) in input.iter().enumerate() {
            let row = &self.weights[i * self.c_out..(i + 1) * self.c_out];
            let grow = &mut grads.weights[i * self.c_out..(i + 1) * self.c_out];
            let mut acc = 0.0;
            for (o, &g) in d_out.iter().enumerate() {
                grow[o] += x * g;
                acc += row[o] * g;
            }
            d_in[i] = acc;
        }
        d_in
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weights_pass_input_through() {
        let mut p = DenseParams::zeros(3, 3);
        for i in 0..3 {
            p.weights[i * 3 + i] = 1.0;
        }
        let x = [0.3, -1.2, 7.0];
        assert_eq!(p.forward(&x), x.to_vec());
    }

    #[test]
    fn zero_weights_yield_constant_bias() {
        let mut p = DenseParams::zeros(4, 2);
        p.bias = vec![0.25, -3.0];
        assert_eq!(p.forward(&[1.0, 2.0, 3.0, 4.0]), vec![0.25, -3.0]);
        assert_eq!(p.forward(&[0.0; 4]), vec![0.25, -3.0]);
    }

    #[test]
    fn two_by_two_hand_case() {
        // W = [[1, 2], [3, 4]] (c_in x c_out), b = [0.5, -0.5], x = [5, 6]:
        // out_o = sum_i W[i][o] x_i + b_o -> [1*5 + 3*6 + 0.5, 2*5 + 4*6 - 0.5].
        let p = DenseParams {
            c_in: 2,
            c_out: 2,
            weights: vec![1.0, 2.0, 3.0, 4.0],
            bias: vec![0.5, -0.5],
        };
        assert_eq!(p.forward(&[5.0, 6.0]), vec![23.5, 33.5]);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = crate::seeding::stream(11, "dense-fd", 0);
        let p = DenseParams::glorot(3, 2, &mut rng);
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        // Scalar loss: sum of squares of outputs.
        let loss = |p: &DenseParams, x: &[f64]| -> f64 {
            p.forward(x).iter().map(|v| v * v).sum::<f64>()
        };
        let out = p.forward(&x);
        let d_out: Vec<f64> = out.iter().map(|v| 2.0 * v).collect();
        let mut grads = DenseParams::zeros(3, 2);
        let d_in = p.backward(&x, &d_out, &mut grads);

        let h = 1e-6;
        for i in 0..p.weights.len() {
            let mut pp = p.clone();
            pp.weights[i] += h;
            let mut pm = p.clone();
            pm.weights[i] -= h;
            let fd = (loss(&pp, &x) - loss(&pm, &x)) / (2.0 * h);
            assert!((fd - grads.weights[i]).abs() < 1e-6, "weight {i}");
        }
        for o in 0..p.bias.len() {
            let mut pp = p.clone();
            pp.bias[o] += h;
            let mut pm = p.clone();
            pm.bias[o] -= h;
            let fd = (loss(&pp, &x) - loss(&pm, &x)) / (2.0 * h);
            assert!((fd - grads.bias[o]).abs() < 1e-6, "bias {o}");
        }
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            let fd = (loss(&p, &xp) - loss(&p, &xm)) / (2.0 * h);
            assert!((fd - d_in[i]).abs() < 1e-6, "input {i}");
        }
    }
}
