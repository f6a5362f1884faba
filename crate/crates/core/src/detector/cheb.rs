//! Chebyshev graph-convolution layer.
//!
//! Filtering a node signal `x` with a K-term Chebyshev polynomial of the
//! scaled Laplacian needs only sparse matrix-vector products: the basis
//! vectors obey `x̄_k = 2 L̃ x̄_{k−1} − x̄_{k−2}` with `x̄_0 = x` and
//! `x̄_1 = L̃ x`, so the cost per channel is O(K·|E|). That recursion — not
//! an eigendecomposition — is what keeps detector inference linear in
//! system size.
//!
//! Node-feature matrices are stored column-major: an `n×c` signal is a
//! `Vec<f64>` of length `n·c` whose channel `j` occupies `[j·n, (j+1)·n)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::nn::activation::Activation;
use crate::nn::init::glorot_uniform_fill;
use crate::sparse::Csr;

/// Free coefficients of one graph-convolution layer.
///
/// `theta[(k·c_in + c)·c_out + o]` weights Chebyshev order `k`, input
/// channel `c`, output channel `o`. The bias is one real per output
/// channel *per order* (`bias[k·c_out + o]`); the orders enter the layer
/// additively, so the effective per-channel offset is their sum. Keeping
/// one slot per order makes the allocated parameter count match the
/// closed-form layer size `K·(c_in + 1)·c_out` exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebLayerParams {
    pub k: usize,
    pub c_in: usize,
    pub c_out: usize,
    pub theta: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ChebLayerParams {
    pub fn zeros(k: usize, c_in: usize, c_out: usize) -> Self {
        assert!(k >= 1, "Chebyshev order count must be at least 1");
        ChebLayerParams {
            k,
            c_in,
            c_out,
            theta: vec![0.0; k * c_in * c_out],
            bias: vec![0.0; k * c_out],
        }
    }

    /// Glorot-uniform coefficients (fan-in `K·c_in`), zero bias.
    pub fn glorot<R: Rng>(k: usize, c_in: usize, c_out: usize, rng: &mut R) -> Self {
        let mut p = ChebLayerParams::zeros(k, c_in, c_out);
        glorot_uniform_fill(rng, k * c_in, c_out, &mut p.theta);
        p
    }

    pub fn param_count(&self) -> usize {
        self.theta.len() + self.bias.len()
    }

    #[inline]
    fn theta_at(&self, k: usize, c: usize, o: usize) -> f64 {
        self.theta[(k * self.c_in + c) * self.c_out + o]
    }
}

/// Chebyshev basis `[x̄_0, …, x̄_{K−1}]` of a single node signal.
pub fn cheb_basis_apply(lap: &Csr<f64>, x: &[f64], k: usize) -> Vec<Vec<f64>> {
    let n = lap.n_rows();
    assert_eq!(lap.n_cols(), n, "Laplacian must be square");
    assert_eq!(x.len(), n, "signal dimension mismatch");
    assert!(k >= 1, "need at least the identity term");
    let mut basis = Vec::with_capacity(k);
    basis.push(x.to_vec());
    if k == 1 {
        return basis;
    }
    let mut next = vec![0.0; n];
    lap.matvec(x, &mut next);
    basis.push(next);
    for j in 2..k {
        let mut t = vec![0.0; n];
        lap.matvec(&basis[j - 1], &mut t);
        for i in 0..n {
            t[i] = 2.0 * t[i] - basis[j - 2][i];
        }
        basis.push(t);
    }
    basis
}

/// `T_order(L̃)·v` by running the recursion to the requested depth.
fn apply_cheb_order(lap: &Csr<f64>, v: &[f64], order: usize) -> Vec<f64> {
    let n = v.len();
    if order == 0 {
        return v.to_vec();
    }
    let mut prev = v.to_vec();
    let mut cur = vec![0.0; n];
    lap.matvec(v, &mut cur);
    for _ in 2..=order {
        let mut next = vec![0.0; n];
        lap.matvec(&cur, &mut next);
        for i in 0..n {
            next[i] = 2.0 * next[i] - prev[i];
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Forward pass artifacts kept for the backward pass.
#[derive(Debug, Clone)]
pub struct LayerCache {
    /// `basis[c][k]` is `x̄_k` of input channel `c`.
    pub basis: Vec<Vec<Vec<f64>>>,
    /// Post-activation output, column-major `n×c_out`.
    pub out: Vec<f64>,
}

/// Layer forward pass: `out[:,o] = act(Σ_k Σ_c θ[k][c][o]·x̄_k(X[:,c]) + Σ_k b[k][o])`.
pub fn cheb_layer_forward(
    p: &ChebLayerParams,
    lap: &Csr<f64>,
    x: &[f64],
    act: Activation,
) -> LayerCache {
    let n = lap.n_rows();
    assert_eq!(x.len(), n * p.c_in, "layer input shape mismatch");
    let basis: Vec<Vec<Vec<f64>>> =
        (0..p.c_in).map(|c| cheb_basis_apply(lap, &x[c * n..(c + 1) * n], p.k)).collect();
    let mut pre = vec![0.0; n * p.c_out];
    for o in 0..p.c_out {
        let b: f64 = (0..p.k).map(|k| p.bias[k * p.c_out + o]).sum();
        pre[o * n..(o + 1) * n].fill(b);
    }
    for (c, chan_basis) in basis.iter().enumerate() {
        for (k, xk) in chan_basis.iter().enumerate() {
            for o in 0..p.c_out {
                let w = p.theta_at(k, c, o);
                if w == 0.0 {
                    continue;
                }
                let col = &mut pre[o * n..(o + 1) * n];
                for i in 0..n {
                    col[i] += w * xk[i];
                }
            }
        }
    }
    for v in pre.iter_mut() {
        *v = act.apply(*v);
    }
    LayerCache { basis, out: pre }
}

/// Reverse-mode pass through one layer.
///
/// `d_out` is ∂loss/∂(post-activation output). Parameter gradients are
/// accumulated into `grads`; the return value is ∂loss/∂(layer input) in
/// the same column-major layout, or `None` when `need_input_grad` is
/// false (the first layer never needs it). Because `L̃` is symmetric, the
/// transpose of each `T_k(L̃)` is the operator itself, so input gradients
/// reuse the forward recursion.
pub fn cheb_layer_backward(
    p: &ChebLayerParams,
    lap: &Csr<f64>,
    cache: &LayerCache,
    d_out: &[f64],
    act: Activation,
    grads: &mut ChebLayerParams,
    need_input_grad: bool,
) -> Option<Vec<f64>> {
    let n = lap.n_rows();
    assert_eq!(d_out.len(), n * p.c_out, "gradient shape mismatch");
    assert_eq!(grads.k, p.k);
    assert_eq!(grads.c_in, p.c_in);
    assert_eq!(grads.c_out, p.c_out);

    let mut d_pre = vec![0.0; n * p.c_out];
    for o in 0..p.c_out {
        let out_col = &cache.out[o * n..(o + 1) * n];
        let g_col = &d_out[o * n..(o + 1) * n];
        let d_col = &mut d_pre[o * n..(o + 1) * n];
        for i in 0..n {
            d_col[i] = g_col[i] * act.prime_from_output(out_col[i]);
        }
    }

    // Bias: every order's slot sees the column sum of d_pre.
    for o in 0..p.c_out {
        let s: f64 = d_pre[o * n..(o + 1) * n].iter().sum();
        for k in 0..p.k {
            grads.bias[k * p.c_out + o] += s;
        }
    }

    // theta[k][c][o] multiplies basis[c][k] into output o.
    for (c, chan_basis) in cache.basis.iter().enumerate() {
        for (k, xk) in chan_basis.iter().enumerate() {
            for o in 0..p.c_out {
                let d_col = &d_pre[o * n..(o + 1) * n];
                let mut acc = 0.0;
                for i in 0..n {
                    acc += xk[i] * d_col[i];
                }
                grads.theta[(k * p.c_in + c) * p.c_out + o] += acc;
            }
        }
    }

    if !need_input_grad {
        return None;
    }
    let mut d_in = vec![0.0; n * p.c_in];
    let mut m = vec![0.0; n];
    for c in 0..p.c_in {
        for k in 0..p.k {
            m.fill(0.0);
            for o in 0..p.c_out {
                let w = p.theta_at(k, c, o);
                if w == 0.0 {
                    continue;
                }
                let d_col = &d_pre[o * n..(o + 1) * n];
                for i in 0..n {
                    m[i] += w * d_col[i];
                }
            }
            let tm = apply_cheb_order(lap, &m, k);
            let d_col = &mut d_in[c * n..(c + 1) * n];
            for i in 0..n {
                d_col[i] += tm[i];
            }
        }
    }
    Some(d_in)
}
