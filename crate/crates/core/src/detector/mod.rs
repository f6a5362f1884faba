//! Attack detectors: Chebyshev graph convolution and a dense baseline.
//!
//! The detector consumes the first 2n entries of a measurement snapshot —
//! the active and reactive injections `[P; Q]` — and predicts the
//! probability that the snapshot carries injected data. The graph model
//! convolves over the electrical topology through the scaled Laplacian;
//! the baseline sees the same features as one flat vector. Both share the
//! [`Detector`] interface, so training ([`train::train`]), evaluation
//! ([`metrics::evaluate`]), and checkpoints ([`checkpoint`]) treat them
//! interchangeably.

pub mod cheb;
pub mod checkpoint;
pub mod metrics;
pub mod mlp;
pub mod model;
pub mod standardize;
pub mod train;

pub use cheb::{cheb_basis_apply, cheb_layer_forward, ChebLayerParams};
pub use checkpoint::{
    load_any, save_any, save_gnn, save_mlp, uses_per_split_standardization, AnyDetector,
};
pub use metrics::{evaluate, metrics_from_counts, Metrics, MetricsReport};
pub use mlp::{build_mlp_baseline, MlpDetector};
pub use model::{formula_parameter_count, ChebDetector};
pub use standardize::Standardizer;
pub use train::{config_hash, split_by_time, train, EpochRecord, TrainConfig, TrainReport};

/// Common surface of both detector families.
///
/// Parameters are exposed as one flat vector in a fixed documented order —
/// the same order checkpoints store and optimizers update — so
/// `param_count` always equals the allocated parameter count.
pub trait Detector {
    /// Expected input width (2n features: active then reactive injections).
    fn n_inputs(&self) -> usize;
    /// Allocated trainable parameter count.
    fn param_count(&self) -> usize;
    /// Parameters flattened in checkpoint order.
    fn params_flat(&self) -> Vec<f64>;
    /// Overwrites all parameters from a flat vector of matching length.
    fn set_params_flat(&mut self, flat: &[f64]);
    fn standardizer(&self) -> &standardize::Standardizer;
    fn set_standardizer(&mut self, s: standardize::Standardizer);
    /// Attack probability for one raw (unstandardized) input snapshot.
    fn forward(&self, input: &[f64]) -> f64;
    /// Mean BCE over the batch and its gradient in flat parameter order.
    fn batch_backward(&self, inputs: &[&[f64]], labels: &[f64]) -> (f64, Vec<f64>);
}
