//! Minimal neural-network substrate.
//!
//! Dense layers, elementwise activations, binary cross-entropy, first-order
//! optimizers, and a central finite-difference gradient checker. Gradients
//! throughout the crate are hand-derived for the fixed detector
//! architectures rather than produced by a general autodiff graph, so the
//! checker in [`gradcheck`] is the safety net every analytic gradient must
//! pass.
//!
//! Everything is double precision: the gradient checks demand tolerances
//! (1e-5 relative on composed layers) that single precision cannot meet.

pub mod activation;
pub mod checkpoint;
pub mod dense;
pub mod gradcheck;
pub mod init;
pub mod loss;
pub mod optim;

pub use activation::{elu, relu, sigmoid, Activation};
pub use checkpoint::{load_checkpoint, save_checkpoint, BlockInfo, Manifest};
pub use dense::DenseParams;
pub use gradcheck::{finite_difference_check, GradCheckReport};
pub use init::glorot_uniform_fill;
pub use loss::{binary_cross_entropy, binary_cross_entropy_with_grad, PRED_CLIP};
pub use optim::{Optimizer, OptimizerKind};
