//! fdia-core: power system measurement pipeline with stealth false data
//! injection synthesis and graph neural detection.
//!
//! The crate is organized along the data path:
//!
//! * [`grid`] — case ingestion, admittance matrix, graph Laplacian;
//! * [`measurement`] / [`powerflow`] — measurement model, AC power flow;
//! * [`estimation`] — weighted least squares state estimation and
//!   largest-normalized-residual bad data detection;
//! * [`scenario`] — load-profile-driven honest dataset generation;
//! * [`attack`] — projected-gradient stealth attack synthesis and dataset
//!   labeling;
//! * [`nn`] / [`detector`] — small dense/graph-convolutional networks,
//!   training, and evaluation.
//!
//! All randomness flows from a single root seed through [`seeding`], so any
//! pipeline stage reproduces byte-identical artifacts for a fixed seed.

pub mod attack;
pub mod dataset;
pub mod detector;
pub mod error;
pub mod estimation;
pub mod grid;
pub mod measurement;
pub mod nn;
pub mod powerflow;
pub mod scenario;
pub mod seeding;
pub mod sparse;
pub mod state;

pub use error::{Error, Result};
