//! Saving and loading trained detectors.
//!
//! Both model families share the checkpoint container from [`crate::nn`]:
//! `manifest.json` carries the architecture, hyperparameters, seed, input
//! standardizer, and (for the graph model) the scaled Laplacian itself, so
//! a reloaded detector reproduces predictions bit for bit without needing
//! the original grid case at hand.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detector::mlp::{MlpDetector, MlpDetectorSpec};
use crate::detector::model::{ChebDetector, ChebDetectorSpec};
use crate::detector::standardize::Standardizer;
use crate::detector::Detector;
use crate::nn::checkpoint::{load_checkpoint, save_checkpoint, Manifest};
use crate::nn::dense::DenseParams;
use crate::sparse::Csr;
use crate::{Error, Result};

/// Model metadata stored in the manifest's `model` field.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
enum ModelMeta {
    Gnn {
        #[serde(flatten)]
        spec: ChebDetectorSpec,
        laplacian: Csr<f64>,
        standardizer: Standardizer,
        seed: u64,
        flatten_order: String,
        init: String,
        /// "train-split" (statistics fitted on the training split) or
        /// "per-split" (each split standardized separately).
        standardization: String,
    },
    Mlp {
        #[serde(flatten)]
        spec: MlpDetectorSpec,
        standardizer: Standardizer,
        seed: u64,
        init: String,
        standardization: String,
    },
}

/// A loaded detector of either family.
#[derive(Debug, Clone)]
pub enum AnyDetector {
    Gnn(ChebDetector),
    Mlp(MlpDetector),
}

impl AnyDetector {
    pub fn kind(&self) -> &'static str {
        match self {
            AnyDetector::Gnn(_) => "gnn",
            AnyDetector::Mlp(_) => "mlp",
        }
    }

    pub fn as_detector(&self) -> &dyn Detector {
        match self {
            AnyDetector::Gnn(m) => m,
            AnyDetector::Mlp(m) => m,
        }
    }

    /// Number of buses the detector was built for.
    pub fn n_buses(&self) -> usize {
        self.as_detector().n_inputs() / 2
    }
}

impl Detector for AnyDetector {
    fn n_inputs(&self) -> usize {
        self.as_detector().n_inputs()
    }
    fn param_count(&self) -> usize {
        self.as_detector().param_count()
    }
    fn params_flat(&self) -> Vec<f64> {
        self.as_detector().params_flat()
    }
    fn set_params_flat(&mut self, flat: &[f64]) {
        match self {
            AnyDetector::Gnn(m) => m.set_params_flat(flat),
            AnyDetector::Mlp(m) => m.set_params_flat(flat),
        }
    }
    fn standardizer(&self) -> &Standardizer {
        self.as_detector().standardizer()
    }
    fn set_standardizer(&mut self, s: Standardizer) {
        match self {
            AnyDetector::Gnn(m) => m.set_standardizer(s),
            AnyDetector::Mlp(m) => m.set_standardizer(s),
        }
    }
    fn forward(&self, input: &[f64]) -> f64 {
        self.as_detector().forward(input)
    }
    fn batch_backward(&self, inputs: &[&[f64]], labels: &[f64]) -> (f64, Vec<f64>) {
        self.as_detector().batch_backward(inputs, labels)
    }
}

fn to_manifest(meta: ModelMeta, blocks: &[(String, Vec<usize>)]) -> Result<Manifest> {
    let value = serde_json::to_value(&meta)
        .map_err(|e| Error::Schema(format!("model metadata serialization: {e}")))?;
    let refs: Vec<(&str, Vec<usize>)> =
        blocks.iter().map(|(n, s)| (n.as_str(), s.clone())).collect();
    Ok(Manifest::new(value, &refs))
}

fn mode_label(paper_standardization: bool) -> String {
    if paper_standardization { "per-split".to_string() } else { "train-split".to_string() }
}

/// Writes a graph-detector checkpoint directory.
pub fn save_gnn(
    dir: &Path,
    m: &ChebDetector,
    seed: u64,
    paper_standardization: bool,
) -> Result<()> {
    let meta = ModelMeta::Gnn {
        spec: m.spec(),
        laplacian: m.laplacian_scaled.clone(),
        standardizer: m.standardizer.clone(),
        seed,
        flatten_order: "node-major-then-channel".to_string(),
        init: "glorot-uniform".to_string(),
        standardization: mode_label(paper_standardization),
    };
    let manifest = to_manifest(meta, &m.blocks())?;
    save_checkpoint(dir, &manifest, &m.params_flat())
}

/// Writes a baseline-detector checkpoint directory.
pub fn save_mlp(
    dir: &Path,
    m: &MlpDetector,
    seed: u64,
    paper_standardization: bool,
) -> Result<()> {
    let meta = ModelMeta::Mlp {
        spec: m.spec(),
        standardizer: m.standardizer.clone(),
        seed,
        init: "glorot-uniform".to_string(),
        standardization: mode_label(paper_standardization),
    };
    let manifest = to_manifest(meta, &m.blocks())?;
    save_checkpoint(dir, &manifest, &m.params_flat())
}

/// Saves either detector family.
pub fn save_any(dir: &Path, m: &AnyDetector, seed: u64, paper_standardization: bool) -> Result<()> {
    match m {
        AnyDetector::Gnn(m) => save_gnn(dir, m, seed, paper_standardization),
        AnyDetector::Mlp(m) => save_mlp(dir, m, seed, paper_standardization),
    }
}

/// True when the checkpoint records per-split standardization.
pub fn uses_per_split_standardization(dir: &Path) -> Result<bool> {
    let manifest_path = dir.join(crate::nn::checkpoint::MANIFEST_FILE);
    let text = std::fs::read_to_string(&manifest_path)
        .map_err(|e| Error::io(&manifest_path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Schema(format!("{}: {e}", manifest_path.display())))?;
    Ok(value["model"]["standardization"] == "per-split")
}

/// Reads a checkpoint directory back into a ready-to-run detector.
pub fn load_any(dir: &Path) -> Result<AnyDetector> {
    let (manifest, flat) = load_checkpoint(dir)?;
    let meta: ModelMeta = serde_json::from_value(manifest.model.clone())
        .map_err(|e| Error::Schema(format!("{}: model metadata: {e}", dir.display())))?;
    match meta {
        ModelMeta::Gnn { spec, laplacian, standardizer, .. } => {
            if laplacian.n_rows() != spec.n {
                return Err(Error::Schema(format!(
                    "{}: Laplacian is {}x{} but the architecture says n = {}",
                    dir.display(),
                    laplacian.n_rows(),
                    laplacian.n_cols(),
                    spec.n
                )));
            }
            let hidden = &spec.channels[1..];
            let mut rng = crate::seeding::stream(0, "checkpoint-load", 0);
            let mut m =
                ChebDetector::new(laplacian, spec.k, hidden, spec.activation, &mut rng);
            if flat.len() != m.count_parameters() {
                return Err(Error::Schema(format!(
                    "{}: blob holds {} parameters, architecture needs {}",
                    dir.display(),
                    flat.len(),
                    m.count_parameters()
                )));
            }
            m.set_params_flat(&flat);
            m.set_standardizer(standardizer);
            Ok(AnyDetector::Gnn(m))
        }
        ModelMeta::Mlp { spec, standardizer, .. } => {
            let mut hidden = Vec::with_capacity(spec.hidden_units.len());
            let mut c_in = spec.n_inputs;
            for &units in &spec.hidden_units {
                hidden.push(DenseParams::zeros(c_in, units));
                c_in = units;
            }
            let head = DenseParams::zeros(c_in, 1);
            let mut m = MlpDetector {
                n_inputs: spec.n_inputs,
                hidden,
                head,
                activation: spec.activation,
                standardizer: Standardizer::identity(spec.n_inputs),
            };
            if flat.len() != m.count_parameters() {
                return Err(Error::Schema(format!(
                    "{}: blob holds {} parameters, architecture needs {}",
                    dir.display(),
                    flat.len(),
                    m.count_parameters()
                )));
            }
            m.set_params_flat(&flat);
            m.set_standardizer(standardizer);
            Ok(AnyDetector::Mlp(m))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::mlp::build_mlp_baseline;
    use crate::grid::{resolve_case, GraphOperators};
    use crate::nn::activation::Activation;
    use rand::Rng;

    #[test]
    fn gnn_checkpoint_reload_is_bit_identical() {
        let case = resolve_case("ieee14").unwrap();
        let ops = GraphOperators::build(&case).unwrap();
        let mut rng = crate::seeding::stream(61, "ckpt", 0);
        let mut m = ChebDetector::new(ops.scaled, 3, &[8, 8], Activation::Relu, &mut rng);
        let fit: Vec<Vec<f64>> =
            (0..10).map(|_| (0..28).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        m.set_standardizer(Standardizer::fit(&fit).unwrap());

        let dir = tempfile::tempdir().unwrap();
        save_gnn(dir.path(), &m, 61, false).unwrap();
        let loaded = load_any(dir.path()).unwrap();
        assert_eq!(loaded.kind(), "gnn");
        assert_eq!(loaded.n_buses(), 14);
        if let AnyDetector::Gnn(g) = &loaded {
            assert!(
                m.params_flat()
                    .iter()
                    .zip(g.params_flat())
                    .all(|(a, b)| a.to_bits() == b.to_bits()),
                "params differ"
            );
            assert!(
                m.standardizer
                    .mean
                    .iter()
                    .chain(&m.standardizer.scale)
                    .zip(g.standardizer.mean.iter().chain(&g.standardizer.scale))
                    .all(|(a, b)| a.to_bits() == b.to_bits()),
                "standardizer differs"
            );
            assert!(
                m.laplacian_scaled
                    .iter()
                    .zip(g.laplacian_scaled.iter())
                    .all(|((_, _, a), (_, _, b))| a.to_bits() == b.to_bits()),
                "laplacian differs"
            );
        }
        for trial in 0..5 {
            let x: Vec<f64> =
                (0..28).map(|i| ((trial * 31 + i) as f64 * 0.17).sin()).collect();
            assert_eq!(
                m.forward(&x).to_bits(),
                loaded.forward(&x).to_bits(),
                "trial {trial}"
            );
        }
    }

    #[test]
    fn mlp_checkpoint_reload_is_bit_identical() {
        let mut rng = crate::seeding::stream(61, "ckpt", 1);
        let mut m = build_mlp_baseline(6, 3, 5, Activation::Elu, &mut rng);
        let fit: Vec<Vec<f64>> =
            (0..10).map(|_| (0..12).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        m.set_standardizer(Standardizer::fit(&fit).unwrap());
        let dir = tempfile::tempdir().unwrap();
        save_mlp(dir.path(), &m, 61, false).unwrap();
        let loaded = load_any(dir.path()).unwrap();
        assert_eq!(loaded.kind(), "mlp");
        let x: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).cos()).collect();
        assert_eq!(m.forward(&x).to_bits(), loaded.forward(&x).to_bits());
    }

    #[test]
    fn checkpoint_writes_are_byte_deterministic() {
        let mut rng = crate::seeding::stream(61, "ckpt", 2);
        let m = build_mlp_baseline(4, 2, 3, Activation::Elu, &mut rng);
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        save_mlp(d1.path(), &m, 7, false).unwrap();
        save_mlp(d2.path(), &m, 7, false).unwrap();
        for file in ["manifest.json", "weights.bin"] {
            assert_eq!(
                std::fs::read(d1.path().join(file)).unwrap(),
                std::fs::read(d2.path().join(file)).unwrap(),
                "{file}"
            );
        }
    }
}
