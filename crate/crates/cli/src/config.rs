//! Command-line surface and JSON run configuration.
//!
//! Every setting resolves with the precedence: command-line flag, then
//! config file, then built-in default. The defaults are the published
//! experiment values wherever one exists, so a bare invocation reproduces
//! the reference setup.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use fdia_core::attack::AttackConfig;
use fdia_core::detector::TrainConfig;
use fdia_core::scenario::ScenarioConfig;
use fdia_core::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "fdia",
    version,
    about = "Grid measurement simulation, stealth false-data injection, and graph detector training",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate an honest measurement dataset for a grid case.
    GenerateData(GenerateDataArgs),
    /// Inject stealth false-data attacks into an honest dataset.
    GenerateAttacks(GenerateAttacksArgs),
    /// Train a detector on a labeled dataset and report test metrics.
    Train(TrainArgs),
    /// Evaluate a checkpoint and the residual test on a dataset's test split.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct GenerateDataArgs {
    /// JSON config file; explicit flags override its values.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Bundled case name (ieee14 | ieee118 | ieee300) or a case file path [default: ieee14]
    #[arg(long)]
    pub case: Option<String>,
    /// Load profile CSV path, or "synthetic" [default: synthetic]
    #[arg(long)]
    pub profile: Option<String>,
    /// Number of timesteps [default: 2000]
    #[arg(long = "T", value_name = "T")]
    pub t: Option<usize>,
    /// Root seed; all randomness in the run derives from it [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: <case>-honest-T<T>-seed<seed>]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateAttacksArgs {
    /// JSON config file; explicit flags override its values.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Honest dataset directory (from generate-data). When omitted, the
    /// honest data is generated in memory from --case/--profile/--T.
    #[arg(long, value_name = "DIR")]
    pub data: Option<PathBuf>,
    /// Case used when --data is omitted [default: ieee14]
    #[arg(long)]
    pub case: Option<String>,
    /// Load profile used when --data is omitted [default: synthetic]
    #[arg(long)]
    pub profile: Option<String>,
    /// Timesteps used when --data is omitted [default: 2000]
    #[arg(long = "T", value_name = "T")]
    pub t: Option<usize>,
    /// Root seed for the attack stage [default: the honest dataset's seed]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Attack strength: cautious (lambda_z=10, lambda_x=1), balanced (1, 1),
    /// or aggressive (1, 10) [default: balanced]
    #[arg(long)]
    pub preset: Option<String>,
    /// Attack-frequency threshold: a timestep is attacked when a standard
    /// normal draw exceeds it; "inf" disables attacks [default: 1]
    #[arg(long)]
    pub tau_freq: Option<f64>,
    /// Acceptance threshold on the stealth loss [default: 0.1]
    #[arg(long)]
    pub tau_loss: Option<f64>,
    /// Output directory [default: <case>-<preset>-T<T>-seed<seed>]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// JSON config file; explicit flags override its values.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Labeled dataset directory (from generate-attacks). When omitted, the
    /// whole pipeline runs in memory from --case/--T/--preset.
    #[arg(long, value_name = "DIR")]
    pub data: Option<PathBuf>,
    /// Case used when --data is omitted [default: ieee14]
    #[arg(long)]
    pub case: Option<String>,
    /// Load profile used when --data is omitted [default: synthetic]
    #[arg(long)]
    pub profile: Option<String>,
    /// Timesteps used when --data is omitted [default: 2000]
    #[arg(long = "T", value_name = "T")]
    pub t: Option<usize>,
    /// Attack preset used when --data is omitted [default: balanced]
    #[arg(long)]
    pub preset: Option<String>,
    /// Detector family: gnn | mlp [default: gnn]
    #[arg(long)]
    pub model: Option<String>,
    /// Root seed (weight initialization and batch order) [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Mini-batch size [default: 64]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Maximum training epochs [default: 128]
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// Early-stopping patience, in epochs without validation improvement [default: 16]
    #[arg(long)]
    pub patience: Option<usize>,
    /// Learning rate [default: 0.001]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Optimizer: adam | rmsprop | sgd [default: adam for gnn, rmsprop for mlp]
    #[arg(long)]
    pub optimizer: Option<String>,
    /// Convolution/hidden layer count [default: 3 for gnn, 4 for mlp]
    #[arg(long)]
    pub layers: Option<usize>,
    /// Channels (gnn) or units (mlp) per layer [default: 32 for gnn, 16 for mlp]
    #[arg(long)]
    pub units: Option<usize>,
    /// Chebyshev filter order K for the gnn [default: 3]
    #[arg(long)]
    pub cheb_k: Option<usize>,
    /// Activation: relu | elu [default: relu for gnn, elu for mlp]
    #[arg(long)]
    pub activation: Option<String>,
    /// Standardize each split with its own statistics instead of reusing
    /// the training-split statistics everywhere.
    #[arg(long)]
    pub paper_standardization: bool,
    /// Output directory [default: <model>-<data>-seed<seed>]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// JSON config file; explicit flags override its values.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Trained checkpoint directory (from train).
    #[arg(long, value_name = "DIR")]
    pub checkpoint: Option<PathBuf>,
    /// Labeled dataset directory to evaluate on.
    #[arg(long, value_name = "DIR")]
    pub data: Option<PathBuf>,
    /// Residual-test threshold [default: 3 for sqrt form, published preset for paper form]
    #[arg(long)]
    pub tau_bdd: Option<f64>,
    /// Normalized-residual denominator: sqrt (sigma_i * sqrt(S_ii)) or
    /// paper (sigma_i * S_ii) [default: sqrt]
    #[arg(long)]
    pub residual_denominator: Option<String>,
    /// Standardize the test split with its own statistics (forced on when
    /// the checkpoint was trained that way).
    #[arg(long)]
    pub paper_standardization: bool,
    /// Optional directory for model_metrics.json and bdd_metrics.json.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

/// JSON run configuration mirroring the command-line flags, plus full
/// parameter blocks for the scenario, attack, and training stages.
/// Unknown keys are rejected so typos fail loudly.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub case: Option<String>,
    pub profile: Option<String>,
    #[serde(rename = "T", alias = "t")]
    pub t: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub data: Option<String>,
    pub checkpoint: Option<String>,
    pub preset: Option<String>,
    pub model: Option<String>,
    pub tau_bdd: Option<f64>,
    pub tau_freq: Option<f64>,
    pub tau_loss: Option<f64>,
    pub residual_denominator: Option<String>,
    pub paper_standardization: Option<bool>,
    pub scenario: Option<ScenarioConfig>,
    pub attack: Option<AttackConfig>,
    pub train: Option<TrainConfig>,
}

impl FileConfig {
    /// Loads the config file, or an empty config when no path was given.
    pub fn load(path: Option<&Path>) -> Result<FileConfig> {
        let Some(path) = path else { return Ok(FileConfig::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }
}

/// Resolves one setting with the flag > file > default precedence.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Short label for a case or dataset reference: the file stem of a path,
/// or the name itself.
pub fn stem_of(reference: &str) -> String {
    Path::new(reference)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| reference.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pick_prefers_flag_then_file_then_default() {
        assert_eq!(pick(Some(1), Some(2), 3), 1);
        assert_eq!(pick(None, Some(2), 3), 2);
        assert_eq!(pick::<i32>(None, None, 3), 3);
    }

    #[test]
    fn stem_of_handles_names_and_paths() {
        assert_eq!(stem_of("ieee14"), "ieee14");
        assert_eq!(stem_of("/tmp/runs/ieee300-honest"), "ieee300-honest");
        assert_eq!(stem_of("cases/custom.json"), "custom");
    }

    #[test]
    fn file_config_parses_partial_blocks() {
        let text = r#"{
            "case": "ieee118",
            "T": 250,
            "scenario": { "sigma_s": 0.05 },
            "attack": { "lambda_z": 10.0 },
            "train": { "lr": 0.01 }
        }"#;
        let fc: FileConfig = serde_json::from_str(text).unwrap();
        assert_eq!(fc.case.as_deref(), Some("ieee118"));
        assert_eq!(fc.t, Some(250));
        let sc = fc.scenario.unwrap();
        assert_eq!(sc.sigma_s, 0.05);
        assert_eq!(sc.t_count, 2000); // untouched fields keep their defaults
        assert_eq!(fc.attack.unwrap().lambda_z, 10.0);
        assert_eq!(fc.train.unwrap().lr, 0.01);
    }

    #[test]
    fn file_config_rejects_unknown_keys() {
        let err = serde_json::from_str::<FileConfig>(r#"{ "cas": "ieee14" }"#);
        assert!(err.is_err());
    }

    #[test]
    fn missing_config_file_is_a_config_error() {
        let err = FileConfig::load(Some(Path::new("/no/such/config.json"))).unwrap_err();
        assert!(err.is_config());
        assert!(err.to_string().contains("/no/such/config.json"));
    }
}
