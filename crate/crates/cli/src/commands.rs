//! Subcommand implementations.
//!
//! Each command is a pure function of (resolved configuration, input
//! directory, root seed): rerunning with identical inputs writes
//! byte-identical artifacts. All randomness flows from the root seed
//! through purpose-tagged hash streams, so the stages stay independently
//! reproducible.

use std::fs;
use std::path::PathBuf;

use serde::Serialize;

use fdia_core::attack::{generate_attacked_dataset, AttackConfig, AttackPreset};
use fdia_core::dataset::Dataset;
use fdia_core::detector::metrics::write_history_csv;
use fdia_core::detector::{
    config_hash, evaluate, load_any, metrics_from_counts, save_any, split_by_time, train,
    uses_per_split_standardization, AnyDetector, ChebDetector, Detector, Metrics, MetricsReport,
    Standardizer, TrainConfig,
};
use fdia_core::estimation::{
    bdd_report, default_threshold, estimate_state, EstimationOptions, ResidualForm,
};
use fdia_core::grid::{resolve_case, GraphOperators, GridCase};
use fdia_core::powerflow::MeasurementModel;
use fdia_core::nn::Activation;
use fdia_core::scenario::{generate_dataset, HonestDataset, LoadProfile, ScenarioConfig};
use fdia_core::{seeding, Error, Result};

use crate::config::{
    pick, stem_of, Cli, Command, EvaluateArgs, FileConfig, GenerateAttacksArgs, GenerateDataArgs,
    TrainArgs,
};

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenerateData(args) => cmd_generate_data(args),
        Command::GenerateAttacks(args) => cmd_generate_attacks(args),
        Command::Train(args) => cmd_train(args),
        Command::Evaluate(args) => cmd_evaluate(args),
    }
}

/// Scenario block resolved from config-file values and flag overrides.
fn scenario_from(fc: &FileConfig, t: Option<usize>, seed: Option<u64>) -> ScenarioConfig {
    let mut sc = fc.scenario.clone().unwrap_or_default();
    if let Some(t) = t.or(fc.t) {
        sc.t_count = t;
    }
    if let Some(seed) = seed.or(fc.seed) {
        sc.seed = seed;
    }
    sc
}

/// Attack block resolved from config-file values, the preset, and flag
/// overrides. The preset only overwrites the loss weights when given
/// explicitly, so a hand-tuned attack block survives.
fn attack_from(
    fc: &FileConfig,
    case: &GridCase,
    preset: Option<&str>,
    tau_freq: Option<f64>,
    tau_loss: Option<f64>,
) -> Result<AttackConfig> {
    let mut ac = match &fc.attack {
        Some(a) => a.clone(),
        None => AttackConfig::for_case(case),
    };
    if let Some(name) = preset {
        ac = ac.with_preset(name.parse::<AttackPreset>()?);
    }
    if let Some(v) = tau_freq.or(fc.tau_freq) {
        ac.tau_freq = v;
    }
    if let Some(v) = tau_loss.or(fc.tau_loss) {
        ac.tau_loss = v;
    }
    Ok(ac)
}

fn out_dir(flag: Option<PathBuf>, file: Option<String>, default_name: String) -> PathBuf {
    flag.or(file.map(PathBuf::from)).unwrap_or_else(|| PathBuf::from(default_name))
}

fn cmd_generate_data(args: GenerateDataArgs) -> Result<()> {
    let fc = FileConfig::load(args.config.as_deref())?;
    let case_ref = pick(args.case, fc.case.clone(), "ieee14".to_string());
    let profile_ref = pick(args.profile, fc.profile.clone(), "synthetic".to_string());
    let case = resolve_case(&case_ref)?;
    let model = MeasurementModel::standard(&case);
    let profile = LoadProfile::resolve(&profile_ref)?;
    let sc = scenario_from(&fc, args.t, args.seed);

    let honest = generate_dataset(&model, &profile, &sc)?;
    let ds = Dataset::honest(&case_ref, &case, &model, &honest);
    let out = out_dir(
        args.out,
        fc.out,
        format!("{}-honest-T{}-seed{}", stem_of(&case_ref), sc.t_count, sc.seed),
    );
    ds.save(&out)?;
    println!(
        "wrote {} honest snapshots ({} measurements each) to {}",
        ds.t_count(),
        ds.meta.m,
        out.display()
    );
    Ok(())
}

fn cmd_generate_attacks(args: GenerateAttacksArgs) -> Result<()> {
    let fc = FileConfig::load(args.config.as_deref())?;

    // Honest base: an existing dataset directory, or in-memory generation.
    let data = args.data.or_else(|| fc.data.clone().map(PathBuf::from));
    let (case_ref, honest) = match data {
        Some(dir) => {
            let ds = Dataset::load(&dir)?;
            if ds.y.is_some() {
                return Err(Error::Invalid(format!(
                    "{}: expected an honest dataset but found labels",
                    dir.display()
                )));
            }
            (ds.meta.case.clone(), ds.to_honest())
        }
        None => {
            let case_ref = pick(args.case, fc.case.clone(), "ieee14".to_string());
            let profile_ref = pick(args.profile, fc.profile.clone(), "synthetic".to_string());
            let case = resolve_case(&case_ref)?;
            let model = MeasurementModel::standard(&case);
            let profile = LoadProfile::resolve(&profile_ref)?;
            let sc = scenario_from(&fc, args.t, args.seed);
            let honest = generate_dataset(&model, &profile, &sc)?;
            (case_ref, honest)
        }
    };

    let case = resolve_case(&case_ref)?;
    let model = MeasurementModel::standard(&case);
    let seed = args.seed.or(fc.seed).unwrap_or(honest.config.seed);
    let preset = args.preset.or(fc.preset.clone());
    let ac = attack_from(&fc, &case, preset.as_deref(), args.tau_freq, args.tau_loss)?;

    let labeled = generate_attacked_dataset(&honest, &model, &ac, seed)?;
    let t_count = labeled.y.len();
    let positives = labeled.y.iter().filter(|&&y| y == 1).count();
    let ds = Dataset::labeled(&case_ref, &case, &model, &honest, labeled, &ac, seed);
    let out = out_dir(
        args.out,
        fc.out,
        format!(
            "{}-{}-T{}-seed{}",
            stem_of(&case_ref),
            preset.as_deref().unwrap_or("balanced"),
            t_count,
            seed
        ),
    );
    ds.save(&out)?;
    let attack_meta = ds.meta.attack.as_ref().expect("labeled dataset carries attack meta");
    println!(
        "wrote {} snapshots to {}: {} attack attempts, {} accepted ({:.1}% positive)",
        t_count,
        out.display(),
        attack_meta.attempts,
        attack_meta.accepted,
        100.0 * positives as f64 / t_count.max(1) as f64
    );
    Ok(())
}

/// Loads a labeled dataset, or synthesizes one in memory when no --data
/// directory was given.
fn labeled_dataset(args: &TrainArgs, fc: &FileConfig) -> Result<(String, Dataset)> {
    if let Some(dir) = args.data.clone().or_else(|| fc.data.clone().map(PathBuf::from)) {
        let ds = Dataset::load(&dir)?;
        return Ok((stem_of(&dir.display().to_string()), ds));
    }
    let case_ref = pick(args.case.clone(), fc.case.clone(), "ieee14".to_string());
    let profile_ref = pick(args.profile.clone(), fc.profile.clone(), "synthetic".to_string());
    let case = resolve_case(&case_ref)?;
    let model = MeasurementModel::standard(&case);
    let profile = LoadProfile::resolve(&profile_ref)?;
    let sc = scenario_from(fc, args.t, args.seed);
    let honest: HonestDataset = generate_dataset(&model, &profile, &sc)?;
    let preset = args.preset.clone().or(fc.preset.clone());
    let ac = attack_from(fc, &case, preset.as_deref(), None, None)?;
    let labeled = generate_attacked_dataset(&honest, &model, &ac, sc.seed)?;
    println!(
        "generated {} labeled snapshots in memory ({} attacks accepted)",
        labeled.y.len(),
        labeled.accepted
    );
    Ok((stem_of(&case_ref), Dataset::labeled(&case_ref, &case, &model, &honest, labeled, &ac, sc.seed)))
}

fn build_detector(
    kind: &str,
    ds: &Dataset,
    args: &TrainArgs,
    seed: u64,
) -> Result<AnyDetector> {
    let mut rng = seeding::stream(seed, "init", 0);
    let activation = args.activation.as_deref().map(str::parse::<Activation>).transpose()?;
    match kind {
        "gnn" => {
            let case = resolve_case(&ds.meta.case)?;
            if case.n() != ds.meta.n {
                return Err(Error::Invalid(format!(
                    "dataset says n = {} but case {} has n = {}",
                    ds.meta.n,
                    ds.meta.case,
                    case.n()
                )));
            }
            let ops = GraphOperators::build(&case)?;
            let hidden = vec![args.units.unwrap_or(32); args.layers.unwrap_or(3)];
            Ok(AnyDetector::Gnn(ChebDetector::new(
                ops.scaled,
                args.cheb_k.unwrap_or(3),
                &hidden,
                activation.unwrap_or(Activation::Relu),
                &mut rng,
            )))
        }
        "mlp" => Ok(AnyDetector::Mlp(fdia_core::detector::build_mlp_baseline(
            ds.meta.n,
            args.layers.unwrap_or(4),
            args.units.unwrap_or(16),
            activation.unwrap_or(Activation::Elu),
            &mut rng,
        ))),
        other => Err(Error::Invalid(format!(
            "unknown model family '{other}' (expected gnn or mlp)"
        ))),
    }
}

fn print_metrics_header() {
    println!("{:<8} {:>8} {:>8} {:>8}", "model", "DR%", "FA%", "F1%");
}

fn print_metrics_row(name: &str, m: &Metrics) {
    println!(
        "{:<8} {:>8.2} {:>8.2} {:>8.2}",
        name,
        100.0 * m.dr,
        100.0 * m.fa,
        100.0 * m.f1
    );
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let fc = FileConfig::load(args.config.as_deref())?;
    let model_kind = pick(args.model.clone(), fc.model.clone(), "gnn".to_string());

    let (data_label, ds) = labeled_dataset(&args, &fc)?;
    let labels = ds.labels()?.to_vec();
    let inputs = ds.detector_inputs();

    let mut tc = match &fc.train {
        Some(t) => t.clone(),
        None if model_kind == "mlp" => TrainConfig::for_mlp(),
        None => TrainConfig::default(),
    };
    let seed = args.seed.or(fc.seed).unwrap_or(tc.seed);
    tc.seed = seed;
    if let Some(v) = args.batch_size {
        tc.batch_size = v;
    }
    if let Some(v) = args.max_epochs {
        tc.max_epochs = v;
    }
    if let Some(v) = args.patience {
        tc.patience = v;
    }
    if let Some(v) = args.lr {
        tc.lr = v;
    }
    if let Some(name) = &args.optimizer {
        tc.optimizer = name.parse()?;
    }
    if args.paper_standardization || fc.paper_standardization.unwrap_or(false) {
        tc.paper_standardization = true;
    }

    let mut det = build_detector(&model_kind, &ds, &args, seed)?;
    let report = train(&mut det, &inputs, &labels, &tc)?;
    let test = report.splits.test.clone();
    let metrics = evaluate(&det, &report.prepared[test.clone()], &labels[test])?;

    let out = out_dir(
        args.out,
        fc.out,
        format!("{}-{}-seed{}", model_kind, data_label, seed),
    );
    fs::create_dir_all(&out).map_err(|e| Error::Io { path: out.display().to_string(), source: e })?;
    save_any(&out.join("checkpoint"), &det, seed, tc.paper_standardization)?;
    MetricsReport::new(&metrics, report.splits.sizes(), seed, config_hash(&tc))
        .save(&out.join("metrics.json"))?;
    write_history_csv(&out.join("history.csv"), &report.history)?;

    println!(
        "trained {} epochs (best validation loss {:.6} at epoch {}{})",
        report.history.len(),
        report.best_val_loss,
        report.best_epoch,
        if report.stopped_early { ", stopped early" } else { "" }
    );
    print_metrics_header();
    print_metrics_row(&model_kind, &metrics);
    println!("checkpoint: {}", out.join("checkpoint").display());
    println!("metrics:    {}", out.join("metrics.json").display());
    Ok(())
}

/// Evaluation settings hashed into the saved reports so they are
/// attributable to exact thresholds and splits.
#[derive(Serialize)]
struct EvalSettings {
    tau_bdd: f64,
    residual_denominator: String,
    splits: [f64; 3],
    paper_standardization: bool,
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let fc = FileConfig::load(args.config.as_deref())?;
    let ckpt = args
        .checkpoint
        .or_else(|| fc.checkpoint.clone().map(PathBuf::from))
        .ok_or_else(|| Error::Invalid("--checkpoint is required".to_string()))?;
    let data = args
        .data
        .or_else(|| fc.data.clone().map(PathBuf::from))
        .ok_or_else(|| Error::Invalid("--data is required".to_string()))?;

    let det = load_any(&ckpt)?;
    let ds = Dataset::load(&data)?;
    if det.n_inputs() != 2 * ds.meta.n {
        return Err(Error::Invalid(format!(
            "checkpoint {} expects {} input features (n = {}) but dataset {} has n = {}",
            ckpt.display(),
            det.n_inputs(),
            det.n_inputs() / 2,
            data.display(),
            ds.meta.n
        )));
    }
    let labels = ds.labels()?;
    let inputs = ds.detector_inputs();
    let fractions = fc.train.as_ref().map(|t| t.splits).unwrap_or([0.6, 0.2, 0.2]);
    let splits = split_by_time(ds.t_count(), fractions)?;
    let test = splits.test.clone();

    let per_split = args.paper_standardization
        || fc.paper_standardization.unwrap_or(false)
        || uses_per_split_standardization(&ckpt)?;
    let test_inputs: Vec<Vec<f64>> = if per_split {
        Standardizer::fit_apply(&inputs[test.clone()])?
    } else {
        inputs[test.clone()].to_vec()
    };
    let model_metrics = evaluate(&det, &test_inputs, &labels[test.clone()])?;

    // Residual-test row over the same test snapshots, for comparison.
    let case = resolve_case(&ds.meta.case)?;
    let model = MeasurementModel::standard(&case);
    if ds.meta.m != model.m() {
        return Err(Error::Invalid(format!(
            "dataset has {} measurement columns but the standard layout for {} has {}",
            ds.meta.m,
            ds.meta.case,
            model.m()
        )));
    }
    let form_name = pick(
        args.residual_denominator,
        fc.residual_denominator.clone(),
        "sqrt".to_string(),
    );
    let form: ResidualForm = form_name.parse()?;
    let tau = args.tau_bdd.or(fc.tau_bdd).unwrap_or_else(|| default_threshold(form, ds.meta.n));
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for t in test.clone() {
        let z = ds.measurement(t);
        // A snapshot the estimator cannot even converge on counts as an
        // alarm: the operator would investigate it either way.
        let flagged = match estimate_state(&model, &z, None, EstimationOptions::default()) {
            Ok(est) => bdd_report(&model, &z, &est.state, tau, form)?.flagged,
            Err(e) if e.is_config() => return Err(e),
            Err(_) => true,
        };
        match (labels[t] == 1, flagged) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
            (true, false) => fn_ += 1,
        }
    }
    let bdd_metrics = metrics_from_counts(tp, fp, tn, fn_);

    let kind = match &det {
        AnyDetector::Gnn(_) => "gnn",
        AnyDetector::Mlp(_) => "mlp",
    };
    print_metrics_header();
    print_metrics_row(kind, &model_metrics);
    print_metrics_row("bdd", &bdd_metrics);
    println!("residual test: tau = {tau} ({form_name} denominator)");

    if let Some(out) = args.out.or_else(|| fc.out.clone().map(PathBuf::from)) {
        fs::create_dir_all(&out)
            .map_err(|e| Error::Io { path: out.display().to_string(), source: e })?;
        let settings = EvalSettings {
            tau_bdd: tau,
            residual_denominator: form_name,
            splits: fractions,
            paper_standardization: per_split,
        };
        let hash = config_hash(&settings);
        let seed = fc.seed.unwrap_or(0);
        MetricsReport::new(&model_metrics, splits.sizes(), seed, hash.clone())
            .save(&out.join("model_metrics.json"))?;
        MetricsReport::new(&bdd_metrics, splits.sizes(), seed, hash)
            .save(&out.join("bdd_metrics.json"))?;
        println!("reports:    {}", out.display());
    }
    Ok(())
}
