//! End-to-end tests of the `fdia` binary: pipeline wiring, determinism,
//! exit codes, and the help contract.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fdia(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdia"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn assert_same_bytes(a: &Path, b: &Path, name: &str) {
    assert_eq!(
        fs::read(a.join(name)).unwrap(),
        fs::read(b.join(name)).unwrap(),
        "{name} differs between {} and {}",
        a.display(),
        b.display()
    );
}

#[test]
fn generate_data_writes_requested_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("honest");
    let out = fdia(&[
        "generate-data",
        "--case",
        "ieee14",
        "--T",
        "12",
        "--seed",
        "7",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_ok(&out);
    assert!(stdout(&out).contains("12 honest snapshots"));
    let z = read(&out_dir.join("Z.csv"));
    assert_eq!(z.lines().count(), 13, "header plus one row per timestep");
    assert!(out_dir.join("X.csv").exists());
    assert!(out_dir.join("meta.json").exists());
}

#[test]
fn missing_case_path_exits_2_naming_the_path() {
    let out = fdia(&["generate-data", "--case", "/no/such/case.json", "--T", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("/no/such/case.json"));
}

#[test]
fn same_seed_reproduces_identical_directories() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = fdia(&[
            "generate-data",
            "--case",
            "ieee14",
            "--T",
            "10",
            "--seed",
            "21",
            "--out",
            d.to_str().unwrap(),
        ]);
        assert_ok(&out);
    }
    for name in ["Z.csv", "X.csv", "meta.json"] {
        assert_same_bytes(&a, &b, name);
    }
}

#[test]
fn tau_freq_inf_disables_attacks() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("labeled");
    let out = fdia(&[
        "generate-attacks",
        "--case",
        "ieee14",
        "--T",
        "10",
        "--seed",
        "3",
        "--tau-freq",
        "inf",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_ok(&out);
    assert!(stdout(&out).contains("0 attack attempts"));
    let y = read(&out_dir.join("Y.csv"));
    let labels: Vec<&str> = y.lines().skip(1).collect();
    assert_eq!(labels.len(), 10);
    assert!(labels.iter().all(|&l| l == "0"), "no snapshot may be attacked: {labels:?}");
}

#[test]
fn config_file_supplies_values_and_flags_override_them() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{ "case": "ieee14", "T": 9, "seed": 3 }"#).unwrap();
    let out_dir = dir.path().join("honest");
    let out = fdia(&[
        "generate-data",
        "--config",
        cfg.to_str().unwrap(),
        "--T",
        "7",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_ok(&out);
    assert!(stdout(&out).contains("7 honest snapshots"), "flag must beat the config value");
    assert_eq!(read(&out_dir.join("Z.csv")).lines().count(), 8);
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{ "cas": "ieee14" }"#).unwrap();
    let out = fdia(&["generate-data", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("cas"));
}

/// Builds a small labeled ieee14 dataset once and exercises train and
/// evaluate against it: byte-identical reruns, matching metrics between
/// training and evaluation, and the residual-test comparison row.
#[test]
fn train_and_evaluate_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let honest = dir.path().join("honest");
    assert_ok(&fdia(&[
        "generate-data",
        "--case",
        "ieee14",
        "--T",
        "60",
        "--seed",
        "11",
        "--out",
        honest.to_str().unwrap(),
    ]));
    let labeled = dir.path().join("labeled");
    assert_ok(&fdia(&[
        "generate-attacks",
        "--data",
        honest.to_str().unwrap(),
        "--tau-freq",
        "0",
        "--seed",
        "11",
        "--out",
        labeled.to_str().unwrap(),
    ]));

    // Train the baseline twice with one seed: identical artifacts.
    let (run1, run2) = (dir.path().join("run1"), dir.path().join("run2"));
    for d in [&run1, &run2] {
        let out = fdia(&[
            "train",
            "--data",
            labeled.to_str().unwrap(),
            "--model",
            "mlp",
            "--max-epochs",
            "4",
            "--seed",
            "5",
            "--out",
            d.to_str().unwrap(),
        ]);
        assert_ok(&out);
        assert!(stdout(&out).contains("F1%"));
    }
    for name in ["metrics.json", "history.csv"] {
        assert_same_bytes(&run1, &run2, name);
    }
    assert_same_bytes(&run1.join("checkpoint"), &run2.join("checkpoint"), "manifest.json");
    assert_same_bytes(&run1.join("checkpoint"), &run2.join("checkpoint"), "weights.bin");

    // Evaluating the checkpoint on its own dataset reproduces the
    // training-time test metrics and adds the residual-test row.
    let eval_dir = dir.path().join("eval");
    let out = fdia(&[
        "evaluate",
        "--checkpoint",
        run1.join("checkpoint").to_str().unwrap(),
        "--data",
        labeled.to_str().unwrap(),
        "--out",
        eval_dir.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let text = stdout(&out);
    assert!(text.contains("mlp"), "model row missing: {text}");
    assert!(text.contains("bdd"), "residual-test row missing: {text}");

    let train_metrics: serde_json::Value =
        serde_json::from_str(&read(&run1.join("metrics.json"))).unwrap();
    let eval_metrics: serde_json::Value =
        serde_json::from_str(&read(&eval_dir.join("model_metrics.json"))).unwrap();
    for key in ["dr", "fa", "f1", "tp", "fp", "tn", "fn"] {
        assert_eq!(train_metrics[key], eval_metrics[key], "{key} differs");
    }
    assert!(eval_dir.join("bdd_metrics.json").exists());
}

#[test]
fn evaluate_rejects_checkpoint_dataset_mismatch() {
    let dir = tempfile::tempdir().unwrap();

    // Tiny ieee14 checkpoint via the in-memory training path.
    let run = dir.path().join("run");
    assert_ok(&fdia(&[
        "train",
        "--case",
        "ieee14",
        "--T",
        "40",
        "--model",
        "mlp",
        "--max-epochs",
        "2",
        "--seed",
        "9",
        "--out",
        run.to_str().unwrap(),
    ]));

    // Labeled ieee118 dataset with attacks disabled (cheap to produce).
    let other = dir.path().join("ieee118");
    assert_ok(&fdia(&[
        "generate-attacks",
        "--case",
        "ieee118",
        "--T",
        "8",
        "--seed",
        "2",
        "--tau-freq",
        "inf",
        "--out",
        other.to_str().unwrap(),
    ]));

    let out = fdia(&[
        "evaluate",
        "--checkpoint",
        run.join("checkpoint").to_str().unwrap(),
        "--data",
        other.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("118"), "mismatch message should name the sizes: {err}");
}

#[test]
fn help_lists_the_contract_flags_with_defaults() {
    let cases: [(&str, &[&str]); 4] = [
        ("generate-data", &["--case", "--profile", "--T", "--seed", "--out", "[default: 2000]"]),
        ("generate-attacks", &["--preset", "--tau-freq", "--tau-loss", "[default: balanced]"]),
        (
            "train",
            &["--model", "--seed", "--paper-standardization", "--batch-size", "[default: 64]"],
        ),
        ("evaluate", &["--tau-bdd", "--residual-denominator", "--paper-standardization"]),
    ];
    for (sub, needles) in cases {
        let out = fdia(&[sub, "--help"]);
        assert_ok(&out);
        let text = stdout(&out);
        for needle in needles {
            assert!(text.contains(needle), "`fdia {sub} --help` must mention {needle}:\n{text}");
        }
    }
}
