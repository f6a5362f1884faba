//! Dataset persistence.
//!
//! A dataset directory holds `meta.json` (configuration, seeds, and layout
//! description), `Z.csv` (T rows of measurement values, header = meter
//! names), `X.csv` (T rows of estimated states, magnitudes then angles),
//! and - once attacks have been spliced - `Y.csv` (labels) and
//! `attacks.json` (per-attack statistics). Floats are written with 17
//! significant digits so a save/load cycle is lossless; measurement
//! variances are recomputed from the stored values (see
//! [`crate::scenario::variances_for`]) rather than persisted.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::attack::{AttackConfig, AttackRecord, LabeledDataset};
use crate::error::{Error, Result};
use crate::grid::case::GridCase;
use crate::measurement::MeasurementVector;
use crate::powerflow::MeasurementModel;
use crate::scenario::{variances_for, HonestDataset, ScenarioConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttackMeta {
    pub config: AttackConfig,
    pub seed: u64,
    pub attempts: usize,
    pub accepted: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetMeta {
    /// Case label as given on generation: a bundled name or a path.
    pub case: String,
    pub n: usize,
    pub m: usize,
    /// Human-readable layout description.
    pub layout: String,
    pub scenario: ScenarioConfig,
    pub profile_source: String,
    pub attack: Option<AttackMeta>,
}

/// An on-disk dataset, either honest (no labels yet) or labeled.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub meta: DatasetMeta,
    /// Measurement column names (Z.csv header).
    pub z_columns: Vec<String>,
    /// State column names (X.csv header).
    pub x_columns: Vec<String>,
    pub z: Vec<Vec<f64>>,
    pub x: Vec<Vec<f64>>,
    pub y: Option<Vec<u8>>,
    pub attacks: Vec<AttackRecord>,
}

fn x_column_names(case: &GridCase) -> Vec<String> {
    let mut names: Vec<String> =
        (0..case.n()).map(|b| format!("vm_{}", case.bus_id(b))).collect();
    names.extend((0..case.n()).map(|b| format!("va_{}", case.bus_id(b))));
    names
}

impl Dataset {
    pub fn honest(
        case_label: &str,
        case: &GridCase,
        model: &MeasurementModel,
        honest: &HonestDataset,
    ) -> Dataset {
        Dataset {
            meta: DatasetMeta {
                case: case_label.to_string(),
                n: case.n(),
                m: model.m(),
                layout: "standard: P/Q injections at every bus, P/Q flows at both ends \
                         of every branch"
                    .to_string(),
                scenario: honest.config.clone(),
                profile_source: honest.profile_source.clone(),
                attack: None,
            },
            z_columns: model.layout.names().to_vec(),
            x_columns: x_column_names(case),
            z: honest.z.clone(),
            x: honest.x.clone(),
            y: None,
            attacks: Vec::new(),
        }
    }

    pub fn labeled(
        case_label: &str,
        case: &GridCase,
        model: &MeasurementModel,
        honest: &HonestDataset,
        labeled: LabeledDataset,
        attack_config: &AttackConfig,
        attack_seed: u64,
    ) -> Dataset {
        let mut ds = Dataset::honest(case_label, case, model, honest);
        ds.meta.attack = Some(AttackMeta {
            config: attack_config.clone(),
            seed: attack_seed,
            attempts: labeled.attempts,
            accepted: labeled.accepted,
        });
        ds.z = labeled.z;
        ds.x = labeled.x;
        ds.y = Some(labeled.y);
        ds.attacks = labeled.attacks;
        ds
    }

    pub fn t_count(&self) -> usize {
        self.z.len()
    }

    /// Labels, required for training and evaluation.
    pub fn labels(&self) -> Result<&[u8]> {
        self.y
            .as_deref()
            .ok_or_else(|| Error::Schema("dataset has no Y.csv; run generate-attacks first".into()))
    }

    /// Measurement vector of one timestep with variances recomputed from
    /// the stored values.
    pub fn measurement(&self, t: usize) -> MeasurementVector {
        let values = DVector::from_column_slice(&self.z[t]);
        let variances = variances_for(&values, &self.meta.scenario);
        MeasurementVector::new(values, variances)
    }

    /// Detector input features per snapshot: the first 2n measurement
    /// columns, i.e. the active then reactive injections `[P; Q]`.
    pub fn detector_inputs(&self) -> Vec<Vec<f64>> {
        let width = 2 * self.meta.n;
        self.z.iter().map(|row| row[..width].to_vec()).collect()
    }

    /// View as an honest dataset (for splicing attacks into a loaded one).
    pub fn to_honest(&self) -> HonestDataset {
        HonestDataset {
            config: self.meta.scenario.clone(),
            z: self.z.clone(),
            variances: (0..self.t_count())
                .map(|t| {
                    variances_for(&DVector::from_column_slice(&self.z[t]), &self.meta.scenario)
                        .iter()
                        .copied()
                        .collect()
                })
                .collect(),
            x: self.x.clone(),
            profile_source: self.meta.profile_source.clone(),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let meta_path = dir.join("meta.json");
        let meta_text = serde_json::to_string_pretty(&self.meta)
            .map_err(|e| Error::Schema(format!("meta serialization: {e}")))?;
        std::fs::write(&meta_path, meta_text + "\n").map_err(|e| Error::io(&meta_path, e))?;

        write_float_csv(&dir.join("Z.csv"), &self.z_columns, &self.z)?;
        write_float_csv(&dir.join("X.csv"), &self.x_columns, &self.x)?;
        if let Some(y) = &self.y {
            let path = dir.join("Y.csv");
            let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut out = BufWriter::new(file);
            (|| -> std::io::Result<()> {
                writeln!(out, "label")?;
                for v in y {
                    writeln!(out, "{v}")?;
                }
                out.flush()
            })()
            .map_err(|e| Error::io(&path, e))?;

            let attacks_path = dir.join("attacks.json");
            let text = serde_json::to_string_pretty(&self.attacks)
                .map_err(|e| Error::Schema(format!("attacks serialization: {e}")))?;
            std::fs::write(&attacks_path, text + "\n")
                .map_err(|e| Error::io(&attacks_path, e))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Dataset> {
        let meta_path = dir.join("meta.json");
        let meta_text =
            std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: DatasetMeta = serde_json::from_str(&meta_text)
            .map_err(|e| Error::Schema(format!("{}: {e}", meta_path.display())))?;

        let (z_columns, z) = read_float_csv(&dir.join("Z.csv"), meta.m)?;
        let (x_columns, x) = read_float_csv(&dir.join("X.csv"), 2 * meta.n)?;
        if z.len() != x.len() {
            return Err(Error::Schema(format!(
                "Z.csv has {} rows but X.csv has {}",
                z.len(),
                x.len()
            )));
        }

        let y_path = dir.join("Y.csv");
        let y = if y_path.exists() { Some(read_labels(&y_path, z.len())?) } else { None };
        let attacks_path = dir.join("attacks.json");
        let attacks = if attacks_path.exists() {
            let text = std::fs::read_to_string(&attacks_path)
                .map_err(|e| Error::io(&attacks_path, e))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Schema(format!("{}: {e}", attacks_path.display())))?
        } else {
            Vec::new()
        };

        Ok(Dataset { meta, z_columns, x_columns, z, x, y, attacks })
    }
}

fn write_float_csv(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        writeln!(out, "{}", header.join(","))?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            let mut first = true;
            for v in row {
                if !first {
                    write!(out, ",")?;
                }
                write!(out, "{v:.16e}")?;
                first = false;
            }
            writeln!(out)?;
        }
        out.flush()
    })()
    .map_err(|e| Error::io(path, e))
}

fn read_float_csv(path: &Path, expect_cols: usize) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Schema(format!("{}: empty file", path.display())))?
        .map_err(|e| Error::io(path, e))?;
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    if columns.len() != expect_cols {
        return Err(Error::Schema(format!(
            "{}: expected {expect_cols} columns, found {}",
            path.display(),
            columns.len()
        )));
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(expect_cols);
        for field in line.split(',') {
            let v: f64 = field.parse().map_err(|_| {
                Error::Schema(format!(
                    "{}: line {}: bad float {field:?}",
                    path.display(),
                    lineno + 2
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Schema(format!(
                    "{}: line {}: non-finite value",
                    path.display(),
                    lineno + 2
                )));
            }
            row.push(v);
        }
        if row.len() != expect_cols {
            return Err(Error::Schema(format!(
                "{}: line {}: expected {expect_cols} fields, found {}",
                path.display(),
                lineno + 2,
                row.len()
            )));
        }
        rows.push(row);
    }
    Ok((columns, rows))
}

fn read_labels(path: &Path, expect_rows: usize) -> Result<Vec<u8>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut labels = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if lineno == 0 || trimmed.is_empty() {
            continue;
        }
        match trimmed {
            "0" => labels.push(0),
            "1" => labels.push(1),
            other => {
                return Err(Error::Schema(format!(
                    "{}: line {}: label must be 0 or 1, found {other:?}",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    if labels.len() != expect_rows {
        return Err(Error::Schema(format!(
            "{}: {} labels for {expect_rows} rows",
            path.display(),
            labels.len()
        )));
    }
    Ok(labels)
}
