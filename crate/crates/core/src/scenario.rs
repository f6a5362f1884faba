//! Honest operating-scenario generation.
//!
//! A load profile drives per-timestep scaling of the case: the profile is
//! normalized to a zero-mean, unit-variance scaler series s_t, and every
//! load or generator bus draws an independent factor from
//! N(1 + k*s_t, sigma_s^2), clamped to [0.7, 1.3]. Reactive load scales
//! with the same factor as active load, preserving the power factor;
//! generator scaling applies to scheduled active power at pv buses and the
//! slack absorbs the imbalance. Each timestep solves the power flow,
//! perturbs every meter with N(0, (sigma_n*|z|)^2) noise, and runs the
//! estimator from a flat start. Timestep t draws from the stream
//! (seed, "scenario", t), so generation is reproducible and
//! order-independent.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimation::{estimate_state, EstimationOptions};
use crate::grid::case::{BusKind, GridCase};
use crate::measurement::MeasurementVector;
use crate::powerflow::{solve_power_flow, MeasurementModel, PowerFlowOptions};
use crate::seeding;
use crate::state::StateVector;

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    /// Number of timesteps.
    pub t_count: usize,
    pub seed: u64,
    /// Scaler gain: per-bus mean scale is 1 + k * s_t.
    pub k: f64,
    /// Standard deviation of the per-bus scale draw.
    pub sigma_s: f64,
    /// Relative measurement noise level.
    pub sigma_n: f64,
    /// Scale clamp bounds.
    pub scale_min: f64,
    pub scale_max: f64,
    /// Lower bound on measurement variance, p.u. squared.
    pub variance_floor: f64,
    /// Retries per timestep when the scaled power flow diverges.
    pub max_retries: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            t_count: 2000,
            seed: 0,
            k: 0.1,
            sigma_s: 0.03,
            sigma_n: 0.01,
            scale_min: 0.7,
            scale_max: 1.3,
            variance_floor: 1e-8,
            max_retries: 5,
        }
    }
}

/// A load profile: one positive series, arbitrary units.
#[derive(Debug, Clone)]
pub struct LoadProfile {
    pub values: Vec<f64>,
    pub source: String,
}

impl LoadProfile {
    /// Parses a single-column CSV; a non-numeric first line is treated as a
    /// header.
    pub fn from_csv(text: &str, source: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let trimmed = line.trim().trim_matches(',');
            if trimmed.is_empty() {
                continue;
            }
            match trimmed.parse::<f64>() {
                Ok(v) => values.push(v),
                Err(_) if lineno == 0 => continue,
                Err(_) => {
                    return Err(Error::Schema(format!(
                        "{source}: line {} is not numeric: {trimmed:?}",
                        lineno + 1
                    )))
                }
            }
        }
        if values.is_empty() {
            return Err(Error::Schema(format!("{source}: profile has no data rows")));
        }
        Ok(LoadProfile { values, source: source.to_string() })
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text, &path.display().to_string())
    }

    /// Bundled fallback profile: a daily/weekly sinusoid with noise,
    /// 9600 points.
    pub fn synthetic() -> Self {
        Self::from_csv(include_str!("../profiles/synthetic.csv"), "synthetic")
            .expect("bundled profile is valid")
    }

    /// Resolves "synthetic" to the bundled profile, anything else as a path.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        if name_or_path == "synthetic" {
            Ok(Self::synthetic())
        } else {
            Self::from_path(std::path::Path::new(name_or_path))
        }
    }
}

/// Normalizes the first `t_count` profile points (tiling when the profile
/// is shorter) to mean zero and unit population standard deviation.
pub fn normalize_scaler(profile: &LoadProfile, t_count: usize) -> Result<Vec<f64>> {
    if t_count == 0 {
        return Err(Error::Invalid("scaler length must be positive".into()));
    }
    let src = &profile.values;
    let series: Vec<f64> = (0..t_count).map(|t| src[t % src.len()]).collect();
    let mean = series.iter().sum::<f64>() / t_count as f64;
    let var = series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / t_count as f64;
    if var <= 0.0 {
        return Err(Error::Invalid(format!(
            "profile {} is constant over the first {t_count} points",
            profile.source
        )));
    }
    let std = var.sqrt();
    Ok(series.iter().map(|v| (v - mean) / std).collect())
}

/// One generated timestep.
#[derive(Debug, Clone)]
pub struct Timestep {
    /// Noisy measurements with their variances.
    pub z: MeasurementVector,
    /// Estimated state.
    pub estimate: StateVector,
    /// True (power flow) state behind the measurements.
    pub truth: StateVector,
    /// Power-flow retries consumed.
    pub retries: usize,
}

/// Measurement variance rule: proportional to the stored reading, floored.
/// The estimator's R is always recomputed from the values it is handed
/// (noisy or spliced), so a dataset on disk fully determines every
/// downstream computation without persisting variances.
pub fn variances_for(values: &DVector<f64>, cfg: &ScenarioConfig) -> DVector<f64> {
    values.map(|z| (cfg.sigma_n * z.abs()).powi(2).max(cfg.variance_floor))
}

fn scaled_case(case: &GridCase, s_t: f64, cfg: &ScenarioConfig, rng: &mut impl Rng) -> GridCase {
    let dist = Normal::new(1.0 + cfg.k * s_t, cfg.sigma_s).expect("sigma_s must be finite");
    let mut scaled = case.clone();
    for bus in &mut scaled.buses {
        let has_load = bus.p_load != 0.0 || bus.q_load != 0.0;
        let has_gen = bus.p_gen != 0.0 || bus.q_gen != 0.0;
        if !has_load && !has_gen {
            continue;
        }
        let scale = dist.sample(rng).clamp(cfg.scale_min, cfg.scale_max);
        bus.p_load *= scale;
        bus.q_load *= scale;
        if bus.kind == BusKind::Pv {
            bus.p_gen *= scale;
        }
    }
    scaled
}

/// Generates one timestep from its dedicated RNG stream.
pub fn generate_timestep(
    model: &MeasurementModel,
    s_t: f64,
    cfg: &ScenarioConfig,
    rng: &mut impl Rng,
) -> Result<Timestep> {
    let mut retries = 0;
    let solution = loop {
        let scaled = scaled_case(model.case, s_t, cfg, rng);
        match solve_power_flow(&scaled, PowerFlowOptions::default()) {
            Ok(sol) => break sol,
            Err(Error::PowerFlowDiverged { .. }) | Err(Error::Singular(_)) => {
                retries += 1;
                if retries > cfg.max_retries {
                    return Err(Error::PowerFlowDiverged {
                        max_iter: PowerFlowOptions::default().max_iter,
                        mismatch: f64::NAN,
                    });
                }
            }
            Err(e) => return Err(e),
        }
    };

    let mut values = model.h(&solution.state);
    for v in values.iter_mut() {
        let std = cfg.sigma_n * v.abs();
        if std > 0.0 {
            let eps: f64 = rng.sample(StandardNormal);
            *v += std * eps;
        }
    }
    let variances = variances_for(&values, cfg);
    let z = MeasurementVector::new(values, variances);
    let est = estimate_state(model, &z, None, EstimationOptions::default())?;
    Ok(Timestep { z, estimate: est.state, truth: solution.state, retries })
}

/// A generated honest dataset: measurement rows and estimated state rows.
#[derive(Debug, Clone)]
pub struct HonestDataset {
    pub config: ScenarioConfig,
    /// T rows of m measurement values.
    pub z: Vec<Vec<f64>>,
    /// T rows of m measurement variances.
    pub variances: Vec<Vec<f64>>,
    /// T rows of 2n state estimates, magnitudes then angles.
    pub x: Vec<Vec<f64>>,
    pub profile_source: String,
}

/// State row packing used in datasets: `[vm_0..vm_{n-1}, va_0..va_{n-1}]`.
pub fn state_row(state: &StateVector) -> Vec<f64> {
    let mut row = Vec::with_capacity(2 * state.n());
    row.extend_from_slice(&state.vm);
    row.extend_from_slice(&state.va);
    row
}

/// Generates the honest dataset. Timesteps are independent streams and are
/// evaluated in parallel; assembly is in timestep order, so the result is
/// identical to serial generation.
pub fn generate_dataset(
    model: &MeasurementModel,
    profile: &LoadProfile,
    cfg: &ScenarioConfig,
) -> Result<HonestDataset> {
    let scaler = normalize_scaler(profile, cfg.t_count)?;
    let steps: Result<Vec<Timestep>> = (0..cfg.t_count)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeding::stream(cfg.seed, "scenario", t as u64);
            generate_timestep(model, scaler[t], cfg, &mut rng)
        })
        .collect();
    let steps = steps?;
    Ok(HonestDataset {
        config: cfg.clone(),
        z: steps.iter().map(|s| s.z.values.iter().copied().collect()).collect(),
        variances: steps.iter().map(|s| s.z.variances.iter().copied().collect()).collect(),
        x: steps.iter().map(|s| state_row(&s.estimate)).collect(),
        profile_source: profile.source.clone(),
    })
}
