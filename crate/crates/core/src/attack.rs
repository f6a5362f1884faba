//! Stealth false-data injection attacks.
//!
//! An attacker enters at a bus, claims the k-hop neighborhood around it
//! (minus generator and zero-injection buses, which are too risky to
//! falsify), and searches for a perturbed state x-check whose implied
//! measurements stay consistent on every meter outside the claimed set.
//! The search is plain projected gradient descent on the polar state,
//! restricted to the target coordinates, with the loss
//!
//! ```text
//! L = lambda_z * L_z - lambda_x * L_x
//! L_z = sqrt( sum over meters outside t_z of (h_i(x-check) - z_i)^2 )
//! L_x = sum over coordinates in t_x of |x-check_j - x-hat_j|
//! ```
//!
//! so stealth (consistency on untouchable meters) is penalized and attack
//! magnitude is rewarded. An attempt is accepted when the best loss drops
//! below `tau_loss`; accepted attacks overwrite the target meters with
//! h(x-check) and the operator's estimator is re-run on the falsified
//! snapshot.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{estimate_state, EstimationOptions};
use crate::grid::case::GridCase;
use crate::grid::topology::k_hop_neighborhood;
use crate::measurement::{MeasurementKind, MeasurementVector};
use crate::powerflow::MeasurementModel;
use crate::scenario::{state_row, HonestDataset};
use crate::seeding;
use crate::state::StateVector;

/// The claimed region of one attack attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetArea {
    /// Entry bus, internal index.
    pub entry: usize,
    /// BFS radius in hops.
    pub radius: usize,
    /// Target buses: the k-hop neighborhood of the entry minus generator
    /// and zero-injection buses. Sorted.
    pub buses: Vec<usize>,
    /// Target state coordinates in the full packing [va; vm]. Sorted.
    pub t_x: Vec<usize>,
    /// Target measurement rows: injections at target buses and flows on
    /// branches with both endpoints in the target set. Sorted.
    pub t_z: Vec<usize>,
}

impl TargetArea {
    /// Boolean membership mask over measurement rows.
    pub fn z_mask(&self, m: usize) -> Vec<bool> {
        let mut mask = vec![false; m];
        for &i in &self.t_z {
            mask[i] = true;
        }
        mask
    }

    /// Boolean membership mask over full-packing state coordinates.
    pub fn x_mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; 2 * n];
        for &j in &self.t_x {
            mask[j] = true;
        }
        mask
    }
}

/// Selects the target area around an entry bus.
///
/// Flow meters are kept only when both endpoints are targets: falsifying a
/// flow into a non-target bus would break Kirchhoff's current law at that
/// bus, which the operator can check independently.
pub fn select_target_area(
    case: &GridCase,
    model: &MeasurementModel,
    entry: usize,
    radius: usize,
) -> Result<TargetArea> {
    let ball = k_hop_neighborhood(&case.adjacency(), entry, radius);
    let buses: Vec<usize> = ball
        .into_iter()
        .filter(|&b| !case.is_generator_bus(b) && !case.is_zero_injection_bus(b))
        .collect();
    if buses.is_empty() {
        return Err(Error::EmptyTargetArea { bus: case.bus_id(entry), radius });
    }

    let n = case.n();
    let mut in_area = vec![false; n];
    for &b in &buses {
        in_area[b] = true;
    }
    let mut t_x = buses.clone();
    t_x.extend(buses.iter().map(|&b| n + b));
    t_x.sort_unstable();

    let mut t_z = Vec::new();
    for (row, kind) in model.layout.entries().iter().enumerate() {
        let include = match *kind {
            MeasurementKind::PInj { bus } | MeasurementKind::QInj { bus } => in_area[bus],
            MeasurementKind::PFlow { branch, .. } | MeasurementKind::QFlow { branch, .. } => {
                let br = &case.branches[branch];
                in_area[br.from] && in_area[br.to]
            }
        };
        if include {
            t_z.push(row);
        }
    }
    Ok(TargetArea { entry, radius, buses, t_x, t_z })
}

/// Loss weight presets named for the intruder's temperament.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackPreset {
    /// Stealth-dominated: lambda_z = 10, lambda_x = 1.
    Cautious,
    /// Even weights: lambda_z = 1, lambda_x = 1.
    Balanced,
    /// Magnitude-dominated: lambda_z = 1, lambda_x = 10.
    Aggressive,
}

impl AttackPreset {
    pub fn weights(self) -> (f64, f64) {
        match self {
            AttackPreset::Cautious => (10.0, 1.0),
            AttackPreset::Balanced => (1.0, 1.0),
            AttackPreset::Aggressive => (1.0, 10.0),
        }
    }
}

impl std::str::FromStr for AttackPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cautious" => Ok(AttackPreset::Cautious),
            "balanced" => Ok(AttackPreset::Balanced),
            "aggressive" => Ok(AttackPreset::Aggressive),
            other => Err(Error::Invalid(format!(
                "unknown attack preset {other:?}; expected cautious, balanced, or aggressive"
            ))),
        }
    }
}

/// JSON cannot carry non-finite floats (serde writes them as null), so this
/// field codec emits them as strings ("inf", "-inf", "NaN") and reads either
/// representation back.
mod nonfinite_as_string {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.collect_str(v)
        }
    }

    struct NumOrStr;

    impl Visitor<'_> for NumOrStr {
        type Value = f64;

        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            f.write_str("a number or a float string like \"inf\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            v.parse().map_err(|_| E::custom(format!("not a float: {v:?}")))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(NumOrStr)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackConfig {
    pub lambda_z: f64,
    pub lambda_x: f64,
    /// Gradient descent learning rate.
    pub eta: f64,
    /// Epoch budget per attempt.
    pub epochs: usize,
    /// Standard deviation of the initialization noise on target coordinates.
    pub sigma_init: f64,
    /// Attack frequency threshold: attempt iff a standard normal draw
    /// exceeds it (about 15.9% of timesteps at 1.0). Infinity disables
    /// attacks entirely and round-trips through JSON as the string "inf".
    #[serde(with = "nonfinite_as_string")]
    pub tau_freq: f64,
    /// Acceptance threshold on the loss.
    pub tau_loss: f64,
    /// Inclusive BFS radius bounds.
    pub r_min: usize,
    pub r_max: usize,
    /// Projection box for magnitudes and angles.
    pub vm_bounds: (f64, f64),
    pub va_bounds: (f64, f64),
    /// Early exit after this many epochs without loss improvement.
    pub patience: usize,
    /// Minimum loss decrease that counts as improvement.
    pub min_improvement: f64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            lambda_z: 1.0,
            lambda_x: 1.0,
            eta: 0.001,
            epochs: 1000,
            sigma_init: 0.005,
            tau_freq: 1.0,
            tau_loss: 0.1,
            r_min: 2,
            r_max: 3,
            vm_bounds: (0.9, 1.1),
            va_bounds: (-std::f64::consts::PI, std::f64::consts::PI),
            patience: 50,
            min_improvement: 1e-9,
        }
    }
}

impl AttackConfig {
    /// Defaults with radius bounds picked by system size: (2,3) for small
    /// systems, (3,4) for mid-size, (6,8) for large ones.
    pub fn for_case(case: &GridCase) -> Self {
        let (r_min, r_max) = match case.n() {
            0..=60 => (2, 3),
            61..=200 => (3, 4),
            _ => (6, 8),
        };
        AttackConfig { r_min, r_max, ..Default::default() }
    }

    pub fn with_preset(mut self, preset: AttackPreset) -> Self {
        let (lz, lx) = preset.weights();
        self.lambda_z = lz;
        self.lambda_x = lx;
        self
    }
}

/// Evaluates the attack loss.
///
/// `z_a` are measurement values implied or spliced by the attack and `z_o`
/// the reference the attack must stay consistent with (the search uses the
/// reconstruction h(x̂), under which a no-op attack costs exactly zero);
/// only entries outside `t_z` contribute to the stealth penalty, and only
/// state coordinates in `t_x` contribute to the magnitude reward.
pub fn attack_loss(
    z_a: &DVector<f64>,
    z_o: &DVector<f64>,
    x_check: &StateVector,
    x_hat: &StateVector,
    area: &TargetArea,
    lambda_z: f64,
    lambda_x: f64,
) -> (f64, f64, f64) {
    assert_eq!(z_a.len(), z_o.len());
    let z_mask = area.z_mask(z_a.len());
    let l_z = (0..z_a.len())
        .filter(|&i| !z_mask[i])
        .map(|i| (z_a[i] - z_o[i]).powi(2))
        .sum::<f64>()
        .sqrt();
    let xc = x_check.to_full();
    let xh = x_hat.to_full();
    let l_x: f64 = area.t_x.iter().map(|&j| (xc[j] - xh[j]).abs()).sum();
    (lambda_z * l_z - lambda_x * l_x, l_z, l_x)
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Analytic gradient of the attack loss over the full packing, zero outside
/// `t_x`.
///
/// The stealth term differentiates through the measurement function:
/// d L_z / dx = H' u with u_i = (h_i(x) - z_i)/L_z on non-target meters and
/// zero on target meters. The reward term contributes the sign of the state
/// deviation, with sign(0) taken as 0.
pub fn attack_gradient(
    model: &MeasurementModel,
    x_check: &StateVector,
    x_hat: &StateVector,
    z_o: &DVector<f64>,
    area: &TargetArea,
    lambda_z: f64,
    lambda_x: f64,
) -> DVector<f64> {
    let n = x_check.n();
    let h = model.h(x_check);
    let z_mask = area.z_mask(h.len());
    let mut u = DVector::zeros(h.len());
    let mut l_z_sq = 0.0;
    for i in 0..h.len() {
        if !z_mask[i] {
            let d = h[i] - z_o[i];
            u[i] = d;
            l_z_sq += d * d;
        }
    }
    let l_z = l_z_sq.sqrt();

    let mut grad = DVector::zeros(2 * n);
    if l_z > 0.0 {
        let jac = model.jacobian_full(x_check);
        u /= l_z;
        grad = jac.transpose() * u * lambda_z;
    }
    let xc = x_check.to_full();
    let xh = x_hat.to_full();
    let x_mask = area.x_mask(n);
    for j in 0..2 * n {
        if x_mask[j] {
            grad[j] -= lambda_x * sign(xc[j] - xh[j]);
        } else {
            grad[j] = 0.0;
        }
    }
    grad
}

/// Outcome of one attack attempt.
#[derive(Debug, Clone)]
pub struct AttackResult {
    /// Falsified snapshot: honest values with `t_z` entries overwritten by
    /// h(x_check).
    pub z_a: DVector<f64>,
    pub x_check: StateVector,
    pub loss: f64,
    pub l_z: f64,
    pub l_x: f64,
    pub accepted: bool,
    pub area: TargetArea,
    /// Epochs actually evaluated (early exit stops the budget).
    pub epochs_run: usize,
}

/// Runs the projected gradient search from the operator's estimate.
///
/// The best iterate encountered is the attack candidate; the search stops
/// early once the loss has not improved for `patience` epochs.
///
/// The stealth penalty is evaluated against the reconstruction h(x̂), not
/// the raw readings: measurement noise is invisible to the attacker, and
/// the no-op attack x̌ = x̂ must cost exactly zero whatever the noise floor
/// is. Only the splice at the end touches the physical readings `z_o`.
pub fn generate_stealth_attack(
    model: &MeasurementModel,
    z_o: &DVector<f64>,
    x_hat: &StateVector,
    area: &TargetArea,
    config: &AttackConfig,
    rng: &mut impl Rng,
) -> AttackResult {
    let n = x_hat.n();
    let z_ref = model.h(x_hat);
    let mut x_full = x_hat.to_full();
    for &j in &area.t_x {
        let eps: f64 = rng.sample(StandardNormal);
        x_full[j] += config.sigma_init * eps;
    }
    project(&mut x_full, area, n, config);
    let mut x_check = StateVector::from_full(&x_full);

    let evaluate = |x: &StateVector| {
        attack_loss(&model.h(x), &z_ref, x, x_hat, area, config.lambda_z, config.lambda_x)
    };

    let mut best = evaluate(&x_check);
    let mut best_x = x_check.clone();
    let mut stall = 0;
    let mut epochs_run = 0;

    for _ in 0..config.epochs {
        let grad = attack_gradient(
            model,
            &x_check,
            x_hat,
            &z_ref,
            area,
            config.lambda_z,
            config.lambda_x,
        );
        // Steepest descent under an l-infinity trust region: the raw
        // gradient scales with the loss weights times admittance-sized
        // Jacobian entries, so a fixed-step update overshoots the stealth
        // valley for strict weightings (lambda_z = 10 never descends).
        // Capping the per-coordinate displacement at eta keeps every
        // weighting on the same step scale.
        let gmax = area.t_x.iter().map(|&j| grad[j].abs()).fold(0.0, f64::max);
        let scale = if gmax > 1.0 { 1.0 / gmax } else { 1.0 };
        let mut x_full = x_check.to_full();
        for &j in &area.t_x {
            x_full[j] -= config.eta * scale * grad[j];
        }
        project(&mut x_full, area, n, config);
        x_check = StateVector::from_full(&x_full);
        epochs_run += 1;

        let candidate = evaluate(&x_check);
        if candidate.0 < best.0 - config.min_improvement {
            best = candidate;
            best_x = x_check.clone();
            stall = 0;
        } else {
            stall += 1;
            if stall >= config.patience {
                break;
            }
        }
    }

    let h_best = model.h(&best_x);
    let mut z_a = z_o.clone();
    for &i in &area.t_z {
        z_a[i] = h_best[i];
    }
    AttackResult {
        z_a,
        x_check: best_x,
        loss: best.0,
        l_z: best.1,
        l_x: best.2,
        accepted: best.0 < config.tau_loss,
        area: area.clone(),
        epochs_run,
    }
}

fn project(x_full: &mut [f64], area: &TargetArea, n: usize, config: &AttackConfig) {
    for &j in &area.t_x {
        if j < n {
            x_full[j] = x_full[j].clamp(config.va_bounds.0, config.va_bounds.1);
        } else {
            x_full[j] = x_full[j].clamp(config.vm_bounds.0, config.vm_bounds.1);
        }
    }
}

/// One accepted attack, as persisted in `attacks.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttackRecord {
    /// Timestep index.
    pub t: usize,
    /// Entry bus, original identifier.
    pub p: i64,
    pub r: usize,
    pub loss: f64,
    pub l_x: f64,
    /// Largest magnitude deviation among target coordinates, p.u.
    pub max_dv: f64,
    /// Largest angle deviation among target coordinates, rad.
    pub max_dtheta: f64,
    /// Largest spliced measurement change, p.u.
    pub max_dz: f64,
}

/// Honest dataset with labels and spliced attacks.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub z: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<u8>,
    pub attacks: Vec<AttackRecord>,
    /// Attack attempts (timesteps where the frequency draw triggered).
    pub attempts: usize,
    /// Attempts whose loss cleared the acceptance threshold.
    pub accepted: usize,
}

enum TimestepOutcome {
    Honest,
    Failed,
    Accepted { z: Vec<f64>, variances: Vec<f64>, x: Vec<f64>, record: AttackRecord },
}

/// Runs Algorithm 2 over an honest dataset: per timestep, a frequency draw
/// decides whether to attack, the entry bus and radius are drawn uniformly,
/// and an accepted attack splices its falsified meters in, flips the label,
/// and re-runs the operator's estimator warm-started from the honest
/// estimate. Timestep t draws from the stream (seed, "attack", t).
pub fn generate_attacked_dataset(
    honest: &HonestDataset,
    model: &MeasurementModel,
    config: &AttackConfig,
    seed: u64,
) -> Result<LabeledDataset> {
    let case = model.case;
    let n = case.n();
    let t_count = honest.z.len();

    let outcomes: Result<Vec<TimestepOutcome>> = (0..t_count)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeding::stream(seed, "attack", t as u64);
            let f: f64 = rng.sample(StandardNormal);
            if f <= config.tau_freq {
                return Ok(TimestepOutcome::Honest);
            }
            let entry = rng.random_range(0..n);
            let radius = rng.random_range(config.r_min..=config.r_max);
            let area = match select_target_area(case, model, entry, radius) {
                Ok(area) => area,
                Err(Error::EmptyTargetArea { .. }) => return Ok(TimestepOutcome::Failed),
                Err(e) => return Err(e),
            };

            let x_hat = StateVector {
                vm: honest.x[t][..n].to_vec(),
                va: honest.x[t][n..].to_vec(),
            };
            let z_o = DVector::from_column_slice(&honest.z[t]);
            let result = generate_stealth_attack(model, &z_o, &x_hat, &area, config, &mut rng);
            if !result.accepted {
                return Ok(TimestepOutcome::Failed);
            }

            let variances = crate::scenario::variances_for(&result.z_a, &honest.config);
            let spliced = MeasurementVector::new(result.z_a.clone(), variances.clone());
            // A falsified snapshot the operator's estimator cannot even
            // converge on is anything but stealthy — it would be pulled for
            // inspection immediately. Such attempts fail; the timestep keeps
            // its honest readings.
            let est = match estimate_state(model, &spliced, Some(&x_hat), EstimationOptions::default())
            {
                Ok(est) => est,
                Err(e) if e.is_config() => return Err(e),
                Err(_) => return Ok(TimestepOutcome::Failed),
            };

            let max_dv = (0..n)
                .map(|b| (result.x_check.vm[b] - x_hat.vm[b]).abs())
                .fold(0.0, f64::max);
            let max_dtheta = (0..n)
                .map(|b| (result.x_check.va[b] - x_hat.va[b]).abs())
                .fold(0.0, f64::max);
            let max_dz = area
                .t_z
                .iter()
                .map(|&i| (result.z_a[i] - honest.z[t][i]).abs())
                .fold(0.0, f64::max);

            Ok(TimestepOutcome::Accepted {
                z: result.z_a.iter().copied().collect(),
                variances: variances.iter().copied().collect(),
                x: state_row(&est.state),
                record: AttackRecord {
                    t,
                    p: case.bus_id(entry),
                    r: radius,
                    loss: result.loss,
                    l_x: result.l_x,
                    max_dv,
                    max_dtheta,
                    max_dz,
                },
            })
        })
        .collect();
    let outcomes = outcomes?;

    let mut labeled = LabeledDataset {
        z: honest.z.clone(),
        variances: honest.variances.clone(),
        x: honest.x.clone(),
        y: vec![0; t_count],
        attacks: Vec::new(),
        attempts: 0,
        accepted: 0,
    };
    for (t, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            TimestepOutcome::Honest => {}
            TimestepOutcome::Failed => labeled.attempts += 1,
            TimestepOutcome::Accepted { z, variances, x, record } => {
                labeled.attempts += 1;
                labeled.accepted += 1;
                labeled.z[t] = z;
                labeled.variances[t] = variances;
                labeled.x[t] = x;
                labeled.y[t] = 1;
                labeled.attacks.push(record);
            }
        }
    }
    Ok(labeled)
}
