//! Grid case model and JSON ingestion.
//!
//! A case file is a single JSON object:
//!
//! ```json
//! {
//!   "base_mva": 100.0,
//!   "buses":    [{"id": 1, "kind": "slack", "p_load": 0.0, "q_load": 0.0,
//!                 "p_gen": 232.4, "q_gen": -16.9, "v_set": 1.06,
//!                 "gs": 0.0, "bs": 0.0}, ...],
//!   "branches": [{"from": 1, "to": 2, "r": 0.01938, "x": 0.05917,
//!                 "b": 0.0528, "tap": 1.0, "shift": 0.0}, ...]
//! }
//! ```
//!
//! Loads and generation are in MW / MVAr; impedances, charging, and bus
//! shunts are per unit on `base_mva`; `shift` is in radians. Bus ids may be
//! arbitrary (the 300-bus system uses sparse ids up to 9533); everything
//! downstream works with contiguous internal indices and the id map is
//! retained for reporting.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bus {
    pub id: i64,
    pub kind: BusKind,
    /// Active / reactive load in MW / MVAr.
    pub p_load: f64,
    pub q_load: f64,
    /// Scheduled generation in MW / MVAr. For pv buses `p_gen` is held and
    /// `q_gen` is solved; for the slack both are solved. Generation at pq
    /// buses acts as fixed negative load.
    pub p_gen: f64,
    pub q_gen: f64,
    /// Voltage setpoint in p.u.; meaningful for slack and pv buses.
    pub v_set: f64,
    /// Bus shunt admittance in p.u.
    #[serde(default)]
    pub gs: f64,
    #[serde(default)]
    pub bs: f64,
}

/// Branch with endpoints as internal bus indices.
#[derive(Debug, Clone)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    /// Series impedance, p.u.
    pub r: f64,
    pub x: f64,
    /// Total line charging susceptance, p.u.
    pub b: f64,
    /// Off-nominal tap ratio on the from side; 1.0 for lines.
    pub tap: f64,
    /// Phase shift in radians.
    pub shift: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawBranch {
    from: i64,
    to: i64,
    r: f64,
    x: f64,
    #[serde(default)]
    b: f64,
    #[serde(default = "default_tap")]
    tap: f64,
    #[serde(default)]
    shift: f64,
}

fn default_tap() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawCase {
    base_mva: f64,
    buses: Vec<Bus>,
    branches: Vec<RawBranch>,
}

/// A validated grid case.
#[derive(Debug, Clone)]
pub struct GridCase {
    pub base_mva: f64,
    /// Buses in file order; position is the internal index.
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    index_of: HashMap<i64, usize>,
    slack: usize,
}

impl GridCase {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawCase =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn from_raw(raw: RawCase) -> Result<Self> {
        if !(raw.base_mva > 0.0) {
            return Err(Error::Invalid(format!("base_mva must be positive, got {}", raw.base_mva)));
        }
        if raw.buses.is_empty() {
            return Err(Error::Invalid("case has no buses".into()));
        }
        let mut index_of = HashMap::with_capacity(raw.buses.len());
        for (i, bus) in raw.buses.iter().enumerate() {
            if index_of.insert(bus.id, i).is_some() {
                return Err(Error::Invalid(format!("duplicate bus id {}", bus.id)));
            }
            if matches!(bus.kind, BusKind::Slack | BusKind::Pv) && !(bus.v_set > 0.0) {
                return Err(Error::Invalid(format!(
                    "bus {}: v_set must be positive for {} buses",
                    bus.id,
                    if bus.kind == BusKind::Slack { "slack" } else { "pv" }
                )));
            }
        }
        let slacks: Vec<&Bus> = raw.buses.iter().filter(|b| b.kind == BusKind::Slack).collect();
        match slacks.len() {
            0 => return Err(Error::Invalid("case has no slack bus".into())),
            1 => {}
            k => return Err(Error::Invalid(format!("case has {k} slack buses, expected 1"))),
        }
        let slack = index_of[&slacks[0].id];

        let mut branches = Vec::with_capacity(raw.branches.len());
        for rb in &raw.branches {
            let from = *index_of
                .get(&rb.from)
                .ok_or_else(|| Error::Invalid(format!("branch endpoint {} is not a bus", rb.from)))?;
            let to = *index_of
                .get(&rb.to)
                .ok_or_else(|| Error::Invalid(format!("branch endpoint {} is not a bus", rb.to)))?;
            if from == to {
                return Err(Error::Invalid(format!("branch {}-{} is a self-loop", rb.from, rb.to)));
            }
            if rb.x == 0.0 {
                return Err(Error::Invalid(format!(
                    "branch {}-{} has zero reactance",
                    rb.from, rb.to
                )));
            }
            if !(rb.tap > 0.0) {
                return Err(Error::Invalid(format!(
                    "branch {}-{}: tap must be positive, got {}",
                    rb.from, rb.to, rb.tap
                )));
            }
            branches.push(Branch {
                from,
                to,
                r: rb.r,
                x: rb.x,
                b: rb.b,
                tap: rb.tap,
                shift: rb.shift,
            });
        }

        let case = GridCase { base_mva: raw.base_mva, buses: raw.buses, branches, index_of, slack };
        case.check_connected()?;
        Ok(case)
    }

    fn check_connected(&self) -> Result<()> {
        let reach = crate::grid::topology::hop_distances(&self.adjacency(), self.slack);
        let unreachable: Vec<i64> = (0..self.n())
            .filter(|&i| reach[i].is_none())
            .map(|i| self.buses[i].id)
            .collect();
        if unreachable.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(format!(
                "graph is disconnected: {} buses unreachable from the slack (first: {})",
                unreachable.len(),
                unreachable[0]
            )))
        }
    }

    pub fn n(&self) -> usize {
        self.buses.len()
    }

    /// Internal index of the slack bus.
    pub fn slack(&self) -> usize {
        self.slack
    }

    pub fn index_of(&self, id: i64) -> Option<usize> {
        self.index_of.get(&id).copied()
    }

    pub fn bus_id(&self, index: usize) -> i64 {
        self.buses[index].id
    }

    /// Net scheduled complex injection at a bus, p.u.
    pub fn injection_pu(&self, i: usize) -> (f64, f64) {
        let b = &self.buses[i];
        ((b.p_gen - b.p_load) / self.base_mva, (b.q_gen - b.q_load) / self.base_mva)
    }

    /// Buses that host generation: slack and pv buses, plus any bus with
    /// nonzero scheduled generation.
    pub fn is_generator_bus(&self, i: usize) -> bool {
        let b = &self.buses[i];
        !matches!(b.kind, BusKind::Pq) || b.p_gen != 0.0 || b.q_gen != 0.0
    }

    /// True when the bus has no load and no generation, so its injection is
    /// structurally zero.
    pub fn is_zero_injection_bus(&self, i: usize) -> bool {
        let b = &self.buses[i];
        b.p_load == 0.0 && b.q_load == 0.0 && b.p_gen == 0.0 && b.q_gen == 0.0
    }

    /// Neighbor lists over the branch graph, deduplicated.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n()];
        for br in &self.branches {
            adj[br.from].push(br.to);
            adj[br.to].push(br.from);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    pub fn to_json(&self) -> String {
        let raw = RawCase {
            base_mva: self.base_mva,
            buses: self.buses.clone(),
            branches: self
                .branches
                .iter()
                .map(|br| RawBranch {
                    from: self.buses[br.from].id,
                    to: self.buses[br.to].id,
                    r: br.r,
                    x: br.x,
                    b: br.b,
                    tap: br.tap,
                    shift: br.shift,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("case serialization cannot fail")
    }
}

/// Bundled IEEE test systems, keyed by name.
pub fn bundled(name: &str) -> Option<&'static str> {
    match name {
        "ieee14" => Some(include_str!("../../cases/ieee14.json")),
        "ieee118" => Some(include_str!("../../cases/ieee118.json")),
        "ieee300" => Some(include_str!("../../cases/ieee300.json")),
        _ => None,
    }
}

/// Loads a bundled case by name, or a case file by path.
pub fn resolve_case(name_or_path: &str) -> Result<GridCase> {
    if let Some(text) = bundled(name_or_path) {
        GridCase::from_json(text)
    } else {
        GridCase::load(Path::new(name_or_path))
    }
}
