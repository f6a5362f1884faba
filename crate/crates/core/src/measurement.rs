//! Measurement layout and values.
//!
//! A layout fixes the meaning of every row of a measurement vector. The
//! standard SCADA complement measures active and reactive injection at
//! every bus and active and reactive flow at both ends of every branch:
//! m = 2n + 4B rows, ordered as all active injections by bus, all reactive
//! injections by bus, then the flow sections by branch with the from end
//! before the to end.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::grid::case::GridCase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlowEnd {
    From,
    To,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasurementKind {
    /// Active power injection at a bus (internal index), p.u.
    PInj { bus: usize },
    /// Reactive power injection at a bus, p.u.
    QInj { bus: usize },
    /// Active power flow on a branch at one end, p.u.
    PFlow { branch: usize, end: FlowEnd },
    /// Reactive power flow on a branch at one end, p.u.
    QFlow { branch: usize, end: FlowEnd },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementLayout {
    entries: Vec<MeasurementKind>,
    names: Vec<String>,
}

impl MeasurementLayout {
    /// Full complement for a case: injections at every bus, flows at both
    /// branch ends.
    pub fn standard(case: &GridCase) -> Self {
        let n = case.n();
        let nb = case.branches.len();
        let mut entries = Vec::with_capacity(2 * n + 4 * nb);
        let mut names = Vec::with_capacity(entries.capacity());
        for i in 0..n {
            entries.push(MeasurementKind::PInj { bus: i });
            names.push(format!("p_inj_{}", case.bus_id(i)));
        }
        for i in 0..n {
            entries.push(MeasurementKind::QInj { bus: i });
            names.push(format!("q_inj_{}", case.bus_id(i)));
        }
        for b in 0..nb {
            for end in [FlowEnd::From, FlowEnd::To] {
                entries.push(MeasurementKind::PFlow { branch: b, end });
                names.push(flow_name(case, "p", b, end));
            }
        }
        for b in 0..nb {
            for end in [FlowEnd::From, FlowEnd::To] {
                entries.push(MeasurementKind::QFlow { branch: b, end });
                names.push(flow_name(case, "q", b, end));
            }
        }
        MeasurementLayout { entries, names }
    }

    /// Layout over an explicit entry list, e.g. a reduced meter set.
    pub fn from_entries(case: &GridCase, entries: Vec<MeasurementKind>) -> Self {
        let names = entries
            .iter()
            .map(|kind| match *kind {
                MeasurementKind::PInj { bus } => format!("p_inj_{}", case.bus_id(bus)),
                MeasurementKind::QInj { bus } => format!("q_inj_{}", case.bus_id(bus)),
                MeasurementKind::PFlow { branch, end } => flow_name(case, "p", branch, end),
                MeasurementKind::QFlow { branch, end } => flow_name(case, "q", branch, end),
            })
            .collect();
        MeasurementLayout { entries, names }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[MeasurementKind] {
        &self.entries
    }

    pub fn kind(&self, i: usize) -> MeasurementKind {
        self.entries[i]
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

fn flow_name(case: &GridCase, kind: &str, branch: usize, end: FlowEnd) -> String {
    let br = &case.branches[branch];
    let (f, t) = (case.bus_id(br.from), case.bus_id(br.to));
    let side = match end {
        FlowEnd::From => "from",
        FlowEnd::To => "to",
    };
    format!("{kind}_flow_{branch}_{f}-{t}_{side}")
}

/// Measured values with their assumed error variances, aligned to a layout.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVector {
    pub values: DVector<f64>,
    pub variances: DVector<f64>,
}

impl MeasurementVector {
    pub fn new(values: DVector<f64>, variances: DVector<f64>) -> Self {
        assert_eq!(values.len(), variances.len());
        assert!(variances.iter().all(|&v| v > 0.0), "variances must be positive");
        MeasurementVector { values, variances }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.len() == 0
    }
}
