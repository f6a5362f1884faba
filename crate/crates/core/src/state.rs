//! Polar voltage state.

use num_complex::Complex64;

use crate::grid::case::{BusKind, GridCase};

/// Bus voltage magnitudes (p.u.) and angles (rad) in internal bus order.
///
/// Two packings are used at module boundaries:
///
/// * full: `[va_0 .. va_{n-1}, vm_0 .. vm_{n-1}]`, length 2n — the attack
///   optimizer's coordinate system;
/// * reduced: the full packing with the slack angle removed, length 2n-1 —
///   the estimator's free variables. The slack angle is the reference and
///   stays at its current value (zero everywhere in this crate).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub vm: Vec<f64>,
    pub va: Vec<f64>,
}

impl StateVector {
    /// Flat start: unit magnitude at pq buses, setpoint magnitude at slack
    /// and pv buses, zero angles.
    pub fn flat_start(case: &GridCase) -> Self {
        let vm = case
            .buses
            .iter()
            .map(|b| match b.kind {
                BusKind::Pq => 1.0,
                BusKind::Pv | BusKind::Slack => b.v_set,
            })
            .collect();
        StateVector { vm, va: vec![0.0; case.n()] }
    }

    pub fn n(&self) -> usize {
        self.vm.len()
    }

    pub fn phasor(&self, i: usize) -> Complex64 {
        Complex64::from_polar(self.vm[i], self.va[i])
    }

    pub fn phasors(&self) -> Vec<Complex64> {
        (0..self.n()).map(|i| self.phasor(i)).collect()
    }

    pub fn to_full(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(2 * self.n());
        x.extend_from_slice(&self.va);
        x.extend_from_slice(&self.vm);
        x
    }

    pub fn from_full(x: &[f64]) -> Self {
        let n = x.len() / 2;
        assert_eq!(x.len(), 2 * n);
        StateVector { va: x[..n].to_vec(), vm: x[n..].to_vec() }
    }

    /// Maps a full-packing coordinate to its reduced-packing position, or
    /// `None` for the slack angle.
    pub fn reduce_index(full: usize, n: usize, slack: usize) -> Option<usize> {
        assert!(full < 2 * n);
        if full == slack {
            None
        } else if full < n {
            Some(full - usize::from(full > slack))
        } else {
            Some(full - 1)
        }
    }

    /// Adds a reduced-packing step to the state.
    pub fn apply_reduced_step(&mut self, slack: usize, step: &[f64]) {
        let n = self.n();
        assert_eq!(step.len(), 2 * n - 1);
        let mut k = 0;
        for i in 0..n {
            if i != slack {
                self.va[i] += step[k];
                k += 1;
            }
        }
        for i in 0..n {
            self.vm[i] += step[k];
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::resolve_case;

    #[test]
    fn flat_start_pins_setpoints() {
        let case = resolve_case("ieee14").unwrap();
        let x = StateVector::flat_start(&case);
        let slack = case.slack();
        assert_eq!(x.vm[slack], case.buses[slack].v_set);
        for (i, b) in case.buses.iter().enumerate() {
            match b.kind {
                BusKind::Pq => assert_eq!(x.vm[i], 1.0),
                _ => assert_eq!(x.vm[i], b.v_set),
            }
            assert_eq!(x.va[i], 0.0);
        }
    }

    #[test]
    fn full_round_trip() {
        let case = resolve_case("ieee14").unwrap();
        let mut x = StateVector::flat_start(&case);
        x.va[3] = 0.25;
        x.vm[7] = 1.02;
        assert_eq!(StateVector::from_full(&x.to_full()), x);
    }

    #[test]
    fn reduced_step_skips_slack_angle() {
        let case = resolve_case("ieee14").unwrap();
        let slack = case.slack();
        let mut x = StateVector::flat_start(&case);
        let step = vec![1.0; 2 * case.n() - 1];
        x.apply_reduced_step(slack, &step);
        assert_eq!(x.va[slack], 0.0);
        for i in 0..case.n() {
            if i != slack {
                assert_eq!(x.va[i], 1.0);
            }
        }
        assert!(x.vm.iter().all(|&v| v > 1.9));
    }

    #[test]
    fn reduce_index_is_a_bijection_off_slack() {
        let n = 14;
        let slack = 0;
        let mut seen = vec![false; 2 * n - 1];
        for full in 0..2 * n {
            match StateVector::reduce_index(full, n, slack) {
                None => assert_eq!(full, slack),
                Some(r) => {
                    assert!(!seen[r]);
                    seen[r] = true;
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }
}
