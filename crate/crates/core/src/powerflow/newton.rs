//! Newton-Raphson AC power flow in polar form.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::case::{BusKind, GridCase};
use crate::grid::ybus::build_ybus;
use crate::state::StateVector;

#[derive(Debug, Clone, Copy)]
pub struct PowerFlowOptions {
    /// Convergence tolerance on the largest power mismatch, p.u.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerFlowOptions {
    fn default() -> Self {
        PowerFlowOptions { tol: 1e-8, max_iter: 20 }
    }
}

#[derive(Debug, Clone)]
pub struct PowerFlowSolution {
    pub state: StateVector,
    pub iterations: usize,
    /// Largest residual mismatch at the solution, p.u.
    pub max_mismatch: f64,
    /// Net complex injection at every bus at the solution, p.u.
    pub injections: Vec<Complex64>,
}

impl PowerFlowSolution {
    /// Solved generator output at a bus in MW (injection plus load).
    pub fn p_gen_mw(&self, case: &GridCase, i: usize) -> f64 {
        self.injections[i].re * case.base_mva + case.buses[i].p_load
    }

    pub fn q_gen_mvar(&self, case: &GridCase, i: usize) -> f64 {
        self.injections[i].im * case.base_mva + case.buses[i].q_load
    }
}

/// Solves the AC power flow from a flat start.
///
/// Unknowns are the angles at non-slack buses and the magnitudes at pq
/// buses; slack and pv magnitudes stay pinned at their setpoints. Each
/// iteration solves the full Newton system for the active mismatch at
/// non-slack buses and the reactive mismatch at pq buses.
pub fn solve_power_flow(case: &GridCase, options: PowerFlowOptions) -> Result<PowerFlowSolution> {
    let n = case.n();
    let ybus = build_ybus(case);
    let mut x = StateVector::flat_start(case);

    // Row/column index sets of the reduced Newton system.
    let p_buses: Vec<usize> = (0..n).filter(|&i| i != case.slack()).collect();
    let q_buses: Vec<usize> =
        (0..n).filter(|&i| case.buses[i].kind == BusKind::Pq).collect();
    let n_free = p_buses.len() + q_buses.len();

    let mut injections = vec![Complex64::ZERO; n];
    let mut max_mismatch = f64::INFINITY;

    for iter in 0..=options.max_iter {
        let v = x.phasors();
        ybus.matvec(&v, &mut injections);
        for (i, inj) in injections.iter_mut().enumerate() {
            *inj = v[i] * inj.conj();
        }

        let mut rhs = DVector::zeros(n_free);
        for (r, &i) in p_buses.iter().enumerate() {
            rhs[r] = case.injection_pu(i).0 - injections[i].re;
        }
        for (r, &i) in q_buses.iter().enumerate() {
            rhs[p_buses.len() + r] = case.injection_pu(i).1 - injections[i].im;
        }
        max_mismatch = rhs.amax();
        if max_mismatch <= options.tol {
            return Ok(PowerFlowSolution { state: x, iterations: iter, max_mismatch, injections });
        }
        if iter == options.max_iter {
            break;
        }

        let jac = newton_matrix(case, &ybus, &x, &v, &injections, &p_buses, &q_buses);
        let step = jac
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("power flow Newton system".into()))?;
        for (r, &i) in p_buses.iter().enumerate() {
            x.va[i] += step[r];
        }
        for (r, &i) in q_buses.iter().enumerate() {
            x.vm[i] += step[p_buses.len() + r];
        }
    }

    Err(Error::PowerFlowDiverged { max_iter: options.max_iter, mismatch: max_mismatch })
}

/// Newton matrix: rows [dP at non-slack; dQ at pq], columns [dva at
/// non-slack; dvm at pq], from the complex injection partials.
fn newton_matrix(
    case: &GridCase,
    ybus: &crate::sparse::Csr<Complex64>,
    x: &StateVector,
    v: &[Complex64],
    s: &[Complex64],
    p_buses: &[usize],
    q_buses: &[usize],
) -> DMatrix<f64> {
    let n = case.n();
    let mut col_of_va = vec![usize::MAX; n];
    let mut col_of_vm = vec![usize::MAX; n];
    for (c, &i) in p_buses.iter().enumerate() {
        col_of_va[i] = c;
    }
    for (c, &i) in q_buses.iter().enumerate() {
        col_of_vm[i] = p_buses.len() + c;
    }
    let mut row_of_p = vec![usize::MAX; n];
    let mut row_of_q = vec![usize::MAX; n];
    for (r, &i) in p_buses.iter().enumerate() {
        row_of_p[i] = r;
    }
    for (r, &i) in q_buses.iter().enumerate() {
        row_of_q[i] = p_buses.len() + r;
    }

    let unit: Vec<Complex64> = (0..n).map(|i| Complex64::from_polar(1.0, x.va[i])).collect();
    let mut currents = vec![Complex64::ZERO; n];
    ybus.matvec(v, &mut currents);

    let mut jac = DMatrix::zeros(p_buses.len() + q_buses.len(), p_buses.len() + q_buses.len());
    for i in 0..n {
        let (rp, rq) = (row_of_p[i], row_of_q[i]);
        if rp == usize::MAX && rq == usize::MAX {
            continue;
        }
        for (k, y_ik) in ybus.row(i) {
            let t = v[i] * (y_ik * v[k]).conj();
            let mut d_theta = -Complex64::I * t;
            let mut d_vm = v[i] * (y_ik * unit[k]).conj();
            if k == i {
                d_theta += Complex64::I * s[i];
                d_vm += unit[i] * currents[i].conj();
            }
            if rp != usize::MAX {
                if col_of_va[k] != usize::MAX {
                    jac[(rp, col_of_va[k])] += d_theta.re;
                }
                if col_of_vm[k] != usize::MAX {
                    jac[(rp, col_of_vm[k])] += d_vm.re;
                }
            }
            if rq != usize::MAX {
                if col_of_va[k] != usize::MAX {
                    jac[(rq, col_of_va[k])] += d_theta.im;
                }
                if col_of_vm[k] != usize::MAX {
                    jac[(rq, col_of_vm[k])] += d_vm.im;
                }
            }
        }
    }
    jac
}
