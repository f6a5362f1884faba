//! Measurement function h(x) and its Jacobian.
//!
//! Injections and branch flows are evaluated through the complex power
//! identities `S_i = V_i * conj(sum_k Y_ik V_k)` and
//! `S_from = V_f * conj(Yff V_f + Yft V_t)`, which expand to the familiar
//! trigonometric forms in the bus angles. Partial derivatives follow the
//! same complex chain rule: differentiating `V_k` by its angle multiplies
//! the phasor by `j`, differentiating by its magnitude divides by it.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::grid::case::GridCase;
use crate::grid::ybus::{branch_admittances, build_ybus, BranchAdmittance};
use crate::measurement::{FlowEnd, MeasurementKind, MeasurementLayout};
use crate::sparse::Csr;
use crate::state::StateVector;

/// A case with its admittance data and a measurement layout, bundled so the
/// expensive structures are built once.
pub struct MeasurementModel<'c> {
    pub case: &'c GridCase,
    pub layout: MeasurementLayout,
    ybus: Csr<Complex64>,
    adms: Vec<BranchAdmittance>,
}

impl<'c> MeasurementModel<'c> {
    pub fn new(case: &'c GridCase, layout: MeasurementLayout) -> Self {
        MeasurementModel { case, layout, ybus: build_ybus(case), adms: branch_admittances(case) }
    }

    pub fn standard(case: &'c GridCase) -> Self {
        Self::new(case, MeasurementLayout::standard(case))
    }

    pub fn m(&self) -> usize {
        self.layout.len()
    }

    pub fn ybus(&self) -> &Csr<Complex64> {
        &self.ybus
    }

    /// Complex injection currents I = Y V.
    fn currents(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut i = vec![Complex64::ZERO; v.len()];
        self.ybus.matvec(v, &mut i);
        i
    }

    /// Branch endpoints and admittance pair seen from one end:
    /// `S_end = V_a * conj(yaa V_a + yab V_b)`.
    fn end_view(&self, branch: usize, end: FlowEnd) -> (usize, usize, Complex64, Complex64) {
        let br = &self.case.branches[branch];
        let adm = &self.adms[branch];
        match end {
            FlowEnd::From => (br.from, br.to, adm.yff, adm.yft),
            FlowEnd::To => (br.to, br.from, adm.ytt, adm.ytf),
        }
    }

    /// Evaluates every layout entry at the given state, p.u.
    pub fn h(&self, x: &StateVector) -> DVector<f64> {
        let v = x.phasors();
        let cur = self.currents(&v);
        let mut out = DVector::zeros(self.m());
        for (row, kind) in self.layout.entries().iter().enumerate() {
            out[row] = match *kind {
                MeasurementKind::PInj { bus } => (v[bus] * cur[bus].conj()).re,
                MeasurementKind::QInj { bus } => (v[bus] * cur[bus].conj()).im,
                MeasurementKind::PFlow { branch, end } => self.flow(&v, branch, end).re,
                MeasurementKind::QFlow { branch, end } => self.flow(&v, branch, end).im,
            };
        }
        out
    }

    fn flow(&self, v: &[Complex64], branch: usize, end: FlowEnd) -> Complex64 {
        let (a, b, yaa, yab) = self.end_view(branch, end);
        v[a] * (yaa * v[a] + yab * v[b]).conj()
    }

    /// Dense Jacobian over the full packing `[va; vm]`, m-by-2n.
    pub fn jacobian_full(&self, x: &StateVector) -> DMatrix<f64> {
        let n = x.n();
        let v = x.phasors();
        let cur = self.currents(&v);
        let unit: Vec<Complex64> =
            (0..n).map(|i| Complex64::from_polar(1.0, x.va[i])).collect();
        let mut jac = DMatrix::zeros(self.m(), 2 * n);
        for (row, kind) in self.layout.entries().iter().enumerate() {
            match *kind {
                MeasurementKind::PInj { bus } | MeasurementKind::QInj { bus } => {
                    let is_p = matches!(kind, MeasurementKind::PInj { .. });
                    // dS_i/dtheta_k and dS_i/dvm_k over the Ybus row of i.
                    for (k, y_ik) in self.ybus.row(bus) {
                        let t = v[bus] * (y_ik * v[k]).conj();
                        let mut d_theta = -Complex64::I * t;
                        let mut d_vm = v[bus] * (y_ik * unit[k]).conj();
                        if k == bus {
                            let s = v[bus] * cur[bus].conj();
                            d_theta += Complex64::I * s;
                            d_vm += unit[bus] * cur[bus].conj();
                        }
                        let (dt, dv) =
                            if is_p { (d_theta.re, d_vm.re) } else { (d_theta.im, d_vm.im) };
                        jac[(row, k)] += dt;
                        jac[(row, n + k)] += dv;
                    }
                }
                MeasurementKind::PFlow { branch, end } | MeasurementKind::QFlow { branch, end } => {
                    let is_p = matches!(kind, MeasurementKind::PFlow { .. });
                    let (a, b, yaa, yab) = self.end_view(branch, end);
                    let s = v[a] * (yaa * v[a] + yab * v[b]).conj();
                    let saa = v[a] * (yaa * v[a]).conj();
                    let sab = v[a] * (yab * v[b]).conj();
                    let d_theta_a = Complex64::I * (s - saa);
                    let d_theta_b = -Complex64::I * sab;
                    let d_vm_a =
                        unit[a] * (yaa * v[a] + yab * v[b]).conj() + v[a] * (yaa * unit[a]).conj();
                    let d_vm_b = v[a] * (yab * unit[b]).conj();
                    let pick = |c: Complex64| if is_p { c.re } else { c.im };
                    jac[(row, a)] += pick(d_theta_a);
                    jac[(row, b)] += pick(d_theta_b);
                    jac[(row, n + a)] += pick(d_vm_a);
                    jac[(row, n + b)] += pick(d_vm_b);
                }
            }
        }
        jac
    }

    /// Estimation Jacobian: full Jacobian without the slack angle column,
    /// columns ordered all d/dva (slack removed) then all d/dvm.
    pub fn jacobian(&self, x: &StateVector) -> DMatrix<f64> {
        let full = self.jacobian_full(x);
        let n = x.n();
        let slack = self.case.slack();
        let mut jac = DMatrix::zeros(self.m(), 2 * n - 1);
        let mut col = 0;
        for c in 0..2 * n {
            if c == slack {
                continue;
            }
            jac.set_column(col, &full.column(c));
            col += 1;
        }
        jac
    }
}
