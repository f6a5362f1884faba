//! Bus admittance matrix assembly.
//!
//! Each branch is a standard pi model with an off-nominal, possibly
//! phase-shifting transformer on the from side. With series admittance
//! `y = 1/(r + jx)`, half charging `y_sh = jb/2`, and complex tap
//! `t = tap * exp(j*shift)`:
//!
//! ```text
//! Yff = (y + y_sh) / (tap^2)      Yft = -y / conj(t)
//! Ytf = -y / t                    Ytt =  y + y_sh
//! ```
//!
//! Bus shunts `gs + j*bs` add to the diagonal.

use num_complex::Complex64;

use crate::grid::case::GridCase;
use crate::sparse::Csr;

/// The four admittance blocks of one branch, used directly by the branch
/// flow equations: `S_from = V_f * conj(Yff*V_f + Yft*V_t)`.
#[derive(Debug, Clone, Copy)]
pub struct BranchAdmittance {
    pub yff: Complex64,
    pub yft: Complex64,
    pub ytf: Complex64,
    pub ytt: Complex64,
}

pub fn branch_admittance(r: f64, x: f64, b: f64, tap: f64, shift: f64) -> BranchAdmittance {
    let y = Complex64::new(1.0, 0.0) / Complex64::new(r, x);
    let y_sh = Complex64::new(0.0, b / 2.0);
    let t = Complex64::from_polar(tap, shift);
    BranchAdmittance {
        yff: (y + y_sh) / (tap * tap),
        yft: -y / t.conj(),
        ytf: -y / t,
        ytt: y + y_sh,
    }
}

/// Per-branch admittance blocks in branch order.
pub fn branch_admittances(case: &GridCase) -> Vec<BranchAdmittance> {
    case.branches
        .iter()
        .map(|br| branch_admittance(br.r, br.x, br.b, br.tap, br.shift))
        .collect()
}

/// Assembles the sparse n-by-n bus admittance matrix.
pub fn build_ybus(case: &GridCase) -> Csr<Complex64> {
    let n = case.n();
    let mut triplets = Vec::with_capacity(4 * case.branches.len() + n);
    for (br, adm) in case.branches.iter().zip(branch_admittances(case)) {
        triplets.push((br.from, br.from, adm.yff));
        triplets.push((br.from, br.to, adm.yft));
        triplets.push((br.to, br.from, adm.ytf));
        triplets.push((br.to, br.to, adm.ytt));
    }
    for (i, bus) in case.buses.iter().enumerate() {
        let sh = Complex64::new(bus.gs, bus.bs);
        if sh != Complex64::ZERO {
            triplets.push((i, i, sh));
        }
    }
    Csr::from_triplets(n, n, &triplets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::case::{resolve_case, GridCase};
    use approx::assert_relative_eq;

    fn assert_complex_eq(a: Complex64, b: Complex64, tol: f64) {
        assert!((a - b).norm() <= tol, "{a} != {b}");
    }

    #[test]
    fn two_bus_reactance_only() {
        let case = GridCase::from_json(
            r#"{
            "base_mva": 100.0,
            "buses": [
                {"id": 1, "kind": "slack", "p_load": 0, "q_load": 0,
                 "p_gen": 0, "q_gen": 0, "v_set": 1.0},
                {"id": 2, "kind": "pq", "p_load": 0, "q_load": 0,
                 "p_gen": 0, "q_gen": 0, "v_set": 1.0}
            ],
            "branches": [{"from": 1, "to": 2, "r": 0.0, "x": 0.1}]
        }"#,
        )
        .unwrap();
        let y = build_ybus(&case);
        assert_complex_eq(y.get(0, 0), Complex64::new(0.0, -10.0), 1e-12);
        assert_complex_eq(y.get(0, 1), Complex64::new(0.0, 10.0), 1e-12);
        assert_complex_eq(y.get(1, 0), Complex64::new(0.0, 10.0), 1e-12);
        assert_complex_eq(y.get(1, 1), Complex64::new(0.0, -10.0), 1e-12);
    }

    #[test]
    fn tap_side_asymmetry() {
        // Hand evaluation for r=0.01, x=0.2, b=0.04, tap=1.05, no shift.
        let adm = branch_admittance(0.01, 0.2, 0.04, 1.05, 0.0);
        let y = Complex64::new(1.0, 0.0) / Complex64::new(0.01, 0.2);
        let ysh = Complex64::new(0.0, 0.02);
        assert_complex_eq(adm.yff, (y + ysh) / 1.1025, 1e-12);
        assert_complex_eq(adm.ytt, y + ysh, 1e-12);
        assert_complex_eq(adm.yft, -y / 1.05, 1e-12);
        assert_complex_eq(adm.ytf, -y / 1.05, 1e-12);
    }

    #[test]
    fn phase_shift_rotates_off_diagonals() {
        // yft/ytf = t/conj(t) = exp(2j*shift); magnitudes stay equal.
        let shift = 0.1;
        let adm = branch_admittance(0.0, 0.25, 0.0, 1.0, shift);
        let rotation = Complex64::from_polar(1.0, 2.0 * shift);
        assert_complex_eq(adm.yft, adm.ytf * rotation, 1e-12);
        assert_relative_eq!(adm.yft.norm(), adm.ytf.norm(), epsilon = 1e-12);
        assert!((adm.yft - adm.ytf).norm() > 1e-3);
        // Hand value: y = -4j, so yft = -y/conj(t) = 4j * t.
        let expected = Complex64::new(0.0, 4.0) * Complex64::from_polar(1.0, shift);
        assert_complex_eq(adm.yft, expected, 1e-12);
    }

    #[test]
    fn row_sums_vanish_without_shunts() {
        // Kirchhoff: with no charging, shunts, or taps, each row of Ybus
        // sums to zero.
        let case = GridCase::from_json(
            r#"{
            "base_mva": 100.0,
            "buses": [
                {"id": 1, "kind": "slack", "p_load": 0, "q_load": 0,
                 "p_gen": 0, "q_gen": 0, "v_set": 1.0},
                {"id": 2, "kind": "pq", "p_load": 1, "q_load": 0,
                 "p_gen": 0, "q_gen": 0, "v_set": 1.0},
                {"id": 3, "kind": "pq", "p_load": 1, "q_load": 0,
                 "p_gen": 0, "q_gen": 0, "v_set": 1.0}
            ],
            "branches": [
                {"from": 1, "to": 2, "r": 0.02, "x": 0.1},
                {"from": 2, "to": 3, "r": 0.03, "x": 0.2},
                {"from": 1, "to": 3, "r": 0.01, "x": 0.15}
            ]
        }"#,
        )
        .unwrap();
        let y = build_ybus(&case);
        for i in 0..3 {
            let sum: Complex64 = y.row(i).map(|(_, v)| v).sum();
            assert!(sum.norm() < 1e-12, "row {i} sums to {sum}");
        }
    }

    #[test]
    fn ieee14_structure() {
        let case = resolve_case("ieee14").unwrap();
        let y = build_ybus(&case);
        // 14 diagonal entries plus two off-diagonal entries per branch; the
        // 14-bus system has no parallel branches.
        assert_eq!(y.nnz(), 14 + 2 * 20);
        for (i, j, v) in y.iter() {
            if i != j {
                assert_complex_eq(v, y.get(j, i), 1e-12);
            }
            assert!(v.norm() > 0.0);
        }
    }

    #[test]
    fn ieee300_assembles() {
        let case = resolve_case("ieee300").unwrap();
        let y = build_ybus(&case);
        assert_eq!(y.n_rows(), 300);
        assert!(y.nnz() >= 300 + 2 * 411 - 20, "parallel branches merge entries");
    }
}
