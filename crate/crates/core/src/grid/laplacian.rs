//! Weighted graph Laplacian derived from the admittance matrix.
//!
//! The electrical graph weights each edge by coupling strength: W[i][j] is
//! the magnitude of the off-diagonal admittance entry, symmetrized as
//! (W + W')/2 with a zero diagonal. The symmetric normalized Laplacian
//! L = I - D^{-1/2} W D^{-1/2} has spectrum in [0, 2]; the Chebyshev filter
//! basis uses the rescaled form L~ = 2L/lambda_max - I with spectrum in
//! [-1, 1].

use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::sparse::Csr;

/// Off-diagonal admittance magnitudes, symmetrized, zero diagonal.
pub fn adjacency_from_ybus(ybus: &Csr<num_complex::Complex64>) -> Csr<f64> {
    let n = ybus.n_rows();
    let mut triplets = Vec::with_capacity(ybus.nnz());
    for (i, j, v) in ybus.iter() {
        if i != j {
            let w = 0.5 * v.norm();
            triplets.push((i, j, w));
            triplets.push((j, i, w));
        }
    }
    Csr::from_triplets(n, n, &triplets)
}

/// Symmetric normalized Laplacian L = I - D^{-1/2} W D^{-1/2}.
///
/// `w` must be symmetric with a zero diagonal. Fails when a vertex has zero
/// degree, which cannot happen for a validated connected case.
pub fn normalized_laplacian(w: &Csr<f64>) -> Result<Csr<f64>> {
    let n = w.n_rows();
    let mut degree = vec![0.0; n];
    for (i, _, v) in w.iter() {
        degree[i] += v;
    }
    for (i, d) in degree.iter().enumerate() {
        if *d <= 0.0 {
            return Err(Error::Invalid(format!("vertex {i} has zero degree")));
        }
    }
    let inv_sqrt: Vec<f64> = degree.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut triplets = Vec::with_capacity(w.nnz() + n);
    for i in 0..n {
        triplets.push((i, i, 1.0));
    }
    for (i, j, v) in w.iter() {
        triplets.push((i, j, -inv_sqrt[i] * v * inv_sqrt[j]));
    }
    Ok(Csr::from_triplets(n, n, &triplets))
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration: tolerance 1e-6 on successive estimates, at most 1000
/// iterations. Falls back to the spectral bound 2.0 of the normalized
/// Laplacian when the iteration fails to settle.
pub fn lambda_max(l: &Csr<f64>) -> f64 {
    let n = l.n_rows();
    // A fixed arbitrary start vector; the all-ones vector would be exactly
    // orthogonal to the dominant eigenvector on regular bipartite graphs.
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0x6c61_6d62);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut v {
        *x /= norm;
    }
    let mut lv = vec![0.0; n];
    let mut prev = 0.0;
    for _ in 0..1000 {
        l.matvec(&v, &mut lv);
        let norm = lv.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= f64::MIN_POSITIVE {
            return 2.0;
        }
        for (x, y) in v.iter_mut().zip(lv.iter()) {
            *x = y / norm;
        }
        l.matvec(&v, &mut lv);
        let est: f64 = v.iter().zip(lv.iter()).map(|(a, b)| a * b).sum();
        if (est - prev).abs() <= 1e-6 {
            return est;
        }
        prev = est;
    }
    2.0
}

/// Chebyshev-scaled Laplacian L~ = 2 L / lambda_max - I.
pub fn scaled_laplacian(l: &Csr<f64>, lambda_max: f64) -> Csr<f64> {
    let n = l.n_rows();
    let mut triplets: Vec<(usize, usize, f64)> =
        l.iter().map(|(i, j, v)| (i, j, 2.0 * v / lambda_max)).collect();
    for i in 0..n {
        triplets.push((i, i, -1.0));
    }
    Csr::from_triplets(n, n, &triplets)
}

/// Convenience bundle: graph operators of a case, built once and shared.
#[derive(Debug, Clone)]
pub struct GraphOperators {
    pub adjacency: Csr<f64>,
    pub laplacian: Csr<f64>,
    pub lambda_max: f64,
    pub scaled: Csr<f64>,
}

impl GraphOperators {
    pub fn build(case: &crate::grid::case::GridCase) -> Result<Self> {
        let ybus = crate::grid::ybus::build_ybus(case);
        let adjacency = adjacency_from_ybus(&ybus);
        let laplacian = normalized_laplacian(&adjacency)?;
        let lm = lambda_max(&laplacian);
        let scaled = scaled_laplacian(&laplacian, lm);
        Ok(GraphOperators { adjacency, laplacian, lambda_max: lm, scaled })
    }
}
