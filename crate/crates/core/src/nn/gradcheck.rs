//! Central finite-difference gradient checking.

/// Outcome of a gradient check.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Largest per-parameter relative error, with the mixed denominator
    /// `max(1, |fd| + |analytic|)` so near-zero gradients are judged on
    /// absolute error.
    pub max_rel_error: f64,
    /// Index of the worst parameter.
    pub worst_index: usize,
    /// Finite-difference and analytic values at the worst parameter.
    pub worst_pair: (f64, f64),
    pub n_params: usize,
    pub tolerance: f64,
    pub passed: bool,
}

impl std::fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} (max rel err {:.3e} at parameter {} of {}: fd {:.6e} vs analytic {:.6e}, tol {:.1e})",
            if self.passed { "pass" } else { "FAIL" },
            self.max_rel_error,
            self.worst_index,
            self.n_params,
            self.worst_pair.0,
            self.worst_pair.1,
            self.tolerance
        )
    }
}

/// Compares `analytic` against central differences of `loss` at `params`.
///
/// `loss` must be deterministic: it is evaluated twice per parameter at
/// `±step` perturbations. The report carries the maximum relative error and
/// whether it stayed within `tolerance`.
pub fn finite_difference_check<F>(
    mut loss: F,
    params: &[f64],
    analytic: &[f64],
    step: f64,
    tolerance: f64,
) -> GradCheckReport
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(params.len(), analytic.len(), "parameter/gradient length mismatch");
    assert!(step > 0.0, "step must be positive");
    let mut work = params.to_vec();
    let mut max_rel_error: f64 = 0.0;
    let mut worst_index = 0;
    let mut worst_pair = (0.0, 0.0);
    for i in 0..params.len() {
        let orig = work[i];
        work[i] = orig + step;
        let plus = loss(&work);
        work[i] = orig - step;
        let minus = loss(&work);
        work[i] = orig;
        let fd = (plus - minus) / (2.0 * step);
        let an = analytic[i];
        let rel = (fd - an).abs() / 1.0f64.max(fd.abs() + an.abs());
        if rel > max_rel_error {
            max_rel_error = rel;
            worst_index = i;
            worst_pair = (fd, an);
        }
    }
    GradCheckReport {
        max_rel_error,
        worst_index,
        worst_pair,
        n_params: params.len(),
        tolerance,
        passed: max_rel_error <= tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{binary_cross_entropy, sigmoid, DenseParams};
    use rand::Rng;

    #[test]
    fn quadratic_loss_has_exact_central_differences() {
        // Central differences are exact for quadratics, so the error is
        // rounding-level regardless of step.
        let params = [0.7, -1.3, 0.0, 4.2];
        let grad = params; // d/dp of 0.5 * sum p^2
        let report = finite_difference_check(
            |p| 0.5 * p.iter().map(|v| v * v).sum::<f64>(),
            &params,
            &grad,
            1e-4,
            1e-9,
        );
        assert!(report.passed, "{report}");
        assert!(report.max_rel_error < 1e-10);
    }

    #[test]
    fn dense_sigmoid_bce_passes_at_1e_minus_5() {
        let mut rng = crate::seeding::stream(7, "gradcheck", 0);
        let layer = DenseParams::glorot(3, 1, &mut rng);
        let batch: Vec<Vec<f64>> =
            (0..4).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let labels: Vec<f64> = (0..4).map(|_| f64::from(rng.random_range(0..2) as i32)).collect();

        let flat: Vec<f64> =
            layer.weights.iter().chain(layer.bias.iter()).copied().collect();
        let eval = |p: &[f64]| -> f64 {
            let layer = DenseParams {
                c_in: 3,
                c_out: 1,
                weights: p[..3].to_vec(),
                bias: p[3..].to_vec(),
            };
            let preds: Vec<f64> = batch.iter().map(|x| sigmoid(layer.forward(x)[0])).collect();
            binary_cross_entropy(&labels, &preds)
        };

        // Analytic gradient of mean BCE over the batch.
        let mut grads = DenseParams::zeros(3, 1);
        let preds: Vec<f64> = batch.iter().map(|x| sigmoid(layer.forward(x)[0])).collect();
        let (_, dp) = crate::nn::binary_cross_entropy_with_grad(&labels, &preds);
        for (s, x) in batch.iter().enumerate() {
            let d_pre = dp[s] * preds[s] * (1.0 - preds[s]);
            layer.backward(x, &[d_pre], &mut grads);
        }
        let flat_grad: Vec<f64> =
            grads.weights.iter().chain(grads.bias.iter()).copied().collect();

        let report = finite_difference_check(eval, &flat, &flat_grad, 1e-5, 1e-5);
        assert!(report.passed, "{report}");
    }

    #[test]
    fn report_flags_a_wrong_gradient() {
        let params = [1.0, 2.0];
        let wrong = [1.0, 0.0]; // second entry should be 2.0
        let report = finite_difference_check(
            |p| 0.5 * p.iter().map(|v| v * v).sum::<f64>(),
            &params,
            &wrong,
            1e-4,
            1e-6,
        );
        assert!(!report.passed);
        assert_eq!(report.worst_index, 1);
    }
}
