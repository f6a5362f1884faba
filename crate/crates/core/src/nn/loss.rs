//! Binary cross-entropy over batches of scalar predictions.

/// Predictions are clipped to `[PRED_CLIP, 1 - PRED_CLIP]` before the
/// logarithms so the loss stays finite at saturated outputs.
pub const PRED_CLIP: f64 = 1e-7;

fn clip(p: f64) -> f64 {
    p.clamp(PRED_CLIP, 1.0 - PRED_CLIP)
}

/// Mean of `-[y ln p + (1 - y) ln(1 - p)]` over the batch, with `p` clipped.
///
/// Always ≥ 0; equals ~`PRED_CLIP` (not exactly zero) at clipped perfect
/// predictions.
pub fn binary_cross_entropy(y_true: &[f64], y_pred: &[f64]) -> f64 {
    assert_eq!(y_true.len(), y_pred.len(), "label/prediction length mismatch");
    assert!(!y_true.is_empty(), "empty batch");
    let sum: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(&y, &p)| {
            let p = clip(p);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    sum / y_true.len() as f64
}

/// Loss together with ∂loss/∂prediction for every batch element.
///
/// The gradient is that of the *clipped* composite: where a raw prediction
/// falls outside the clip interval the loss is locally constant in it, so
/// the gradient is exactly zero there. This keeps analytic gradients in
/// agreement with finite differences everywhere and makes saturated
/// correct predictions a true fixed point.
pub fn binary_cross_entropy_with_grad(y_true: &[f64], y_pred: &[f64]) -> (f64, Vec<f64>) {
    let loss = binary_cross_entropy(y_true, y_pred);
    let inv_n = 1.0 / y_true.len() as f64;
    let grad = y_true
        .iter()
        .zip(y_pred)
        .map(|(&y, &p)| {
            if p <= PRED_CLIP || p >= 1.0 - PRED_CLIP {
                0.0
            } else {
                (-y / p + (1.0 - y) / (1.0 - p)) * inv_n
            }
        })
        .collect();
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction_costs_only_the_clip() {
        let loss = binary_cross_entropy(&[1.0], &[1.0]);
        assert!(loss > 0.0);
        assert!(loss < 1.1e-7, "post-clip loss ~ -ln(1 - 1e-7): {loss}");
    }

    #[test]
    fn coin_flip_costs_ln_two() {
        let loss = binary_cross_entropy(&[1.0], &[0.5]);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn two_sample_hand_batch() {
        // Both terms are -ln(0.9); the mean is 0.105360515657826...
        let loss = binary_cross_entropy(&[1.0, 0.0], &[0.9, 0.1]);
        assert!((loss - 0.105_360_515_657_826_3).abs() < 1e-12);
    }

    #[test]
    fn loss_is_nonnegative_everywhere() {
        let mut rng = crate::seeding::stream(3, "bce-prop", 0);
        use rand::Rng;
        for _ in 0..200 {
            let y = if rng.random_range(0.0..1.0) < 0.5 { 0.0 } else { 1.0 };
            let p: f64 = rng.random_range(-0.2..1.2);
            assert!(binary_cross_entropy(&[y], &[p]) >= 0.0);
        }
    }

    #[test]
    fn gradient_matches_finite_differences_and_vanishes_when_clipped() {
        let y = [1.0, 0.0, 1.0, 0.0];
        let p = [0.3, 0.7, 1.0 - 1e-9, 1e-9];
        let (_, grad) = binary_cross_entropy_with_grad(&y, &p);
        assert_eq!(grad[2], 0.0, "clipped high");
        assert_eq!(grad[3], 0.0, "clipped low");
        let h = 1e-7;
        for i in 0..2 {
            let mut pp = p;
            pp[i] += h;
            let mut pm = p;
            pm[i] -= h;
            let fd = (binary_cross_entropy(&y, &pp) - binary_cross_entropy(&y, &pm)) / (2.0 * h);
            assert!((fd - grad[i]).abs() < 1e-6, "element {i}: {fd} vs {}", grad[i]);
        }
    }
}
