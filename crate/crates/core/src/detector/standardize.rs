//! Per-feature input standardization.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Elementwise shift/scale applied to detector inputs.
///
/// For the graph detector a feature is one (bus, channel) pair, so this is
/// per-node-per-channel standardization. Features that are constant in the
/// fitting data (zero-injection buses, for example) get unit scale: they
/// map to zero on honest data while tampering still shows up at its raw
/// magnitude instead of being blown up by a near-zero divisor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

const MIN_SCALE: f64 = 1e-12;

impl Standardizer {
    /// Pass-through transform of the given width.
    pub fn identity(len: usize) -> Self {
        Standardizer { mean: vec![0.0; len], scale: vec![1.0; len] }
    }

    /// Fits mean and population standard deviation per feature.
    pub fn fit(samples: &[Vec<f64>]) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::Invalid("cannot fit a standardizer on no samples".into()))?;
        let len = first.len();
        let n = samples.len() as f64;
        let mut mean = vec![0.0; len];
        for s in samples {
            assert_eq!(s.len(), len, "ragged sample batch");
            for (m, &v) in mean.iter_mut().zip(s) {
                *m += v;
            }
        }
        for m in mean.iter_mut() {
            *m /= n;
        }
        let mut var = vec![0.0; len];
        for s in samples {
            for (j, &v) in s.iter().enumerate() {
                var[j] += (v - mean[j]) * (v - mean[j]);
            }
        }
        let scale = var
            .iter()
            .map(|&v| {
                let sd = (v / n).sqrt();
                if sd < MIN_SCALE {
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        Ok(Standardizer { mean, scale })
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.mean.len(), "standardizer width mismatch");
        x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect()
    }

    /// Fits on `samples` and returns them standardized (the literal
    /// per-split reading of the training recipe).
    pub fn fit_apply(samples: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let s = Standardizer::fit(samples)?;
        Ok(samples.iter().map(|x| s.apply(x)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardized_features_have_zero_mean_unit_std() {
        let samples = vec![
            vec![1.0, 10.0, 5.0],
            vec![2.0, 20.0, 5.0],
            vec![3.0, 30.0, 5.0],
            vec![4.0, 40.0, 5.0],
        ];
        let s = Standardizer::fit(&samples).unwrap();
        let z: Vec<Vec<f64>> = samples.iter().map(|x| s.apply(x)).collect();
        for j in 0..2 {
            let mean: f64 = z.iter().map(|r| r[j]).sum::<f64>() / 4.0;
            let var: f64 = z.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_feature_maps_to_zero_with_unit_scale() {
        let samples = vec![vec![5.0], vec![5.0], vec![5.0]];
        let s = Standardizer::fit(&samples).unwrap();
        assert_eq!(s.scale[0], 1.0);
        assert_eq!(s.apply(&[5.0])[0], 0.0);
        // A tampered value keeps its raw deviation.
        assert!((s.apply(&[5.3])[0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn empty_fit_is_an_error() {
        assert!(Standardizer::fit(&[]).is_err());
    }
}
