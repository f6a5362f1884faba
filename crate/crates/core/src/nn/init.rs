//! Weight initialization.

use rand::Rng;

/// Fills `out` with draws from U(−a, a), a = √(6/(fan_in + fan_out)).
///
/// Scaled-uniform (Glorot) initialization keeps forward activations at
/// roughly unit variance regardless of layer width; the choice is recorded
/// in every checkpoint manifest for reproducibility.
pub fn glorot_uniform_fill<R: Rng>(rng: &mut R, fan_in: usize, fan_out: usize, out: &mut [f64]) {
    assert!(fan_in + fan_out > 0, "degenerate fan sizes");
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in out.iter_mut() {
        *v = rng.random_range(-limit..limit);
    }
}
