use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Inverse-frequency weights `N / (2 * N_c)` for (safe, malicious).
pub fn class_weights(n_safe: usize, n_malicious: usize) -> Result<(f64, f64)> {
    if n_safe == 0 {
        return Err(Error::EmptyClass("safe"));
    }
    if n_malicious == 0 {
        return Err(Error::EmptyClass("malicious"));
    }
    let total = (n_safe + n_malicious) as f64;
    Ok((total / (2.0 * n_safe as f64), total / (2.0 * n_malicious as f64)))
}

/// `-log softmax(logits)[label]` via log-sum-exp.
pub fn cross_entropy_term<T: Scalar>(logits: [T; 2], label: u8) -> T {
    let m = logits[0].max(logits[1]);
    let lse = m + ((logits[0] - m).exp() + (logits[1] - m).exp()).ln();
    lse - logits[label as usize]
}

/// Weighted mean: `sum w_y * CE / sum w_y`.
pub fn weighted_cross_entropy<T: Scalar>(logits: &[[T; 2]], labels: &[u8], weights: (f64, f64)) -> Result<T> {
    if logits.is_empty() {
        return Err(Error::Empty);
    }
    if logits.len() != labels.len() {
        return Err(Error::LengthMismatch(logits.len(), labels.len()));
    }
    let w = [T::of(weights.0), T::of(weights.1)];
    let (mut num, mut den) = (T::zero(), T::zero());
    for (&z, &y) in logits.iter().zip(labels) {
        let wy = w[y as usize];
        num = num + wy * cross_entropy_term(z, y);
        den = den + wy;
    }
    Ok(num / den)
}
