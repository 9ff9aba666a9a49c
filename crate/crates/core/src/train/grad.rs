use crate::error::{Error, Result};
use crate::head::{dropout_mask, gelu, gelu_grad, hidden_preactivation, output_logits, softmax, HeadParams};
use crate::rng::SplitMix64;
use crate::scalar::{axpy, Scalar};

use super::loss::cross_entropy_term;

/// Gradients share the parameter layout.
pub type HeadGrads<T> = HeadParams<T>;

/// Sums `w_y * dCE/dtheta` and `w_y` across samples so micro-batches can be
/// combined before the weighted-mean normalisation.
#[derive(Debug, Clone)]
pub struct GradAccumulator<T> {
    grads: HeadGrads<T>,
    weighted_loss: T,
    weight_sum: T,
    weights: [T; 2],
}

impl<T: Scalar> GradAccumulator<T> {
    pub fn new(params: &HeadParams<T>, class_weights: (f64, f64)) -> Self {
        Self {
            grads: HeadParams::zeros(params.input_dim, params.hidden_dim),
            weighted_loss: T::zero(),
            weight_sum: T::zero(),
            weights: [T::of(class_weights.0), T::of(class_weights.1)],
        }
    }

    /// One sample's contribution; `mask` is the inverted-dropout scale per
    /// hidden unit, `None` for no dropout.
    pub fn add(&mut self, h: &[T], label: u8, params: &HeadParams<T>, mask: Option<&[T]>) {
        let pre = hidden_preactivation(h, params);
        let mut act: Vec<T> = pre.iter().map(|&a| gelu(a)).collect();
        if let Some(m) = mask {
            act.iter_mut().zip(m).for_each(|(a, &k)| *a = *a * k);
        }
        let logits = output_logits(&act, params);
        let w = self.weights[label as usize];
        self.weighted_loss = self.weighted_loss + w * cross_entropy_term(logits, label);
        self.weight_sum = self.weight_sum + w;

        // dL/dz = w (softmax - onehot), before normalisation by sum of weights.
        let p = softmax(logits);
        let mut dz = [p[0] * w, p[1] * w];
        dz[label as usize] = dz[label as usize] - w;

        let hd = params.hidden_dim;
        for (c, &d) in dz.iter().enumerate() {
            axpy(d, &act, &mut self.grads.w2[c * hd..(c + 1) * hd]);
            self.grads.b2[c] = self.grads.b2[c] + d;
        }
        for j in 0..hd {
            let mut da = dz[0] * params.w2[j] + dz[1] * params.w2[hd + j];
            if let Some(m) = mask {
                da = da * m[j];
            }
            da = da * gelu_grad(pre[j]);
            if da != T::zero() {
                let row = &mut self.grads.w1[j * params.input_dim..(j + 1) * params.input_dim];
                axpy(da, h, row);
                self.grads.b1[j] = self.grads.b1[j] + da;
            }
        }
    }

    pub fn weight_sum(&self) -> T {
        self.weight_sum
    }

    /// Normalised `(loss, gradients)` of the weighted-mean cross-entropy.
    pub fn finish(mut self) -> (T, HeadGrads<T>) {
        let inv = T::one() / self.weight_sum;
        for t in self.grads.tensors_mut() {
            t.iter_mut().for_each(|g| *g = *g * inv);
        }
        (self.weighted_loss * inv, self.grads)
    }
}

fn check_batch<T: Scalar>(hs: &[&[T]], labels: &[u8], params: &HeadParams<T>) -> Result<()> {
    if hs.is_empty() {
        return Err(Error::Empty);
    }
    if hs.len() != labels.len() {
        return Err(Error::LengthMismatch(hs.len(), labels.len()));
    }
    if hs.iter().any(|h| h.len() != params.input_dim) {
        return Err(Error::ShapeMismatch {
            expected: format!("{}-vectors", params.input_dim),
            actual: "mismatched embedding length".into(),
        });
    }
    Ok(())
}

/// Loss and analytic gradients for a batch with explicit dropout masks.
pub fn head_backward_with_masks<T: Scalar>(
    hs: &[&[T]],
    labels: &[u8],
    params: &HeadParams<T>,
    class_weights: (f64, f64),
    masks: Option<&[Vec<T>]>,
) -> Result<(T, HeadGrads<T>)> {
    check_batch(hs, labels, params)?;
    let mut acc = GradAccumulator::new(params, class_weights);
    for (i, (&h, &y)) in hs.iter().zip(labels).enumerate() {
        acc.add(h, y, params, masks.map(|m| m[i].as_slice()));
    }
    Ok(acc.finish())
}

/// Loss and analytic gradients; when `dropout` is given, one mask per sample is
/// drawn from the stream in batch order.
pub fn head_backward<T: Scalar>(
    hs: &[&[T]],
    labels: &[u8],
    params: &HeadParams<T>,
    class_weights: (f64, f64),
    dropout: Option<(&mut SplitMix64, f64)>,
) -> Result<(T, HeadGrads<T>)> {
    let masks: Option<Vec<Vec<T>>> =
        dropout.map(|(rng, p)| hs.iter().map(|_| dropout_mask(rng, params.hidden_dim, p)).collect());
    head_backward_with_masks(hs, labels, params, class_weights, masks.as_deref())
}

/// Weighted-mean loss for a batch under fixed masks (inference path when
/// `masks` is `None`).
pub fn batch_loss<T: Scalar>(
    hs: &[&[T]],
    labels: &[u8],
    params: &HeadParams<T>,
    class_weights: (f64, f64),
) -> T {
    let w = [T::of(class_weights.0), T::of(class_weights.1)];
    let (mut num, mut den) = (T::zero(), T::zero());
    for (&h, &y) in hs.iter().zip(labels) {
        let act: Vec<T> = hidden_preactivation(h, params).into_iter().map(gelu).collect();
        let z = output_logits(&act, params);
        num = num + w[y as usize] * cross_entropy_term(z, y);
        den = den + w[y as usize];
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn b2_gradient_closed_form() {
        // Single sample: db2 = softmax - onehot (weight cancels in normalisation).
        let params = HeadParams::<f64>::init(6, 4, 3);
        let h = [0.2, -0.1, 0.5, 0.0, 0.3, -0.4];
        let (_, g) = head_backward_with_masks(&[&h], &[1], &params, (0.732, 1.577), None).unwrap();
        let act: Vec<f64> = hidden_preactivation(&h, &params).into_iter().map(gelu).collect();
        let p = softmax(output_logits(&act, &params));
        assert!((g.b2[0] - p[0]).abs() < 1e-14);
        assert!((g.b2[1] - (p[1] - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn duplicated_batch_has_same_gradient() {
        let params = HeadParams::<f64>::init(6, 4, 8);
        let h = [0.1, 0.2, -0.3, 0.4, -0.5, 0.6];
        let (l1, g1) = head_backward_with_masks(&[&h], &[0], &params, (1.3, 0.7), None).unwrap();
        let (l2, g2) = head_backward_with_masks(&[&h, &h, &h], &[0, 0, 0], &params, (1.3, 0.7), None).unwrap();
        assert!((l1 - l2).abs() < 1e-15);
        for (a, b) in g1.tensors().iter().zip(g2.tensors()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn loss_matches_batch_loss() {
        let params = HeadParams::<f64>::init(5, 3, 1);
        let a = [0.1, 0.2, 0.3, 0.4, 0.5];
        let b = [-0.5, 0.0, 0.5, 1.0, -1.0];
        let (loss, _) = head_backward_with_masks(&[&a, &b], &[0, 1], &params, (0.8, 1.4), None).unwrap();
        assert!((loss - batch_loss(&[&a, &b], &[0, 1], &params, (0.8, 1.4))).abs() < 1e-15);
    }

    #[test]
    fn batch_errors() {
        let params = HeadParams::<f32>::zeros(3, 2);
        assert!(head_backward_with_masks::<f32>(&[], &[], &params, (1.0, 1.0), None).is_err());
        let h = [0.0f32; 2];
        assert!(head_backward_with_masks(&[&h[..]], &[0], &params, (1.0, 1.0), None).is_err());
    }
}
