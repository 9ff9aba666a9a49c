//! Longhand head maths in 64-bit, written without touching the library's
//! kernels so it can serve as an oracle.
#![allow(clippy::needless_range_loop)]

use voiceguard::head::HeadParams;

pub fn erf(x: f64) -> f64 {
    if x.abs() < 3.0 {
        // Maclaurin series.
        let (mut term, mut sum, mut k) = (x, x, 0.0);
        while term.abs() > 1e-17 {
            k += 1.0;
            term *= -x * x / k;
            sum += term / (2.0 * k + 1.0);
        }
        return sum * 2.0 / std::f64::consts::PI.sqrt();
    }
    // erfc continued fraction, evaluated bottom-up.
    let a = x.abs();
    let mut f = a;
    for k in (1..80).rev() {
        f = a + (k as f64 / 2.0) / f;
    }
    let erfc = (-a * a).exp() / std::f64::consts::PI.sqrt() / f;
    x.signum() * (1.0 - erfc)
}

pub fn gelu(z: f64) -> f64 {
    0.5 * z * (1.0 + erf(z / 2f64.sqrt()))
}

pub fn gelu_prime(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / 2f64.sqrt())) + z * (-z * z / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// A labelled batch with optional per-sample dropout scales.
pub struct Batch<'a> {
    pub hs: &'a [Vec<f64>],
    pub labels: &'a [u8],
    pub masks: Option<&'a [Vec<f64>]>,
    pub weights: (f64, f64),
}

/// Pre-activations, (masked) activations and logits for one sample.
pub fn forward(p: &HeadParams<f64>, h: &[f64], mask: Option<&[f64]>) -> (Vec<f64>, Vec<f64>, [f64; 2]) {
    let (d, k) = (p.input_dim, p.hidden_dim);
    let mut pre = vec![0.0; k];
    let mut act = vec![0.0; k];
    for j in 0..k {
        let mut z = p.b1[j];
        for i in 0..d {
            z += p.w1[j * d + i] * h[i];
        }
        pre[j] = z;
        act[j] = gelu(z) * mask.map_or(1.0, |m| m[j]);
    }
    let mut logit = [p.b2[0], p.b2[1]];
    for c in 0..2 {
        for j in 0..k {
            logit[c] += p.w2[c * k + j] * act[j];
        }
    }
    (pre, act, logit)
}

fn softmax(z: [f64; 2]) -> [f64; 2] {
    let e = [z[0].exp(), z[1].exp()];
    [e[0] / (e[0] + e[1]), e[1] / (e[0] + e[1])]
}

fn weight(b: &Batch, y: u8) -> f64 {
    if y == 1 { b.weights.1 } else { b.weights.0 }
}

/// Weighted-mean cross-entropy, `sum w_y * -ln p_y / sum w_y`.
pub fn loss(p: &HeadParams<f64>, b: &Batch) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (s, h) in b.hs.iter().enumerate() {
        let (_, _, z) = forward(p, h, b.masks.map(|m| m[s].as_slice()));
        let y = b.labels[s];
        num -= weight(b, y) * softmax(z)[y as usize].ln();
        den += weight(b, y);
    }
    num / den
}

/// Backpropagation written out per scalar.
pub fn grads(p: &HeadParams<f64>, b: &Batch) -> HeadParams<f64> {
    let (d, k) = (p.input_dim, p.hidden_dim);
    let mut g = HeadParams::<f64>::zeros(d, k);
    let den: f64 = b.labels.iter().map(|&y| weight(b, y)).sum();
    for (s, h) in b.hs.iter().enumerate() {
        let mask = b.masks.map(|m| m[s].as_slice());
        let (pre, act, z) = forward(p, h, mask);
        let y = b.labels[s] as usize;
        let sm = softmax(z);
        let w = weight(b, b.labels[s]) / den;
        for c in 0..2 {
            let dz = w * (sm[c] - if c == y { 1.0 } else { 0.0 });
            g.b2[c] += dz;
            for j in 0..k {
                g.w2[c * k + j] += dz * act[j];
            }
        }
        for j in 0..k {
            let mut da = 0.0;
            for c in 0..2 {
                da += w * (sm[c] - if c == y { 1.0 } else { 0.0 }) * p.w2[c * k + j];
            }
            let dpre = da * mask.map_or(1.0, |m| m[j]) * gelu_prime(pre[j]);
            g.b1[j] += dpre;
            for i in 0..d {
                g.w1[j * d + i] += dpre * h[i];
            }
        }
    }
    g
}

/// Textbook Adam (no weight decay) over every scalar of the head.
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step(&mut self, p: &mut HeadParams<f64>, g: &HeadParams<f64>, lr: f64) {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        self.t += 1;
        let gs: Vec<f64> = g.tensors().concat();
        let mut k = 0;
        for t in p.tensors_mut() {
            for theta in t.iter_mut() {
                self.m[k] = b1 * self.m[k] + (1.0 - b1) * gs[k];
                self.v[k] = b2 * self.v[k] + (1.0 - b2) * gs[k] * gs[k];
                let mh = self.m[k] / (1.0 - b1.powi(self.t));
                let vh = self.v[k] / (1.0 - b2.powi(self.t));
                *theta -= lr * mh / (vh.sqrt() + eps);
                k += 1;
            }
        }
    }
}
