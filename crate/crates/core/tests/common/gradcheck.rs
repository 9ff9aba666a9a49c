//! Finite-difference gradient checking on a 512-8-2 head against the
//! longhand oracle.

use voiceguard::head::HeadParams;
use voiceguard::rng::SplitMix64;
use voiceguard::train::head_backward_with_masks;

use super::oracle::{self, Batch};

pub const IN: usize = 512;
pub const HID: usize = 8;

pub struct Instance {
    pub params: HeadParams<f64>,
    pub hs: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub masks: Option<Vec<Vec<f64>>>,
    pub weights: (f64, f64),
}

pub fn instance(seed: u64) -> Instance {
    let mut rng = SplitMix64::new(seed);
    let params = HeadParams::<f64>::init(IN, HID, seed.wrapping_mul(31) + 1);
    let n = 3 + (seed % 4) as usize;
    let hs = (0..n).map(|_| (0..IN).map(|_| rng.normal() * 0.3).collect()).collect();
    let mut labels: Vec<u8> = (0..n).map(|_| (rng.next_u64() & 1) as u8).collect();
    labels[0] = 0;
    labels[1] = 1;
    let masks = (seed % 2 == 1).then(|| {
        (0..n)
            .map(|_| (0..HID).map(|_| if rng.next_f64() < 0.1 { 0.0 } else { 1.0 / 0.9 }).collect())
            .collect()
    });
    let weights = (rng.uniform(0.5, 1.5), rng.uniform(0.5, 2.0));
    Instance { params, hs, labels, masks, weights }
}

pub fn batch(inst: &Instance) -> Batch<'_> {
    Batch { hs: &inst.hs, labels: &inst.labels, masks: inst.masks.as_deref(), weights: inst.weights }
}

pub fn numeric_grads(inst: &Instance, eps: f64) -> HeadParams<f64> {
    let mut g = HeadParams::<f64>::zeros(IN, HID);
    let mut p = inst.params.clone();
    for t in 0..4 {
        for k in 0..p.tensors()[t].len() {
            let orig = p.tensors()[t][k];
            p.tensors_mut()[t][k] = orig + eps;
            let up = oracle::loss(&p, &batch(inst));
            p.tensors_mut()[t][k] = orig - eps;
            let down = oracle::loss(&p, &batch(inst));
            p.tensors_mut()[t][k] = orig;
            g.tensors_mut()[t][k] = (up - down) / (2.0 * eps);
        }
    }
    g
}

/// Per-component relative error, with the denominator floored at a fraction
/// of the tensor's largest numeric component so exact zeros do not divide.
pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = numeric.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let floor = 1e-3 * scale + 1e-12;
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

pub fn analytic<T: voiceguard::scalar::Scalar>(inst: &Instance) -> Vec<Vec<f64>> {
    let params = inst.params.cast::<T>();
    let hs: Vec<Vec<T>> = inst.hs.iter().map(|h| h.iter().map(|&v| T::of(v)).collect()).collect();
    let refs: Vec<&[T]> = hs.iter().map(Vec::as_slice).collect();
    let masks: Option<Vec<Vec<T>>> =
        inst.masks.as_ref().map(|ms| ms.iter().map(|m| m.iter().map(|&v| T::of(v)).collect()).collect());
    let (_, g) = head_backward_with_masks(&refs, &inst.labels, &params, inst.weights, masks.as_deref()).unwrap();
    g.tensors().iter().map(|t| t.iter().map(|v| v.as_f64()).collect()).collect()
}

pub fn errors(a: &[Vec<f64>], n: &HeadParams<f64>) -> ([f64; 4], f64) {
    let per: Vec<f64> = (0..4).map(|t| max_rel_err(&a[t], n.tensors()[t])).collect();
    let flat_a: Vec<f64> = a.concat();
    let flat_n: Vec<f64> = n.tensors().concat();
    ([per[0], per[1], per[2], per[3]], max_rel_err(&flat_a, &flat_n))
}


/// Worst per-tensor relative errors `(32-bit, 64-bit)` and the worst
/// end-to-end errors over `n` seeded instances.
pub struct Summary {
    pub layer32: [f64; 4],
    pub layer64: [f64; 4],
    pub end32: f64,
    pub end64: f64,
}

pub fn check(n: u64) -> Summary {
    let mut s = Summary { layer32: [0.0; 4], layer64: [0.0; 4], end32: 0.0, end64: 0.0 };
    for seed in 0..n {
        let inst = instance(seed);
        let numeric = numeric_grads(&inst, 1e-5);
        let (l64, e64) = errors(&analytic::<f64>(&inst), &numeric);
        let (l32, e32) = errors(&analytic::<f32>(&inst), &numeric);
        for t in 0..4 {
            s.layer32[t] = s.layer32[t].max(l32[t]);
            s.layer64[t] = s.layer64[t].max(l64[t]);
        }
        s.end32 = s.end32.max(e32);
        s.end64 = s.end64.max(e64);
    }
    s
}
