use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

fn class_indices(labels: &[u8]) -> Result<[Vec<usize>; 2]> {
    let mut by_class = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        match l {
            0 | 1 => by_class[l as usize].push(i),
            other => return Err(Error::OutOfRange(format!("label {other} is not 0 or 1"))),
        }
    }
    if by_class[0].is_empty() {
        return Err(Error::EmptyClass("safe"));
    }
    if by_class[1].is_empty() {
        return Err(Error::EmptyClass("malicious"));
    }
    Ok(by_class)
}

/// Round half up, tolerant of representation error (4310 * 0.15 lands a hair
/// either side of 646.5 depending on evaluation order).
fn round_half_up(x: f64) -> usize {
    (x + 0.5 + 1e-9).floor().max(0.0) as usize
}

/// Per-class shuffled three-way split. Validation and test counts are
/// `round_half_up(n_class * ratio)`; train takes the remainder of each class.
pub fn stratified_split(labels: &[u8], ratios: (f64, f64, f64), seed: u64) -> Result<SplitIndices> {
    let (r_train, r_val, r_test) = ratios;
    if [r_train, r_val, r_test].iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(Error::OutOfRange(format!("split ratios {ratios:?}")));
    }
    if (r_train + r_val + r_test - 1.0).abs() > 1e-9 {
        return Err(Error::OutOfRange(format!("split ratios {ratios:?} do not sum to 1")));
    }
    let mut rng = SplitMix64::new(seed);
    let mut out = SplitIndices { train: vec![], val: vec![], test: vec![] };
    for mut idx in class_indices(labels)? {
        rng.shuffle(&mut idx);
        let n = idx.len();
        let n_val = round_half_up(n as f64 * r_val).min(n);
        let n_test = round_half_up(n as f64 * r_test).min(n - n_val);
        let n_train = n - n_val - n_test;
        out.train.extend_from_slice(&idx[..n_train]);
        out.val.extend_from_slice(&idx[n_train..n_train + n_val]);
        out.test.extend_from_slice(&idx[n_train + n_val..]);
    }
    out.train.sort_unstable();
    out.val.sort_unstable();
    out.test.sort_unstable();
    Ok(out)
}

/// `k` disjoint validation folds covering every index. Within each class the
/// surplus `n_c mod k` samples are dealt round-robin, continuing where the
/// previous class stopped, so fold sizes also differ by at most one.
pub fn stratified_kfold(labels: &[u8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::TooFewSamples(format!("k = {k}, need at least 2 folds")));
    }
    let classes = class_indices(labels)?;
    for (c, idx) in classes.iter().enumerate() {
        if idx.len() < k {
            return Err(Error::TooFewSamples(format!(
                "class {c} has {} samples, fewer than {k} folds",
                idx.len()
            )));
        }
    }
    let mut rng = SplitMix64::new(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next_extra = 0;
    for mut idx in classes {
        rng.shuffle(&mut idx);
        let base = idx.len() / k;
        let extras = idx.len() % k;
        let mut sizes = vec![base; k];
        for e in 0..extras {
            sizes[(next_extra + e) % k] += 1;
        }
        next_extra = (next_extra + extras) % k;
        let mut start = 0;
        for (fold, size) in folds.iter_mut().zip(sizes) {
            fold.extend_from_slice(&idx[start..start + size]);
            start += size;
        }
    }
    for f in folds.iter_mut() {
        f.sort_unstable();
    }
    Ok(folds)
}
