//! Brute-force evaluation oracles.

use voiceguard::rng::SplitMix64;

/// `P(s+ > s-) + P(s+ = s-)/2` over all positive/negative pairs, as the exact
/// ratio `(2 wins + ties) / (2 P N)`.
pub fn pairwise_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let (mut twice, mut pairs) = (0u64, 0u64);
    for (i, &sp) in scores.iter().enumerate() {
        if labels[i] != 1 {
            continue;
        }
        for (j, &sn) in scores.iter().enumerate() {
            if labels[j] != 0 {
                continue;
            }
            pairs += 1;
            if sp > sn {
                twice += 2;
            } else if sp == sn {
                twice += 1;
            }
        }
    }
    twice as f64 / (2 * pairs) as f64
}

/// `(tp, fp, fn, tn)` under the rule score >= tau.
pub fn counts(scores: &[f64], labels: &[u8], tau: f64) -> (u64, u64, u64, u64) {
    let mut c = (0, 0, 0, 0);
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= tau, y == 1) {
            (true, true) => c.0 += 1,
            (true, false) => c.1 += 1,
            (false, true) => c.2 += 1,
            (false, false) => c.3 += 1,
        }
    }
    c
}

/// Grid point with the largest F1 = 2tp / (2tp + fp + fn), compared exactly by
/// cross-multiplication; the first (lowest) tau wins ties.
pub fn exhaustive_best_tau(scores: &[f64], labels: &[u8], grid: &[f64]) -> f64 {
    let mut best: Option<(u64, u64, f64)> = None;
    for &tau in grid {
        let (tp, fp, fn_, _) = counts(scores, labels, tau);
        let (num, den) = (2 * tp, 2 * tp + fp + fn_);
        let better = match best {
            None => true,
            // num/den > bn/bd, with 0/0 treated as 0.
            Some((bn, bd, _)) => num as u128 * bd.max(1) as u128 > bn as u128 * den.max(1) as u128,
        };
        if better {
            best = Some((num, den, tau));
        }
    }
    best.unwrap().2
}

pub fn grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

/// Random scored set of size 2..=100 with both classes; scores are drawn from
/// a small lattice half the time so ties are common.
pub fn random_set(rng: &mut SplitMix64) -> (Vec<f64>, Vec<u8>) {
    let n = 2 + rng.below(99) as usize;
    let tied = rng.next_u64() & 1 == 0;
    let mut labels: Vec<u8> = (0..n).map(|_| (rng.next_u64() & 1) as u8).collect();
    labels[0] = 0;
    labels[1] = 1;
    let scores = (0..n)
        .map(|_| if tied { rng.below(11) as f64 / 10.0 } else { rng.next_f64() })
        .collect();
    (scores, labels)
}
