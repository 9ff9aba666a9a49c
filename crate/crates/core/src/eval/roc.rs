use super::check_inputs;
use crate::error::{Error, Result};

/// Area under the ROC curve as the Mann-Whitney probability
/// `P(s+ > s-) + P(s+ = s-) / 2`, from average ranks.
///
/// Ranks are kept doubled so every intermediate is an integer and the result
/// is exact up to the final division.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_inputs(scores, labels)?;
    let n_pos = labels.iter().filter(|&&l| l == 1).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut pos_rank_sum_x2: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j share the average (i+1+j)/2.
        let avg_rank_x2 = (i + 1 + j) as u64;
        let positives = order[i..j].iter().filter(|&&k| labels[k] == 1).count() as u64;
        pos_rank_sum_x2 += positives * avg_rank_x2;
        i = j;
    }
    let u_x2 = pos_rank_sum_x2 - n_pos * (n_pos + 1);
    Ok(u_x2 as f64 / (2 * n_pos * n_neg) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_is_one() {
        assert_eq!(roc_auc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.9, 0.8, 0.2, 0.1], &[0, 0, 1, 1]).unwrap(), 0.0);
    }

    #[test]
    fn three_of_four_pairs() {
        assert_eq!(roc_auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap(), 0.75);
    }

    #[test]
    fn all_tied_is_half() {
        assert_eq!(roc_auc(&[0.3; 7], &[0, 1, 0, 1, 1, 0, 0]).unwrap(), 0.5);
    }

    #[test]
    fn single_class() {
        assert!(matches!(roc_auc(&[0.1, 0.2], &[1, 1]), Err(Error::SingleClass)));
    }
}
