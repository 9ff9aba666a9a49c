use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{confusion_matrix, metrics_from_cm, ConfusionMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub fnr: f64,
    pub fpr: f64,
    pub confusion: ConfusionMatrix,
}

/// 0.05, 0.10, ..., 0.95. Each value is `i / 20`, the double nearest the
/// decimal, so a score written as `0.3` compares equal to the grid's 0.3.
pub fn default_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 / 20.0).collect()
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Empty);
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::OutOfRange("threshold grid must be strictly ascending".into()));
    }
    Ok(())
}

pub fn threshold_sweep(scores: &[f64], labels: &[u8], grid: &[f64]) -> Result<Vec<SweepRow>> {
    check_grid(grid)?;
    grid.iter()
        .map(|&tau| {
            let cm = confusion_matrix(scores, labels, tau)?;
            let m = metrics_from_cm(&cm);
            Ok(SweepRow {
                tau,
                f1: m.f1,
                precision: m.precision,
                recall: m.recall,
                fnr: m.fnr,
                fpr: m.fpr,
                confusion: cm,
            })
        })
        .collect()
}

fn cmp_fraction(a: (u64, u64), b: (u64, u64)) -> Ordering {
    (a.0 as u128 * b.1 as u128).cmp(&(b.0 as u128 * a.1 as u128))
}

/// Grid threshold with the highest F1; ties go to the lowest threshold, which
/// flags more audio. F1 values are compared as exact fractions.
pub fn select_threshold(scores: &[f64], labels: &[u8], grid: &[f64]) -> Result<f64> {
    let rows = threshold_sweep(scores, labels, grid)?;
    if !labels.contains(&1) {
        return Err(Error::SingleClass);
    }
    let mut best = &rows[0];
    for row in &rows[1..] {
        if cmp_fraction(row.confusion.f1_fraction(), best.confusion.f1_fraction()) == Ordering::Greater {
            best = row;
        }
    }
    Ok(best.tau)
}
