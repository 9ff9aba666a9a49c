//! Stratified 70/15/15 split of a 4310/2000 corpus and 5-fold partition of
//! the 5363-sample train+validation pool.
//!
//! cargo run --example stratified_split -- [seed]

use voiceguard::eval::{stratified_kfold, stratified_split};

fn composition(idx: &[usize], labels: &[u8]) -> (usize, usize, usize) {
    let mal = idx.iter().filter(|&&i| labels[i] == 1).count();
    (idx.len(), idx.len() - mal, mal)
}

fn main() -> voiceguard::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let labels: Vec<u8> = (0..6310).map(|i| u8::from(i >= 4310)).collect();
    let s = stratified_split(&labels, (0.70, 0.15, 0.15), seed)?;
    println!("{:<6} {:>6} {:>6} {:>10}", "split", "total", "safe", "malicious");
    for (name, idx) in [("train", &s.train), ("val", &s.val), ("test", &s.test)] {
        let (t, safe, mal) = composition(idx, &labels);
        println!("{name:<6} {t:>6} {safe:>6} {mal:>10}");
    }

    let pool: Vec<usize> = s.train.iter().chain(&s.val).copied().collect();
    let pool_labels: Vec<u8> = pool.iter().map(|&i| labels[i]).collect();
    println!("\n5-fold partition of {} samples:", pool.len());
    for (k, fold) in stratified_kfold(&pool_labels, 5, seed)?.iter().enumerate() {
        let (t, safe, mal) = composition(fold, &pool_labels);
        println!("fold {k}: {t} ({safe} safe, {mal} malicious)");
    }
    Ok(())
}
