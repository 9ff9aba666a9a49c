//! Metrics at the deployment threshold from a known confusion matrix, then a
//! full threshold sweep and F1-optimal threshold for a freshly trained head on
//! deliberately overlapping synthetic clusters.
//!
//! cargo run --release --example threshold_sweep

use voiceguard::dataset::TwoGaussians;
use voiceguard::eval::{
    default_grid, evaluate, metrics_from_cm, metrics_table, select_threshold, stratified_split, sweep_table,
    threshold_sweep, ConfusionMatrix,
};
use voiceguard::train::{predict_scores, train_head, TrainConfig};

fn main() -> voiceguard::Result<()> {
    println!("metrics for tn=646 fp=1 fn=7 tp=293:");
    print!("{}", metrics_table(&metrics_from_cm(&ConfusionMatrix::new(646, 1, 7, 293))));

    // Cluster centres 4.4 sigma apart, so some samples overlap.
    let ds = TwoGaussians::new(512, 0.45, 2.0, 4).sample(1400, 700, 5);
    let s = stratified_split(&ds.labels, (0.7, 0.15, 0.15), 6)?;
    let (train, val, test) = (ds.subset(&s.train), ds.subset(&s.val), ds.subset(&s.test));
    let cfg = TrainConfig { max_steps: 1500, seed: 2, ..TrainConfig::default() };
    let head = train_head(&train, &val, &cfg)?.params;

    let val_scores = predict_scores(&head, &val);
    let grid = default_grid();
    let tau = select_threshold(&val_scores, &val.labels, &grid)?;
    println!("\nvalidation sweep:");
    print!("{}", sweep_table(&threshold_sweep(&val_scores, &val.labels, &grid)?));
    println!("selected threshold {tau:.2}\n\ntest set at the selected threshold:");
    print!("{}", metrics_table(&evaluate(&predict_scores(&head, &test), &test.labels, tau)?));
    Ok(())
}
