//! Train the standard 512-256-2 head on two separable Gaussian clusters and
//! print the validation curve.
//!
//! cargo run --release --example train_synthetic -- [seed]

use std::time::Instant;

use voiceguard::dataset::TwoGaussians;
use voiceguard::eval::stratified_split;
use voiceguard::train::{train_head, TrainConfig};

fn main() -> voiceguard::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let ds = TwoGaussians::new(512, 0.1, 1.0, seed).sample(1000, 1000, seed + 1);
    let split = stratified_split(&ds.labels, (0.8, 0.2, 0.0), seed)?;
    let (train, val) = (ds.subset(&split.train), ds.subset(&split.val));

    let cfg = TrainConfig { seed, ..TrainConfig::default() };
    let t0 = Instant::now();
    let out = train_head(&train, &val, &cfg)?;
    println!("{:>6} {:>10} {:>10} {:>10} {:>8}", "step", "lr", "train", "val", "val F1");
    for p in &out.history.points {
        println!("{:>6} {:>10.2e} {:>10.4} {:>10.4} {:>8.4}", p.step, p.lr, p.train_loss, p.val_loss, p.val_f1);
    }
    println!(
        "best step {} with validation F1 {:.4} ({} parameters, {:.1} s)",
        out.history.best_step,
        out.history.best_val_f1,
        out.params.param_count(),
        t0.elapsed().as_secs_f64()
    );
    Ok(())
}
