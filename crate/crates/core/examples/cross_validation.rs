//! Five-fold stratified cross-validation of head training on the synthetic
//! two-cluster data; folds train in parallel.
//!
//! cargo run --release --example cross_validation -- [max_steps]

use voiceguard::dataset::TwoGaussians;
use voiceguard::train::{cv_table, run_cross_validation, TrainConfig};

fn main() -> voiceguard::Result<()> {
    let max_steps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let ds = TwoGaussians::new(512, 0.1, 1.0, 11).sample(700, 400, 12);
    let cfg = TrainConfig { max_steps, warmup_steps: 200.min(max_steps / 2), seed: 1, ..TrainConfig::default() };
    let r = run_cross_validation(&ds, 5, &cfg)?;
    for f in &r.folds {
        let cm = &f.metrics.confusion;
        println!(
            "fold {} seed {}: F1 {:.4}, best step {}, tn {} fp {} fn {} tp {}",
            f.fold, f.seed, f.metrics.f1, f.best_step, cm.tn, cm.fp, cm.fn_, cm.tp
        );
    }
    print!("{}", cv_table(&r));
    Ok(())
}
