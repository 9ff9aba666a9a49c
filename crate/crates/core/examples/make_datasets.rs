//! Write synthetic train/validation embedding datasets (VSED1) for the CLI.
//!
//! cargo run --example make_datasets -- <out_dir> [per_class]
//! voiceguard train-head --train out/train.vsed --val out/val.vsed --out head.vshp

use std::path::PathBuf;

use voiceguard::dataset::TwoGaussians;

fn main() -> voiceguard::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "synthetic".into()));
    let per_class: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(1000);
    std::fs::create_dir_all(&dir)?;
    let g = TwoGaussians::new(512, 0.1, 1.0, 7);
    for (name, n, seed) in [("train", per_class * 4 / 5, 1), ("val", per_class / 5, 2)] {
        let path = dir.join(format!("{name}.vsed"));
        g.sample(n, n, seed).save(&path)?;
        println!("{}: {} records", path.display(), 2 * n);
    }
    Ok(())
}
