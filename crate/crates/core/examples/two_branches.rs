//! Two separated bumps evolve as two independent branches: until the supports
//! meet, the solution is the sum of two shifted copies of the single-bump
//! solution.
//!
//! cargo run --release --example two_branches

use std::path::PathBuf;

use orthotropic::config::ExperimentConfig;
use orthotropic::solver::{run, InitialShape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/two_bump_1d.toml");
    let cfg = ExperimentConfig::load(&path)?;
    let mut two = cfg.run_config()?;
    two.snapshot_every = 1;
    let InitialShape::TwoBump { separation } = two.shape else {
        return Err("expected a two-bump config".into());
    };
    let mut one = two.clone();
    one.shape = InitialShape::BoxBump;

    let shift = ((separation / 2.0) / two.grid.spacing()[0]).round() as usize;
    let both = run(&two)?;
    let single = run(&one)?;
    println!("bump centres ±{} = ±{shift} cells", separation / 2.0);
    println!("{:>10}  {:>12}  {:>10}", "t", "max |diff|", "gap cells");
    for (a, b) in both.snapshots().iter().zip(single.snapshots()) {
        let n = a.values().len();
        // single bump shifted left and right by `shift` cells
        let sum: Vec<f64> = (0..n)
            .map(|k| {
                let left = if k + shift < n { b.values()[k + shift] } else { 0.0 };
                let right = if k >= shift { b.values()[k - shift] } else { 0.0 };
                left + right
            })
            .collect();
        let diff = a
            .values()
            .iter()
            .zip(&sum)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        let gap = a.values()[n / 2 - 40..n / 2 + 40]
            .iter()
            .filter(|v| **v == 0.0)
            .count();
        println!("{:>10.3e}  {:>12.3e}  {:>10}", a.time(), diff, gap);
    }
    Ok(())
}
