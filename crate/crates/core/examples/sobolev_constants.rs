//! Empirical constants of the anisotropic Sobolev inequalities from seeded
//! random bump fields, in 2-D and 3-D, for two master seeds.
//!
//! cargo run --release --example sobolev_constants [trials]

use std::time::Instant;

use orthotropic::sobolev::{estimate_constant, RandomBumps, SobolevParams};
use orthotropic::solver::Grid;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trials: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(1000);
    let cases = [
        (vec![1.5, 2.5], Grid::cube(2, 1.0, 48)?),
        (vec![1.5, 2.5, 4.0], Grid::cube(3, 1.0, 20)?),
    ];
    for (p, grid) in cases {
        let n = p.len();
        let pbar = orthotropic::exponents::harmonic_mean(&p)?;
        let theta = 0.5 * pbar / orthotropic::exponents::sobolev_conjugate(pbar, n)?;
        let params = SobolevParams::new(p.clone(), vec![1.0; n], 2.0, theta)?;
        let sampler = RandomBumps::new(grid);
        for seed in [1u64, 2] {
            let start = Instant::now();
            let est = estimate_constant(&sampler, seed, trials, &params)?;
            println!(
                "p = {p:?}  seed {seed}: C_ST ≈ {:.4}  C_PS ≈ {:.4}  violations {}  ({:.1?})",
                est.elliptic_constant(),
                est.parabolic_constant(),
                est.violations.len(),
                start.elapsed()
            );
        }
    }
    Ok(())
}
