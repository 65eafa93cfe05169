//! Waiting time in the slow directions: for `p = (3, 2)` the annulus
//! `r < |x_1| ≤ 2r` stays exactly zero for a positive time even though the
//! solution spreads at once along the linear axis.
//!
//! cargo run --release --example waiting_time

use orthotropic::diagnostics::{annulus_silence, SupportThreshold};
use orthotropic::solver::{run, Cadence, FluxKind, FluxModel, Grid, InitialShape, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = Grid::new(vec![1.0, 2.0], vec![128, 128])?;
    let flux = FluxModel::new(FluxKind::Orthotropic, vec![3.0, 2.0], 1.0)?;
    let mut config = RunConfig::new(grid, flux, InitialShape::ProductBump, 0.05, 1.0, 0.01);
    config.cadence = Cadence::Logarithmic {
        first: 1e-7,
        per_decade: 20,
    };
    config.snapshot_every = 1;
    let traj = run(&config)?;
    let d = &traj.diagnostics;
    println!("{:>10}  {:>8}  {:>8}", "t", "R_1", "R_2");
    for k in (0..d.support.times.len()).step_by(5) {
        println!(
            "{:>10.3e}  {:>8.4}  {:>8.4}",
            d.support.times[k], d.support.radii[k][0], d.support.radii[k][1]
        );
    }
    for r in [0.1, 0.15, 0.2] {
        match annulus_silence(&traj, r, SupportThreshold::Absolute(0.0))? {
            Some(t) => println!("annulus {r} < |x_1| ≤ {}: first reached at t = {t:.3e}", 2.0 * r),
            None => println!("annulus {r} < |x_1| ≤ {}: silent up to t = {}", 2.0 * r, config.horizon),
        }
    }
    Ok(())
}
