//! One-dimensional slow diffusion (p = 3) from a box bump: support growth
//! and sup-norm decay against the predicted rates.
//!
//! cargo run --release --example barenblatt_1d [config.toml]

use std::path::PathBuf;
use std::time::Instant;

use orthotropic::config::ExperimentConfig;
use orthotropic::diagnostics::compare_to_theory;
use orthotropic::exponents::AnisotropyProfile;
use orthotropic::solver::run;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/barenblatt_1d.toml")
        });
    let cfg = ExperimentConfig::load(&path)?;
    let start = Instant::now();
    let traj = run(&cfg.run_config()?)?;
    println!(
        "{} steps in {:.1?} (dt from {:e} to {:e})",
        traj.steps,
        start.elapsed(),
        traj.dt_min,
        traj.dt_max
    );
    let d = &traj.diagnostics;
    for k in (0..d.norms.len()).step_by(10) {
        println!(
            "t = {:9.3e}  R = {:.5}  sup = {:.5e}",
            d.norms.times[k], d.support.radii[k][0], d.norms.linf[k]
        );
    }
    let profile = AnisotropyProfile::from_exponents(traj.exponents())?;
    print!(
        "{}",
        compare_to_theory(d, &profile, traj.r0(), cfg.fit_window())?
    );
    Ok(())
}
