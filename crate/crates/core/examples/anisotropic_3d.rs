//! Orthotropic slow diffusion in 3-D with p = (2.2, 2.5, 2.8): per-axis
//! support growth, ordered by exponent, against the predicted rates.
//!
//! cargo run --release --example anisotropic_3d [config.toml]

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
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/anisotropic_3d.toml")
        });
    let cfg = ExperimentConfig::load(&path)?;
    let start = Instant::now();
    let traj = run(&cfg.run_config()?)?;
    println!("{} steps in {:.1?}", traj.steps, start.elapsed());
    let d = &traj.diagnostics;
    for k in (0..d.norms.len()).step_by(5) {
        let r = &d.support.radii[k];
        println!(
            "t = {:9.3e}  R = ({:6.3}, {:6.3}, {:6.3})  sup = {:.4e}",
            d.norms.times[k], r[0], r[1], r[2], d.norms.linf[k]
        );
    }
    let profile = AnisotropyProfile::from_exponents(traj.exponents())?;
    print!(
        "{}",
        compare_to_theory(d, &profile, traj.r0(), cfg.fit_window())?
    );
    Ok(())
}
