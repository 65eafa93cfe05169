//! Fast geometric convergence: `Z_{n+1} = C bⁿ mean(Z_n^{1+β_i})` started at,
//! below and above the threshold `C^{-1/β} b^{-1/β²}`.
//!
//! cargo run --example iteration_lemma

use orthotropic::lemmas::{simulate, sufficiency_failures, test_lattice, threshold, RecursionSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = RecursionSpec::new(2.0, 2.0, vec![1.0, 2.0], 0.0)?;
    let z_star = threshold(&spec);
    println!("C = b = 2, β = (1, 2): threshold {z_star}");
    for factor in [0.5, 0.999, 1.5, 4.0] {
        let sim = simulate(&spec.with_z0(factor * z_star)?, 200)?;
        let head: Vec<String> = sim.z.iter().take(6).map(|z| format!("{z:.3e}")).collect();
        println!(
            "Z0 = {factor} × threshold: {:?} after {} steps; {} …",
            sim.verdict,
            sim.z.len() - 1,
            head.join(", ")
        );
    }
    let lattice = test_lattice();
    let failures = sufficiency_failures(&lattice, 200);
    println!(
        "lattice: {} specs started below threshold, {} failures",
        lattice.len(),
        failures.len()
    );
    Ok(())
}
