//! A nontrivial solution emanating from the zero datum, `u = t^{-α} U(x t^β)`:
//! invariant cone, Picard iteration, extension, energy identity and the PDE
//! residual of the glued solution under refinement.
//!
//! cargo run --release --example self_similar [p] [beta] [s_max]

use orthotropic::selfsim::{
    build_solution, cone_constants, energy_monotone_check, extend, picard_iterate,
    residual_check, ExtendOptions, PicardOptions, ResidualWindow, SelfSimilarParams,
    DEFAULT_DELTA_BAR,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<f64>());
    let p = args.next().transpose()?.unwrap_or(3.0);
    let beta = args.next().transpose()?.unwrap_or(1.0);
    let s_max = args.next().transpose()?.unwrap_or(10.0);

    let params = SelfSimilarParams::from_beta(p, beta)?;
    let cone = cone_constants(&params, DEFAULT_DELTA_BAR)?;
    println!("α = {}, cone a = {}, b = {}, δ = {}", params.alpha(), cone.a, cone.b, cone.delta);

    let picard = picard_iterate(&params, &cone, &PicardOptions::default())?;
    println!("Picard: {} iterations", picard.iterations);
    for (k, c) in picard.history.iter().enumerate() {
        println!("  iterate {:>2}: change {c:.3e}", k + 1);
    }

    let ext = extend(&params, &picard.trajectory, &ExtendOptions::new(s_max, 10_000))?;
    let energy = ext.energy(&params);
    let stride = (ext.len() / 12).max(1);
    println!("{:>8} {:>13} {:>13} {:>13}", "s", "U", "V", "E");
    let mut rows: Vec<usize> = (0..ext.len()).step_by(stride).collect();
    if rows.last() != Some(&(ext.len() - 1)) {
        rows.push(ext.len() - 1);
    }
    for k in rows {
        println!(
            "{:>8.4} {:>13.5e} {:>13.5e} {:>13.5e}",
            ext.s[k], ext.u[k], ext.v[k], energy[k]
        );
    }
    let check = energy_monotone_check(&params, &ext, 1e-4);
    println!("energy identity and growth: {check:?}");

    let sol = build_solution(&ext, &params)?;
    let window = ResidualWindow {
        t: (1.0, 1.1),
        x: (1.3, 1.6),
    };
    let coarse = residual_check(&sol, &window, 0.02, 0.02, 0.05)?;
    let fine = residual_check(&sol, &window, 0.01, 0.01, 0.05)?;
    println!("PDE residual: h = 0.02 → {coarse:.3e}, h = 0.01 → {fine:.3e}");
    Ok(())
}
