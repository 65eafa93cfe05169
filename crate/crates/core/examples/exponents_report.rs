//! Derived exponents of a growth profile: harmonic mean, critical exponents,
//! directional support rates, decay rate and the embedding recursion.
//!
//! cargo run --example exponents_report [p1,p2,...] [sigma]

use orthotropic::exponents::{
    embedding_recursion, feasibility, linf_decay_law, support_radius_law, AnisotropyProfile,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let p: Vec<f64> = match args.next() {
        Some(list) => list
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<Result<_, _>>()?,
        None => vec![2.2, 2.5, 2.8],
    };
    let sigma: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1.0);

    let profile = AnisotropyProfile::from_exponents(&p)?;
    let d = profile.derived();
    println!("p = {p:?}");
    println!("p̄ = {:.6}  p̄* = {:?}  λ = {:.6}", d.pbar, d.pbar_star, d.lambda);
    println!("p̄_1 = {:.6}  p̄_2 = {:.6}", d.pbar_1, d.pbar_2);
    println!("{:#?}", feasibility(&profile));

    let mut t_sum = 0.0;
    for j in profile.slow_directions() {
        let law = support_radius_law(&profile, j)?;
        t_sum += law.t_exponent;
        println!(
            "axis {}: R - 2R0 ~ t^{:.6} m^{:.6}",
            j + 1,
            law.t_exponent,
            law.mass_exponent
        );
    }
    if profile.is_all_slow() {
        println!(
            "sum of t-exponents {:.15} vs N/λ {:.15}",
            t_sum,
            profile.dim() as f64 / d.lambda
        );
    }
    if let Ok(law) = linf_decay_law(&profile) {
        println!("sup-norm ~ t^{:.6} m^{:.6}", law.t_exponent, law.mass_exponent);
    }

    let mut sorted = p.clone();
    sorted.sort_by(f64::total_cmp);
    let rec = embedding_recursion(&sorted, sigma)?;
    println!("embedding recursion, σ = {sigma}: q^n = {:?}", rec.q);
    println!("cascade r_k = {:?}", rec.cascade);
    println!(
        "verdict {} (reached at {:?}, stalled at {:?} = r_{:?})",
        rec.verdict, rec.reached_at, rec.stalled_limit, rec.stalled_at_cascade
    );
    Ok(())
}
