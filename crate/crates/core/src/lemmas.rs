//! Fast geometric convergence of `Z_{n+1} ≤ C bⁿ (1/N) Σ_i Z_n^{1+β_i}`.
//!
//! If `Z₀ ≤ C^{-1/β} b^{-1/β²}` with `β = min β_i`, then `Z_n → 0`. The
//! recursion is simulated with equality, which dominates any sequence obeying
//! the inequality.

use thiserror::Error;

pub const CONVERGED_BELOW: f64 = 1e-12;
pub const DIVERGED_ABOVE: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LemmaError {
    #[error("invalid recursion: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecursionSpec {
    c: f64,
    b: f64,
    betas: Vec<f64>,
    z0: f64,
}

impl RecursionSpec {
    pub fn new(c: f64, b: f64, betas: Vec<f64>, z0: f64) -> Result<Self, LemmaError> {
        if !(c > 1.0) || !(b > 1.0) || !c.is_finite() || !b.is_finite() {
            return Err(LemmaError::Invalid(format!(
                "C = {c} and b = {b} must exceed 1"
            )));
        }
        if betas.is_empty() || betas.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(LemmaError::Invalid(format!(
                "exponents {betas:?} must be positive"
            )));
        }
        if !(z0 >= 0.0) || !z0.is_finite() {
            return Err(LemmaError::Invalid(format!(
                "Z0 = {z0} must be nonnegative"
            )));
        }
        Ok(Self { c, b, betas, z0 })
    }

    pub fn with_z0(&self, z0: f64) -> Result<Self, LemmaError> {
        Self::new(self.c, self.b, self.betas.clone(), z0)
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn z0(&self) -> f64 {
        self.z0
    }

    pub fn beta_min(&self) -> f64 {
        self.betas.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// One application of the recursion at step `n`.
    pub fn step(&self, n: usize, z: f64) -> f64 {
        let mean =
            self.betas.iter().map(|&bi| z.powf(1.0 + bi)).sum::<f64>() / self.betas.len() as f64;
        self.c * self.b.powi(n as i32) * mean
    }
}

/// `C^{-1/β} b^{-1/β²}`.
pub fn threshold(spec: &RecursionSpec) -> f64 {
    let beta = spec.beta_min();
    spec.c.powf(-1.0 / beta) * spec.b.powf(-1.0 / (beta * beta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Converged,
    Diverged,
    Undecided,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    /// `Z_0, …` (stops early on divergence).
    pub z: Vec<f64>,
    pub verdict: Verdict,
}

/// Iterates with equality for `n_max` steps.
pub fn simulate(spec: &RecursionSpec, n_max: usize) -> Result<Simulation, LemmaError> {
    if n_max == 0 {
        return Err(LemmaError::Invalid("n_max must be at least 1".into()));
    }
    let mut z = Vec::with_capacity(n_max + 1);
    z.push(spec.z0);
    for n in 0..n_max {
        let next = spec.step(n, z[n]);
        z.push(next);
        if !(next <= DIVERGED_ABOVE) {
            return Ok(Simulation {
                z,
                verdict: Verdict::Diverged,
            });
        }
    }
    let verdict = if z[n_max] < CONVERGED_BELOW {
        Verdict::Converged
    } else {
        Verdict::Undecided
    };
    Ok(Simulation { z, verdict })
}

/// Relative offset below the threshold for lattice starts. Exactly at the
/// threshold the equality recursion sits on an unstable orbit, where rounding
/// errors grow like `(1+β)ⁿ` and decide the outcome.
pub const LATTICE_MARGIN: f64 = 1e-9;

/// Specs with `C, b ∈ {1.5, 2, 4, 10}` and `β ∈ {0.5, 1, 2}^k`, `k = 1..3`,
/// each started at `threshold·(1 − LATTICE_MARGIN)` and at half the threshold.
pub fn test_lattice() -> Vec<RecursionSpec> {
    const CB: [f64; 4] = [1.5, 2.0, 4.0, 10.0];
    const BETA: [f64; 3] = [0.5, 1.0, 2.0];
    let mut betas: Vec<Vec<f64>> = Vec::new();
    for len in 1..=3u32 {
        for code in 0..3usize.pow(len) {
            let mut c = code;
            betas.push(
                (0..len)
                    .map(|_| {
                        let b = BETA[c % 3];
                        c /= 3;
                        b
                    })
                    .collect(),
            );
        }
    }
    let mut out = Vec::new();
    for &c in &CB {
        for &b in &CB {
            for bs in &betas {
                let spec =
                    RecursionSpec::new(c, b, bs.clone(), 0.0).expect("lattice entries are valid");
                let z0 = threshold(&spec);
                for start in [z0 * (1.0 - LATTICE_MARGIN), 0.5 * z0] {
                    out.push(spec.with_z0(start).expect("threshold is nonnegative"));
                }
            }
        }
    }
    out
}

/// Specs of `specs` that fail to converge within `n_max` steps or whose
/// sequence increases somewhere.
pub fn sufficiency_failures(specs: &[RecursionSpec], n_max: usize) -> Vec<RecursionSpec> {
    specs
        .iter()
        .filter(|spec| match simulate(spec, n_max) {
            Ok(sim) => sim.verdict != Verdict::Converged || sim.z.windows(2).any(|w| w[1] > w[0]),
            Err(_) => true,
        })
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(c: f64, b: f64, betas: &[f64], z0: f64) -> RecursionSpec {
        RecursionSpec::new(c, b, betas.to_vec(), z0).unwrap()
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(threshold(&spec(2.0, 2.0, &[1.0], 0.0)), 0.25);
        assert_eq!(threshold(&spec(2.0, 2.0, &[1.0, 2.0], 0.0)), 0.25);
        let near_one = threshold(&spec(1.0 + 1e-9, 1.0 + 1e-9, &[1.0], 0.0));
        assert!((near_one - 1.0).abs() < 1e-8);
    }

    #[test]
    fn closed_form_case() {
        let sim = simulate(&spec(2.0, 2.0, &[1.0], 0.25), 40).unwrap();
        for (n, z) in sim.z.iter().enumerate() {
            let exact = 2f64.powi(-(n as i32 + 2));
            assert!((z - exact).abs() <= 1e-12 * exact);
        }
        assert_eq!(sim.verdict, Verdict::Converged);
    }

    #[test]
    fn zero_and_divergent_starts() {
        let sim = simulate(&spec(2.0, 2.0, &[1.0], 0.0), 10).unwrap();
        assert!(sim.z.iter().all(|&z| z == 0.0));
        assert_eq!(sim.verdict, Verdict::Converged);
        let sim = simulate(&spec(2.0, 2.0, &[1.0], 10.0), 200).unwrap();
        assert_eq!(sim.verdict, Verdict::Diverged);
        assert!(sim.z[1] > sim.z[0]);
    }

    #[test]
    fn lattice_starts_at_threshold_and_converges() {
        let lattice = test_lattice();
        assert_eq!(lattice.len(), 2 * 4 * 4 * (3 + 9 + 27));
        assert!(sufficiency_failures(&lattice, 200).is_empty());
        // above the threshold the equality recursion can blow up
        let blow = spec(10.0, 10.0, &[0.5], 1.0);
        assert_eq!(simulate(&blow, 200).unwrap().verdict, Verdict::Diverged);
    }

    #[test]
    fn invalid_specs() {
        assert!(RecursionSpec::new(1.0, 2.0, vec![1.0], 0.1).is_err());
        assert!(RecursionSpec::new(2.0, 2.0, vec![], 0.1).is_err());
        assert!(RecursionSpec::new(2.0, 2.0, vec![0.0], 0.1).is_err());
        assert!(simulate(&spec(2.0, 2.0, &[1.0], 0.1), 0).is_err());
    }
}
