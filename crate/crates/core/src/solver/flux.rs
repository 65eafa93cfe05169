use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SolverError;

/// Per-axis flux field `A_i(x, u, z)` of a diagonal (orthotropic) operator.
pub trait Flux {
    fn dim(&self) -> usize;
    fn exponent(&self, axis: usize) -> f64;
    fn ellipticity(&self) -> f64;
    /// `A_i(x, u, z_i)` where `z_i` is the `i`-th partial derivative.
    fn component(&self, axis: usize, x: &[f64], u: f64, z: f64) -> f64;
}

/// `sign(z) |z|^e`, with `0 ↦ 0` for every `e > 0`.
#[inline]
pub fn signed_power(z: f64, e: f64) -> f64 {
    if z == 0.0 {
        0.0
    } else if e == 1.0 {
        z
    } else if e == 2.0 {
        z.abs() * z
    } else {
        z.abs().powf(e).copysign(z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxKind {
    /// `A_i = |z_i|^{p_i-2} z_i`.
    Orthotropic,
    /// `A_i = c_i(x) |z_i|^{p_i-2} z_i` with `c_i(x) = Λ^{sin(w_i·x + φ_i)}`,
    /// `w_i`, `φ_i` drawn from the seed.
    Perturbed { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluxModel {
    kind: FluxKind,
    p: Vec<f64>,
    ellipticity: f64,
    waves: Vec<(Vec<f64>, f64)>,
}

impl FluxModel {
    pub fn orthotropic(p: Vec<f64>) -> Result<Self, SolverError> {
        Self::new(FluxKind::Orthotropic, p, 1.0)
    }

    pub fn new(kind: FluxKind, p: Vec<f64>, ellipticity: f64) -> Result<Self, SolverError> {
        if p.is_empty() {
            return Err(SolverError::Config(
                "flux needs at least one exponent".into(),
            ));
        }
        if let Some(&bad) = p.iter().find(|&&pi| !(pi > 1.0) || !pi.is_finite()) {
            return Err(SolverError::Config(format!(
                "flux exponent {bad} must exceed 1"
            )));
        }
        if !(ellipticity >= 1.0) || !ellipticity.is_finite() {
            return Err(SolverError::Config(format!(
                "ellipticity {ellipticity} must be ≥ 1"
            )));
        }
        let waves = match kind {
            FluxKind::Orthotropic => Vec::new(),
            FluxKind::Perturbed { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..p.len())
                    .map(|_| {
                        let w = (0..p.len()).map(|_| rng.gen_range(-3.0..3.0)).collect();
                        (w, rng.gen_range(0.0..std::f64::consts::TAU))
                    })
                    .collect()
            }
        };
        Ok(Self {
            kind,
            p,
            ellipticity,
            waves,
        })
    }

    pub fn kind(&self) -> FluxKind {
        self.kind
    }

    pub fn exponents(&self) -> &[f64] {
        &self.p
    }

    /// Position-dependent factor in `[Λ⁻¹, Λ]`; identically 1 for the
    /// orthotropic kind.
    pub fn coefficient(&self, axis: usize, x: &[f64]) -> f64 {
        match self.kind {
            FluxKind::Orthotropic => 1.0,
            FluxKind::Perturbed { .. } => {
                let (w, phase) = &self.waves[axis];
                let arg: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + phase;
                self.ellipticity.powf(arg.sin())
            }
        }
    }

    /// Upper bound of [`Self::coefficient`].
    pub fn coefficient_bound(&self) -> f64 {
        match self.kind {
            FluxKind::Orthotropic => 1.0,
            FluxKind::Perturbed { .. } => self.ellipticity,
        }
    }

    /// Face flux for difference quotient `z` at face centre `x`.
    #[inline]
    pub fn flux_face(&self, axis: usize, x: &[f64], z: f64) -> f64 {
        self.coefficient(axis, x) * signed_power(z, self.p[axis] - 1.0)
    }
}

impl Flux for FluxModel {
    fn dim(&self) -> usize {
        self.p.len()
    }

    fn exponent(&self, axis: usize) -> f64 {
        self.p[axis]
    }

    fn ellipticity(&self) -> f64 {
        self.ellipticity
    }

    fn component(&self, axis: usize, x: &[f64], _u: f64, z: f64) -> f64 {
        self.flux_face(axis, x, z)
    }
}

/// A point where a flux left the growth envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeViolation {
    pub axis: usize,
    pub x: Vec<f64>,
    pub u: f64,
    pub z: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    pub samples: usize,
    pub counterexample: Option<EnvelopeViolation>,
}

impl EnvelopeReport {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// Samples `(x, u, z)` from a seeded stream and checks
/// `A_i z_i ≥ Λ⁻¹|z_i|^{p_i}` and `|A_i| ≤ Λ|z_i|^{p_i-1}` on every axis.
pub fn envelope_check<F: Flux + ?Sized>(
    flux: &F,
    sample_count: usize,
    seed: u64,
) -> EnvelopeReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = flux.dim();
    let lam = flux.ellipticity();
    let mut x = vec![0.0; dim];
    for _ in 0..sample_count.max(1) {
        for xi in x.iter_mut() {
            *xi = rng.gen_range(-10.0..10.0);
        }
        let u = rng.gen_range(-10.0..10.0);
        // log-uniform magnitudes exercise both the degenerate and large-gradient ends
        let z = 10f64.powf(rng.gen_range(-6.0..3.0)) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
        for axis in 0..dim {
            let p = flux.exponent(axis);
            let a = flux.component(axis, &x, u, z);
            let lower = z.abs().powf(p) / lam;
            let upper = lam * z.abs().powf(p - 1.0);
            let slack = 1e-12;
            if a * z < lower * (1.0 - slack) || a.abs() > upper * (1.0 + slack) || !a.is_finite() {
                return EnvelopeReport {
                    samples: sample_count,
                    counterexample: Some(EnvelopeViolation {
                        axis,
                        x: x.clone(),
                        u,
                        z,
                        value: a,
                    }),
                };
            }
        }
    }
    EnvelopeReport {
        samples: sample_count,
        counterexample: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthotropic_face_values() {
        let f = FluxModel::orthotropic(vec![3.0, 1.5]).unwrap();
        assert_eq!(f.flux_face(0, &[0.0, 0.0], 2.0), 4.0);
        assert_eq!(f.flux_face(0, &[0.0, 0.0], -2.0), -4.0);
        assert_eq!(f.flux_face(0, &[0.0, 0.0], 0.0), 0.0);
        assert_eq!(f.flux_face(1, &[0.0, 0.0], 0.0), 0.0);
        assert!((f.flux_face(1, &[0.0, 0.0], 4.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn perturbed_is_deterministic_and_bounded() {
        let a = FluxModel::new(FluxKind::Perturbed { seed: 9 }, vec![2.5, 3.0], 2.0).unwrap();
        let b = FluxModel::new(FluxKind::Perturbed { seed: 9 }, vec![2.5, 3.0], 2.0).unwrap();
        let x = [0.3, -1.2];
        assert_eq!(a.coefficient(1, &x), b.coefficient(1, &x));
        for k in 0..100 {
            let x = [k as f64 * 0.37 - 5.0, 2.0 - k as f64 * 0.11];
            let c = a.coefficient(0, &x);
            assert!((0.5..=2.0).contains(&c));
        }
    }

    #[test]
    fn envelope_holds_for_shipped_kinds() {
        for lam in [1.0, 1.5, 4.0] {
            let f = FluxModel::new(FluxKind::Orthotropic, vec![1.4, 2.0, 3.3], lam).unwrap();
            assert!(envelope_check(&f, 2000, 1).passed());
        }
        let f = FluxModel::new(FluxKind::Perturbed { seed: 3 }, vec![2.2, 2.8], 3.0).unwrap();
        assert!(envelope_check(&f, 2000, 2).passed());
    }

    struct TooStrong;

    impl Flux for TooStrong {
        fn dim(&self) -> usize {
            1
        }
        fn exponent(&self, _axis: usize) -> f64 {
            3.0
        }
        fn ellipticity(&self) -> f64 {
            2.0
        }
        fn component(&self, _axis: usize, _x: &[f64], _u: f64, z: f64) -> f64 {
            5.0 * z.abs() * z
        }
    }

    #[test]
    fn envelope_reports_counterexample() {
        let report = envelope_check(&TooStrong, 10, 0);
        assert!(!report.passed());
        let v = report.counterexample.unwrap();
        assert_eq!(v.axis, 0);
    }
}
