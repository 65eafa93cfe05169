//! Exponent bookkeeping for orthotropic growth profiles.
//!
//! Every rate in the theory is a rational function of the exponent vector
//! `p = (p_1, ..., p_N)` through its harmonic mean `p̄`. This module collects
//! those formulas together with the feasibility conditions on the `p_i`.
//!
//! Axes are 0-based throughout the library; reports print them 1-based.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExponentError {
    #[error("invalid profile: entry {} of p (value {value}) must exceed 1", .index + 1)]
    InvalidExponent { index: usize, value: f64 },
    #[error("invalid profile: empty exponent vector")]
    Empty,
    #[error("invalid profile: ellipticity constant {0} must be at least 1")]
    InvalidEllipticity(f64),
    #[error("Sobolev conjugate undefined: p̄ = {pbar} is not below N = {dim}")]
    UndefinedConjugate { pbar: f64, dim: usize },
    #[error("axis {} is not a slow direction (p = {p} ≤ 2)", .axis + 1)]
    NotSlowDirection { axis: usize, p: f64 },
    #[error("invalid regime: {0}")]
    InvalidRegime(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("contract violation: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, ExponentError>;

/// `N / Σ 1/p_i`.
pub fn harmonic_mean(p: &[f64]) -> Result<f64> {
    validate_exponents(p)?;
    let recip: f64 = p.iter().map(|pi| 1.0 / pi).sum();
    Ok(p.len() as f64 / recip)
}

/// `N p̄ / (N - p̄)`, defined for `0 < p̄ < N`.
pub fn sobolev_conjugate(pbar: f64, dim: usize) -> Result<f64> {
    let n = dim as f64;
    if !(pbar > 0.0) || pbar >= n {
        return Err(ExponentError::UndefinedConjugate { pbar, dim });
    }
    Ok(n * pbar / (n - pbar))
}

fn validate_exponents(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(ExponentError::Empty);
    }
    for (index, &value) in p.iter().enumerate() {
        if !(value > 1.0) || !value.is_finite() {
            return Err(ExponentError::InvalidExponent { index, value });
        }
    }
    Ok(())
}

/// Dimension, exponent vector and ellipticity constant of the growth
/// conditions `A_i z_i ≥ Λ⁻¹|z_i|^{p_i}`, `|A_i| ≤ Λ|z_i|^{p_i-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnisotropyProfile {
    p: Vec<f64>,
    ellipticity: f64,
}

impl AnisotropyProfile {
    pub fn new(p: Vec<f64>, ellipticity: f64) -> Result<Self> {
        validate_exponents(&p)?;
        if !(ellipticity >= 1.0) || !ellipticity.is_finite() {
            return Err(ExponentError::InvalidEllipticity(ellipticity));
        }
        Ok(Self { p, ellipticity })
    }

    /// Profile with unit ellipticity.
    pub fn from_exponents(p: &[f64]) -> Result<Self> {
        Self::new(p.to_vec(), 1.0)
    }

    pub fn isotropic(dim: usize, p: f64) -> Result<Self> {
        Self::new(vec![p; dim], 1.0)
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn exponents(&self) -> &[f64] {
        &self.p
    }

    pub fn exponent(&self, axis: usize) -> f64 {
        self.p[axis]
    }

    pub fn ellipticity(&self) -> f64 {
        self.ellipticity
    }

    pub fn p_max(&self) -> f64 {
        self.p.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn p_min(&self) -> f64 {
        self.p.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn pbar(&self) -> f64 {
        let recip: f64 = self.p.iter().map(|pi| 1.0 / pi).sum();
        self.dim() as f64 / recip
    }

    pub fn pbar_star(&self) -> Option<f64> {
        sobolev_conjugate(self.pbar(), self.dim()).ok()
    }

    /// Critical parabolic exponent `p̄ (1 + σ/N)`.
    pub fn pbar_sigma(&self, sigma: f64) -> f64 {
        self.pbar() * (1.0 + sigma / self.dim() as f64)
    }

    /// `λ_q = N (p̄ - 2) + p̄ q`.
    pub fn lambda_q(&self, q: f64) -> f64 {
        let pbar = self.pbar();
        self.dim() as f64 * (pbar - 2.0) + pbar * q
    }

    /// `λ = λ_1`.
    pub fn lambda(&self) -> f64 {
        self.lambda_q(1.0)
    }

    pub fn slow_directions(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&j| self.p[j] > 2.0).collect()
    }

    pub fn is_all_slow(&self) -> bool {
        self.p.iter().all(|&pi| pi > 2.0)
    }

    pub fn derived(&self) -> DerivedExponents {
        DerivedExponents {
            pbar: self.pbar(),
            pbar_star: self.pbar_star(),
            pbar_1: self.pbar_sigma(1.0),
            pbar_2: self.pbar_sigma(2.0),
            lambda: self.lambda(),
            lambda_2: self.lambda_q(2.0),
        }
    }
}

/// Snapshot of the derived exponents of a profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedExponents {
    pub pbar: f64,
    pub pbar_star: Option<f64>,
    pub pbar_1: f64,
    pub pbar_2: f64,
    pub lambda: f64,
    pub lambda_2: f64,
}

/// Power-law exponents of a bound `C t^{t_exponent} m^{mass_exponent}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub t_exponent: f64,
    pub mass_exponent: f64,
}

impl PowerLaw {
    pub fn eval(&self, prefactor: f64, t: f64, mass: f64) -> f64 {
        prefactor * t.powf(self.t_exponent) * mass.powf(self.mass_exponent)
    }
}

/// Exponents of the directional support radius along slow axis `axis`:
/// `t^{(N(p̄-p_j)+p̄)/(λ p_j)} ‖u₀‖₁^{(p̄/p_j)(p_j-2)/λ}`.
pub fn support_radius_law(profile: &AnisotropyProfile, axis: usize) -> Result<PowerLaw> {
    if axis >= profile.dim() {
        return Err(ExponentError::Contract(format!(
            "axis {axis} out of range for dimension {}",
            profile.dim()
        )));
    }
    let pj = profile.exponent(axis);
    if pj <= 2.0 {
        return Err(ExponentError::NotSlowDirection { axis, p: pj });
    }
    let lambda = profile.lambda();
    if lambda <= 0.0 {
        return Err(ExponentError::InvalidRegime(format!(
            "λ = {lambda} must be positive"
        )));
    }
    let n = profile.dim() as f64;
    let pbar = profile.pbar();
    Ok(PowerLaw {
        t_exponent: (n * (pbar - pj) + pbar) / (lambda * pj),
        mass_exponent: (pbar / pj) * (pj - 2.0) / lambda,
    })
}

/// `R_j(t) = 2 R₀ + C t^{..} m₁^{..}` for a slow axis.
pub fn predicted_support_radius(
    profile: &AnisotropyProfile,
    axis: usize,
    t: f64,
    mass: f64,
    r0: f64,
    prefactor: f64,
) -> Result<f64> {
    let law = support_radius_law(profile, axis)?;
    if !(t >= 0.0) {
        return Err(ExponentError::Domain(format!(
            "time {t} must be nonnegative"
        )));
    }
    if !(mass > 0.0) {
        return Err(ExponentError::Domain(format!(
            "mass {mass} must be positive"
        )));
    }
    Ok(2.0 * r0 + law.eval(prefactor, t, mass))
}

/// Exponents of the L¹–L∞ bound `C t^{-N/λ} ‖u₀‖₁^{p̄/λ}`; requires `p̄₁ > 2`.
pub fn linf_decay_law(profile: &AnisotropyProfile) -> Result<PowerLaw> {
    let pbar1 = profile.pbar_sigma(1.0);
    if pbar1 <= 2.0 {
        return Err(ExponentError::InvalidRegime(format!(
            "p̄₁ = {pbar1} must exceed 2"
        )));
    }
    let lambda = profile.lambda();
    Ok(PowerLaw {
        t_exponent: -(profile.dim() as f64) / lambda,
        mass_exponent: profile.pbar() / lambda,
    })
}

pub fn predicted_linf_bound(
    profile: &AnisotropyProfile,
    t: f64,
    mass: f64,
    prefactor: f64,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(ExponentError::Domain(format!("time {t} must be positive")));
    }
    if !(mass > 0.0) {
        return Err(ExponentError::Domain(format!(
            "mass {mass} must be positive"
        )));
    }
    Ok(linf_decay_law(profile)?.eval(prefactor, t, mass))
}

/// Exponents of the bound on the measure of the support box:
/// `(N/λ, N(p̄-2)/λ)`.
pub fn support_measure_exponents(profile: &AnisotropyProfile) -> Result<PowerLaw> {
    if !profile.is_all_slow() {
        return Err(ExponentError::InvalidRegime(
            "support measure law needs every p_j > 2".into(),
        ));
    }
    let lambda = profile.lambda();
    if lambda <= 0.0 {
        return Err(ExponentError::InvalidRegime(format!(
            "λ = {lambda} must be positive"
        )));
    }
    let n = profile.dim() as f64;
    Ok(PowerLaw {
        t_exponent: n / lambda,
        mass_exponent: n * (profile.pbar() - 2.0) / lambda,
    })
}

/// Outcome of the exponent-raising recursion behind the local parabolic
/// embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecursion {
    /// `q^1, q^2, ...` as computed.
    pub q: Vec<f64>,
    /// `true` when some `q^n ≥ p_N`.
    pub verdict: bool,
    /// 1-based index of the first `q^n ≥ p_N`.
    pub reached_at: Option<usize>,
    /// `r_k = (k+σ) / Σ_{i≤k} 1/p_i`, `k = 1..N`.
    pub cascade: Vec<f64>,
    /// Limit of `q^n` when the recursion stalls below `p_N`.
    pub stalled_limit: Option<f64>,
    /// `k` (1-based) such that the stalled limit equals `r_k`.
    pub stalled_at_cascade: Option<usize>,
}

/// Runs `p¹ = (p₁,…,p₁)`, `q^n = (N+σ)/Σ 1/p^n_i`, `p^{n+1} = p ∧ q^n`.
///
/// The budget is `10 N` iterations. When `q^n` never reaches `p_N` the
/// verdict falls back to comparing `r_{N-1}` (the last possible stall point)
/// with `p_N`, and the stalled limit is matched against the cascade `r_k`.
pub fn embedding_recursion(p: &[f64], sigma: f64) -> Result<EmbeddingRecursion> {
    if p.is_empty() {
        return Err(ExponentError::Empty);
    }
    if p.windows(2).any(|w| w[0] > w[1]) {
        return Err(ExponentError::Contract(
            "exponents must be sorted ascending".into(),
        ));
    }
    if p.iter().any(|&pi| !(pi >= 1.0)) {
        return Err(ExponentError::Contract(
            "exponents must be at least 1".into(),
        ));
    }
    let dim = p.len();
    let n = dim as f64;
    let p_top = p[dim - 1];

    let cascade: Vec<f64> = (1..=dim)
        .map(|k| {
            let s: f64 = p[..k].iter().map(|pi| 1.0 / pi).sum();
            (k as f64 + sigma) / s
        })
        .collect();

    let budget = 10 * dim;
    let mut current = vec![p[0]; dim];
    let mut q = Vec::with_capacity(budget);
    let mut reached_at = None;
    for step in 1..=budget {
        let recip: f64 = current.iter().map(|pi| 1.0 / pi).sum();
        let qn = (n + sigma) / recip;
        q.push(qn);
        if qn >= p_top {
            reached_at = Some(step);
            break;
        }
        for (c, &pi) in current.iter_mut().zip(p) {
            *c = pi.min(qn);
        }
    }

    let (verdict, stalled_limit, stalled_at_cascade) = match reached_at {
        Some(_) => (true, None, None),
        None => {
            let limit = *q.last().expect("budget is at least one step");
            let matched = cascade
                .iter()
                .enumerate()
                .filter(|(_, &r)| (r - limit).abs() <= 1e-9 * r.abs().max(1.0))
                .map(|(k, _)| k + 1)
                .next();
            let r_last = if dim >= 2 {
                cascade[dim - 2]
            } else {
                cascade[0]
            };
            (r_last > p_top, Some(limit), matched)
        }
    };

    Ok(EmbeddingRecursion {
        q,
        verdict,
        reached_at,
        cascade,
        stalled_limit,
        stalled_at_cascade,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub pbar_lt_n: bool,
    pub slow_directions: Vec<usize>,
    /// At least one slow axis and `p_max < p̄(1+1/N)`.
    pub condp2_ok: bool,
    /// `max{2, p_max} < p̄(1+2/N)`.
    pub boundedness_ok: bool,
    pub pbar1_gt_2: bool,
    pub pbar2_gt_2: bool,
    /// Some but not all axes are slow; rate optimality is not expected.
    pub mixed_regime: bool,
}

pub fn feasibility(profile: &AnisotropyProfile) -> FeasibilityReport {
    let d = profile.derived();
    let p_max = profile.p_max();
    let slow = profile.slow_directions();
    FeasibilityReport {
        pbar_lt_n: d.pbar < profile.dim() as f64,
        condp2_ok: !slow.is_empty() && p_max < d.pbar_1,
        boundedness_ok: p_max.max(2.0) < d.pbar_2,
        pbar1_gt_2: d.pbar_1 > 2.0,
        pbar2_gt_2: d.pbar_2 > 2.0,
        mixed_regime: !slow.is_empty() && slow.len() < profile.dim(),
        slow_directions: slow,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn harmonic_mean_examples() {
        assert!(close(harmonic_mean(&[2.5, 2.5, 2.5]).unwrap(), 2.5, 1e-15));
        assert!(close(harmonic_mean(&[2.0, 2.0, 3.0]).unwrap(), 2.25, 1e-15));
        assert_eq!(
            harmonic_mean(&[4.0, 0.5]),
            Err(ExponentError::InvalidExponent {
                index: 1,
                value: 0.5
            })
        );
        assert!(harmonic_mean(&[]).is_err());
    }

    #[test]
    fn sobolev_conjugate_examples() {
        assert!(close(sobolev_conjugate(2.25, 3).unwrap(), 9.0, 1e-14));
        assert!(close(sobolev_conjugate(2.5, 3).unwrap(), 15.0, 1e-14));
        assert!(matches!(
            sobolev_conjugate(3.0, 3),
            Err(ExponentError::UndefinedConjugate { .. })
        ));
    }

    #[test]
    fn support_radius_isotropic_three_d() {
        let prof = AnisotropyProfile::isotropic(3, 2.5).unwrap();
        assert!(close(prof.lambda(), 4.0, 1e-14));
        for j in 0..3 {
            let law = support_radius_law(&prof, j).unwrap();
            assert!(close(law.t_exponent, 0.25, 1e-15));
            assert!(close(law.mass_exponent, 0.125, 1e-15));
        }
        assert_eq!(
            predicted_support_radius(&prof, 0, 0.0, 1.0, 0.3, 1.0).unwrap(),
            0.6
        );
    }

    #[test]
    fn support_radius_errors() {
        let prof = AnisotropyProfile::from_exponents(&[1.5, 2.0, 3.0]).unwrap();
        assert!(matches!(
            support_radius_law(&prof, 1),
            Err(ExponentError::NotSlowDirection { .. })
        ));
        assert!(support_radius_law(&prof, 2).is_ok());
        // λ = N(p̄-2) + p̄ ≤ 0 needs p̄ ≤ 2N/(N+1)
        let prof = AnisotropyProfile::from_exponents(&[
            1.05, 1.05, 1.05, 1.05, 1.05, 1.05, 1.05, 1.05, 1.05, 2.5,
        ])
        .unwrap();
        assert!(prof.lambda() <= 0.0);
        assert!(matches!(
            support_radius_law(&prof, 9),
            Err(ExponentError::InvalidRegime(_))
        ));
    }

    #[test]
    fn linf_examples() {
        let prof = AnisotropyProfile::isotropic(3, 2.5).unwrap();
        let law = linf_decay_law(&prof).unwrap();
        assert!(close(law.t_exponent, -0.75, 1e-15));
        assert!(close(law.mass_exponent, 0.625, 1e-15));
        let a = predicted_linf_bound(&prof, 1.3, 2.0, 1.0).unwrap();
        let b = predicted_linf_bound(&prof, 2.6, 2.0, 1.0).unwrap();
        assert!(close(b / a, 2f64.powf(-0.75), 1e-14));
        assert!(predicted_linf_bound(&prof, 0.0, 2.0, 1.0).is_err());

        // p̄ for (2.2, 2.5, 2.8) evaluated in exact rational arithmetic:
        // 1/p̄ = (5/11 + 2/5 + 5/14)/3 = 933/2310 → p̄ = 2310/933.
        let prof = AnisotropyProfile::from_exponents(&[2.2, 2.5, 2.8]).unwrap();
        let pbar = 2310.0 / 933.0;
        assert!(close(prof.pbar(), pbar, 1e-15));
        let lambda = 3.0 * (pbar - 2.0) + pbar;
        let law = linf_decay_law(&prof).unwrap();
        assert!(close(law.t_exponent, -3.0 / lambda, 1e-14));
        assert!(close(law.mass_exponent, pbar / lambda, 1e-14));

        let low = AnisotropyProfile::from_exponents(&[1.2, 1.2]).unwrap();
        assert!(matches!(
            linf_decay_law(&low),
            Err(ExponentError::InvalidRegime(_))
        ));
    }

    #[test]
    fn support_measure_examples() {
        let prof = AnisotropyProfile::isotropic(3, 2.5).unwrap();
        let law = support_measure_exponents(&prof).unwrap();
        assert!(close(law.t_exponent, 0.75, 1e-15));
        assert!(close(law.mass_exponent, 0.375, 1e-15));
        let mixed = AnisotropyProfile::from_exponents(&[1.5, 3.0]).unwrap();
        assert!(support_measure_exponents(&mixed).is_err());
    }

    #[test]
    fn recursion_reaches_top_in_one_step() {
        let rec = embedding_recursion(&[2.0, 2.0, 3.0], 2.0).unwrap();
        assert!(rec.verdict);
        assert_eq!(rec.reached_at, Some(1));
        assert!(close(rec.q[0], 10.0 / 3.0, 1e-15));
        assert!(close(rec.cascade[0], 6.0, 1e-15));
        assert!(close(rec.cascade[1], 4.0, 1e-15));
    }

    #[test]
    fn recursion_isotropic_collapse() {
        for &(p, sigma) in &[(2.0, 1.0), (3.5, 2.0), (1.5, 1.2)] {
            let rec = embedding_recursion(&[p; 4], sigma).unwrap();
            let pbar_sigma = p * (1.0 + sigma / 4.0);
            assert!(close(rec.q[0], pbar_sigma, 1e-14));
            assert_eq!(rec.verdict, pbar_sigma >= p);
        }
    }

    #[test]
    fn recursion_stalls_at_cascade_point() {
        let rec = embedding_recursion(&[1.5, 2.0, 4.0], 2.0).unwrap();
        assert!(!rec.verdict);
        let limit = rec.stalled_limit.unwrap();
        assert!(close(limit, 24.0 / 7.0, 1e-12));
        assert_eq!(rec.stalled_at_cascade, Some(2));
        assert!(rec.q.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn recursion_rejects_unsorted() {
        assert!(matches!(
            embedding_recursion(&[3.0, 2.0], 1.0),
            Err(ExponentError::Contract(_))
        ));
    }

    #[test]
    fn feasibility_examples() {
        let r = feasibility(&AnisotropyProfile::isotropic(3, 2.5).unwrap());
        assert!(r.pbar_lt_n && r.condp2_ok && r.boundedness_ok && r.pbar1_gt_2 && r.pbar2_gt_2);
        assert_eq!(r.slow_directions, vec![0, 1, 2]);
        assert!(!r.mixed_regime);

        let r = feasibility(&AnisotropyProfile::from_exponents(&[2.0, 2.0, 3.0]).unwrap());
        assert!(!r.condp2_ok);
        assert!(r.boundedness_ok);

        let r = feasibility(&AnisotropyProfile::from_exponents(&[1.4, 2.5]).unwrap());
        assert_eq!(r.slow_directions, vec![1]);
        assert!(r.condp2_ok);
        assert!(r.mixed_regime);
    }

    #[test]
    fn profile_validation() {
        assert!(AnisotropyProfile::new(vec![2.0, 1.0], 1.0).is_err());
        assert!(AnisotropyProfile::new(vec![2.0], 0.5).is_err());
        assert!(AnisotropyProfile::new(vec![2.0, f64::NAN], 1.0).is_err());
        let prof = AnisotropyProfile::from_exponents(&[2.0, 3.0]).unwrap();
        assert!(prof.pbar_star().is_none());
        let prof = AnisotropyProfile::from_exponents(&[1.5, 1.5, 3.0]).unwrap();
        assert!(prof.pbar_star().unwrap() > prof.pbar());
    }
}
