//! Discrete checks of the anisotropic Sobolev inequality
//!
//! ```text
//! ‖u‖_{p*_α} ≤ C Π_i ‖D_i |u|^{α_i}‖_{p_i}^{1/α̃},     p*_α = p̄* α̃ / N,
//! ```
//!
//! and of its parabolic (space-time) counterpart, plus seeded estimation of
//! the empirical constants.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::exponents::{harmonic_mean, sobolev_conjugate, ExponentError};
use crate::numeric::{split_seed, NeumaierSum};
use crate::solver::{Grid, ScalarField};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SobolevError {
    #[error(transparent)]
    Exponent(#[from] ExponentError),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("contract violated: {0}")]
    Contract(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SobolevParams {
    p: Vec<f64>,
    alpha: Vec<f64>,
    sigma: f64,
    theta: f64,
    pbar: f64,
    pbar_star: f64,
}

impl SobolevParams {
    /// Requires `p̄ < N`, `α_i > 0`, `σ ∈ [1, p*_α]` and `θ ∈ [0, p̄/p̄*]`.
    pub fn new(p: Vec<f64>, alpha: Vec<f64>, sigma: f64, theta: f64) -> Result<Self, SobolevError> {
        let pbar = harmonic_mean(&p)?;
        let pbar_star = sobolev_conjugate(pbar, p.len())?;
        if alpha.len() != p.len() {
            return Err(SobolevError::Params(format!(
                "{} weights for {} exponents",
                alpha.len(),
                p.len()
            )));
        }
        if let Some(a) = alpha.iter().find(|&&a| !(a > 0.0) || !a.is_finite()) {
            return Err(SobolevError::Params(format!(
                "weight α = {a} must be positive"
            )));
        }
        let out = Self {
            p,
            alpha,
            sigma,
            theta,
            pbar,
            pbar_star,
        };
        if !(sigma >= 1.0 && sigma <= out.p_star_alpha()) {
            return Err(SobolevError::Params(format!(
                "σ = {sigma} must lie in [1, {}]",
                out.p_star_alpha()
            )));
        }
        if !(theta >= 0.0 && theta <= pbar / pbar_star) {
            return Err(SobolevError::Params(format!(
                "θ = {theta} must lie in [0, {}]",
                pbar / pbar_star
            )));
        }
        Ok(out)
    }

    /// Unit weights, `σ = 1`, `θ = p̄/p̄*`.
    pub fn unit_weights(p: Vec<f64>) -> Result<Self, SobolevError> {
        let n = p.len();
        let pbar = harmonic_mean(&p)?;
        let theta = pbar / sobolev_conjugate(pbar, n)?;
        Self::new(p, vec![1.0; n], 1.0, theta)
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn exponents(&self) -> &[f64] {
        &self.p
    }

    pub fn weights(&self) -> &[f64] {
        &self.alpha
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn pbar(&self) -> f64 {
        self.pbar
    }

    pub fn pbar_star(&self) -> f64 {
        self.pbar_star
    }

    /// `α̃ = Σ α_i`.
    pub fn alpha_tilde(&self) -> f64 {
        self.alpha.iter().sum()
    }

    pub fn p_star_alpha(&self) -> f64 {
        self.pbar_star * self.alpha_tilde() / self.dim() as f64
    }

    /// `q = θ p*_α + σ(1 - θ)`.
    pub fn q(&self) -> f64 {
        self.theta * self.p_star_alpha() + self.sigma * (1.0 - self.theta)
    }
}

/// `Σ_cells |u|^r · vol`.
fn power_integral(field: &ScalarField, r: f64) -> f64 {
    let mut s = NeumaierSum::default();
    for &v in field.values() {
        if v != 0.0 {
            s.add(v.abs().powf(r));
        }
    }
    s.total() * field.grid().cell_volume()
}

/// `Σ_cells |D_i⁺ |u|^{α}|^{p} · vol` with forward differences; the cell past
/// the last one counts as zero.
fn gradient_integral(field: &ScalarField, axis: usize, alpha: f64, p: f64) -> f64 {
    let grid = field.grid();
    let u = field.values();
    let w: Vec<f64> = u
        .iter()
        .map(|&v| if v == 0.0 { 0.0 } else { v.abs().powf(alpha) })
        .collect();
    let stride = grid.strides()[axis];
    let n = grid.cells()[axis];
    let h = grid.spacing()[axis];
    let mut s = NeumaierSum::default();
    for (k, &wk) in w.iter().enumerate() {
        let next = if (k / stride) % n + 1 < n {
            w[k + stride]
        } else {
            0.0
        };
        let d = next - wk;
        if d != 0.0 {
            s.add((d / h).abs().powf(p));
        }
    }
    s.total() * grid.cell_volume()
}

fn check_field(field: &ScalarField, params: &SobolevParams) -> Result<(), SobolevError> {
    if field.grid().dim() != params.dim() {
        return Err(SobolevError::Contract(format!(
            "field is {}-D, exponents are {}-D",
            field.grid().dim(),
            params.dim()
        )));
    }
    if !field.collar_is_zero() {
        return Err(SobolevError::Contract(
            "field does not vanish on the boundary".into(),
        ));
    }
    Ok(())
}

/// Both sides of the elliptic inequality.
pub fn elliptic_sides(
    field: &ScalarField,
    params: &SobolevParams,
) -> Result<(f64, f64), SobolevError> {
    check_field(field, params)?;
    let ps = params.p_star_alpha();
    let lhs = power_integral(field, ps).powf(1.0 / ps);
    let at = params.alpha_tilde();
    let mut rhs = 1.0;
    for i in 0..params.dim() {
        let g = gradient_integral(field, i, params.alpha[i], params.p[i]);
        rhs *= g.powf(1.0 / (params.p[i] * at));
    }
    Ok((lhs, rhs))
}

/// Both sides of the space-time inequality for time slices of equal length
/// `T / slices.len()`:
/// `lhs = ∬|u|^q`, `rhs = T^{1-θp̄*/p̄} (sup_t ∫|u|^σ)^{1-θ} Π_i (∬|D_i|u|^{α_i}|^{p_i})^{θp̄*/(N p_i)}`.
pub fn parabolic_sides(
    slices: &[ScalarField],
    params: &SobolevParams,
    horizon: f64,
) -> Result<(f64, f64), SobolevError> {
    if slices.is_empty() {
        return Err(SobolevError::Contract("no time slices".into()));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(SobolevError::Contract(format!(
            "T = {horizon} must be positive"
        )));
    }
    let dt = horizon / slices.len() as f64;
    let n = params.dim() as f64;
    let q = params.q();
    let (theta, ps, pb) = (params.theta, params.pbar_star, params.pbar);
    let mut lhs = NeumaierSum::default();
    let mut sup = 0.0f64;
    let mut grads = vec![NeumaierSum::default(); params.dim()];
    for slice in slices {
        check_field(slice, params)?;
        lhs.add(power_integral(slice, q) * dt);
        sup = sup.max(power_integral(slice, params.sigma));
        for (i, g) in grads.iter_mut().enumerate() {
            g.add(gradient_integral(slice, i, params.alpha[i], params.p[i]) * dt);
        }
    }
    let mut rhs = horizon.powf(1.0 - theta * ps / pb) * sup.powf(1.0 - theta);
    for (i, g) in grads.iter().enumerate() {
        rhs *= g.total().powf(theta * ps / (n * params.p[i]));
    }
    Ok((lhs.total(), rhs))
}

/// `lhs / rhs` with `0/0 = 0`; `None` when the pair violates the inequality
/// outright (positive lhs over zero rhs, or nonfinite values).
pub fn ratio(lhs: f64, rhs: f64) -> Option<f64> {
    if !lhs.is_finite() || !rhs.is_finite() {
        None
    } else if rhs == 0.0 {
        (lhs == 0.0).then_some(0.0)
    } else {
        Some(lhs / rhs)
    }
}

/// A space-time sample: `slices` over `[0, horizon]`.
#[derive(Debug, Clone)]
pub struct SpaceTimeSample {
    pub slices: Vec<ScalarField>,
    pub horizon: f64,
}

pub trait FieldSampler {
    fn grid(&self) -> &Arc<Grid>;
    fn sample(&self, rng: &mut ChaCha8Rng) -> SpaceTimeSample;
}

/// Always the zero field.
#[derive(Debug, Clone)]
pub struct ZeroSampler {
    pub grid: Arc<Grid>,
}

impl FieldSampler for ZeroSampler {
    fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn sample(&self, _rng: &mut ChaCha8Rng) -> SpaceTimeSample {
        SpaceTimeSample {
            slices: vec![ScalarField::zeros(Arc::clone(&self.grid))],
            horizon: 1.0,
        }
    }
}

/// Sums of 1–`max_bumps` smooth `cos²` bumps with random centres, widths
/// (log-uniform between four cells and half the box) and signed log-uniform
/// amplitudes, each modulated in time by `1 + ½ sin(ωt + φ)`; boundary cells
/// are zeroed.
#[derive(Debug, Clone)]
pub struct RandomBumps {
    pub grid: Arc<Grid>,
    pub max_bumps: usize,
    pub time_slices: usize,
}

impl RandomBumps {
    pub fn new(grid: Grid) -> Self {
        Self {
            grid: Arc::new(grid),
            max_bumps: 4,
            time_slices: 4,
        }
    }
}

struct Bump {
    centre: Vec<f64>,
    width: Vec<f64>,
    amplitude: f64,
    omega: f64,
    phase: f64,
}

impl FieldSampler for RandomBumps {
    fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> SpaceTimeSample {
        let grid = &self.grid;
        let dim = grid.dim();
        let count = rng.gen_range(1..=self.max_bumps.max(1));
        let bumps: Vec<Bump> = (0..count)
            .map(|_| {
                let width: Vec<f64> = (0..dim)
                    .map(|i| {
                        let (lo, hi) = (4.0 * grid.spacing()[i], 0.5 * grid.half_widths()[i]);
                        (rng.gen_range(lo.ln()..hi.ln().max(lo.ln() + 1e-12))).exp()
                    })
                    .collect();
                let centre = (0..dim)
                    .map(|i| {
                        let reach = grid.half_widths()[i] - width[i];
                        rng.gen_range(-reach..reach.max(-reach + 1e-12))
                    })
                    .collect();
                let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                Bump {
                    centre,
                    width,
                    amplitude: sign * 10f64.powf(rng.gen_range(-2.0..2.0)),
                    omega: rng.gen_range(0.0..2.0 * std::f64::consts::PI),
                    phase: rng.gen_range(0.0..2.0 * std::f64::consts::PI),
                }
            })
            .collect();
        let horizon = 10f64.powf(rng.gen_range(-1.0..1.0));
        let slices = (0..self.time_slices.max(1))
            .map(|k| {
                let t = horizon * (k as f64 + 0.5) / self.time_slices.max(1) as f64;
                let mut f = ScalarField::from_fn(Arc::clone(grid), |x| {
                    bumps
                        .iter()
                        .map(|b| {
                            let mut v =
                                b.amplitude * (1.0 + 0.5 * (b.omega * t / horizon + b.phase).sin());
                            for i in 0..x.len() {
                                let r = (x[i] - b.centre[i]) / b.width[i];
                                if r.abs() >= 1.0 {
                                    return 0.0;
                                }
                                v *= (std::f64::consts::FRAC_PI_2 * r).cos().powi(2);
                            }
                            v
                        })
                        .sum()
                });
                zero_collar(&mut f);
                f.with_time(t)
            })
            .collect();
        SpaceTimeSample { slices, horizon }
    }
}

fn zero_collar(f: &mut ScalarField) {
    let grid = f.shared_grid();
    for (k, v) in f.values_mut().iter_mut().enumerate() {
        if grid.in_collar(k) {
            *v = 0.0;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub elliptic: (f64, f64),
    pub parabolic: (f64, f64),
    pub elliptic_ratio: f64,
    pub parabolic_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inequality {
    Elliptic,
    Parabolic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub trial: u64,
    pub inequality: Inequality,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantEstimate {
    pub trials: Vec<TrialRecord>,
    pub violations: Vec<Violation>,
}

impl ConstantEstimate {
    /// Empirical elliptic constant (max ratio; 0 without samples).
    pub fn elliptic_constant(&self) -> f64 {
        self.trials
            .iter()
            .map(|t| t.elliptic_ratio)
            .fold(0.0, f64::max)
    }

    pub fn parabolic_constant(&self) -> f64 {
        self.trials
            .iter()
            .map(|t| t.parabolic_ratio)
            .fold(0.0, f64::max)
    }

    /// CSV of per-trial ratios.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,seed,st_lhs,st_rhs,st_ratio,ps_lhs,ps_rhs,ps_ratio\n");
        for t in &self.trials {
            let _ = writeln!(
                out,
                "{},{},{:e},{:e},{:e},{:e},{:e},{:e}",
                t.trial,
                t.seed,
                t.elliptic.0,
                t.elliptic.1,
                t.elliptic_ratio,
                t.parabolic.0,
                t.parabolic.1,
                t.parabolic_ratio
            );
        }
        out
    }
}

/// Runs `trials` independent samples; trial `k` draws from
/// `ChaCha8(split_seed(master_seed, k))`, so results do not depend on
/// evaluation order and a longer run extends a shorter one.
pub fn estimate_constant<S: FieldSampler + ?Sized>(
    sampler: &S,
    master_seed: u64,
    trials: u64,
    params: &SobolevParams,
) -> Result<ConstantEstimate, SobolevError> {
    let mut out = ConstantEstimate {
        trials: Vec::with_capacity(trials as usize),
        violations: Vec::new(),
    };
    for trial in 0..trials {
        let seed = split_seed(master_seed, trial);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sample = sampler.sample(&mut rng);
        // the elliptic check uses the middle slice
        let elliptic = elliptic_sides(&sample.slices[sample.slices.len() / 2], params)?;
        let parabolic = parabolic_sides(&sample.slices, params, sample.horizon)?;
        let mut record = |ineq, (lhs, rhs): (f64, f64)| match ratio(lhs, rhs) {
            Some(r) => r,
            None => {
                out.violations.push(Violation {
                    trial,
                    inequality: ineq,
                    lhs,
                    rhs,
                });
                f64::NAN
            }
        };
        let elliptic_ratio = record(Inequality::Elliptic, elliptic);
        let parabolic_ratio = record(Inequality::Parabolic, parabolic);
        out.trials.push(TrialRecord {
            trial,
            seed,
            elliptic,
            parabolic,
            elliptic_ratio,
            parabolic_ratio,
        });
    }
    Ok(out)
}
