//! Self-similar solutions emanating from the zero datum in one dimension.
//!
//! The ansatz `u(x, t) = t^{-α} U(x t^β)` (zero for `x t^β < 1`) turns
//! `u_t = (|u_x|^{p-2} u_x)_x` into the first-order system
//!
//! ```text
//! U' = |V|^{(2-p)/(p-1)} V,      V' = -αU + β s U',      U(1) = V(1) = 0,
//! ```
//!
//! with `(p - 2)α = 1 + pβ`. The zero solution is one trajectory; a second,
//! nontrivial one is obtained by Picard iteration on an invariant cone
//! `C_{δ,a,b}` around `(0, a(s-1)^k)`, `k = (p-1)/(p-2)`, and then continued
//! with an adaptive RK4 integrator.

use std::fmt::Write as _;

use thiserror::Error;

use crate::solver::signed_power;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelfSimError {
    #[error("regime error: {0}")]
    Regime(String),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error(
        "Picard iteration did not converge in {iterations} iterations (last change {change:e})"
    )]
    NonConvergence { iterations: usize, change: f64 },
    #[error("iterate {iteration} left the cone at s = {s}: {component} = {value:e} outside [{lower:e}, {upper:e}]")]
    ConeViolation {
        iteration: usize,
        s: f64,
        component: &'static str,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("integration failed at s = {s}")]
    IntegrationFailure { s: f64 },
    #[error("s = {s} lies outside the computed range [1, {s_max}]")]
    OutOfRange { s: f64, s_max: f64 },
}

/// Exponents of the ansatz. `α` is tied to `(p, β)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfSimilarParams {
    p: f64,
    alpha: f64,
    beta: f64,
}

impl SelfSimilarParams {
    /// `α = (1 + pβ)/(p - 2)`.
    pub fn from_beta(p: f64, beta: f64) -> Result<Self, SelfSimError> {
        if !(p > 2.0) || !p.is_finite() {
            return Err(SelfSimError::Regime(format!("p = {p} must exceed 2")));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(SelfSimError::Regime(format!("β = {beta} must be positive")));
        }
        Ok(Self {
            p,
            alpha: (1.0 + p * beta) / (p - 2.0),
            beta,
        })
    }

    /// Checks `(p - 2)α = 1 + pβ` to 1e-12 (relative).
    pub fn new(p: f64, alpha: f64, beta: f64) -> Result<Self, SelfSimError> {
        let derived = Self::from_beta(p, beta)?;
        let lhs = (p - 2.0) * alpha;
        let rhs = 1.0 + p * beta;
        if (lhs - rhs).abs() > 1e-12 * rhs {
            return Err(SelfSimError::Contract(format!(
                "(p-2)α = {lhs} differs from 1+pβ = {rhs}"
            )));
        }
        Ok(Self { alpha, ..derived })
    }

    /// No scaling check; only meant for negative controls.
    pub fn unchecked(p: f64, alpha: f64, beta: f64) -> Self {
        Self { p, alpha, beta }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Cone exponent `(p-1)/(p-2)`.
    pub fn cone_exponent(&self) -> f64 {
        (self.p - 1.0) / (self.p - 2.0)
    }

    /// `U' = sgn(V)|V|^{1/(p-1)}`.
    #[inline]
    pub fn slope(&self, v: f64) -> f64 {
        signed_power(v, 1.0 / (self.p - 1.0))
    }

    /// Right-hand side of the system.
    #[inline]
    pub fn rhs(&self, s: f64, u: f64, v: f64) -> (f64, f64) {
        let du = self.slope(v);
        (du, -self.alpha * u + self.beta * s * du)
    }

    /// `E = (α/2)U² + ((p-1)/p)|V|^{p/(p-1)}`.
    pub fn energy(&self, u: f64, v: f64) -> f64 {
        0.5 * self.alpha * u * u + (self.p - 1.0) / self.p * v.abs().powf(self.p / (self.p - 1.0))
    }

    /// `E' = β s |V|^{2/(p-1)}` along solutions.
    pub fn energy_rate(&self, s: f64, v: f64) -> f64 {
        self.beta * s * v.abs().powf(2.0 / (self.p - 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeConstants {
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub delta_bar: f64,
}

pub const DEFAULT_DELTA_BAR: f64 = 0.5;

/// `a`, `b` from `((p-1)/(p-2)) a^{(p-2)/(p-1)} = β/2` and
/// `((p-1)/(p-2)) b^{(p-2)/(p-1)} = max(1, 2β)`;
/// `δ = min(δ̄, β a^{1/(p-1)} (2p-3) / (2αb(p-1)))`.
pub fn cone_constants(
    params: &SelfSimilarParams,
    delta_bar: f64,
) -> Result<ConeConstants, SelfSimError> {
    let p = params.p;
    if !(p > 2.0) {
        return Err(SelfSimError::Regime(format!("p = {p} must exceed 2")));
    }
    if !(delta_bar > 0.0 && delta_bar < 1.0) {
        return Err(SelfSimError::Contract(format!(
            "δ̄ = {delta_bar} must lie in (0, 1)"
        )));
    }
    let ratio = (p - 2.0) / (p - 1.0);
    let a = (ratio * params.beta / 2.0).powf(1.0 / ratio);
    let b = (ratio * 1f64.max(2.0 * params.beta)).powf(1.0 / ratio);
    let bound = params.beta * a.powf(1.0 / (p - 1.0)) * (2.0 * p - 3.0)
        / (2.0 * params.alpha * b * (p - 1.0));
    Ok(ConeConstants {
        a,
        b,
        delta: delta_bar.min(bound),
        delta_bar,
    })
}

/// Nodal values `(s_k, U_k, V_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfSimilarTrajectory {
    pub s: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl SelfSimilarTrajectory {
    /// The trivial trajectory on the given nodes.
    pub fn zero(s: Vec<f64>) -> Self {
        let n = s.len();
        Self {
            s,
            u: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn s_max(&self) -> f64 {
        *self.s.last().unwrap_or(&1.0)
    }

    pub fn energy(&self, params: &SelfSimilarParams) -> Vec<f64> {
        self.u
            .iter()
            .zip(&self.v)
            .map(|(&u, &v)| params.energy(u, v))
            .collect()
    }

    /// Restriction to nodes with `s ≤ s_max`.
    pub fn truncated(&self, s_max: f64) -> Self {
        let n = self.s.partition_point(|&s| s <= s_max);
        Self {
            s: self.s[..n].to_vec(),
            u: self.u[..n].to_vec(),
            v: self.v[..n].to_vec(),
        }
    }

    /// CSV with columns `s,U,V,E`.
    pub fn to_csv(&self, params: &SelfSimilarParams) -> String {
        let mut out = String::from("s,U,V,E\n");
        for k in 0..self.len() {
            let _ = writeln!(
                out,
                "{:e},{:e},{:e},{:e}",
                self.s[k],
                self.u[k],
                self.v[k],
                params.energy(self.u[k], self.v[k])
            );
        }
        out
    }
}

/// Uniform nodes on `[1, 1 + δ]` with at least `nodes_per_unit` per unit s.
pub fn uniform_nodes(delta: f64, nodes_per_unit: usize) -> Vec<f64> {
    let n = ((delta * nodes_per_unit as f64).ceil() as usize).max(2);
    (0..=n).map(|k| 1.0 + delta * k as f64 / n as f64).collect()
}

/// Lower edge of the cone, `x̄(s) = (0, a(s-1)^k)`.
pub fn initial_iterate(
    params: &SelfSimilarParams,
    cone: &ConeConstants,
    s: &[f64],
) -> SelfSimilarTrajectory {
    let k = params.cone_exponent();
    SelfSimilarTrajectory {
        s: s.to_vec(),
        u: vec![0.0; s.len()],
        v: s.iter().map(|&si| cone.a * (si - 1.0).powf(k)).collect(),
    }
}

/// `T(x)(s) = ∫₁^s F(σ, x(σ)) dσ` by the cumulative trapezoid rule.
pub fn picard_operator(
    params: &SelfSimilarParams,
    x: &SelfSimilarTrajectory,
) -> SelfSimilarTrajectory {
    let n = x.len();
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    if n == 0 {
        return SelfSimilarTrajectory { s: vec![], u, v };
    }
    let mut prev = params.rhs(x.s[0], x.u[0], x.v[0]);
    for k in 1..n {
        let cur = params.rhs(x.s[k], x.u[k], x.v[k]);
        let h = x.s[k] - x.s[k - 1];
        u[k] = u[k - 1] + 0.5 * h * (prev.0 + cur.0);
        v[k] = v[k - 1] + 0.5 * h * (prev.1 + cur.1);
        prev = cur;
    }
    SelfSimilarTrajectory {
        s: x.s.clone(),
        u,
        v,
    }
}

/// Rounding slack for cone membership.
const CONE_SLACK: f64 = 1e-12;

/// `0 ≤ U ≤ b(s-1)^k` and `a(s-1)^k ≤ V ≤ b(s-1)^k` at every node.
pub fn check_cone(
    params: &SelfSimilarParams,
    cone: &ConeConstants,
    x: &SelfSimilarTrajectory,
    iteration: usize,
) -> Result<(), SelfSimError> {
    let k = params.cone_exponent();
    for i in 0..x.len() {
        let w = (x.s[i] - 1.0).max(0.0).powf(k);
        let (lo_v, hi) = (cone.a * w, cone.b * w);
        let slack = CONE_SLACK * hi + f64::MIN_POSITIVE;
        let fail = |component, value, lower, upper| SelfSimError::ConeViolation {
            iteration,
            s: x.s[i],
            component,
            value,
            lower,
            upper,
        };
        if x.u[i] < -slack || x.u[i] > hi + slack {
            return Err(fail("U", x.u[i], 0.0, hi));
        }
        if x.v[i] < lo_v - slack || x.v[i] > hi + slack {
            return Err(fail("V", x.v[i], lo_v, hi));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    pub nodes_per_unit: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            nodes_per_unit: 10_000,
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardOutcome {
    pub trajectory: SelfSimilarTrajectory,
    pub iterations: usize,
    /// Sup-norm change per iteration.
    pub history: Vec<f64>,
}

impl PicardOutcome {
    /// Last fixed-point residual `‖T(x) - x‖_∞`.
    pub fn residual(&self) -> f64 {
        *self.history.last().unwrap_or(&0.0)
    }
}

/// Iterates `x ← T(x)` from the lower cone edge until the sup-norm change
/// drops below `tol`, checking cone membership of every iterate.
pub fn picard_iterate(
    params: &SelfSimilarParams,
    cone: &ConeConstants,
    options: &PicardOptions,
) -> Result<PicardOutcome, SelfSimError> {
    if !(options.tol > 0.0) {
        return Err(SelfSimError::Contract(format!(
            "tol = {} must be positive",
            options.tol
        )));
    }
    if options.nodes_per_unit == 0 {
        return Err(SelfSimError::Contract("resolution must be positive".into()));
    }
    let s = uniform_nodes(cone.delta, options.nodes_per_unit);
    let mut x = initial_iterate(params, cone, &s);
    check_cone(params, cone, &x, 0)?;
    let mut history = Vec::new();
    for it in 1..=options.max_iter {
        let next = picard_operator(params, &x);
        check_cone(params, cone, &next, it)?;
        let change = sup_change(&x, &next);
        history.push(change);
        x = next;
        if change < options.tol {
            return Ok(PicardOutcome {
                trajectory: x,
                iterations: it,
                history,
            });
        }
    }
    Err(SelfSimError::NonConvergence {
        iterations: options.max_iter,
        change: *history.last().unwrap_or(&f64::NAN),
    })
}

fn sup_change(a: &SelfSimilarTrajectory, b: &SelfSimilarTrajectory) -> f64 {
    a.u.iter()
        .zip(&b.u)
        .chain(a.v.iter().zip(&b.v))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendOptions {
    pub s_max: f64,
    pub h_max: f64,
    /// Local error tolerance per step, relative to `1 + |state|`.
    pub rel_tol: f64,
    /// Near a zero of `V` the step is capped by `grading · |V|/|V'|`
    /// (but not below `h_min`): `U'` is only Hölder there.
    pub grading: f64,
    pub h_min: f64,
}

impl ExtendOptions {
    pub fn new(s_max: f64, nodes_per_unit: usize) -> Self {
        Self {
            s_max,
            h_max: 1.0 / nodes_per_unit.max(1) as f64,
            rel_tol: 1e-10,
            grading: 0.1,
            h_min: 1e-10,
        }
    }
}

/// Continues `trajectory` to `s_max` with classical RK4 and step-doubling
/// error control.
pub fn extend(
    params: &SelfSimilarParams,
    trajectory: &SelfSimilarTrajectory,
    options: &ExtendOptions,
) -> Result<SelfSimilarTrajectory, SelfSimError> {
    if trajectory.is_empty() {
        return Err(SelfSimError::Contract(
            "cannot extend an empty trajectory".into(),
        ));
    }
    let mut out = trajectory.clone();
    let mut s = trajectory.s_max();
    if options.s_max <= s {
        return Ok(out);
    }
    let mut y = (*out.u.last().unwrap(), *out.v.last().unwrap());
    let mut h = options.h_max;
    let rk4 = |s: f64, y: (f64, f64), h: f64| {
        let k1 = params.rhs(s, y.0, y.1);
        let k2 = params.rhs(s + h / 2.0, y.0 + h / 2.0 * k1.0, y.1 + h / 2.0 * k1.1);
        let k3 = params.rhs(s + h / 2.0, y.0 + h / 2.0 * k2.0, y.1 + h / 2.0 * k2.1);
        let k4 = params.rhs(s + h, y.0 + h * k3.0, y.1 + h * k3.1);
        (
            y.0 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            y.1 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        )
    };
    while s < options.s_max {
        let dv = params.rhs(s, y.0, y.1).1;
        if dv != 0.0 {
            h = h.min((options.grading * y.1.abs() / dv.abs()).max(options.h_min));
        }
        h = h.min(options.s_max - s);
        let full = rk4(s, y, h);
        let mid = rk4(s, y, h / 2.0);
        let half = rk4(s + h / 2.0, mid, h / 2.0);
        if !(half.0.is_finite() && half.1.is_finite()) {
            return Err(SelfSimError::IntegrationFailure { s });
        }
        let err = (half.0 - full.0).abs().max((half.1 - full.1).abs()) / 15.0;
        let scale = 1.0 + half.0.abs().max(half.1.abs());
        let tol = options.rel_tol * scale;
        if err <= tol {
            s = if options.s_max - s - h <= 1e-14 * options.s_max {
                options.s_max
            } else {
                s + h
            };
            // Richardson-corrected step
            y = (
                half.0 + (half.0 - full.0) / 15.0,
                half.1 + (half.1 - full.1) / 15.0,
            );
            out.s.push(s);
            out.u.push(y.0);
            out.v.push(y.1);
        }
        let factor = if err == 0.0 {
            2.0
        } else {
            (0.9 * (tol / err).powf(0.2)).clamp(0.2, 2.0)
        };
        h = (h * factor).min(options.h_max);
        if h < 1e-3 * options.h_min {
            return Err(SelfSimError::IntegrationFailure { s });
        }
    }
    Ok(out)
}

/// Outcome of a pointwise check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckReport {
    pub passed: bool,
    pub first_failure: Option<f64>,
    /// Largest scaled defect encountered (passes when ≤ 1).
    pub max_defect: f64,
}

impl CheckReport {
    fn new() -> Self {
        Self {
            passed: true,
            first_failure: None,
            max_defect: 0.0,
        }
    }

    fn record(&mut self, s: f64, defect: f64) {
        self.max_defect = self.max_defect.max(defect);
        if defect > 1.0 && self.passed {
            self.passed = false;
            self.first_failure = Some(s);
        }
    }
}

/// Three-point derivative at node `k` on a possibly nonuniform grid:
/// centred in the interior, one-sided first order at the ends.
fn nodal_derivative(s: &[f64], f: &[f64], k: usize) -> f64 {
    let n = s.len();
    if k == 0 {
        (f[1] - f[0]) / (s[1] - s[0])
    } else if k == n - 1 {
        (f[n - 1] - f[n - 2]) / (s[n - 1] - s[n - 2])
    } else {
        let (hm, hp) = (s[k] - s[k - 1], s[k + 1] - s[k]);
        (hm * hm * f[k + 1] - hp * hp * f[k - 1] + (hp * hp - hm * hm) * f[k])
            / (hm * hp * (hm + hp))
    }
}

/// Energy identity `E' = β s |V|^{2/(p-1)}` at interior nodes, with `E'`
/// assembled by the chain rule from difference quotients of `U` and `V`, plus
/// monotonicity of `E`.
pub fn energy_monotone_check(
    params: &SelfSimilarParams,
    x: &SelfSimilarTrajectory,
    tol: f64,
) -> CheckReport {
    let mut report = CheckReport::new();
    let n = x.len();
    if n < 3 {
        return report;
    }
    let e = x.energy(params);
    for k in 1..n - 1 {
        let du = nodal_derivative(&x.s, &x.u, k);
        let dv = nodal_derivative(&x.s, &x.v, k);
        let lhs = params.alpha * x.u[k] * du + params.slope(x.v[k]) * dv;
        let rhs = params.energy_rate(x.s[k], x.v[k]);
        report.record(x.s[k], (lhs - rhs).abs() / (tol * (1.0 + e[k].abs())));
    }
    // E nondecreasing, up to the same tolerance on the difference quotient
    for k in 1..n {
        let slope = (e[k] - e[k - 1]) / (x.s[k] - x.s[k - 1]);
        if slope < -tol * (1.0 + e[k - 1].abs()) {
            report.record(x.s[k], f64::INFINITY);
        }
    }
    report
}

/// `U' = |V|^{(2-p)/(p-1)} V` against difference quotients of `U`, on nodes
/// with `s ≥ s_from`.
pub fn flux_consistency_check(
    params: &SelfSimilarParams,
    x: &SelfSimilarTrajectory,
    tol: f64,
    s_from: f64,
) -> CheckReport {
    let mut report = CheckReport::new();
    if x.len() < 2 {
        return report;
    }
    for k in 0..x.len() {
        if x.s[k] < s_from {
            continue;
        }
        let du = nodal_derivative(&x.s, &x.u, k);
        report.record(x.s[k], (du - params.slope(x.v[k])).abs() / tol);
    }
    report
}

/// `u(x, t) = t^{-α} U(x t^β)` for `x t^β ≥ 1`, zero otherwise, with `U`
/// interpolated by cubic Hermite polynomials using the exact nodal slopes.
#[derive(Debug, Clone)]
pub struct SelfSimilarSolution {
    params: SelfSimilarParams,
    s: Vec<f64>,
    u: Vec<f64>,
    du: Vec<f64>,
}

pub fn build_solution(
    trajectory: &SelfSimilarTrajectory,
    params: &SelfSimilarParams,
) -> Result<SelfSimilarSolution, SelfSimError> {
    if trajectory.len() < 2 || trajectory.s[0] != 1.0 {
        return Err(SelfSimError::Contract(
            "trajectory must start at s = 1 with at least two nodes".into(),
        ));
    }
    if trajectory.s.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SelfSimError::Contract(
            "trajectory nodes must increase".into(),
        ));
    }
    Ok(SelfSimilarSolution {
        params: *params,
        s: trajectory.s.clone(),
        u: trajectory.u.clone(),
        du: trajectory.v.iter().map(|&v| params.slope(v)).collect(),
    })
}

impl SelfSimilarSolution {
    pub fn params(&self) -> &SelfSimilarParams {
        &self.params
    }

    pub fn s_max(&self) -> f64 {
        *self.s.last().unwrap()
    }

    /// Support predicate `x t^β ≥ 1`.
    pub fn in_support(&self, x: f64, t: f64) -> bool {
        x * t.powf(self.params.beta) >= 1.0
    }

    /// Profile `U(s)`; zero for `s < 1`.
    pub fn profile(&self, s: f64) -> Result<f64, SelfSimError> {
        if s < 1.0 {
            return Ok(0.0);
        }
        let s_max = self.s_max();
        if s > s_max {
            return Err(SelfSimError::OutOfRange { s, s_max });
        }
        let k = (self.s.partition_point(|&si| si <= s)).clamp(1, self.s.len() - 1) - 1;
        let (s0, s1) = (self.s[k], self.s[k + 1]);
        let h = s1 - s0;
        let t = (s - s0) / h;
        let (t2, t3) = (t * t, t * t * t);
        Ok((2.0 * t3 - 3.0 * t2 + 1.0) * self.u[k]
            + (t3 - 2.0 * t2 + t) * h * self.du[k]
            + (-2.0 * t3 + 3.0 * t2) * self.u[k + 1]
            + (t3 - t2) * h * self.du[k + 1])
    }

    /// `u(x, t)` for `t > 0`.
    pub fn eval(&self, x: f64, t: f64) -> Result<f64, SelfSimError> {
        if !(t > 0.0) {
            return Err(SelfSimError::Contract(format!("t = {t} must be positive")));
        }
        let s = x * t.powf(self.params.beta);
        if s < 1.0 {
            return Ok(0.0);
        }
        Ok(t.powf(-self.params.alpha) * self.profile(s)?)
    }
}

/// Rectangle `[t0, t1] × [x0, x1]` in the `(t, x)` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualWindow {
    pub t: (f64, f64),
    pub x: (f64, f64),
}

/// Max over the window of the centred-difference residual of
/// `u_t - (|u_x|^{p-2}u_x)_x` with spacings `(h, dt)`.
pub fn residual_check(
    solution: &SelfSimilarSolution,
    window: &ResidualWindow,
    h: f64,
    dt: f64,
    margin: f64,
) -> Result<f64, SelfSimError> {
    let (t0, t1) = window.t;
    let (x0, x1) = window.x;
    if !(h > 0.0 && dt > 0.0) || !(t0 - dt > 0.0) || t1 < t0 || x1 < x0 {
        return Err(SelfSimError::Contract(
            "degenerate residual window or spacings".into(),
        ));
    }
    let beta = solution.params.beta;
    let s_lo = (x0 - h) * (t0 - dt).powf(beta);
    let s_hi = (x1 + h) * (t1 + dt).powf(beta);
    if s_lo <= 1.0 + margin {
        return Err(SelfSimError::Contract(format!(
            "window reaches s = {s_lo}, within {margin} of the free boundary"
        )));
    }
    if s_hi > solution.s_max() {
        return Err(SelfSimError::OutOfRange {
            s: s_hi,
            s_max: solution.s_max(),
        });
    }
    let p = solution.params.p;
    let nt = ((t1 - t0) / dt).round().max(0.0) as usize;
    let nx = ((x1 - x0) / h).round().max(0.0) as usize;
    let mut worst = 0.0f64;
    for i in 0..=nt {
        let t = t0 + i as f64 * dt;
        for j in 0..=nx {
            let x = x0 + j as f64 * h;
            let ut = (solution.eval(x, t + dt)? - solution.eval(x, t - dt)?) / (2.0 * dt);
            let (um, uc, up) = (
                solution.eval(x - h, t)?,
                solution.eval(x, t)?,
                solution.eval(x + h, t)?,
            );
            let fp = signed_power((up - uc) / h, p - 1.0);
            let fm = signed_power((uc - um) / h, p - 1.0);
            worst = worst.max((ut - (fp - fm) / h).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> (SelfSimilarParams, ConeConstants) {
        let params = SelfSimilarParams::from_beta(3.0, 1.0).unwrap();
        let cone = cone_constants(&params, DEFAULT_DELTA_BAR).unwrap();
        (params, cone)
    }

    #[test]
    fn p3_constants() {
        let (params, cone) = p3();
        assert_eq!(params.alpha(), 4.0);
        assert!((cone.b - 1.0).abs() < 1e-15);
        assert!((cone.a - 1.0 / 16.0).abs() < 1e-15);
        assert!((cone.delta - 3.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn constants_satisfy_defining_identities() {
        for &(p, beta) in &[(2.5, 0.3), (3.0, 1.0), (4.0, 2.0), (6.0, 0.05)] {
            let params = SelfSimilarParams::from_beta(p, beta).unwrap();
            let c = cone_constants(&params, 0.5).unwrap();
            let r = (p - 1.0) / (p - 2.0);
            assert!((r * c.b.powf(1.0 / r) - 1f64.max(2.0 * beta)).abs() < 1e-12);
            assert!((r * c.a.powf(1.0 / r) - beta / 2.0).abs() < 1e-12);
            assert!(c.a <= c.b);
        }
    }

    #[test]
    fn small_beta_limit() {
        let params = SelfSimilarParams::from_beta(3.0, 1e-9).unwrap();
        let c = cone_constants(&params, 0.5).unwrap();
        assert!(c.a < 1e-15);
        assert!((c.b - 0.25).abs() < 1e-12);
    }

    #[test]
    fn regime_and_constraint_errors() {
        assert!(matches!(
            SelfSimilarParams::from_beta(2.0, 1.0),
            Err(SelfSimError::Regime(_))
        ));
        assert!(SelfSimilarParams::new(3.0, 4.0, 1.0).is_ok());
        assert!(matches!(
            SelfSimilarParams::new(3.0, 4.1, 1.0),
            Err(SelfSimError::Contract(_))
        ));
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let (params, _) = p3();
        let z = SelfSimilarTrajectory::zero(uniform_nodes(0.05, 1000));
        assert_eq!(picard_operator(&params, &z), z);
    }

    #[test]
    fn initial_iterate_sits_on_lower_edge() {
        let (params, cone) = p3();
        let x = initial_iterate(&params, &cone, &uniform_nodes(cone.delta, 1000));
        check_cone(&params, &cone, &x, 0).unwrap();
        let last = x.len() - 1;
        assert_eq!(x.v[last], cone.a * (x.s[last] - 1.0).powi(2));
    }

    #[test]
    fn picard_converges_inside_the_cone() {
        let (params, cone) = p3();
        let out = picard_iterate(&params, &cone, &PicardOptions::default()).unwrap();
        assert!(out.residual() < 1e-10);
        assert!(out.iterations <= 200);
        let x = &out.trajectory;
        let d2 = cone.delta * cone.delta;
        let v_end = *x.v.last().unwrap();
        assert!(v_end >= cone.a * d2 && v_end <= cone.b * d2);
        assert!(x.v[1..].iter().all(|&v| v > 0.0));
        assert!(flux_consistency_check(&params, x, 1e-3, 1.0).passed);
    }

    #[test]
    fn picard_reports_nonconvergence() {
        let (params, cone) = p3();
        let opts = PicardOptions {
            max_iter: 2,
            ..Default::default()
        };
        assert!(matches!(
            picard_iterate(&params, &cone, &opts),
            Err(SelfSimError::NonConvergence { .. })
        ));
    }

    #[test]
    fn cone_exit_is_reported() {
        let (params, cone) = p3();
        let mut x = initial_iterate(&params, &cone, &uniform_nodes(cone.delta, 1000));
        x.v[10] *= 0.5;
        assert!(matches!(
            check_cone(&params, &cone, &x, 3),
            Err(SelfSimError::ConeViolation { iteration: 3, .. })
        ));
    }

    #[test]
    fn extension_is_identity_at_end_of_range() {
        let (params, cone) = p3();
        let out = picard_iterate(&params, &cone, &PicardOptions::default()).unwrap();
        let same = extend(
            &params,
            &out.trajectory,
            &ExtendOptions::new(1.0 + cone.delta, 10_000),
        )
        .unwrap();
        assert_eq!(same, out.trajectory);
    }

    #[test]
    fn energy_checks() {
        let (params, cone) = p3();
        let out = picard_iterate(&params, &cone, &PicardOptions::default()).unwrap();
        let ext = extend(&params, &out.trajectory, &ExtendOptions::new(3.0, 10_000)).unwrap();
        let r = energy_monotone_check(&params, &ext, 1e-4);
        assert!(r.passed, "{r:?}");
        let long = extend(&params, &out.trajectory, &ExtendOptions::new(10.0, 10_000)).unwrap();
        assert!(energy_monotone_check(&params, &long, 1e-4).passed);
        assert!(flux_consistency_check(&params, &long, 1e-3, 1.0).passed);
        // the profile oscillates beyond the cone range; energy still grows
        let e = long.energy(&params);
        assert!(e.last().unwrap() > &e[out.trajectory.len() - 1]);
        let zero = SelfSimilarTrajectory::zero(uniform_nodes(1.0, 100));
        assert!(energy_monotone_check(&params, &zero, 1e-4).passed);
        assert!(flux_consistency_check(&params, &zero, 1e-3, 1.0).passed);

        let mut flipped = ext.clone();
        let half = flipped.len() / 2;
        for v in &mut flipped.v[half..] {
            *v = -*v;
        }
        let r = energy_monotone_check(&params, &flipped, 1e-4);
        assert!(!r.passed);
        assert!(r.first_failure.is_some());
    }

    #[test]
    fn evaluator_support_and_range() {
        let (params, cone) = p3();
        let out = picard_iterate(
            &params,
            &cone,
            &PicardOptions {
                nodes_per_unit: 1000,
                ..Default::default()
            },
        )
        .unwrap();
        let sol = build_solution(&out.trajectory, &params).unwrap();
        assert_eq!(sol.eval(0.5, 1.0).unwrap(), 0.0);
        assert_eq!(sol.eval(-3.0, 2.0).unwrap(), 0.0);
        // free boundary x = t^{-β}
        assert_eq!(sol.eval(0.5, 2.0).unwrap(), 0.0);
        assert!(sol.eval(1.01, 1.0).unwrap() > 0.0);
        assert!(!sol.in_support(0.99, 1.0) && sol.in_support(1.0, 1.0));
        assert!(matches!(
            sol.eval(2.0, 1.0),
            Err(SelfSimError::OutOfRange { .. })
        ));
        // Hermite interpolation reproduces nodes
        for k in [0, 7, 20] {
            assert!(
                (sol.profile(out.trajectory.s[k]).unwrap() - out.trajectory.u[k]).abs() < 1e-18
            );
        }
    }

    #[test]
    fn zero_evaluator_has_zero_residual() {
        let (params, _) = p3();
        let sol = build_solution(
            &SelfSimilarTrajectory::zero(uniform_nodes(2.0, 100)),
            &params,
        )
        .unwrap();
        let w = ResidualWindow {
            t: (1.0, 1.1),
            x: (1.3, 1.6),
        };
        assert_eq!(residual_check(&sol, &w, 0.01, 0.01, 0.05).unwrap(), 0.0);
        let near = ResidualWindow {
            t: (1.0, 1.1),
            x: (1.0, 1.6),
        };
        assert!(matches!(
            residual_check(&sol, &near, 0.01, 0.01, 0.05),
            Err(SelfSimError::Contract(_))
        ));
    }

    fn residuals(alpha_override: Option<f64>) -> (f64, f64) {
        let (params, cone) = p3();
        let out = picard_iterate(&params, &cone, &PicardOptions::default()).unwrap();
        let ext = extend(&params, &out.trajectory, &ExtendOptions::new(2.0, 10_000)).unwrap();
        let eval_params = match alpha_override {
            Some(a) => SelfSimilarParams::unchecked(3.0, a, 1.0),
            None => params,
        };
        let sol = build_solution(&ext, &eval_params).unwrap();
        let w = ResidualWindow {
            t: (1.0, 1.1),
            x: (1.3, 1.6),
        };
        (
            residual_check(&sol, &w, 0.02, 0.02, 0.05).unwrap(),
            residual_check(&sol, &w, 0.01, 0.01, 0.05).unwrap(),
        )
    }

    #[test]
    fn residual_shrinks_under_refinement() {
        let (coarse, fine) = residuals(None);
        assert!(fine <= coarse / 2.0, "{coarse:e} -> {fine:e}");
    }

    #[test]
    fn mismatched_alpha_leaves_a_residual() {
        let (coarse, fine) = residuals(Some(3.5));
        assert!(fine > 0.5 * coarse && fine > 1e-2, "{coarse:e} -> {fine:e}");
    }
}
