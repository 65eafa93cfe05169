//! Norms, support geometry and empirical power-law rates of computed
//! solutions, and their comparison with the predicted exponents.

use std::fmt;

use thiserror::Error;

use crate::exponents::{self, AnisotropyProfile, ExponentError};
use crate::numeric::NeumaierSum;
use crate::solver::{ScalarField, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("only {found} points in the fit window, at least {needed} are needed")]
    InsufficientPoints { found: usize, needed: usize },
    #[error("shifted value {value} at t = {time} is not positive")]
    NonpositiveShifted { time: f64, value: f64 },
    #[error("fit window [{0}, {1}] is degenerate")]
    DegenerateWindow(f64, f64),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error(transparent)]
    Exponent(#[from] ExponentError),
}

pub const MIN_FIT_POINTS: usize = 8;

/// Which cells count as support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupportThreshold {
    /// `|u| > ε`; `ε = 0` is the exact-zero support.
    Absolute(f64),
    /// `|u| > η ‖u(·,t)‖_∞`.
    RelativeToMax(f64),
}

impl SupportThreshold {
    pub fn resolve(&self, linf: f64) -> f64 {
        match *self {
            SupportThreshold::Absolute(eps) => eps,
            SupportThreshold::RelativeToMax(eta) => eta * linf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormRecord {
    pub mass: f64,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportRecord {
    pub radii: Vec<f64>,
    pub epsilon: f64,
}

/// Discrete norms and per-axis support radii `max{|x_j| : |u| > ε}`.
///
/// For `ε = 0` the radius is the farthest cell centre with `u ≠ 0`. For
/// `ε > 0` the level crossing between a cell above `ε` and its outward
/// neighbour is located by linear interpolation, which removes the
/// cell-size staircase from the radius series.
pub fn measure(field: &ScalarField, threshold: SupportThreshold) -> (NormRecord, SupportRecord) {
    let grid = field.grid();
    let values = field.values();
    let dim = grid.dim();
    let vol = grid.cell_volume();

    let mut mass = NeumaierSum::default();
    let mut l1 = NeumaierSum::default();
    let mut l2 = NeumaierSum::default();
    let mut linf = 0.0f64;
    for &v in values {
        mass.add(v);
        l1.add(v.abs());
        l2.add(v * v);
        linf = linf.max(v.abs());
    }
    let eps = threshold.resolve(linf);

    let mut radii = vec![0.0f64; dim];
    let mut multi = vec![0; dim];
    for (k, &v) in values.iter().enumerate() {
        let a = v.abs();
        if a <= eps {
            continue;
        }
        grid.multi_index(k, &mut multi);
        for axis in 0..dim {
            let x = grid.center(axis, multi[axis]);
            let mut r = x.abs();
            if eps > 0.0 {
                // outward neighbour below the level: place the crossing by
                // linear interpolation
                let n = grid.cells()[axis];
                let stride = grid.strides()[axis];
                let out = if x >= 0.0 {
                    (multi[axis] + 1 < n).then(|| k + stride)
                } else {
                    (multi[axis] > 0).then(|| k - stride)
                };
                if let Some(o) = out {
                    let b = values[o].abs();
                    if b <= eps {
                        r += grid.spacing()[axis] * (a - eps) / (a - b);
                    }
                }
            }
            radii[axis] = radii[axis].max(r);
        }
    }

    (
        NormRecord {
            mass: mass.total() * vol,
            l1: l1.total() * vol,
            l2: (l2.total() * vol).sqrt(),
            linf,
        },
        SupportRecord {
            radii,
            epsilon: eps,
        },
    )
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NormSeries {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
    pub linf: Vec<f64>,
}

impl NormSeries {
    pub fn push(&mut self, t: f64, r: &NormRecord) {
        self.times.push(t);
        self.mass.push(r.mass);
        self.l1.push(r.l1);
        self.l2.push(r.l2);
        self.linf.push(r.linf);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SupportSeries {
    pub times: Vec<f64>,
    /// `radii[k][j]`: radius along axis `j` at record `k`.
    pub radii: Vec<Vec<f64>>,
    pub epsilon: Vec<f64>,
}

impl SupportSeries {
    pub fn push(&mut self, t: f64, r: &SupportRecord) {
        self.times.push(t);
        self.radii.push(r.radii.clone());
        self.epsilon.push(r.epsilon);
    }

    pub fn axis(&self, j: usize) -> Vec<f64> {
        self.radii.iter().map(|r| r[j]).collect()
    }
}

/// Time series recorded along a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticSeries {
    pub norms: NormSeries,
    pub support: SupportSeries,
}

impl DiagnosticSeries {
    pub fn record(&mut self, field: &ScalarField, threshold: SupportThreshold) {
        let (n, s) = measure(field, threshold);
        self.norms.push(field.time(), &n);
        self.support.push(field.time(), &s);
    }

    pub fn dim(&self) -> usize {
        self.support.radii.first().map_or(0, Vec::len)
    }

    /// CSV with columns `t,mass,l1,l2,linf,R_1..R_N`.
    pub fn to_csv(&self) -> String {
        let dim = self.dim();
        let mut out = String::from("t,mass,l1,l2,linf");
        for j in 1..=dim {
            out.push_str(&format!(",R_{j}"));
        }
        out.push('\n');
        for k in 0..self.norms.len() {
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e}",
                self.norms.times[k],
                self.norms.mass[k],
                self.norms.l1[k],
                self.norms.l2[k],
                self.norms.linf[k]
            ));
            for r in &self.support.radii[k] {
                out.push_str(&format!(",{r:e}"));
            }
            out.push('\n');
        }
        out
    }
}

/// `y ≈ exp(log_prefactor) t^exponent` on a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub exponent: f64,
    pub log_prefactor: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
}

/// Least-squares line through `(ln t, ln(y - shift))` for `t` in `window`.
pub fn fit_power_law(
    t: &[f64],
    y: &[f64],
    window: (f64, f64),
    shift: f64,
) -> Result<RateFit, DiagnosticsError> {
    let (lo, hi) = window;
    if !(lo > 0.0) || !(hi > lo) {
        return Err(DiagnosticsError::DegenerateWindow(lo, hi));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&ti, &yi) in t.iter().zip(y) {
        if ti < lo || ti > hi {
            continue;
        }
        let v = yi - shift;
        if !(v > 0.0) {
            return Err(DiagnosticsError::NonpositiveShifted { time: ti, value: v });
        }
        xs.push(ti.ln());
        ys.push(v.ln());
    }
    let n = xs.len();
    if n < MIN_FIT_POINTS {
        return Err(DiagnosticsError::InsufficientPoints {
            found: n,
            needed: MIN_FIT_POINTS,
        });
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(DiagnosticsError::DegenerateWindow(lo, hi));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(RateFit {
        exponent: slope,
        log_prefactor: intercept,
        r_squared,
        window,
        points: n,
    })
}

/// Default fit window: the last decade of simulated time.
pub fn last_decade(horizon: f64) -> (f64, f64) {
    (horizon / 10.0, horizon)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentComparison {
    pub fit: RateFit,
    pub predicted: f64,
}

impl ExponentComparison {
    pub fn relative_error(&self) -> f64 {
        (self.fit.exponent - self.predicted).abs() / self.predicted.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisComparison {
    pub axis: usize,
    pub comparison: ExponentComparison,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryComparison {
    pub support: Vec<AxisComparison>,
    pub linf: Option<ExponentComparison>,
    pub l1_nonincreasing: bool,
    pub l2_nonincreasing: bool,
    /// `max_k |mass_k - mass_0| / l1_0`.
    pub mass_drift: f64,
    /// Some but not all axes slow: support-rate mismatches are expected.
    pub mixed_regime: bool,
}

/// Relative growth tolerated between consecutive records of L¹ and L².
pub const MONOTONE_TOLERANCE: f64 = 1e-8;

pub fn nonincreasing(series: &[f64], rel_tol: f64) -> bool {
    series.windows(2).all(|w| w[1] <= w[0] * (1.0 + rel_tol))
}

/// Fits support radii (shifted by `2R₀`) and `‖u‖_∞` on `window` and
/// compares them with the predicted exponents.
pub fn compare_to_theory(
    series: &DiagnosticSeries,
    profile: &AnisotropyProfile,
    r0: f64,
    window: (f64, f64),
) -> Result<TheoryComparison, DiagnosticsError> {
    let mut support = Vec::new();
    for axis in profile.slow_directions() {
        let law = exponents::support_radius_law(profile, axis)?;
        let fit = fit_power_law(
            &series.support.times,
            &series.support.axis(axis),
            window,
            2.0 * r0,
        )?;
        support.push(AxisComparison {
            axis,
            comparison: ExponentComparison {
                fit,
                predicted: law.t_exponent,
            },
        });
    }
    let linf = match exponents::linf_decay_law(profile) {
        Ok(law) => Some(ExponentComparison {
            fit: fit_power_law(&series.norms.times, &series.norms.linf, window, 0.0)?,
            predicted: law.t_exponent,
        }),
        Err(ExponentError::InvalidRegime(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let l1_0 = series.norms.l1.first().copied().unwrap_or(0.0);
    let m0 = series.norms.mass.first().copied().unwrap_or(0.0);
    let mass_drift = if l1_0 > 0.0 {
        series
            .norms
            .mass
            .iter()
            .map(|m| (m - m0).abs() / l1_0)
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    Ok(TheoryComparison {
        support,
        linf,
        l1_nonincreasing: nonincreasing(&series.norms.l1, MONOTONE_TOLERANCE),
        l2_nonincreasing: nonincreasing(&series.norms.l2, MONOTONE_TOLERANCE),
        mass_drift,
        mixed_regime: exponents::feasibility(profile).mixed_regime,
    })
}

impl fmt::Display for TheoryComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "quantity            fitted      predicted   rel.err    r^2"
        )?;
        for a in &self.support {
            let c = &a.comparison;
            writeln!(
                f,
                "R_{:<2} - 2R0 rate     {:>9.5}   {:>9.5}   {:>8.4}   {:.6}",
                a.axis + 1,
                c.fit.exponent,
                c.predicted,
                c.relative_error(),
                c.fit.r_squared
            )?;
        }
        if let Some(c) = &self.linf {
            writeln!(
                f,
                "sup-norm decay      {:>9.5}   {:>9.5}   {:>8.4}   {:.6}",
                c.fit.exponent,
                c.predicted,
                c.relative_error(),
                c.fit.r_squared
            )?;
        }
        writeln!(f, "L1 nonincreasing: {}", self.l1_nonincreasing)?;
        writeln!(f, "L2 nonincreasing: {}", self.l2_nonincreasing)?;
        writeln!(f, "relative mass drift: {:e}", self.mass_drift)?;
        if self.mixed_regime {
            writeln!(
                f,
                "mixed regime: support-rate mismatches are expected, not failures"
            )?;
        }
        Ok(())
    }
}

/// First snapshot time at which the annulus `r < |x''| ≤ 2r` in the slow
/// coordinates holds a cell with `|u| > ε`; `None` if it never does.
pub fn annulus_silence(
    trajectory: &Trajectory,
    r: f64,
    threshold: SupportThreshold,
) -> Result<Option<f64>, DiagnosticsError> {
    let slow: Vec<usize> = trajectory
        .exponents()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 2.0)
        .map(|(j, _)| j)
        .collect();
    if slow.is_empty() {
        return Err(DiagnosticsError::Geometry("no slow direction".into()));
    }
    if r < 2.0 * trajectory.r0() {
        return Err(DiagnosticsError::Geometry(format!(
            "r = {r} is below 2 R0 = {}",
            2.0 * trajectory.r0()
        )));
    }
    let Some(first) = trajectory.snapshots().first() else {
        return Ok(None);
    };
    let grid = first.grid();
    let reach = slow
        .iter()
        .map(|&j| grid.half_widths()[j])
        .fold(f64::INFINITY, f64::min);
    if 2.0 * r > reach {
        return Err(DiagnosticsError::Geometry(format!(
            "annulus radius 2r = {} exceeds the box",
            2.0 * r
        )));
    }
    let mut multi = vec![0; grid.dim()];
    for snap in trajectory.snapshots() {
        let eps = threshold.resolve(snap.max_abs());
        let hit = snap.values().iter().enumerate().any(|(k, v)| {
            if v.abs() <= eps {
                return false;
            }
            grid.multi_index(k, &mut multi);
            let rho = slow
                .iter()
                .map(|&j| grid.center(j, multi[j]).powi(2))
                .sum::<f64>()
                .sqrt();
            rho > r && rho <= 2.0 * r
        });
        if hit {
            return Ok(Some(snap.time()));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{make_initial_datum, Grid, InitialShape};
    use std::sync::Arc;

    #[test]
    fn zero_field_measures_zero() {
        let grid = Arc::new(Grid::new(vec![1.0, 1.0], vec![8, 8]).unwrap());
        let (n, s) = measure(&ScalarField::zeros(grid), SupportThreshold::Absolute(0.0));
        assert_eq!((n.mass, n.l1, n.l2, n.linf), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(s.radii, vec![0.0, 0.0]);
    }

    #[test]
    fn box_bump_measurements() {
        let grid = Arc::new(Grid::new(vec![1.0, 2.0], vec![64, 64]).unwrap());
        let r0 = 0.2;
        let f = make_initial_datum(grid.clone(), InitialShape::BoxBump, r0, 1.0).unwrap();
        let (n, s) = measure(&f, SupportThreshold::Absolute(0.0));
        assert_eq!(n.linf, 1.0);
        for (j, r) in s.radii.iter().enumerate() {
            assert!(*r <= r0 && *r >= r0 - grid.spacing()[j], "axis {j}: {r}");
        }
        assert!(n.l1 >= n.mass.abs());
    }

    #[test]
    fn l1_dominates_mass_for_signed_fields() {
        let grid = Arc::new(Grid::new(vec![1.0], vec![32]).unwrap());
        let f = ScalarField::from_fn(grid, |x| (3.0 * x[0]).sin());
        let (n, _) = measure(&f, SupportThreshold::Absolute(0.0));
        assert!(n.l1 >= n.mass.abs());
    }

    #[test]
    fn exact_power_law_fit() {
        let t: Vec<f64> = (0..40).map(|k| 0.01 * 1.2f64.powi(k)).collect();
        let y: Vec<f64> = t.iter().map(|t| 3.0 * t.powf(0.25)).collect();
        let fit = fit_power_law(&t, &y, (1e-300, 1e9), 0.0).unwrap();
        assert!((fit.exponent - 0.25).abs() < 1e-10);
        assert!((fit.log_prefactor - 3f64.ln()).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);

        let y: Vec<f64> = t.iter().map(|t| 5.0 + 3.0 * t.powf(0.25)).collect();
        let fit = fit_power_law(&t, &y, (1e-3, 1e9), 5.0).unwrap();
        assert!((fit.exponent - 0.25).abs() < 1e-10);
    }

    #[test]
    fn fit_errors() {
        let t: Vec<f64> = (1..=5).map(f64::from).collect();
        let y = t.clone();
        assert!(matches!(
            fit_power_law(&t, &y, (0.5, 10.0), 0.0),
            Err(DiagnosticsError::InsufficientPoints { found: 5, .. })
        ));
        let t: Vec<f64> = (1..=10).map(f64::from).collect();
        assert!(matches!(
            fit_power_law(&t, &t, (0.5, 20.0), 3.0),
            Err(DiagnosticsError::NonpositiveShifted { .. })
        ));
        assert!(fit_power_law(&t, &t, (2.0, 2.0), 0.0).is_err());
    }

    #[test]
    fn monotone_negative_control() {
        assert!(nonincreasing(&[3.0, 2.0, 2.0, 1.0], MONOTONE_TOLERANCE));
        assert!(!nonincreasing(&[3.0, 2.0, 2.1, 1.0], MONOTONE_TOLERANCE));
    }
}
