use std::sync::Arc;

use super::flux::FluxModel;
use super::grid::Grid;
use super::initial::{make_initial_datum, InitialShape};
use super::scheme::{Evolution, StepAudit, Stepper};
use super::{ScalarField, SolverError};
use crate::diagnostics::{DiagnosticSeries, SupportThreshold};

/// Values below this fraction of `‖u₀‖_∞` are flushed to zero after each step.
pub const FLUSH_RELATIVE: f64 = 1e-30;

/// When diagnostics are recorded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cadence {
    /// Every `interval` time units.
    Uniform { interval: f64 },
    /// `first · 10^{k / per_decade}`, k = 0, 1, ...
    Logarithmic { first: f64, per_decade: u32 },
}

impl Cadence {
    /// First record time strictly after `t`.
    pub fn next_after(&self, t: f64) -> f64 {
        match *self {
            Cadence::Uniform { interval } => {
                // stay on the lattice k·interval, skipping points within
                // rounding of `t`
                let mut k = (t / interval).floor() + 1.0;
                while k * interval - t <= 1e-9 * interval {
                    k += 1.0;
                }
                k * interval
            }
            Cadence::Logarithmic { first, per_decade } => {
                if t < first {
                    return first;
                }
                let per = per_decade as f64;
                let mut k = ((t / first).log10() * per).floor();
                loop {
                    let next = first * 10f64.powf(k / per);
                    if next > t * (1.0 + 1e-12) {
                        return next;
                    }
                    k += 1.0;
                }
            }
        }
    }

    fn validate(&self) -> Result<(), SolverError> {
        let ok = match *self {
            Cadence::Uniform { interval } => interval > 0.0 && interval.is_finite(),
            Cadence::Logarithmic { first, per_decade } => {
                first > 0.0 && first.is_finite() && per_decade > 0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(SolverError::Config(format!(
                "invalid record cadence {self:?}"
            )))
        }
    }
}

/// Everything needed to reproduce one evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: Grid,
    pub flux: FluxModel,
    pub shape: InitialShape,
    pub r0: f64,
    pub amplitude: f64,
    pub horizon: f64,
    pub safety: f64,
    pub cadence: Cadence,
    /// Keep every k-th record as a full snapshot (0: first and last only).
    pub snapshot_every: usize,
    /// Support threshold; `None` picks the default for the regime.
    pub threshold: Option<SupportThreshold>,
    pub fallback_dt: f64,
    pub max_steps: u64,
    pub audit: bool,
}

impl RunConfig {
    /// Reasonable defaults around a grid, flux and datum.
    pub fn new(
        grid: Grid,
        flux: FluxModel,
        shape: InitialShape,
        r0: f64,
        amplitude: f64,
        horizon: f64,
    ) -> Self {
        Self {
            grid,
            flux,
            shape,
            r0,
            amplitude,
            horizon,
            safety: 0.9,
            cadence: Cadence::Uniform {
                interval: horizon.max(f64::MIN_POSITIVE) / 100.0,
            },
            snapshot_every: 0,
            threshold: None,
            fallback_dt: 1e-3,
            max_steps: 500_000_000,
            audit: true,
        }
    }

    /// Default support threshold: exact zeros when every axis is degenerate,
    /// `1e-12 ‖u₀‖_∞` otherwise.
    pub fn support_threshold(&self) -> SupportThreshold {
        self.threshold.unwrap_or_else(|| {
            if self.flux.exponents().iter().all(|&p| p > 2.0) {
                SupportThreshold::Absolute(0.0)
            } else {
                SupportThreshold::Absolute(1e-12 * self.amplitude)
            }
        })
    }
}

/// Recorded output of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    snapshots: Vec<ScalarField>,
    pub diagnostics: DiagnosticSeries,
    pub audit: Option<StepAudit>,
    pub steps: u64,
    pub dt_min: f64,
    pub dt_max: f64,
    exponents: Vec<f64>,
    r0: f64,
}

impl Trajectory {
    pub fn snapshots(&self) -> &[ScalarField] {
        &self.snapshots
    }

    pub fn final_field(&self) -> &ScalarField {
        self.snapshots
            .last()
            .expect("a trajectory holds at least the initial snapshot")
    }

    pub fn initial_field(&self) -> &ScalarField {
        &self.snapshots[0]
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }
}

/// Advances the configured datum to the horizon with adaptive stable steps,
/// recording diagnostics at the cadence (and at the horizon).
pub fn run(config: &RunConfig) -> Result<Trajectory, SolverError> {
    if !(config.horizon >= 0.0) || !config.horizon.is_finite() {
        return Err(SolverError::Config(format!(
            "horizon {} must be nonnegative",
            config.horizon
        )));
    }
    if !(config.safety > 0.0 && config.safety <= 1.0) {
        return Err(SolverError::Config(format!(
            "safety {} must lie in (0, 1]",
            config.safety
        )));
    }
    config.cadence.validate()?;
    let grid = Arc::new(config.grid.clone());
    let datum = make_initial_datum(Arc::clone(&grid), config.shape, config.r0, config.amplitude)?;
    let threshold = config.support_threshold();
    let stepper = Stepper::new(config.flux.clone(), Arc::clone(&grid))?;
    let floor = FLUSH_RELATIVE * datum.max_abs();
    let mut evo = Evolution::new(stepper, datum.clone(), config.audit)?.with_flush(floor);

    let mut diagnostics = DiagnosticSeries::default();
    diagnostics.record(&datum, threshold);
    let mut snapshots = vec![datum];
    let mut records = 0usize;
    let mut steps = 0u64;
    let mut dt_min = f64::INFINITY;
    let mut dt_max = 0.0f64;
    let mut t = 0.0;
    // record times within rounding of the horizon snap onto it
    let next_in = |t: f64| {
        let next = config.cadence.next_after(t);
        if next >= config.horizon * (1.0 - 1e-9) {
            config.horizon
        } else {
            next
        }
    };
    let mut next_record = next_in(0.0);

    while t < config.horizon {
        if steps >= config.max_steps {
            return Err(SolverError::StepBudget { time: t, steps });
        }
        let stable = evo.stable_dt(config.safety, config.fallback_dt);
        let remaining = next_record - t;
        // a step within 1e-9 of the record absorbs it instead of leaving a
        // rounding-sized sliver behind
        let (dt, hits_record) = if stable >= remaining * (1.0 - 1e-9) {
            (remaining, true)
        } else {
            (stable, false)
        };
        evo.advance(dt)?;
        steps += 1;
        dt_min = dt_min.min(dt);
        dt_max = dt_max.max(dt);
        if hits_record {
            t = next_record;
            let mut field = evo.field().clone();
            field.set_time(t);
            diagnostics.record(&field, threshold);
            records += 1;
            let last = t >= config.horizon;
            if last || (config.snapshot_every > 0 && records % config.snapshot_every == 0) {
                snapshots.push(field);
            }
            next_record = next_in(t);
        } else {
            t += dt;
        }
    }

    Ok(Trajectory {
        snapshots,
        diagnostics,
        audit: evo.audit(),
        steps,
        dt_min: if steps == 0 { 0.0 } else { dt_min },
        dt_max,
        exponents: config.flux.exponents().to_vec(),
        r0: config.r0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_d(p: f64, n: usize, horizon: f64) -> RunConfig {
        RunConfig::new(
            Grid::new(vec![1.0], vec![n]).unwrap(),
            FluxModel::orthotropic(vec![p]).unwrap(),
            InitialShape::BoxBump,
            0.1,
            1.0,
            horizon,
        )
    }

    #[test]
    fn cadence_sequences() {
        let c = Cadence::Uniform { interval: 0.25 };
        assert_eq!(c.next_after(0.0), 0.25);
        assert_eq!(c.next_after(0.25), 0.5);
        let c = Cadence::Logarithmic {
            first: 1e-3,
            per_decade: 2,
        };
        assert_eq!(c.next_after(0.0), 1e-3);
        let n = c.next_after(1e-3);
        assert!((n - 1e-3 * 10f64.sqrt()).abs() < 1e-15);
        assert!((c.next_after(n) - 1e-2).abs() < 1e-15);
    }

    #[test]
    fn zero_horizon_keeps_initial_snapshot_only() {
        let traj = run(&one_d(3.0, 64, 0.0)).unwrap();
        assert_eq!(traj.snapshots().len(), 1);
        assert_eq!(traj.diagnostics.norms.len(), 1);
        assert_eq!(traj.steps, 0);
    }

    #[test]
    fn slow_diffusion_spreads_support() {
        let traj = run(&one_d(3.0, 128, 0.02)).unwrap();
        let r = traj.diagnostics.support.axis(0);
        assert!(r.last().unwrap() > &r[0]);
        assert!(r.windows(2).all(|w| w[1] >= w[0]));
        let audit = traj.audit.unwrap();
        assert!(audit.max_mass_drift < 1e-12);
        assert!(audit.max_l1_increase <= 1e-12);
        assert!(audit.max_l2_increase <= 1e-12);
        assert!(audit.min_value >= 0.0);
    }

    #[test]
    fn boundary_contact_aborts_with_time() {
        let mut cfg = one_d(3.0, 32, 50.0);
        cfg.amplitude = 50.0;
        match run(&cfg) {
            Err(SolverError::SupportReachedBoundary { time }) => assert!(time > 0.0),
            other => panic!("expected boundary abort, got {other:?}"),
        }
    }

    #[test]
    fn identical_configs_give_identical_trajectories() {
        let cfg = one_d(2.5, 96, 0.01);
        assert_eq!(run(&cfg).unwrap(), run(&cfg).unwrap());
    }
}
