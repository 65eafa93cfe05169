//! Explicit conservative update for `u_t = Σ_i ∂_i A_i(x, u, ∂_i u)`.
//!
//! Face fluxes use the one-sided difference across the face, so each face
//! value enters its two cells with opposite signs and the discrete mass
//! telescopes. Only the bounding box of the nonzero cells (grown by one
//! cell) is touched: a cell whose neighbours are all zero sees zero flux.

use std::sync::Arc;

use super::field::{box_clear_of_collar, nonzero_box_in, ScalarField};
use super::flux::{signed_power, FluxModel};
use super::grid::{Grid, IndexBox};
use super::SolverError;
use crate::numeric::NeumaierSum;

/// Multiplier of the cell size used as a gradient floor on singular axes.
pub const SINGULAR_GRADIENT_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Stepper {
    flux: FluxModel,
    grid: Arc<Grid>,
    powers: Vec<f64>,
    /// Per-axis face coefficients for the perturbed kind, indexed by the
    /// lower cell of the face.
    coefficients: Option<Vec<Vec<f64>>>,
}

impl Stepper {
    pub fn new(flux: FluxModel, grid: Arc<Grid>) -> Result<Self, SolverError> {
        if flux.exponents().len() != grid.dim() {
            return Err(SolverError::Config(format!(
                "flux has {} exponents but the grid is {}-dimensional",
                flux.exponents().len(),
                grid.dim()
            )));
        }
        let powers = flux.exponents().iter().map(|p| p - 1.0).collect();
        let coefficients = match flux.kind() {
            super::flux::FluxKind::Orthotropic => None,
            super::flux::FluxKind::Perturbed { .. } => {
                let mut per_axis = Vec::with_capacity(grid.dim());
                let mut multi = vec![0; grid.dim()];
                let mut x = vec![0.0; grid.dim()];
                for axis in 0..grid.dim() {
                    let mut c = vec![0.0; grid.len()];
                    for (flat, ci) in c.iter_mut().enumerate() {
                        grid.multi_index(flat, &mut multi);
                        for a in 0..grid.dim() {
                            x[a] = grid.center(a, multi[a]);
                        }
                        x[axis] += 0.5 * grid.spacing()[axis];
                        *ci = flux.coefficient(axis, &x);
                    }
                    per_axis.push(c);
                }
                Some(per_axis)
            }
        };
        Ok(Self {
            flux,
            grid,
            powers,
            coefficients,
        })
    }

    pub fn flux(&self) -> &FluxModel {
        &self.flux
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Largest step keeping every cell update a convex combination of its
    /// neighbours: `safety · min_i h_i² / (2N D_i)` with
    /// `D_i = c_max · max(1, p_i - 1) · G_i^{p_i-2}`.
    ///
    /// `G_i` is the largest face gradient along axis `i` when `p_i ≥ 2`, and
    /// the smallest nonzero one (floored at `h_i · 1e-8`) when `p_i < 2`.
    pub fn stable_dt(
        &self,
        values: &[f64],
        active: Option<&IndexBox>,
        safety: f64,
        fallback: f64,
    ) -> f64 {
        let Some(active) = active else {
            return fallback;
        };
        let grid = &*self.grid;
        let region = active.expanded(grid, 1);
        let dim = grid.dim();
        let cmax = self.flux.coefficient_bound();
        let mut dt = f64::INFINITY;
        for axis in 0..dim {
            let h = grid.spacing()[axis];
            let p = self.flux.exponents()[axis];
            let (gmax, gmin) = face_gradient_range(grid, values, &region, axis);
            let d = if p >= 2.0 {
                if gmax == 0.0 {
                    if p == 2.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    (p - 1.0) * gmax.powf(p - 2.0)
                }
            } else {
                let floor = h * SINGULAR_GRADIENT_FLOOR;
                gmin.max(floor).powf(p - 2.0)
            } * cmax;
            if d > 0.0 {
                dt = dt.min(h * h / (2.0 * dim as f64 * d));
            }
        }
        if dt.is_finite() {
            safety * dt
        } else {
            fallback
        }
    }

    /// Writes `src + dt · div F` into `dst` over `region`; `dst` must already
    /// hold `src` there.
    fn accumulate(&self, src: &[f64], dst: &mut [f64], region: &IndexBox, dt: f64) {
        let grid = &*self.grid;
        for axis in 0..grid.dim() {
            let h = grid.spacing()[axis];
            let e = self.powers[axis];
            let scale = dt / h;
            let inv_h = 1.0 / h;
            let coeff = self.coefficients.as_ref().map(|c| c[axis].as_slice());
            for_each_face(grid, region, axis, |k, next| {
                let z = (src[next] - src[k]) * inv_h;
                let mut f = signed_power(z, e);
                if let Some(c) = coeff {
                    f *= c[k];
                }
                let df = scale * f;
                dst[k] += df;
                dst[next] -= df;
            });
        }
    }
}

fn face_gradient_range(grid: &Grid, values: &[f64], region: &IndexBox, axis: usize) -> (f64, f64) {
    let inv_h = 1.0 / grid.spacing()[axis];
    let mut gmax = 0.0f64;
    let mut gmin = f64::INFINITY;
    for_each_face(grid, region, axis, |k, next| {
        let g = (values[next] - values[k]).abs() * inv_h;
        gmax = gmax.max(g);
        if g > 0.0 {
            gmin = gmin.min(g);
        }
    });
    (gmax, gmin)
}

/// Calls `f(k, k + stride_axis)` for every face along `axis` whose two
/// cells lie in `region`.
pub(crate) fn for_each_face(
    grid: &Grid,
    region: &IndexBox,
    axis: usize,
    mut f: impl FnMut(usize, usize),
) {
    let last = grid.dim() - 1;
    let stride = grid.strides()[axis];
    if axis == last {
        region.for_each_row(grid, |start, count| {
            for k in start..start + count - 1 {
                f(k, k + 1);
            }
        });
    } else {
        let mut multi = vec![0; grid.dim()];
        region.for_each_row(grid, |start, count| {
            grid.multi_index(start, &mut multi);
            if multi[axis] < region.hi[axis] {
                for k in start..start + count {
                    f(k, k + stride);
                }
            }
        });
    }
}

fn union(a: &IndexBox, b: &IndexBox) -> IndexBox {
    IndexBox {
        lo: a.lo.iter().zip(&b.lo).map(|(x, y)| *x.min(y)).collect(),
        hi: a.hi.iter().zip(&b.hi).map(|(x, y)| *x.max(y)).collect(),
    }
}

/// Per-step audit of the discrete norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepAudit {
    pub initial_mass: f64,
    pub initial_l1: f64,
    /// Largest `(l1_{n+1} - l1_n) / l1_n` seen.
    pub max_l1_increase: f64,
    /// Largest `(l2_{n+1} - l2_n) / l2_n` seen.
    pub max_l2_increase: f64,
    /// Largest `|mass_n - mass_0| / l1_0` seen.
    pub max_mass_drift: f64,
    pub min_value: f64,
}

#[derive(Debug, Clone, Copy)]
struct Totals {
    mass: f64,
    l1: f64,
    l2: f64,
    min: f64,
}

/// Double-buffered explicit evolution of one field.
#[derive(Debug, Clone)]
pub struct Evolution {
    stepper: Stepper,
    current: ScalarField,
    scratch: Vec<f64>,
    active: Option<IndexBox>,
    scratch_dirty: Option<IndexBox>,
    audit: Option<(StepAudit, Totals)>,
    flush_below: f64,
}

impl Evolution {
    pub fn new(stepper: Stepper, field: ScalarField, audit: bool) -> Result<Self, SolverError> {
        if field.grid() != &**stepper.grid() {
            return Err(SolverError::Config("field and stepper grids differ".into()));
        }
        let active = field.nonzero_box();
        let scratch = field.values().to_vec();
        let audit = audit.then(|| {
            let t = totals(field.grid(), field.values(), active.as_ref());
            (
                StepAudit {
                    initial_mass: t.mass,
                    initial_l1: t.l1,
                    max_l1_increase: 0.0,
                    max_l2_increase: 0.0,
                    max_mass_drift: 0.0,
                    min_value: t.min,
                },
                t,
            )
        });
        Ok(Self {
            stepper,
            current: field,
            scratch,
            active,
            scratch_dirty: None,
            audit,
            flush_below: 0.0,
        })
    }

    /// After each step, values with `|u| < floor` are set to zero.
    ///
    /// The explicit scheme moves the numerical front one cell per step with
    /// values decaying like `v^{p-1}` per cell; for `p` close to 2 these
    /// precursors stay above the underflow limit long enough to reach the
    /// boundary. A floor far below any measured quantity stops them.
    pub fn with_flush(mut self, floor: f64) -> Self {
        self.flush_below = floor.max(0.0);
        self
    }

    pub fn field(&self) -> &ScalarField {
        &self.current
    }

    pub fn into_field(self) -> ScalarField {
        self.current
    }

    pub fn active_box(&self) -> Option<&IndexBox> {
        self.active.as_ref()
    }

    pub fn audit(&self) -> Option<StepAudit> {
        self.audit.map(|(a, _)| a)
    }

    pub fn stable_dt(&self, safety: f64, fallback: f64) -> f64 {
        self.stepper.stable_dt(
            self.current.values(),
            self.active.as_ref(),
            safety,
            fallback,
        )
    }

    pub fn advance(&mut self, dt: f64) -> Result<(), SolverError> {
        let time = self.current.time();
        let grid = Arc::clone(self.stepper.grid());
        let Some(active) = self.active.clone() else {
            self.current.set_time(time + dt);
            return Ok(());
        };
        if !box_clear_of_collar(&grid, &active) {
            return Err(SolverError::SupportReachedBoundary { time });
        }
        let region = active.expanded(&grid, 1);
        let copy_box = match &self.scratch_dirty {
            Some(d) => union(&region, d),
            None => region.clone(),
        };
        let src = self.current.values();
        copy_box.for_each_row(&grid, |start, count| {
            self.scratch[start..start + count].copy_from_slice(&src[start..start + count]);
        });
        self.stepper.accumulate(src, &mut self.scratch, &region, dt);

        let mut bad = None;
        region.for_each_row(&grid, |start, count| {
            if bad.is_none() {
                if let Some(k) = self.scratch[start..start + count]
                    .iter()
                    .position(|v| !v.is_finite())
                {
                    bad = Some(start + k);
                }
            }
        });
        if bad.is_some() {
            return Err(SolverError::Instability { time });
        }
        if self.flush_below > 0.0 {
            let floor = self.flush_below;
            region.for_each_row(&grid, |start, count| {
                for v in &mut self.scratch[start..start + count] {
                    if v.abs() < floor {
                        *v = 0.0;
                    }
                }
            });
        }

        std::mem::swap(self.current.storage_mut(), &mut self.scratch);
        self.scratch_dirty = Some(region.clone());
        self.active = nonzero_box_in(&grid, self.current.values(), &region);
        self.current.set_time(time + dt);

        if let Some((audit, prev)) = &mut self.audit {
            let now = totals(&grid, self.current.values(), self.active.as_ref());
            if prev.l1 > 0.0 {
                audit.max_l1_increase = audit.max_l1_increase.max((now.l1 - prev.l1) / prev.l1);
            }
            if prev.l2 > 0.0 {
                audit.max_l2_increase = audit.max_l2_increase.max((now.l2 - prev.l2) / prev.l2);
            }
            if audit.initial_l1 > 0.0 {
                audit.max_mass_drift = audit
                    .max_mass_drift
                    .max((now.mass - audit.initial_mass).abs() / audit.initial_l1);
            }
            audit.min_value = audit.min_value.min(now.min);
            *prev = now;
        }
        Ok(())
    }
}

fn totals(grid: &Grid, values: &[f64], active: Option<&IndexBox>) -> Totals {
    let mut mass = NeumaierSum::default();
    let mut l1 = NeumaierSum::default();
    let mut l2 = NeumaierSum::default();
    let mut min = 0.0f64;
    if let Some(active) = active {
        active.for_each_row(grid, |start, count| {
            for &v in &values[start..start + count] {
                mass.add(v);
                l1.add(v.abs());
                l2.add(v * v);
                min = min.min(v);
            }
        });
    }
    let vol = grid.cell_volume();
    Totals {
        mass: mass.total() * vol,
        l1: l1.total() * vol,
        l2: (l2.total() * vol).sqrt(),
        min,
    }
}

/// Stable step for `field` under `flux`; `fallback` when the field is zero.
pub fn stable_dt(
    field: &ScalarField,
    flux: &FluxModel,
    safety: f64,
    fallback: f64,
) -> Result<f64, SolverError> {
    let stepper = Stepper::new(flux.clone(), field.shared_grid())?;
    Ok(stepper.stable_dt(
        field.values(),
        field.nonzero_box().as_ref(),
        safety,
        fallback,
    ))
}

/// One explicit Euler step.
pub fn step_explicit(
    field: &ScalarField,
    flux: &FluxModel,
    dt: f64,
) -> Result<ScalarField, SolverError> {
    let stepper = Stepper::new(flux.clone(), field.shared_grid())?;
    let mut evo = Evolution::new(stepper, field.clone(), false)?;
    evo.advance(dt)?;
    Ok(evo.into_field())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Grid;

    fn grid1(n: usize) -> Arc<Grid> {
        Arc::new(Grid::new(vec![1.0], vec![n]).unwrap())
    }

    #[test]
    fn linear_case_reduces_to_heat_cfl() {
        let grid = Arc::new(Grid::new(vec![1.0, 2.0], vec![20, 20]).unwrap());
        let f = ScalarField::from_fn(grid.clone(), |x| {
            if x[0].abs() < 0.3 && x[1].abs() < 0.3 {
                1.0
            } else {
                0.0
            }
        });
        let flux = FluxModel::orthotropic(vec![2.0, 2.0]).unwrap();
        let dt = stable_dt(&f, &flux, 0.8, 1.0).unwrap();
        let h = 0.1f64;
        assert!((dt - 0.8 * h * h / 4.0).abs() < 1e-15);
    }

    #[test]
    fn doubling_amplitude_halves_dt_for_cubic_flux() {
        let grid = grid1(64);
        let f = ScalarField::from_fn(grid, |x| (0.2 - x[0].abs()).max(0.0));
        let flux = FluxModel::orthotropic(vec![3.0]).unwrap();
        let dt1 = stable_dt(&f, &flux, 1.0, 1.0).unwrap();
        let dt2 = stable_dt(&f.scaled(2.0), &flux, 1.0, 1.0).unwrap();
        assert!((dt1 / dt2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_field_uses_fallback_and_stays_zero() {
        let grid = grid1(16);
        let f = ScalarField::zeros(grid);
        let flux = FluxModel::orthotropic(vec![3.0]).unwrap();
        assert_eq!(stable_dt(&f, &flux, 0.5, 0.125).unwrap(), 0.125);
        let g = step_explicit(&f, &flux, 0.1).unwrap();
        assert!(g.values().iter().all(|&v| v == 0.0));
        assert_eq!(g.time(), 0.1);
    }

    #[test]
    fn nonzero_collar_is_rejected() {
        let grid = grid1(16);
        let f = ScalarField::from_fn(grid, |_| 1.0);
        let flux = FluxModel::orthotropic(vec![3.0]).unwrap();
        assert!(matches!(
            step_explicit(&f, &flux, 1e-3),
            Err(SolverError::SupportReachedBoundary { .. })
        ));
    }

    #[test]
    fn single_cell_spreads_one_cell_per_axis() {
        let grid = Arc::new(Grid::new(vec![1.0, 1.0], vec![16, 16]).unwrap());
        let mut f = ScalarField::zeros(grid.clone());
        f.values_mut()[grid.index(&[8, 8])] = 1.0;
        let flux = FluxModel::orthotropic(vec![2.5, 3.0]).unwrap();
        let dt = stable_dt(&f, &flux, 0.9, 1.0).unwrap();
        let g = step_explicit(&f, &flux, dt).unwrap();
        let b = g.nonzero_box().unwrap();
        assert_eq!(b.lo, vec![7, 7]);
        assert_eq!(b.hi, vec![9, 9]);
        // diagonal neighbours stay exactly zero
        assert_eq!(g.values()[grid.index(&[7, 7])], 0.0);
    }

    #[test]
    fn mass_is_conserved_by_a_step() {
        let grid = Arc::new(Grid::new(vec![1.0, 1.0], vec![24, 24]).unwrap());
        let f = ScalarField::from_fn(grid.clone(), |x| {
            let r = (x[0] * x[0] + 2.0 * x[1] * x[1]).sqrt();
            (0.5 - r).max(0.0) * (1.0 + x[0])
        });
        for p in [vec![2.5, 3.0], vec![1.6, 2.4]] {
            let flux = FluxModel::orthotropic(p).unwrap();
            let dt = stable_dt(&f, &flux, 0.9, 1.0).unwrap();
            let g = step_explicit(&f, &flux, dt).unwrap();
            let m0: f64 = f.values().iter().sum();
            let m1: f64 = g.values().iter().sum();
            let l1: f64 = f.values().iter().map(|v| v.abs()).sum();
            assert!((m1 - m0).abs() <= 1e-12 * l1);
        }
    }
}
