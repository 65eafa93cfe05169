use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::field::ScalarField;
use super::grid::Grid;
use super::SolverError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum InitialShape {
    /// Constant amplitude on the box `|x_i| ≤ R₀`.
    BoxBump,
    /// `A Π cos²(π x_i / 2R₀)` on the same box.
    ProductBump,
    /// Two box bumps centred at `x_1 = ±separation/2`.
    TwoBump { separation: f64 },
}

/// Nonnegative, compactly supported initial datum on `grid`.
pub fn make_initial_datum(
    grid: Arc<Grid>,
    shape: InitialShape,
    r0: f64,
    amplitude: f64,
) -> Result<ScalarField, SolverError> {
    let min_half = grid
        .half_widths()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !(r0 > 0.0) || r0 >= min_half / 4.0 {
        return Err(SolverError::Config(format!(
            "R0 = {r0} must lie in (0, {}) for this grid",
            min_half / 4.0
        )));
    }
    if !(amplitude >= 0.0) || !amplitude.is_finite() {
        return Err(SolverError::Config(format!(
            "amplitude {amplitude} must be nonnegative"
        )));
    }
    let field = match shape {
        InitialShape::BoxBump => ScalarField::from_fn(grid, |x| {
            if x.iter().all(|xi| xi.abs() <= r0) {
                amplitude
            } else {
                0.0
            }
        }),
        InitialShape::ProductBump => ScalarField::from_fn(grid, |x| {
            if x.iter().all(|xi| xi.abs() < r0) {
                amplitude
                    * x.iter()
                        .map(|xi| (FRAC_PI_2 * xi / r0).cos().powi(2))
                        .product::<f64>()
            } else {
                0.0
            }
        }),
        InitialShape::TwoBump { separation } => {
            let half = separation / 2.0;
            let reach = half + r0;
            let limit = grid.half_widths()[0] - 2.0 * grid.spacing()[0];
            if separation <= 2.0 * r0 {
                return Err(SolverError::Config(format!(
                    "separation {separation} must exceed 2 R0 = {}",
                    2.0 * r0
                )));
            }
            if reach >= limit {
                return Err(SolverError::Config(format!(
                    "two-bump datum reaches {reach}, beyond the usable half-width {limit}"
                )));
            }
            ScalarField::from_fn(grid, |x| {
                let inside =
                    |c: f64| (x[0] - c).abs() <= r0 && x[1..].iter().all(|xi| xi.abs() <= r0);
                if inside(-half) || inside(half) {
                    amplitude
                } else {
                    0.0
                }
            })
        }
    };
    if !field.collar_is_zero() {
        return Err(SolverError::Config(
            "initial datum touches the boundary collar".into(),
        ));
    }
    Ok(field)
}
