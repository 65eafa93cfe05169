use std::sync::Arc;

use super::grid::{Grid, IndexBox};
use super::SolverError;

/// Gridded snapshot of the solution at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
    time: f64,
}

impl ScalarField {
    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self {
            grid,
            values,
            time: 0.0,
        }
    }

    pub fn from_values(grid: Arc<Grid>, values: Vec<f64>, time: f64) -> Result<Self, SolverError> {
        if values.len() != grid.len() {
            return Err(SolverError::Config(format!(
                "{} values given for a grid of {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(SolverError::Config(format!(
                "value at cell {k} is not finite"
            )));
        }
        Ok(Self { grid, values, time })
    }

    /// Samples `f(x)` at every cell centre.
    pub fn from_fn(grid: Arc<Grid>, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let mut values = vec![0.0; grid.len()];
        let mut multi = vec![0; grid.dim()];
        let mut x = vec![0.0; grid.dim()];
        for (flat, v) in values.iter_mut().enumerate() {
            grid.multi_index(flat, &mut multi);
            for axis in 0..grid.dim() {
                x[axis] = grid.center(axis, multi[axis]);
            }
            *v = f(&x);
        }
        Self {
            grid,
            values,
            time: 0.0,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn shared_grid(&self) -> Arc<Grid> {
        Arc::clone(&self.grid)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub(crate) fn storage_mut(&mut self) -> &mut Vec<f64> {
        &mut self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, time: f64) {
        self.time = time;
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| c * v).collect(),
            time: self.time,
        }
    }

    /// Bounding index box of the nonzero cells.
    pub fn nonzero_box(&self) -> Option<IndexBox> {
        nonzero_box_in(&self.grid, &self.values, &IndexBox::full(&self.grid))
    }

    pub fn collar_is_zero(&self) -> bool {
        match self.nonzero_box() {
            None => true,
            Some(b) => box_clear_of_collar(&self.grid, &b),
        }
    }
}

pub(crate) fn box_clear_of_collar(grid: &Grid, b: &IndexBox) -> bool {
    b.lo.iter().all(|&l| l >= 1) && b.hi.iter().zip(grid.cells()).all(|(&h, &n)| h + 2 <= n)
}

/// Bounding box of the nonzero cells of `values` restricted to `region`.
pub(crate) fn nonzero_box_in(grid: &Grid, values: &[f64], region: &IndexBox) -> Option<IndexBox> {
    let dim = grid.dim();
    let last = dim - 1;
    let mut lo = vec![usize::MAX; dim];
    let mut hi = vec![0usize; dim];
    let mut any = false;
    let mut multi = vec![0; dim];
    region.for_each_row(grid, |start, count| {
        let row = &values[start..start + count];
        let first = row.iter().position(|&v| v != 0.0);
        if let Some(first) = first {
            let lastnz = row.iter().rposition(|&v| v != 0.0).unwrap_or(first);
            grid.multi_index(start, &mut multi);
            for axis in 0..last {
                lo[axis] = lo[axis].min(multi[axis]);
                hi[axis] = hi[axis].max(multi[axis]);
            }
            lo[last] = lo[last].min(multi[last] + first);
            hi[last] = hi[last].max(multi[last] + lastnz);
            any = true;
        }
    });
    any.then_some(IndexBox { lo, hi })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonzero_box_tracks_support() {
        let grid = Arc::new(Grid::new(vec![1.0, 1.0], vec![8, 10]).unwrap());
        let mut f = ScalarField::zeros(Arc::clone(&grid));
        assert!(f.nonzero_box().is_none());
        assert!(f.collar_is_zero());
        f.values_mut()[grid.index(&[2, 3])] = 1.0;
        f.values_mut()[grid.index(&[5, 7])] = -2.0;
        let b = f.nonzero_box().unwrap();
        assert_eq!(b.lo, vec![2, 3]);
        assert_eq!(b.hi, vec![5, 7]);
        assert!(f.collar_is_zero());
        f.values_mut()[grid.index(&[7, 1])] = 1e-300;
        assert!(!f.collar_is_zero());
        assert_eq!(f.max_abs(), 2.0);
    }

    #[test]
    fn rejects_nonfinite() {
        let grid = Arc::new(Grid::new(vec![1.0], vec![4]).unwrap());
        assert!(
            ScalarField::from_values(grid.clone(), vec![0.0, f64::NAN, 0.0, 0.0], 0.0).is_err()
        );
        assert!(ScalarField::from_values(grid, vec![0.0; 3], 0.0).is_err());
    }
}
