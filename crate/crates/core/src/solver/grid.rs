use super::SolverError;

/// Upper bound on the total number of cells of a grid.
pub const DEFAULT_MAX_CELLS: usize = 1 << 25;

/// Cell-centred tensor grid on the box `Π [-L_i, L_i]`.
///
/// Values are stored row-major: the last axis is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    half_widths: Vec<f64>,
    cells: Vec<usize>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    pub fn new(half_widths: Vec<f64>, cells: Vec<usize>) -> Result<Self, SolverError> {
        Self::with_cap(half_widths, cells, DEFAULT_MAX_CELLS)
    }

    pub fn with_cap(
        half_widths: Vec<f64>,
        cells: Vec<usize>,
        max_cells: usize,
    ) -> Result<Self, SolverError> {
        if half_widths.is_empty() || half_widths.len() != cells.len() {
            return Err(SolverError::Config(
                "grid needs one half-width and one cell count per axis".into(),
            ));
        }
        if let Some(&n) = cells.iter().find(|&&n| n < 4) {
            return Err(SolverError::Config(format!(
                "cell count {n} is below the minimum of 4"
            )));
        }
        if let Some(&l) = half_widths.iter().find(|&&l| !(l > 0.0) || !l.is_finite()) {
            return Err(SolverError::Config(format!(
                "half-width {l} must be positive"
            )));
        }
        let len = cells
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .filter(|&len| len <= max_cells)
            .ok_or_else(|| {
                SolverError::Config(format!(
                    "grid {cells:?} exceeds the cell cap of {max_cells}"
                ))
            })?;
        let spacing = half_widths
            .iter()
            .zip(&cells)
            .map(|(l, &n)| 2.0 * l / n as f64)
            .collect();
        let mut strides = vec![1; cells.len()];
        for axis in (0..cells.len() - 1).rev() {
            strides[axis] = strides[axis + 1] * cells[axis + 1];
        }
        Ok(Self {
            half_widths,
            cells,
            spacing,
            strides,
            len,
        })
    }

    /// Same half-width and cell count along every axis.
    pub fn cube(dim: usize, half_width: f64, cells: usize) -> Result<Self, SolverError> {
        Self::new(vec![half_width; dim], vec![cells; dim])
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Coordinate of the centre of cell `k` along `axis`.
    pub fn center(&self, axis: usize, k: usize) -> f64 {
        -self.half_widths[axis] + (k as f64 + 0.5) * self.spacing[axis]
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(k, s)| k * s).sum()
    }

    pub fn multi_index(&self, mut flat: usize, out: &mut [usize]) {
        for axis in 0..self.dim() {
            out[axis] = flat / self.strides[axis];
            flat %= self.strides[axis];
        }
    }

    /// Whether the flat index lies in the one-cell boundary collar.
    pub fn in_collar(&self, flat: usize) -> bool {
        let mut rest = flat;
        for axis in 0..self.dim() {
            let k = rest / self.strides[axis];
            rest %= self.strides[axis];
            if k == 0 || k + 1 == self.cells[axis] {
                return true;
            }
        }
        false
    }
}

/// Inclusive index box `lo[i] ..= hi[i]` on a grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexBox {
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
}

impl IndexBox {
    pub fn full(grid: &Grid) -> Self {
        Self {
            lo: vec![0; grid.dim()],
            hi: grid.cells().iter().map(|n| n - 1).collect(),
        }
    }

    /// Grow by `by` cells per side, clamped to the grid.
    pub fn expanded(&self, grid: &Grid, by: usize) -> Self {
        Self {
            lo: self.lo.iter().map(|&l| l.saturating_sub(by)).collect(),
            hi: self
                .hi
                .iter()
                .zip(grid.cells())
                .map(|(&h, &n)| (h + by).min(n - 1))
                .collect(),
        }
    }

    /// Calls `f(start_flat, count)` for each contiguous run along the last
    /// axis that lies inside the box.
    pub fn for_each_row(&self, grid: &Grid, mut f: impl FnMut(usize, usize)) {
        let dim = grid.dim();
        let last = dim - 1;
        let count = self.hi[last] - self.lo[last] + 1;
        let mut idx = self.lo.clone();
        loop {
            f(grid.index(&idx), count);
            // odometer over the leading axes
            let mut axis = last;
            loop {
                if axis == 0 {
                    return;
                }
                axis -= 1;
                if idx[axis] < self.hi[axis] {
                    idx[axis] += 1;
                    break;
                }
                idx[axis] = self.lo[axis];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_strides() {
        let g = Grid::new(vec![1.0, 2.0, 0.5], vec![4, 8, 10]).unwrap();
        assert_eq!(g.spacing(), &[0.5, 0.5, 0.1]);
        assert_eq!(g.strides(), &[80, 10, 1]);
        assert_eq!(g.len(), 320);
        assert_eq!(g.center(0, 0), -0.75);
        let mut m = [0; 3];
        g.multi_index(g.index(&[2, 5, 7]), &mut m);
        assert_eq!(m, [2, 5, 7]);
        assert!(g.in_collar(g.index(&[0, 3, 3])));
        assert!(g.in_collar(g.index(&[2, 3, 9])));
        assert!(!g.in_collar(g.index(&[2, 3, 8])));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(vec![1.0], vec![3]).is_err());
        assert!(Grid::new(vec![0.0], vec![8]).is_err());
        assert!(Grid::new(vec![1.0, 1.0], vec![8]).is_err());
        assert!(Grid::with_cap(vec![1.0, 1.0], vec![100, 100], 5000).is_err());
    }

    #[test]
    fn rows_cover_box() {
        let g = Grid::new(vec![1.0; 3], vec![5, 6, 7]).unwrap();
        let b = IndexBox {
            lo: vec![1, 2, 3],
            hi: vec![3, 4, 5],
        };
        let mut seen = Vec::new();
        b.for_each_row(&g, |start, count| {
            for k in start..start + count {
                seen.push(k);
            }
        });
        assert_eq!(seen.len(), 27);
        let mut m = [0; 3];
        for &k in &seen {
            g.multi_index(k, &mut m);
            assert!((1..=3).contains(&m[0]) && (2..=4).contains(&m[1]) && (3..=5).contains(&m[2]));
        }
    }
}
