use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;

/// Smallest admissible number of cells.
pub const MIN_CELLS: usize = 16;

/// Uniform cell-centred mesh on `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_cells: usize,
    dx: f64,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidGrid("bounds must be finite".into()));
        }
        if x_min >= x_max {
            return Err(Error::InvalidGrid(format!(
                "x_min {x_min} >= x_max {x_max}"
            )));
        }
        if n_cells < MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "n_cells {n_cells} < {MIN_CELLS}"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_cells,
            dx: (x_max - x_min) / n_cells as f64,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Centre of cell `i`: `x_min + (i + 1/2) dx`.
    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx
    }

    /// Position of face `k` (`k = 0..=n_cells`); face `k` separates cells `k-1` and `k`.
    #[inline]
    pub fn face(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.dx
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(move |i| self.center(i))
    }

    /// Same extent, different resolution.
    pub fn with_cells(&self, n_cells: usize) -> Result<Self> {
        Self::new(self.x_min, self.x_max, n_cells)
    }

    /// Closed interval `[x_min + k dx, x_max - k dx]`.
    pub fn inset(&self, cells: usize) -> (f64, f64) {
        let d = cells as f64 * self.dx;
        (self.x_min + d, self.x_max - d)
    }
}

/// Cell values of one scalar quantity on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid1D,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::InvalidGrid(format!(
                "{} values for {} cells",
                values.len(),
                grid.n_cells()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n_cells()],
        }
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid,
            values: grid.centers().map(f).collect(),
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `dx * sum(values)`, compensated.
    pub fn mass(&self) -> f64 {
        self.grid.dx() * numeric::sum(self.values.iter().copied())
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Errors unless every entry is finite and `>= -tolerance`.
    pub fn check_nonnegative(&self, tolerance: f64) -> Result<()> {
        for (i, &v) in self.values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "field",
                    index: i,
                });
            }
            if v < -tolerance {
                return Err(Error::NegativeDensity { cell: i, value: v });
            }
        }
        Ok(())
    }

    pub fn same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Index range of cells with value above `rel_floor * max`, if any.
    pub fn support(&self, rel_floor: f64) -> Option<(usize, usize)> {
        let peak = self.max();
        if !(peak > 0.0) {
            return None;
        }
        let floor = rel_floor * peak;
        let first = self.values.iter().position(|&v| v > floor)?;
        let last = self.values.iter().rposition(|&v| v > floor)?;
        Some((first, last))
    }

    /// Largest one-sided face slope `max |f_{i+1} - f_i| / dx`.
    pub fn max_face_slope(&self) -> f64 {
        let dx = self.grid.dx();
        self.values
            .windows(2)
            .fold(0.0_f64, |m, w| m.max((w[1] - w[0]).abs() / dx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval_grid() {
        let g = Grid1D::new(-1.0, 1.0, 16).unwrap();
        assert_eq!(g.dx(), 0.125);
        assert_eq!(g.center(0), -0.9375);
    }

    #[test]
    fn unit_spacing() {
        let g = Grid1D::new(0.0, 81.0, 81).unwrap();
        assert_eq!(g.dx(), 1.0);
        assert_eq!(g.center(0), 0.5);
    }

    #[test]
    fn wide_grid_centers_match_summation() {
        let g = Grid1D::new(-20.0, 20.0, 4096).unwrap();
        assert_eq!(g.dx(), 40.0 / 4096.0);
        // dx is a power of two here, so repeated addition is exact.
        let mut x = -20.0 + 0.5 * g.dx();
        for i in 0..g.n_cells() {
            assert_eq!(g.center(i), x, "cell {i}");
            x += g.dx();
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid1D::new(0.0, 1.0, 15).is_err());
        assert!(Grid1D::new(1.0, 0.0, 32).is_err());
        assert!(Grid1D::new(f64::NAN, 1.0, 32).is_err());
        assert!(Grid1D::new(0.0, f64::INFINITY, 32).is_err());
    }

    #[test]
    fn field_length_checked() {
        let g = Grid1D::new(0.0, 1.0, 16).unwrap();
        assert!(ScalarField::new(g, vec![0.0; 15]).is_err());
        let f = ScalarField::new(g, vec![1.0; 16]).unwrap();
        assert!((f.mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn negative_entries_are_reported() {
        let g = Grid1D::new(0.0, 1.0, 16).unwrap();
        let mut v = vec![0.0; 16];
        v[3] = -1e-3;
        let f = ScalarField::new(g, v).unwrap();
        assert!(matches!(
            f.check_nonnegative(1e-14),
            Err(Error::NegativeDensity { cell: 3, .. })
        ));
    }
}
