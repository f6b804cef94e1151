use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Where the samples of a [`Grid`] sit inside its `n` cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GridStyle {
    /// `n + 1` points `a + j (b - a) / n`, endpoints included.
    Nodes,
    /// `n` cell centres `a + (j - 1/2) (b - a) / n`; the endpoints are never sampled.
    Midpoints,
}

/// Uniform partition of `[a, b]` into `n` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    a: f64,
    b: f64,
    n: usize,
    style: GridStyle,
}

impl Grid {
    pub fn new(a: f64, b: f64, n: usize, style: GridStyle) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::Config(format!("grid needs finite a < b, got [{a}, {b}]")));
        }
        if n < 2 {
            return Err(Error::Config(format!("grid needs at least 2 cells, got {n}")));
        }
        Ok(Self { a, b, n, style })
    }

    pub fn nodes(a: f64, b: f64, n: usize) -> Result<Self> {
        Self::new(a, b, n, GridStyle::Nodes)
    }

    pub fn midpoints(a: f64, b: f64, n: usize) -> Result<Self> {
        Self::new(a, b, n, GridStyle::Midpoints)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Number of cells.
    pub fn cells(&self) -> usize {
        self.n
    }

    pub fn style(&self) -> GridStyle {
        self.style
    }

    /// Cell width.
    pub fn step(&self) -> f64 {
        (self.b - self.a) / self.n as f64
    }

    /// Number of sample points.
    pub fn len(&self) -> usize {
        match self.style {
            GridStyle::Nodes => self.n + 1,
            GridStyle::Midpoints => self.n,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, j: usize) -> f64 {
        let h = self.step();
        match self.style {
            GridStyle::Nodes if j == self.n => self.b,
            GridStyle::Nodes => self.a + j as f64 * h,
            GridStyle::Midpoints => self.a + (j as f64 + 0.5) * h,
        }
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.len()).map(move |j| self.point(j))
    }

    /// Index of the node (cell boundary) closest to `t`, clamped to `[0, n]`,
    /// together with the distance from `t` to that node.
    pub fn snap_to_boundary(&self, t: f64) -> (usize, f64) {
        let h = self.step();
        let raw = libm::round((t - self.a) / h);
        let k = if raw <= 0.0 {
            0
        } else if raw >= self.n as f64 {
            self.n
        } else {
            raw as usize
        };
        let boundary = if k == self.n { self.b } else { self.a + k as f64 * h };
        (k, (t - boundary).abs())
    }
}

/// Samples of a real function on a [`Grid`]; every sample is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Config(format!(
                "grid has {} points but {} samples were given",
                grid.len(),
                values.len()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite sample {} at t = {}",
                values[j],
                grid.point(j)
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.points().map(f).collect())
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        Self::new(grid, alloc::vec![c; grid.len()])
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: alloc::vec![0.0; grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
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

    /// `(t_j, value_j)` pairs.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid.points().zip(self.values.iter().copied())
    }

    /// Pointwise map; fails if the result is not finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two functions on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_grid(other)?;
        Self::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| f(x, y))
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x - y)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x + y)
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        self.map(|v| c * v)
    }

    pub(crate) fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Config(format!(
                "grid mismatch: {:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_layouts() {
        let g = Grid::nodes(0.0, 1.0, 4).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.points().collect::<Vec<_>>(), [0.0, 0.25, 0.5, 0.75, 1.0]);

        let g = Grid::midpoints(0.0, 1.0, 4).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g.points().collect::<Vec<_>>(), [0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::nodes(1.0, 0.0, 10).is_err());
        assert!(Grid::nodes(0.0, 1.0, 1).is_err());
        assert!(Grid::midpoints(0.0, f64::NAN, 10).is_err());
    }

    #[test]
    fn rejects_non_finite_samples() {
        let g = Grid::nodes(0.0, 1.0, 2).unwrap();
        let err = GridFunction::new(g, alloc::vec![0.0, f64::INFINITY, 1.0]).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)));
        assert!(GridFunction::new(g, alloc::vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn snapping() {
        let g = Grid::midpoints(0.0, 1.0, 10).unwrap();
        let (k, d) = g.snap_to_boundary(0.5);
        assert_eq!(k, 5);
        assert!(d < 1e-15);
        let (k, d) = g.snap_to_boundary(0.33);
        assert_eq!(k, 3);
        assert!((d - 0.03).abs() < 1e-12);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = GridFunction::zeros(Grid::nodes(0.0, 1.0, 4).unwrap());
        let b = GridFunction::zeros(Grid::nodes(0.0, 1.0, 6).unwrap());
        assert!(a.sub(&b).is_err());
    }
}
