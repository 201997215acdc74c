//! Rectangular patches of the conformal parameter plane and complex fields
//! sampled on them.
//!
//! Node `(i, j)` sits at `z = x0 + i*hx + i*(y0 + j*hy)`. Values are stored
//! row-major with `j` (the y index) outer and `i` inner, so the flat index is
//! `j * nx + i`.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalGrid {
    origin: Complex64,
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
}

impl ConformalGrid {
    pub fn new(origin: Complex64, nx: usize, ny: usize, hx: f64, hy: f64) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::GridTooSmall { nx, ny });
        }
        if !(hx.is_finite() && hy.is_finite() && hx > 0.0 && hy > 0.0) {
            return Err(Error::InvalidSpacing { hx, hy });
        }
        if !(origin.re.is_finite() && origin.im.is_finite()) {
            return Err(Error::InvalidOrigin);
        }
        Ok(Self {
            origin,
            nx,
            ny,
            hx,
            hy,
        })
    }

    /// Square-cell grid with lower-left corner `(x0, y0)`.
    pub fn square(x0: f64, y0: f64, n: usize, h: f64) -> Result<Self> {
        Self::new(Complex64::new(x0, y0), n, n, h, h)
    }

    pub fn origin(&self) -> Complex64 {
        self.origin
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    pub fn hy(&self) -> f64 {
        self.hy
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.origin.re + i as f64 * self.hx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.origin.im + j as f64 * self.hy
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.x(i), self.y(j))
    }

    /// True when the node is at least `rim` nodes away from every edge.
    #[inline]
    pub fn is_inside_rim(&self, i: usize, j: usize, rim: usize) -> bool {
        i >= rim && j >= rim && i + rim < self.nx && j + rim < self.ny
    }

    pub fn check_node(&self, i: usize, j: usize) -> Result<()> {
        if i < self.nx && j < self.ny {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                i,
                j,
                nx: self.nx,
                ny: self.ny,
            })
        }
    }

    pub fn ensure_same(&self, other: &ConformalGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Cell area `hx * hy`, the quadrature weight of discrete L2 norms.
    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }
}

/// One complex value per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: ConformalGrid,
    values: Vec<Complex64>,
}

impl ComplexField {
    /// Wraps values, rejecting wrong lengths and non-finite entries.
    pub fn from_values(grid: ConformalGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        let field = Self { grid, values };
        field.ensure_finite("field")?;
        Ok(field)
    }

    /// Residual fields may carry masked non-finite entries, so no check here.
    pub(crate) fn from_raw(grid: ConformalGrid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn from_fn(grid: ConformalGrid, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::from_node_fn(grid, |i, j| f(grid.node(i, j)))
    }

    pub fn from_node_fn(grid: ConformalGrid, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                values.push(f(i, j));
            }
        }
        Self { grid, values }
    }

    pub fn constant(grid: ConformalGrid, c: Complex64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn zeros(grid: ConformalGrid) -> Self {
        Self::constant(grid, Complex64::new(0.0, 0.0))
    }

    pub fn grid(&self) -> &ConformalGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.index(i, j)]
    }

    #[inline]
    pub fn at(&self, idx: usize) -> Complex64 {
        self.values[idx]
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|&c| f(c)).collect())
    }

    pub fn zip_map(
        &self,
        other: &ComplexField,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn conj(&self) -> Self {
        self.map(|c| c.conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|c| c * s)
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.re).collect()
    }

    pub fn im(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.im).collect()
    }

    /// NaN and infinities are rejected at entry to every operation.
    pub fn ensure_finite(&self, name: &str) -> Result<()> {
        match self
            .values
            .iter()
            .position(|c| !(c.re.is_finite() && c.im.is_finite()))
        {
            None => Ok(()),
            Some(idx) => {
                let (i, j) = self.grid.coords(idx);
                Err(Error::NonFinite {
                    field: name.to_string(),
                    i,
                    j,
                })
            }
        }
    }

    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        let idx = self.grid.index(i, j);
        self.values[idx] = value;
    }

    /// Samples every `step`-th node in both directions, keeping the origin.
    pub fn subsample(&self, step: usize) -> Result<Self> {
        let nx = (self.grid.nx() - 1) / step + 1;
        let ny = (self.grid.ny() - 1) / step + 1;
        let grid = ConformalGrid::new(
            self.grid.origin(),
            nx,
            ny,
            self.grid.hx() * step as f64,
            self.grid.hy() * step as f64,
        )?;
        Ok(Self::from_node_fn(grid, |i, j| {
            self.get(i * step, j * step)
        }))
    }
}
