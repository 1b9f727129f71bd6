//! Uniform grids and complex-valued functions sampled on them.
//!
//! A [`GridFunction`] stores one `rows x cols` complex matrix per node. Scalars
//! are `1 x 1`, vectors `m x 1`. All arithmetic is node-wise; differentiation,
//! quadrature and Sobolev norms live in the submodules.

mod jet;
mod norm;
pub mod quad;
mod stencil;

pub use jet::Jet;
pub use norm::{lp_norm, sobolev_norm, sobolev_norm_of_jet, Exponent, SobolevIndex};
pub use stencil::{derivative, fd_weights, nth_derivative, MAX_STENCIL_ORDER};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::C64;

/// Smallest admissible number of subintervals.
pub const MIN_INTERVALS: usize = 8;

/// Uniform partition of `[a, b]` into `n` subintervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    a: f64,
    b: f64,
    n: usize,
}

impl Grid {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidGrid(format!("need finite a < b, got [{a}, {b}]")));
        }
        if n < MIN_INTERVALS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_INTERVALS} subintervals, got {n}"
            )));
        }
        Ok(Grid { a, b, n })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Number of subintervals.
    pub fn intervals(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.b - self.a) / self.n as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n {
            self.b
        } else {
            self.a + i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    pub fn contains(&self, t: f64) -> bool {
        let slack = 1e-12 * (self.b - self.a);
        t >= self.a - slack && t <= self.b + slack
    }

    /// Index of the node equal to `t` (up to rounding), if any.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let x = (t - self.a) / self.step();
        let i = x.round();
        if i < 0.0 || i > self.n as f64 || (x - i).abs() > 1e-9 {
            None
        } else {
            Some(i as usize)
        }
    }
}

/// Matrix-valued function sampled at every node of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    rows: usize,
    cols: usize,
    // node-major, then row-major within a node
    data: Vec<C64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid, rows: usize, cols: usize) -> Self {
        GridFunction {
            grid,
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); grid.len() * rows * cols],
        }
    }

    /// Builds a function from raw node-major, row-major samples.
    pub fn from_samples(grid: Grid, rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::shape("grid function must have nonzero shape"));
        }
        if data.len() != grid.len() * rows * cols {
            return Err(Error::shape(format!(
                "expected {} samples for shape {rows}x{cols}, got {}",
                grid.len() * rows * cols,
                data.len()
            )));
        }
        let per = rows * cols;
        if let Some(k) = data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            let node = k / per;
            return Err(Error::NonFiniteSample {
                what: "grid function".into(),
                node,
                t: grid.node(node),
            });
        }
        Ok(GridFunction {
            grid,
            rows,
            cols,
            data,
        })
    }

    pub fn from_real(grid: Grid, values: &[f64]) -> Result<Self> {
        Self::from_samples(grid, 1, 1, values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn from_scalar_fn(grid: Grid, f: impl Fn(f64) -> C64) -> Result<Self> {
        Self::from_samples(grid, 1, 1, grid.nodes().into_iter().map(f).collect())
    }

    pub fn from_real_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_scalar_fn(grid, |t| C64::new(f(t), 0.0))
    }

    pub fn from_matrix_fn(
        grid: Grid,
        rows: usize,
        cols: usize,
        f: impl Fn(f64) -> DMatrix<C64>,
    ) -> Result<Self> {
        let nodes: Vec<DMatrix<C64>> = grid.nodes().into_iter().map(f).collect();
        Self::from_nodes(grid, rows, cols, &nodes)
    }

    pub fn constant(grid: Grid, value: &DMatrix<C64>) -> Self {
        let mut out = Self::zeros(grid, value.nrows(), value.ncols());
        for i in 0..grid.len() {
            out.set_node(i, value);
        }
        out
    }

    pub fn from_nodes(grid: Grid, rows: usize, cols: usize, nodes: &[DMatrix<C64>]) -> Result<Self> {
        if nodes.len() != grid.len() {
            return Err(Error::shape(format!(
                "expected {} node values, got {}",
                grid.len(),
                nodes.len()
            )));
        }
        let mut data = Vec::with_capacity(grid.len() * rows * cols);
        for (i, m) in nodes.iter().enumerate() {
            if m.shape() != (rows, cols) {
                return Err(Error::shape(format!(
                    "node {i} has shape {:?}, expected ({rows}, {cols})",
                    m.shape()
                )));
            }
            for r in 0..rows {
                for c in 0..cols {
                    data.push(m[(r, c)]);
                }
            }
        }
        Self::from_samples(grid, rows, cols, data)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn samples(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn at(&self, node: usize, r: usize, c: usize) -> C64 {
        self.data[(node * self.rows + r) * self.cols + c]
    }

    #[inline]
    pub(crate) fn at_mut(&mut self, node: usize, r: usize, c: usize) -> &mut C64 {
        &mut self.data[(node * self.rows + r) * self.cols + c]
    }

    pub fn node(&self, i: usize) -> DMatrix<C64> {
        let per = self.rows * self.cols;
        DMatrix::from_row_slice(self.rows, self.cols, &self.data[i * per..(i + 1) * per])
    }

    pub(crate) fn set_node(&mut self, i: usize, value: &DMatrix<C64>) {
        debug_assert_eq!(value.shape(), (self.rows, self.cols));
        for r in 0..self.rows {
            for c in 0..self.cols {
                *self.at_mut(i, r, c) = value[(r, c)];
            }
        }
    }

    /// Samples of entry `(r, c)` across all nodes.
    pub fn component(&self, r: usize, c: usize) -> Vec<C64> {
        (0..self.grid.len()).map(|i| self.at(i, r, c)).collect()
    }

    pub fn scalar_component(&self, r: usize, c: usize) -> GridFunction {
        GridFunction {
            grid: self.grid,
            rows: 1,
            cols: 1,
            data: self.component(r, c),
        }
    }

    pub fn column(&self, c: usize) -> GridFunction {
        self.block(0, c, self.rows, 1)
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> GridFunction {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols, "block out of range");
        let mut out = GridFunction::zeros(self.grid, rows, cols);
        for i in 0..self.grid.len() {
            for r in 0..rows {
                for c in 0..cols {
                    *out.at_mut(i, r, c) = self.at(i, r0 + r, c0 + c);
                }
            }
        }
        out
    }

    fn check_same(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::shape("grid functions live on different grids"));
        }
        if self.shape() != other.shape() {
            return Err(Error::shape(format!(
                "shape {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.check_same(other)?;
        Ok(self.zip_with(other, |x, y| x + y))
    }

    pub fn try_sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.check_same(other)?;
        Ok(self.zip_with(other, |x, y| x - y))
    }

    fn zip_with(&self, other: &GridFunction, f: impl Fn(C64, C64) -> C64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&x, &y)| f(x, y)).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> GridFunction {
        self.map(|z| z * s)
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    /// Node-wise matrix product `self(t) * rhs(t)`.
    pub fn matmul(&self, rhs: &GridFunction) -> Result<GridFunction> {
        if self.grid != rhs.grid || self.cols != rhs.rows {
            return Err(Error::shape(format!(
                "cannot multiply {:?} by {:?}",
                self.shape(),
                rhs.shape()
            )));
        }
        let mut out = GridFunction::zeros(self.grid, self.rows, rhs.cols);
        for i in 0..self.grid.len() {
            for r in 0..self.rows {
                for c in 0..rhs.cols {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in 0..self.cols {
                        acc += self.at(i, r, k) * rhs.at(i, k, c);
                    }
                    *out.at_mut(i, r, c) = acc;
                }
            }
        }
        Ok(out)
    }

    /// Node-wise product with a constant matrix on the right.
    pub fn mul_const(&self, rhs: &DMatrix<C64>) -> Result<GridFunction> {
        if self.cols != rhs.nrows() {
            return Err(Error::shape(format!(
                "cannot multiply {:?} by constant {:?}",
                self.shape(),
                rhs.shape()
            )));
        }
        let nodes: Vec<DMatrix<C64>> = (0..self.grid.len()).map(|i| self.node(i) * rhs).collect();
        GridFunction::from_nodes(self.grid, self.rows, rhs.ncols(), &nodes)
    }

    /// Entry-wise integral over `[a, b]` by composite Simpson.
    pub fn integral(&self) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(r, c)] = quad::simpson(&self.component(r, c), self.grid.step());
            }
        }
        out
    }

    /// Value at an arbitrary point by local cubic interpolation.
    pub fn interpolate(&self, t: f64) -> DMatrix<C64> {
        let (start, w) = quad::cubic_weights(&self.grid, t);
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for (k, wk) in w.iter().enumerate() {
            for r in 0..self.rows {
                for c in 0..self.cols {
                    out[(r, c)] += self.at(start + k, r, c) * *wk;
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}
