//! Fixed-step RK4 for `x' + K x = g` on the problem grid, and the
//! fundamental matrices `Y_0, …, Y_{r-1}` built from it.

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::companion::{build_companion, state_jet};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, Jet};
use crate::C64;

/// Below this `min_t |det X(t)|` the fundamental set is flagged.
pub const NEAR_SINGULAR_DET: f64 = 1e-12;

/// Cubic-interpolated value of `f` at the midpoint of cell `[t_i, t_{i+1}]`.
fn midpoint(f: &GridFunction, i: usize) -> DMatrix<C64> {
    let n = f.grid().intervals();
    let (start, w) = if i == 0 {
        (0, [5.0, 15.0, -5.0, 1.0])
    } else if i == n - 1 {
        (n - 3, [1.0, -5.0, 15.0, 5.0])
    } else {
        (i - 1, [-1.0, 9.0, 9.0, -1.0])
    };
    let mut out = DMatrix::zeros(f.rows(), f.cols());
    for (k, wk) in w.iter().enumerate() {
        out += f.node(start + k) * C64::new(wk / 16.0, 0.0);
    }
    out
}

struct Coeffs {
    k: DMatrix<C64>,
    g: Option<DMatrix<C64>>,
}

impl Coeffs {
    fn rate(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        let kx = &self.k * x;
        match &self.g {
            Some(g) => g - kx,
            None => -kx,
        }
    }
}

/// Integrates `x' + K x = g` with `x(t_anchor) = x0`, forwards and backwards
/// from the anchor node. `x0` may have several columns; `g`, when present,
/// must have the same number of columns.
pub fn integrate_from(
    k: &GridFunction,
    g: Option<&GridFunction>,
    x0: &DMatrix<C64>,
    anchor: usize,
) -> Result<GridFunction> {
    let grid = *k.grid();
    let n = grid.intervals();
    let dim = k.rows();
    if k.cols() != dim || x0.nrows() != dim {
        return Err(Error::shape(format!(
            "K is {:?} and initial state {:?}",
            k.shape(),
            x0.shape()
        )));
    }
    if let Some(g) = g {
        if g.grid() != k.grid() || g.shape() != x0.shape() {
            return Err(Error::shape(format!(
                "forcing {:?} does not match state {:?}",
                g.shape(),
                x0.shape()
            )));
        }
    }
    if anchor > n {
        return Err(Error::shape(format!("anchor node {anchor} beyond grid")));
    }
    let at = |i: usize| Coeffs {
        k: k.node(i),
        g: g.map(|g| g.node(i)),
    };
    let mid = |i: usize| Coeffs {
        k: midpoint(k, i),
        g: g.map(|g| midpoint(g, i)),
    };
    let step = |x: &DMatrix<C64>, from: &Coeffs, half: &Coeffs, to: &Coeffs, h: f64| {
        let h = C64::new(h, 0.0);
        let half_h = h * 0.5;
        let k1 = from.rate(x);
        let k2 = half.rate(&(x + &k1 * half_h));
        let k3 = half.rate(&(x + &k2 * half_h));
        let k4 = to.rate(&(x + &k3 * h));
        x + (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * (h / 6.0)
    };
    let finite = |x: &DMatrix<C64>| x.iter().all(|z| z.re.is_finite() && z.im.is_finite());

    let mut states = vec![DMatrix::zeros(dim, x0.ncols()); grid.len()];
    states[anchor] = x0.clone();
    let h = grid.step();
    for i in anchor..n {
        let next = step(&states[i], &at(i), &mid(i), &at(i + 1), h);
        if !finite(&next) {
            return Err(Error::IntegrationBlowup { node: i + 1 });
        }
        states[i + 1] = next;
    }
    for i in (1..=anchor).rev() {
        let prev = step(&states[i], &at(i), &mid(i - 1), &at(i - 1), -h);
        if !finite(&prev) {
            return Err(Error::IntegrationBlowup { node: i - 1 });
        }
        states[i - 1] = prev;
    }
    GridFunction::from_nodes(grid, dim, x0.ncols(), &states)
}

/// Vector Cauchy problem `x' + K x = g`, `x(a) = x_a`.
pub fn integrate(k: &GridFunction, g: &GridFunction, x_a: &DVector<C64>) -> Result<GridFunction> {
    let x0 = DMatrix::from_column_slice(x_a.len(), 1, x_a.as_slice());
    integrate_from(k, Some(g), &x0, 0)
}

/// Fundamental matrices `Y_k` with `Y_k^{(j)}(t0) = δ_{kj} I_m` for
/// `j = 0, …, r-1`, and the companion-state matrix `X` whose `k`-th block
/// column is `col(Y_k, Y_k', …, Y_k^{(r-1)})`.
#[derive(Debug, Clone)]
pub struct FundamentalSet {
    pub y: Vec<GridFunction>,
    pub x: GridFunction,
    pub t0: f64,
    pub min_abs_det: f64,
    pub warnings: Vec<String>,
    coefficients: Vec<GridFunction>,
}

impl FundamentalSet {
    pub fn m(&self) -> usize {
        self.coefficients[0].rows()
    }

    pub fn r(&self) -> usize {
        self.coefficients.len()
    }

    /// Jet of the `m x rm` matrix `(Y_0 … Y_{r-1})` up to `order`.
    pub fn jet(&self, order: usize) -> Result<Jet> {
        state_jet(&self.x, &self.coefficients, None, order)
    }

    pub fn coefficients(&self) -> &[GridFunction] {
        &self.coefficients
    }
}

pub fn fundamental_matrices(a: &[GridFunction], t0: f64) -> Result<FundamentalSet> {
    let first = a
        .first()
        .ok_or_else(|| Error::shape("need at least one coefficient (r >= 1)"))?;
    let grid = *first.grid();
    let anchor = grid.node_index(t0).ok_or(Error::AnchorOffGrid(t0))?;
    let m = first.rows();
    let r = a.len();
    let zero = GridFunction::zeros(grid, m, 1);
    let sys = build_companion(a, &zero)?;
    let x = integrate_from(&sys.k, None, &DMatrix::identity(r * m, r * m), anchor)?;
    let min_abs_det = (0..grid.len())
        .map(|i| x.node(i).determinant().norm())
        .fold(f64::INFINITY, f64::min);
    let mut warnings = Vec::new();
    if min_abs_det < NEAR_SINGULAR_DET {
        let msg = format!("near-singular-X: min |det X| = {min_abs_det:e}; grid may be too coarse");
        warn!("{msg}");
        warnings.push(msg);
    }
    let y = (0..r).map(|k| x.block(0, k * m, m, m)).collect();
    Ok(FundamentalSet {
        y,
        x,
        t0: grid.node(anchor),
        min_abs_det,
        warnings,
        coefficients: a.to_vec(),
    })
}
