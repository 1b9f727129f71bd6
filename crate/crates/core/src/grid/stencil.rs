use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::C64;

use super::GridFunction;

/// Highest derivative order a single stencil pass produces.
pub const MAX_STENCIL_ORDER: usize = 4;

/// Finite-difference weights for the `order`-th derivative at `z` using the
/// nodes `x` (Fornberg's recursion). Returns one weight per node.
pub fn fd_weights(z: f64, x: &[f64], order: usize) -> Vec<f64> {
    let n = x.len();
    assert!(n > order, "need more nodes than the derivative order");
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Stencil window `(start, width)` for node `i` of a grid with `n` intervals.
/// Symmetric in the interior, shifted one-sided near the ends; fourth order
/// everywhere.
fn window(i: usize, n: usize, order: usize) -> (usize, usize) {
    let central = if order % 2 == 1 { order + 4 } else { order + 3 };
    let half = central / 2;
    if i >= half && i + half <= n {
        return (i - half, central);
    }
    let width = order + 4;
    let start = if i < half { 0 } else { n + 1 - width };
    (start, width)
}

/// Fourth-order finite-difference derivative of order `order <= 4`.
pub fn derivative(f: &GridFunction, order: usize) -> Result<GridFunction> {
    if order == 0 {
        return Ok(f.clone());
    }
    if order > MAX_STENCIL_ORDER {
        return Err(Error::UnsupportedOrder(format!(
            "single stencil pass supports order <= {MAX_STENCIL_ORDER}, got {order}"
        )));
    }
    let grid = *f.grid();
    let n = grid.intervals();
    if n < 4 * order {
        return Err(Error::GridTooCoarse(format!(
            "order {order} needs at least {} subintervals, grid has {n}",
            4 * order
        )));
    }
    let scale = grid.step().powi(order as i32).recip();
    let mut cache: HashMap<(isize, usize), Vec<f64>> = HashMap::new();
    let (rows, cols) = f.shape();
    let mut out = GridFunction::zeros(grid, rows, cols);
    for i in 0..grid.len() {
        let (start, width) = window(i, n, order);
        let offset = start as isize - i as isize;
        let w = cache.entry((offset, width)).or_insert_with(|| {
            let x: Vec<f64> = (0..width).map(|k| (offset + k as isize) as f64).collect();
            let mut w = fd_weights(0.0, &x, order);
            // exact annihilation of constants
            let last = w.len() - 1;
            w[last] = -w[..last].iter().sum::<f64>();
            w
        });
        for r in 0..rows {
            for c in 0..cols {
                let mut acc = C64::new(0.0, 0.0);
                for (k, wk) in w.iter().enumerate() {
                    acc += f.at(start + k, r, c) * *wk;
                }
                *out.at_mut(i, r, c) = acc * scale;
            }
        }
    }
    Ok(out)
}

/// Derivative of arbitrary order by composing passes of at most fourth order.
/// Accuracy degrades with each extra pass.
pub fn nth_derivative(f: &GridFunction, order: usize) -> Result<GridFunction> {
    if order <= MAX_STENCIL_ORDER {
        return derivative(f, order);
    }
    let g = derivative(f, MAX_STENCIL_ORDER)?;
    nth_derivative(&g, order - MAX_STENCIL_ORDER)
}
