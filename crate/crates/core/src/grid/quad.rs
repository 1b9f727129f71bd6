//! Quadrature and interpolation on uniform grids.

use std::ops::{Add, Mul};

use nalgebra::DMatrix;

use super::{Grid, GridFunction};
use crate::C64;

/// Composite Simpson rule over uniformly spaced samples. An odd number of
/// intervals closes with the 3/8 rule on the last three.
pub fn simpson<T>(f: &[T], h: f64) -> T
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    let n = f.len() - 1;
    assert!(n >= 3, "Simpson needs at least three intervals");
    let even = if n.is_multiple_of(2) { n } else { n - 3 };
    let mut acc = T::default();
    if even > 0 {
        acc = acc + f[0] + f[even];
        for (k, v) in f.iter().enumerate().take(even).skip(1) {
            acc = acc + *v * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc = acc * (h / 3.0);
    }
    if even < n {
        let tail = (f[n - 3] + f[n - 2] * 3.0 + f[n - 1] * 3.0 + f[n]) * (3.0 * h / 8.0);
        acc = acc + tail;
    }
    acc
}

/// Four-point Lagrange weights for the value at `t`; returns the first node
/// index of the stencil.
pub fn cubic_weights(grid: &Grid, t: f64) -> (usize, [f64; 4]) {
    let n = grid.intervals();
    let h = grid.step();
    let x = (t - grid.a()) / h;
    let cell = (x.floor().max(0.0) as usize).min(n - 1);
    let start = cell.saturating_sub(1).min(n - 3);
    let s = x - start as f64;
    let mut w = [0.0; 4];
    for (j, wj) in w.iter_mut().enumerate() {
        let mut v = 1.0;
        for k in 0..4 {
            if k != j {
                v *= (s - k as f64) / (j as f64 - k as f64);
            }
        }
        *wj = v;
    }
    (start, w)
}

/// Weights `(first node, w)` integrating the local cubic interpolant over cell `i`.
pub fn cell_weights(n: usize, i: usize, h: f64) -> (usize, [f64; 4]) {
    let s = h / 24.0;
    if i == 0 {
        (0, [9.0 * s, 19.0 * s, -5.0 * s, s])
    } else if i == n - 1 {
        (n - 3, [s, -5.0 * s, 19.0 * s, 9.0 * s])
    } else {
        (i - 1, [-s, 13.0 * s, 13.0 * s, -s])
    }
}

/// Running integral `F(t_i) = ∫_a^{t_i} f` with `F(a) = 0`, exact for cubics.
pub fn antiderivative(f: &GridFunction) -> GridFunction {
    let grid = *f.grid();
    let n = grid.intervals();
    let h = grid.step();
    let (rows, cols) = f.shape();
    let mut out = GridFunction::zeros(grid, rows, cols);
    for i in 0..n {
        let (start, w) = cell_weights(n, i, h);
        for r in 0..rows {
            for c in 0..cols {
                let mut cell = C64::new(0.0, 0.0);
                for (k, wk) in w.iter().enumerate() {
                    cell += f.at(start + k, r, c) * *wk;
                }
                let prev = out.at(i, r, c);
                *out.at_mut(i + 1, r, c) = prev + cell;
            }
        }
    }
    out
}

const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_8),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_8),
];

/// `∫_lo^hi w(t) f(t) dt` for a sampled `f` and an analytic scalar weight,
/// splitting at grid nodes and using 4-point Gauss on the cubic interpolant
/// of `f` inside each cell.
pub fn integrate_weighted(
    f: &GridFunction,
    lo: f64,
    hi: f64,
    w: impl Fn(f64) -> f64,
) -> DMatrix<C64> {
    let grid = f.grid();
    let mut out = DMatrix::zeros(f.rows(), f.cols());
    if hi <= lo {
        return out;
    }
    let h = grid.step();
    let first = ((lo - grid.a()) / h).floor().max(0.0) as usize;
    let mut left = lo;
    let mut cell = first;
    while left < hi && cell < grid.intervals() {
        let right = grid.node(cell + 1).min(hi);
        if right > left {
            let mid = 0.5 * (left + right);
            let half = 0.5 * (right - left);
            for (x, wt) in GAUSS4 {
                let t = mid + half * x;
                out += f.interpolate(t) * C64::new(wt * half * w(t), 0.0);
            }
        }
        left = right;
        cell += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_exact_on_cubics_even_and_odd() {
        for n in [8usize, 9, 15, 16] {
            let h = 2.0 / n as f64;
            let f: Vec<f64> = (0..=n).map(|i| (i as f64 * h).powi(3) - 1.0).collect();
            // ∫_0^2 t^3 - 1 = 4 - 2
            assert!((simpson(&f, h) - 2.0).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn cubic_interpolation_reproduces_cubics() {
        let g = Grid::new(0.0, 1.0, 10).unwrap();
        let f = GridFunction::from_real_fn(g, |t| 2.0 * t.powi(3) - t + 0.5).unwrap();
        for t in [0.0, 0.013, 0.5, 0.77, 0.999, 1.0] {
            let v = f.interpolate(t)[(0, 0)].re;
            assert!((v - (2.0 * t.powi(3) - t + 0.5)).abs() < 1e-13);
        }
    }

    #[test]
    fn weighted_integral_partial_cells() {
        let g = Grid::new(0.0, 1.0, 10).unwrap();
        let f = GridFunction::from_real_fn(g, |t| t * t).unwrap();
        // ∫_0.13^0.61 (0.61 - t) t^2 dt
        let v = integrate_weighted(&f, 0.13, 0.61, |t| 0.61 - t)[(0, 0)].re;
        let anti = |t: f64| 0.61 * t.powi(3) / 3.0 - t.powi(4) / 4.0;
        assert!((v - (anti(0.61) - anti(0.13))).abs() < 1e-14);
    }
}
