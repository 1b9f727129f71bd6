//! Reduction of `y^{(r)} + Σ_k A_k y^{(k)} = f` to the first-order system
//! `x' + K x = g` with `x = col(y, y', …, y^{(r-1)})`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::{nth_derivative, GridFunction, Jet};
use crate::C64;

/// `K` and `g` of the first-order system, sampled on the problem grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CompanionSystem {
    pub k: GridFunction,
    pub g: GridFunction,
    pub m: usize,
    pub r: usize,
}

fn check_coefficients(a: &[GridFunction]) -> Result<usize> {
    let first = a
        .first()
        .ok_or_else(|| Error::shape("need at least one coefficient (r >= 1)"))?;
    let m = first.rows();
    for (k, ak) in a.iter().enumerate() {
        if ak.shape() != (m, m) {
            return Err(Error::shape(format!(
                "A_{k} has shape {:?}, expected ({m}, {m})",
                ak.shape()
            )));
        }
        if ak.grid() != first.grid() {
            return Err(Error::shape(format!("A_{k} lives on a different grid")));
        }
    }
    Ok(m)
}

/// Builds the companion matrix. `a[k]` multiplies `y^{(k)}`, so the last
/// block row of `K` is `(A_0, …, A_{r-1})` and every other block row holds
/// `-I_m` on the superdiagonal. `f` may have several columns (matrix
/// right-hand sides); `g` is zero except for its last block row.
pub fn build_companion(a: &[GridFunction], f: &GridFunction) -> Result<CompanionSystem> {
    let m = check_coefficients(a)?;
    let r = a.len();
    if f.rows() != m || f.grid() != a[0].grid() {
        return Err(Error::shape(format!(
            "right-hand side has shape {:?} on {:?}, expected {m} rows on the coefficient grid",
            f.shape(),
            f.grid()
        )));
    }
    let grid = *a[0].grid();
    let rm = r * m;
    let mut k = GridFunction::zeros(grid, rm, rm);
    let mut g = GridFunction::zeros(grid, rm, f.cols());
    let minus_one = C64::new(-1.0, 0.0);
    for i in 0..grid.len() {
        let mut node = DMatrix::zeros(rm, rm);
        for blk in 0..r - 1 {
            for d in 0..m {
                node[(blk * m + d, (blk + 1) * m + d)] = minus_one;
            }
        }
        for (blk, ak) in a.iter().enumerate() {
            node.view_mut(((r - 1) * m, blk * m), (m, m)).copy_from(&ak.node(i));
        }
        k.set_node(i, &node);
        let mut gn = DMatrix::zeros(rm, f.cols());
        gn.view_mut(((r - 1) * m, 0), (m, f.cols())).copy_from(&f.node(i));
        g.set_node(i, &gn);
    }
    Ok(CompanionSystem { k, g, m, r })
}

/// Splits a state `col(y, y', …, y^{(r-1)})` into its `r` blocks.
pub fn extract_state(x: &GridFunction, m: usize, r: usize) -> Result<Vec<GridFunction>> {
    if m == 0 || x.rows() != m * r {
        return Err(Error::shape(format!(
            "state has {} rows, not r*m = {}*{}",
            x.rows(),
            r,
            m
        )));
    }
    Ok((0..r).map(|k| x.block(k * m, 0, m, x.cols())).collect())
}

/// Derivatives `y, …, y^{(order)}` of a solution given its companion state.
///
/// Orders below `r` are read off the state, `y^{(r)}` comes from the
/// equation itself and higher orders are finite differences of `y^{(r)}`.
/// `forcing = None` means the homogeneous equation.
pub fn state_jet(
    x: &GridFunction,
    a: &[GridFunction],
    forcing: Option<&GridFunction>,
    order: usize,
) -> Result<Jet> {
    let m = check_coefficients(a)?;
    let r = a.len();
    let mut derivs = extract_state(x, m, r)?;
    let mut top = match forcing {
        Some(f) => f.clone(),
        None => GridFunction::zeros(*x.grid(), m, x.cols()),
    };
    for (ak, dk) in a.iter().zip(&derivs) {
        top = top.try_sub(&ak.matmul(dk)?)?;
    }
    if order >= r {
        for k in 1..=(order - r) {
            derivs.push(nth_derivative(&top, k)?);
        }
        derivs.insert(r, top);
    } else {
        derivs.truncate(order + 1);
    }
    Jet::from_derivatives(derivs)
}
