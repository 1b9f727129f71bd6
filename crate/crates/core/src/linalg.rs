//! Small dense complex linear algebra on top of nalgebra's SVD.

use nalgebra::{DMatrix, DVector};

use crate::C64;

/// SVD with singular values sorted in decreasing order.
#[derive(Debug, Clone)]
pub struct SortedSvd {
    pub u: DMatrix<C64>,
    pub svals: Vec<f64>,
    /// Right singular vectors as columns.
    pub v: DMatrix<C64>,
}

impl SortedSvd {
    pub fn new(m: &DMatrix<C64>) -> Self {
        let svd = m.clone().svd(true, true);
        let u = svd.u.expect("u requested");
        let v = svd.v_t.expect("v_t requested").adjoint();
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let svals = order.iter().map(|&i| svd.singular_values[i]).collect();
        let u = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
        let v = DMatrix::from_fn(v.nrows(), order.len(), |r, c| v[(r, order[c])]);
        SortedSvd { u, svals, v }
    }

    pub fn largest(&self) -> f64 {
        self.svals.first().copied().unwrap_or(0.0)
    }

    /// Absolute cut-off for a tolerance relative to the largest singular value.
    pub fn cutoff(&self, rtol: f64) -> f64 {
        rtol * self.largest()
    }

    pub fn rank(&self, rtol: f64) -> usize {
        let cut = self.cutoff(rtol);
        self.svals.iter().filter(|&&s| s > cut).count()
    }

    /// Orthonormal basis of the (numerical) null space, as columns.
    pub fn null_space(&self, rtol: f64) -> Vec<DVector<C64>> {
        let rank = self.rank(rtol);
        (rank..self.v.ncols()).map(|c| self.v.column(c).clone_owned()).collect()
    }

    /// Minimum-norm least-squares solution of `M x = b`.
    pub fn solve_min_norm(&self, b: &DVector<C64>, rtol: f64) -> DVector<C64> {
        let rank = self.rank(rtol);
        let mut x = DVector::zeros(self.v.nrows());
        for k in 0..rank {
            let coef = self.u.column(k).dotc(b) / C64::new(self.svals[k], 0.0);
            x += self.v.column(k) * coef;
        }
        x
    }

    pub fn condition_number(&self) -> f64 {
        match self.svals.last() {
            Some(&s) if s > 0.0 => self.largest() / s,
            _ => f64::INFINITY,
        }
    }
}
