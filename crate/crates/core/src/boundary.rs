//! General linear boundary operators `B: (W_p^{n+r})^m → ℂ^{rm}`.
//!
//! An operator is stored in two parts that are summed on application:
//!
//! * a **canonical** part `Σ_{s<n+r} α_s y^{(s)}(a) + ∫_a^b Φ(t) y^{(n+r)}(t) dt`;
//! * **composite** terms: point evaluations `W y^{(d)}(τ)` and weighted
//!   integrals `∫ W(t) y^{(d)}(t) dt`.
//!
//! [`BoundaryOperator::canonicalize`] rewrites composite terms into the
//! canonical part by Taylor expansion at `a` with integral remainder. Point
//! terms produce truncated-power kernels `W (τ - t)_+^k / k!`, which are kept
//! in closed form so that their jump or kink at `τ` is integrated exactly.

use nalgebra::DMatrix;

use crate::cauchy::FundamentalSet;
use crate::error::{Error, Result};
use crate::grid::{quad, Grid, GridFunction, Jet};
use crate::linalg::SortedSvd;
use crate::C64;

/// Floor of the rank tolerance relative to the largest singular value.
pub const MIN_RANK_RTOL: f64 = 1e-10;

/// Default rank tolerance for a characteristic matrix computed on `grid`.
///
/// Entries of `[B Y]` carry the O(h^4) error of the fundamental matrices, so
/// the cut-off follows `10 N^{-4}` and never drops below [`MIN_RANK_RTOL`].
pub fn default_rank_rtol(grid: &Grid) -> f64 {
    let n = grid.intervals() as f64;
    (10.0 / n.powi(4)).max(MIN_RANK_RTOL)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    /// `W y^{(order)}(τ)`.
    Point {
        tau: f64,
        order: usize,
        weight: DMatrix<C64>,
    },
    /// `∫_a^b W(t) y^{(order)}(t) dt`.
    Integral { order: usize, weight: GridFunction },
}

/// `W (τ - t)_+^power / power!` as a function of `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedPower {
    pub tau: f64,
    pub power: usize,
    pub weight: DMatrix<C64>,
}

impl TruncatedPower {
    fn scalar(&self, t: f64) -> f64 {
        let d = self.tau - t;
        if d < 0.0 {
            0.0
        } else {
            d.powi(self.power as i32) / factorial(self.power)
        }
    }
}

/// Kernel `Φ` of the canonical form.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub sampled: GridFunction,
    pub truncated: Vec<TruncatedPower>,
}

impl Kernel {
    /// `Φ` sampled at the grid nodes.
    pub fn samples(&self) -> GridFunction {
        let grid = *self.sampled.grid();
        let mut out = self.sampled.clone();
        for tp in &self.truncated {
            let piece = grid
                .nodes()
                .into_iter()
                .map(|t| &tp.weight * C64::new(tp.scalar(t), 0.0))
                .collect::<Vec<_>>();
            let piece =
                GridFunction::from_nodes(grid, tp.weight.nrows(), tp.weight.ncols(), &piece)
                    .expect("shapes agree");
            out = out.try_add(&piece).expect("shapes agree");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Canonical {
    /// `α_0, …, α_{n+r-1}`, each `rm x m`.
    pub alphas: Vec<DMatrix<C64>>,
    pub kernel: Kernel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryOperator {
    grid: Grid,
    m: usize,
    n: usize,
    r: usize,
    canonical: Option<Canonical>,
    terms: Vec<Term>,
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

fn check_finite(m: &DMatrix<C64>, what: &str) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::shape(format!("{what} has non-finite entries")))
    }
}

impl BoundaryOperator {
    /// Operator with no terms on `(W_p^{n+r})^m`; it maps into `ℂ^{rm}`.
    pub fn new(grid: Grid, m: usize, n: usize, r: usize) -> Result<Self> {
        if m == 0 || r == 0 {
            return Err(Error::shape("boundary operator needs m >= 1 and r >= 1"));
        }
        Ok(BoundaryOperator {
            grid,
            m,
            n,
            r,
            canonical: None,
            terms: Vec::new(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Number of scalar conditions, `rm`.
    pub fn rows(&self) -> usize {
        self.r * self.m
    }

    /// `n + r`, the order of the solution space.
    pub fn top_order(&self) -> usize {
        self.n + self.r
    }

    pub fn canonical(&self) -> Option<&Canonical> {
        self.canonical.as_ref()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.canonical.is_none() && self.terms.is_empty()
    }

    fn check_weight(&self, w: &DMatrix<C64>) -> Result<()> {
        if w.shape() != (self.rows(), self.m) {
            return Err(Error::shape(format!(
                "weight has shape {:?}, expected ({}, {})",
                w.shape(),
                self.rows(),
                self.m
            )));
        }
        check_finite(w, "weight")
    }

    /// Adds `W y^{(order)}(τ)`; `order <= n + r - 1`.
    pub fn with_point(mut self, tau: f64, order: usize, weight: DMatrix<C64>) -> Result<Self> {
        if !tau.is_finite() || !self.grid.contains(tau) {
            return Err(Error::PointOutOfRange {
                tau,
                a: self.grid.a(),
                b: self.grid.b(),
            });
        }
        if order >= self.top_order() {
            return Err(Error::OrderOutOfRange {
                order,
                max: self.top_order() - 1,
            });
        }
        self.check_weight(&weight)?;
        let tau = tau.clamp(self.grid.a(), self.grid.b());
        self.terms.push(Term::Point { tau, order, weight });
        Ok(self)
    }

    /// Adds `∫ W(t) y^{(order)}(t) dt`; `order <= n + r`.
    pub fn with_integral(mut self, order: usize, weight: GridFunction) -> Result<Self> {
        if order > self.top_order() {
            return Err(Error::OrderOutOfRange {
                order,
                max: self.top_order(),
            });
        }
        if weight.shape() != (self.rows(), self.m) || *weight.grid() != self.grid {
            return Err(Error::shape(format!(
                "integral weight has shape {:?}, expected ({}, {}) on the operator grid",
                weight.shape(),
                self.rows(),
                self.m
            )));
        }
        self.terms.push(Term::Integral { order, weight });
        Ok(self)
    }

    /// Sets the canonical part from `α_s` and a sampled kernel `Φ`.
    pub fn with_canonical(mut self, alphas: Vec<DMatrix<C64>>, kernel: GridFunction) -> Result<Self> {
        if alphas.len() != self.top_order() {
            return Err(Error::shape(format!(
                "expected n + r = {} matrices alpha_s, got {}",
                self.top_order(),
                alphas.len()
            )));
        }
        for a in &alphas {
            self.check_weight(a)?;
        }
        if kernel.shape() != (self.rows(), self.m) || *kernel.grid() != self.grid {
            return Err(Error::shape("kernel must be rm x m on the operator grid"));
        }
        self.canonical = Some(Canonical {
            alphas,
            kernel: Kernel {
                sampled: kernel,
                truncated: Vec::new(),
            },
        });
        Ok(self)
    }

    /// Highest derivative order the operator reads.
    pub fn max_order(&self) -> usize {
        let terms = self.terms.iter().map(|t| match t {
            Term::Point { order, .. } | Term::Integral { order, .. } => *order,
        });
        let canon = self.canonical.as_ref().map(|_| self.top_order());
        terms.chain(canon).max().unwrap_or(0)
    }

    /// Applies the operator to every column of `jet`; returns `rm x cols`.
    /// Missing derivative orders are supplied by finite differences.
    pub fn apply(&self, jet: &Jet) -> Result<DMatrix<C64>> {
        if *jet.value().grid() != self.grid {
            return Err(Error::shape("function and operator live on different grids"));
        }
        if jet.shape().0 != self.m {
            return Err(Error::shape(format!(
                "function has {} components, operator expects {}",
                jet.shape().0,
                self.m
            )));
        }
        let need = self.max_order();
        let extended;
        let jet = if jet.order() < need {
            extended = jet.clone().extended(need)?;
            &extended
        } else {
            jet
        };
        let d = |k: usize| jet.derivative(k).expect("order checked");
        let cols = jet.shape().1;
        let mut out = DMatrix::zeros(self.rows(), cols);

        if let Some(c) = &self.canonical {
            for (s, alpha) in c.alphas.iter().enumerate() {
                out += alpha * d(s).node(0);
            }
            let top = d(self.top_order());
            out += c.kernel.sampled.matmul(top)?.integral();
            for tp in &c.kernel.truncated {
                let part = quad::integrate_weighted(top, self.grid.a(), tp.tau, |t| tp.scalar(t));
                out += &tp.weight * part;
            }
        }
        for term in &self.terms {
            match term {
                Term::Point { tau, order, weight } => out += weight * d(*order).interpolate(*tau),
                Term::Integral { order, weight } => out += weight.matmul(d(*order))?.integral(),
            }
        }
        Ok(out)
    }

    /// Convenience for a single vector function with finite-difference
    /// derivatives.
    pub fn apply_fn(&self, y: &GridFunction) -> Result<DMatrix<C64>> {
        self.apply(&Jet::from_function(y, self.max_order())?)
    }

    /// Equivalent operator consisting of the canonical part only.
    pub fn canonicalize(&self) -> Result<BoundaryOperator> {
        let top = self.top_order();
        let (rows, m) = (self.rows(), self.m);
        let a = self.grid.a();
        let mut canon = self.canonical.clone().unwrap_or_else(|| Canonical {
            alphas: vec![DMatrix::zeros(rows, m); top],
            kernel: Kernel {
                sampled: GridFunction::zeros(self.grid, rows, m),
                truncated: Vec::new(),
            },
        });
        for term in &self.terms {
            match term {
                Term::Point { tau, order, weight } => {
                    let d = *order;
                    if d >= top {
                        return Err(Error::UnsupportedOrder(format!(
                            "point term of order {d} cannot be canonicalized (n + r = {top})"
                        )));
                    }
                    for s in d..top {
                        let c = (tau - a).powi((s - d) as i32) / factorial(s - d);
                        canon.alphas[s] += weight * C64::new(c, 0.0);
                    }
                    if *tau > a {
                        canon.kernel.truncated.push(TruncatedPower {
                            tau: *tau,
                            power: top - 1 - d,
                            weight: weight.clone(),
                        });
                    }
                }
                Term::Integral { order, weight } => {
                    let d = *order;
                    if d == top {
                        canon.kernel.sampled = canon.kernel.sampled.try_add(weight)?;
                        continue;
                    }
                    for s in d..top {
                        let k = s - d;
                        let mono = GridFunction::from_real_fn(self.grid, |t| {
                            (t - a).powi(k as i32) / factorial(k)
                        })?;
                        let prod = mono_scale(weight, &mono);
                        canon.alphas[s] += prod.integral();
                    }
                    let tail = tail_kernel(weight, top - 1 - d);
                    canon.kernel.sampled = canon.kernel.sampled.try_add(&tail)?;
                }
            }
        }
        Ok(BoundaryOperator {
            grid: self.grid,
            m,
            n: self.n,
            r: self.r,
            canonical: Some(canon),
            terms: Vec::new(),
        })
    }
}

/// Node-wise product of a matrix function with a scalar function.
fn mono_scale(w: &GridFunction, s: &GridFunction) -> GridFunction {
    let nodes: Vec<DMatrix<C64>> = (0..w.grid().len())
        .map(|i| w.node(i) * s.at(i, 0, 0))
        .collect();
    GridFunction::from_nodes(*w.grid(), w.rows(), w.cols(), &nodes).expect("shapes agree")
}

/// `Φ(u) = ∫_u^b W(t) (t - u)^k / k! dt` at every node `u`.
fn tail_kernel(w: &GridFunction, k: usize) -> GridFunction {
    let grid = *w.grid();
    let n = grid.intervals();
    let h = grid.step();
    let nodes = grid.nodes();
    let fk = factorial(k);
    let mut out = Vec::with_capacity(grid.len());
    for (i, &u) in nodes.iter().enumerate() {
        let mut acc = DMatrix::zeros(w.rows(), w.cols());
        for cell in i..n {
            let (start, cw) = quad::cell_weights(n, cell, h);
            for (j, wj) in cw.iter().enumerate() {
                let t = nodes[start + j];
                let c = wj * (t - u).powi(k as i32) / fk;
                acc += w.node(start + j) * C64::new(c, 0.0);
            }
        }
        out.push(acc);
    }
    GridFunction::from_nodes(grid, w.rows(), w.cols(), &out).expect("shapes agree")
}

/// The `rm x rm` matrix `[B Y] = ([B Y_0] … [B Y_{r-1}])` with its
/// determinant, singular values and numerical rank.
#[derive(Debug, Clone)]
pub struct CharacteristicMatrix {
    pub m: DMatrix<C64>,
    pub det: C64,
    pub rank: usize,
    pub svals: Vec<f64>,
    pub rank_rtol: f64,
    pub(crate) svd: SortedSvd,
}

impl CharacteristicMatrix {
    pub fn from_matrix(m: DMatrix<C64>, rank_rtol: f64) -> Self {
        let svd = SortedSvd::new(&m);
        let det = m.determinant();
        CharacteristicMatrix {
            rank: svd.rank(rank_rtol),
            svals: svd.svals.clone(),
            det,
            m,
            rank_rtol,
            svd,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn is_invertible(&self) -> bool {
        self.rank == self.dim()
    }

    pub fn condition_number(&self) -> f64 {
        self.svd.condition_number()
    }

    pub fn svd(&self) -> &SortedSvd {
        &self.svd
    }
}

pub fn characteristic_matrix(b: &BoundaryOperator, f: &FundamentalSet) -> Result<CharacteristicMatrix> {
    characteristic_matrix_with(b, f, default_rank_rtol(b.grid()))
}

pub fn characteristic_matrix_with(
    b: &BoundaryOperator,
    f: &FundamentalSet,
    rank_rtol: f64,
) -> Result<CharacteristicMatrix> {
    if b.m() != f.m() || b.r() != f.r() {
        return Err(Error::shape(format!(
            "operator is for m = {}, r = {} but the fundamental set has m = {}, r = {}",
            b.m(),
            b.r(),
            f.m(),
            f.r()
        )));
    }
    let jet = f.jet(b.max_order().max(f.r()))?;
    Ok(CharacteristicMatrix::from_matrix(b.apply(&jet)?, rank_rtol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cauchy::fundamental_matrices;

    fn c(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    fn col(v: &[f64]) -> DMatrix<C64> {
        DMatrix::from_iterator(v.len(), 1, v.iter().map(|&x| c(x)))
    }

    fn unit(n: usize) -> Grid {
        Grid::new(0.0, 1.0, n).unwrap()
    }

    fn poly_jet(g: Grid, coef: &[f64], order: usize) -> Jet {
        let derivs = (0..=order)
            .map(|k| {
                GridFunction::from_real_fn(g, |t| {
                    coef.iter()
                        .enumerate()
                        .skip(k)
                        .map(|(j, cj)| {
                            let fall: f64 = (0..k).map(|i| (j - i) as f64).product();
                            cj * fall * t.powi((j - k) as i32)
                        })
                        .sum()
                })
                .unwrap()
            })
            .collect();
        Jet::from_derivatives(derivs).unwrap()
    }

    #[test]
    fn zero_operator() {
        let g = unit(20);
        let b = BoundaryOperator::new(g, 1, 0, 2)
            .unwrap()
            .with_point(0.3, 1, col(&[0.0, 0.0]))
            .unwrap();
        let y = GridFunction::from_real_fn(g, f64::exp).unwrap();
        assert_eq!(b.apply_fn(&y).unwrap(), col(&[0.0, 0.0]));
    }

    #[test]
    fn dirichlet_pair() {
        let g = unit(20);
        let b = BoundaryOperator::new(g, 1, 0, 2)
            .unwrap()
            .with_point(0.0, 0, col(&[1.0, 0.0]))
            .unwrap()
            .with_point(1.0, 0, col(&[0.0, 1.0]))
            .unwrap();
        let y = GridFunction::from_real_fn(g, |t| t).unwrap();
        let v = b.apply_fn(&y).unwrap();
        assert!((v - col(&[0.0, 1.0])).norm() < 1e-15);
    }

    #[test]
    fn integral_of_identity() {
        let g = unit(20);
        let w = GridFunction::from_real_fn(g, |_| 1.0).unwrap();
        let b = BoundaryOperator::new(g, 1, 0, 1).unwrap().with_integral(0, w).unwrap();
        let y = GridFunction::from_real_fn(g, |t| t).unwrap();
        assert!((b.apply_fn(&y).unwrap()[(0, 0)] - c(0.5)).norm() < 1e-9);
    }

    #[test]
    fn range_checks() {
        let g = unit(20);
        let b = BoundaryOperator::new(g, 1, 0, 2).unwrap();
        assert!(matches!(
            b.clone().with_point(1.5, 0, col(&[1.0, 0.0])),
            Err(Error::PointOutOfRange { .. })
        ));
        assert!(matches!(
            b.clone().with_point(0.5, 2, col(&[1.0, 0.0])),
            Err(Error::OrderOutOfRange { order: 2, max: 1 })
        ));
        let w = GridFunction::zeros(g, 2, 1);
        assert!(matches!(b.clone().with_integral(3, w), Err(Error::OrderOutOfRange { .. })));
        assert!(b.with_point(0.5, 0, col(&[1.0])).is_err());
    }

    #[test]
    fn canonical_anchor_point() {
        let g = unit(20);
        let b = BoundaryOperator::new(g, 1, 1, 2)
            .unwrap()
            .with_point(0.0, 0, col(&[1.0, 0.0]))
            .unwrap()
            .canonicalize()
            .unwrap();
        let canon = b.canonical().unwrap();
        assert_eq!(canon.alphas[0], col(&[1.0, 0.0]));
        assert!(canon.alphas[1..].iter().all(|a| a.norm() == 0.0));
        assert_eq!(canon.kernel.samples().max_abs(), 0.0);
    }

    #[test]
    fn canonical_far_endpoint_first_order() {
        let g = unit(20);
        let b = BoundaryOperator::new(g, 1, 0, 1)
            .unwrap()
            .with_point(1.0, 0, col(&[1.0]))
            .unwrap()
            .canonicalize()
            .unwrap();
        let canon = b.canonical().unwrap();
        assert_eq!(canon.alphas, vec![col(&[1.0])]);
        let phi = canon.kernel.samples();
        assert!(phi.samples().iter().all(|z| *z == c(1.0)));
    }

    #[test]
    fn canonical_far_endpoint_second_order() {
        let g = unit(40);
        let b = BoundaryOperator::new(g, 1, 0, 2)
            .unwrap()
            .with_point(1.0, 0, col(&[1.0, 1.0]))
            .unwrap();
        let cb = b.canonicalize().unwrap();
        let canon = cb.canonical().unwrap();
        assert_eq!(canon.alphas[0], col(&[1.0, 1.0]));
        assert_eq!(canon.alphas[1], col(&[1.0, 1.0]));
        let phi = canon.kernel.samples();
        for (i, t) in g.nodes().into_iter().enumerate() {
            assert!((phi.at(i, 0, 0) - c(1.0 - t)).norm() < 1e-15);
        }
        // agreement on random cubics
        let mut s = 12345u64;
        for _ in 0..20 {
            let coef: Vec<f64> = (0..4)
                .map(|_| {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                    (s >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
                })
                .collect();
            let jet = poly_jet(g, &coef, 2);
            let d = (b.apply(&jet).unwrap() - cb.apply(&jet).unwrap()).norm();
            assert!(d < 1e-9, "{d}");
        }
    }

    #[test]
    fn characteristic_matrix_double_integrator() {
        let g = unit(50);
        let z = GridFunction::zeros(g, 1, 1);
        let fs = fundamental_matrices(&[z.clone(), z], 0.0).unwrap();
        let b = BoundaryOperator::new(g, 1, 0, 2)
            .unwrap()
            .with_point(0.0, 0, col(&[1.0, 0.0]))
            .unwrap()
            .with_point(1.0, 0, col(&[0.0, 1.0]))
            .unwrap();
        let cm = characteristic_matrix(&b, &fs).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(1.0), c(1.0)]);
        assert!((&cm.m - expect).norm() < 1e-12);
        assert!((cm.det - c(1.0)).norm() < 1e-12);
        assert_eq!(cm.rank, 2);
    }

    #[test]
    fn characteristic_matrix_periodic_first_order() {
        let g = unit(50);
        let z = GridFunction::zeros(g, 1, 1);
        let fs = fundamental_matrices(&[z], 0.0).unwrap();
        let b = BoundaryOperator::new(g, 1, 0, 1)
            .unwrap()
            .with_point(1.0, 0, col(&[1.0]))
            .unwrap()
            .with_point(0.0, 0, col(&[-1.0]))
            .unwrap();
        let cm = characteristic_matrix(&b, &fs).unwrap();
        assert!(cm.m[(0, 0)].norm() < 1e-14);
        assert_eq!(cm.rank, 0);
    }

    #[test]
    fn characteristic_matrix_oscillator() {
        let g = unit(200);
        let one = GridFunction::from_real_fn(g, |_| 1.0).unwrap();
        let z = GridFunction::zeros(g, 1, 1);
        let fs = fundamental_matrices(&[one, z], 0.0).unwrap();
        let b = BoundaryOperator::new(g, 1, 0, 2)
            .unwrap()
            .with_point(0.0, 0, col(&[1.0, 0.0]))
            .unwrap()
            .with_point(1.0, 0, col(&[0.0, 1.0]))
            .unwrap();
        let cm = characteristic_matrix(&b, &fs).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(1f64.cos()), c(1f64.sin())]);
        assert!((&cm.m - expect).norm() < 1e-8);
        assert!((cm.det - c(1f64.sin())).norm() < 1e-6);
        let prod: f64 = cm.svals.iter().product();
        assert!((cm.det.norm() - prod).abs() < 1e-6 * prod);
    }
}
