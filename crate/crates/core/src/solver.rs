//! Superposition solver: `y = ŷ + Σ_k Y_k q_k` where `ŷ` solves the Cauchy
//! problem with zero data at `a` and `q` solves `[B Y] q = c - B ŷ`.

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};

use crate::boundary::{default_rank_rtol, BoundaryOperator, CharacteristicMatrix};
use crate::cauchy::{fundamental_matrices, integrate_from, FundamentalSet};
use crate::companion::{build_companion, state_jet};
use crate::error::{Error, Result};
use crate::grid::{derivative, lp_norm, Exponent, Grid, GridFunction, Jet, SobolevIndex};
use crate::linalg::SortedSvd;
use crate::C64;

/// Condition numbers of `[B Y]` above this attach a warning.
pub const ILL_CONDITIONED: f64 = 1e12;

/// One boundary-value problem at a fixed parameter value.
#[derive(Debug, Clone)]
pub struct Problem {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub p: Exponent,
    pub grid: Grid,
    /// `A_0, …, A_{r-1}`; `A_k` multiplies `y^{(k)}`.
    pub coefficients: Vec<GridFunction>,
    pub rhs: GridFunction,
    pub boundary: BoundaryOperator,
    pub c: DVector<C64>,
}

impl Problem {
    pub fn new(
        n: usize,
        p: Exponent,
        coefficients: Vec<GridFunction>,
        rhs: GridFunction,
        boundary: BoundaryOperator,
        c: DVector<C64>,
    ) -> Result<Self> {
        let first = coefficients
            .first()
            .ok_or_else(|| Error::shape("need r >= 1 coefficients"))?;
        let grid = *first.grid();
        let m = first.rows();
        let r = coefficients.len();
        for (k, a) in coefficients.iter().enumerate() {
            if a.shape() != (m, m) || *a.grid() != grid {
                return Err(Error::shape(format!("A_{k} must be {m}x{m} on the problem grid")));
            }
        }
        if rhs.shape() != (m, 1) || *rhs.grid() != grid {
            return Err(Error::shape(format!("f must be {m}x1 on the problem grid")));
        }
        if boundary.m() != m || boundary.r() != r || boundary.n() != n || *boundary.grid() != grid {
            return Err(Error::shape(format!(
                "boundary operator is for (m, n, r) = ({}, {}, {}), problem has ({m}, {n}, {r})",
                boundary.m(),
                boundary.n(),
                boundary.r()
            )));
        }
        if boundary.is_empty() {
            return Err(Error::shape("boundary operator has no terms"));
        }
        if c.len() != r * m {
            return Err(Error::BoundaryRowCount {
                expected: r * m,
                found: c.len(),
            });
        }
        if c.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::shape("c has non-finite entries"));
        }
        Ok(Problem {
            m,
            n,
            r,
            p,
            grid,
            coefficients,
            rhs,
            boundary,
            c,
        })
    }

    /// `(n, p)`: the space of coefficients and right-hand sides.
    pub fn data_index(&self) -> SobolevIndex {
        SobolevIndex::new(self.n, self.p)
    }

    /// `(n + r, p)`: the solution space.
    pub fn solution_index(&self) -> SobolevIndex {
        SobolevIndex::new(self.n + self.r, self.p)
    }

    /// Derivative order carried by solution jets.
    pub fn jet_order(&self) -> usize {
        (self.n + self.r).max(self.boundary.max_order())
    }

    pub fn with_data(&self, rhs: GridFunction, c: DVector<C64>) -> Result<Problem> {
        Problem::new(
            self.n,
            self.p,
            self.coefficients.clone(),
            rhs,
            self.boundary.clone(),
            c,
        )
    }

    /// `L y` for a jet carrying at least `r` derivatives.
    pub fn apply_operator(&self, jet: &Jet) -> Result<GridFunction> {
        let top = jet.derivative(self.r).ok_or(Error::OrderOutOfRange {
            order: self.r,
            max: jet.order(),
        })?;
        let mut out = top.clone();
        for (k, a) in self.coefficients.iter().enumerate() {
            out = out.try_add(&a.matmul(&jet.derivatives()[k])?)?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverOptions {
    /// Rank cut-off relative to the largest singular value of `[B Y]`;
    /// `None` uses [`default_rank_rtol`] for the problem grid.
    pub rank_rtol: Option<f64>,
}

impl SolverOptions {
    pub fn rank_rtol_for(&self, grid: &Grid) -> f64 {
        self.rank_rtol.unwrap_or_else(|| default_rank_rtol(grid))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Classification {
    Unique,
    /// Compatible data, `kernel_dim`-dimensional affine solution set; the
    /// minimum-norm representative is returned.
    Underdetermined { kernel_dim: usize },
    /// Incompatible data; `residual` is `|[B Y] q - c̃|` for the least-squares `q`.
    Unsolvable { residual: f64 },
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::Unique => "unique",
            Classification::Underdetermined { .. } => "underdetermined",
            Classification::Unsolvable { .. } => "unsolvable",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// `y, y', …` up to [`Problem::jet_order`].
    pub jet: Jet,
    /// Superposition coefficients `col(q_0, …, q_{r-1})`.
    pub q: DVector<C64>,
    pub characteristic: CharacteristicMatrix,
    pub classification: Classification,
    pub warnings: Vec<String>,
}

impl Solution {
    pub fn y(&self) -> &GridFunction {
        self.jet.value()
    }

    /// `y^{(k)}`; orders up to `r` are always present.
    pub fn derivative(&self, k: usize) -> Option<&GridFunction> {
        self.jet.derivative(k)
    }

    pub fn kernel_dim(&self) -> usize {
        self.characteristic.dim() - self.characteristic.rank
    }
}

/// Companion state of the Cauchy problem `L ŷ = f`, `ŷ^{(j)}(a) = 0`.
pub fn particular_state(p: &Problem) -> Result<GridFunction> {
    let sys = build_companion(&p.coefficients, &p.rhs)?;
    let x0 = DMatrix::zeros(p.r * p.m, 1);
    integrate_from(&sys.k, Some(&sys.g), &x0, 0)
}

pub fn particular_solution(p: &Problem) -> Result<GridFunction> {
    Ok(particular_state(p)?.block(0, 0, p.m, 1))
}

struct Parts {
    fundamental: FundamentalSet,
    basis: Jet,
    characteristic: CharacteristicMatrix,
}

fn homogeneous_parts(p: &Problem, opts: SolverOptions) -> Result<Parts> {
    let fundamental = fundamental_matrices(&p.coefficients, p.grid.a())?;
    let basis = fundamental.jet(p.jet_order())?;
    let m = p.boundary.apply(&basis)?;
    let characteristic = CharacteristicMatrix::from_matrix(m, opts.rank_rtol_for(&p.grid));
    Ok(Parts {
        fundamental,
        basis,
        characteristic,
    })
}

pub fn solve(p: &Problem) -> Result<Solution> {
    solve_with(p, SolverOptions::default())
}

pub fn solve_with(p: &Problem, opts: SolverOptions) -> Result<Solution> {
    let parts = homogeneous_parts(p, opts)?;
    let xhat = particular_state(p)?;
    let yhat = state_jet(&xhat, &p.coefficients, Some(&p.rhs), p.jet_order())?;
    let bhat = p.boundary.apply(&yhat)?;
    let ctilde: DVector<C64> = &p.c - bhat.column(0);

    let ch = &parts.characteristic;
    let svd = ch.svd();
    let (q, classification) = if ch.is_invertible() {
        let q = ch
            .m
            .clone()
            .lu()
            .solve(&ctilde)
            .unwrap_or_else(|| svd.solve_min_norm(&ctilde, ch.rank_rtol));
        (q, Classification::Unique)
    } else {
        let q = svd.solve_min_norm(&ctilde, ch.rank_rtol);
        let residual = (&ch.m * &q - &ctilde).norm();
        let tol = 1e-8 * (1.0 + ctilde.norm());
        if residual < tol {
            (
                q,
                Classification::Underdetermined {
                    kernel_dim: ch.dim() - ch.rank,
                },
            )
        } else {
            (q, Classification::Unsolvable { residual })
        }
    };
    debug!("classification {:?}, det [B Y] = {}", classification, ch.det);

    let mut warnings = parts.fundamental.warnings.clone();
    let cond = ch.condition_number();
    if ch.is_invertible() && cond > ILL_CONDITIONED {
        let msg = format!("ill-conditioned characteristic matrix: cond = {cond:e}");
        warn!("{msg}");
        warnings.push(msg);
    }
    let qm = DMatrix::from_column_slice(q.len(), 1, q.as_slice());
    let jet = yhat.try_add(&parts.basis.mul_const(&qm)?)?;
    Ok(Solution {
        jet,
        q,
        characteristic: parts.characteristic,
        classification,
        warnings,
    })
}

/// Residuals of a computed solution, measured independently of the
/// superposition construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// `‖L y − f‖_{L_2}` with `y^{(r)}` differenced from `y^{(r-1)}`.
    pub equation: f64,
    /// `|B y − c|`.
    pub boundary: f64,
}

pub fn residuals(p: &Problem, s: &Solution) -> Result<Residuals> {
    let top = derivative(&s.jet.derivatives()[p.r - 1], 1)?;
    let mut derivs: Vec<GridFunction> = s.jet.derivatives()[..p.r].to_vec();
    derivs.push(top);
    let ly = p.apply_operator(&Jet::from_derivatives(derivs)?)?;
    let equation = lp_norm(&ly.try_sub(&p.rhs)?, Exponent::Finite(2.0));
    let by = p.boundary.apply(&s.jet)?;
    let boundary = (by.column(0) - &p.c).norm();
    Ok(Residuals { equation, boundary })
}

/// Kernel and cokernel of `(L, B)` read off the characteristic matrix.
#[derive(Debug, Clone)]
pub struct FredholmReport {
    pub kernel_dim: usize,
    pub cokernel_dim: usize,
    /// Homogeneous solutions `Σ_k Y_k v_k` for null vectors `v` of `[B Y]`,
    /// scaled so that the entry of largest modulus equals 1.
    pub kernel_basis: Vec<GridFunction>,
    pub det: C64,
    pub rank: usize,
}

impl FredholmReport {
    /// Condition (0): the homogeneous problem has only the trivial solution.
    pub fn condition0(&self) -> bool {
        self.kernel_dim == 0
    }

    pub fn index(&self) -> isize {
        self.kernel_dim as isize - self.cokernel_dim as isize
    }
}

fn normalize(f: &GridFunction) -> GridFunction {
    let peak = f
        .samples()
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(C64::new(0.0, 0.0));
    if peak.norm() == 0.0 {
        return f.clone();
    }
    f.scale(peak.inv())
}

pub fn fredholm_report(p: &Problem) -> Result<FredholmReport> {
    fredholm_report_with(p, SolverOptions::default())
}

pub fn fredholm_report_with(p: &Problem, opts: SolverOptions) -> Result<FredholmReport> {
    let parts = homogeneous_parts(p, opts)?;
    let ch = &parts.characteristic;
    let dim = ch.dim();
    let kernel_dim = dim - ch.rank;
    // cokernel from the adjoint, computed separately
    let adjoint = SortedSvd::new(&ch.m.adjoint());
    let rtol = ch.rank_rtol;
    let cokernel_dim = dim - adjoint.rank(rtol);
    let values = parts.basis.value();
    let kernel_basis = ch
        .svd()
        .null_space(rtol)
        .into_iter()
        .map(|v| {
            let vm = DMatrix::from_column_slice(v.len(), 1, v.as_slice());
            values.mul_const(&vm).map(|f| normalize(&f))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FredholmReport {
        kernel_dim,
        cokernel_dim,
        kernel_basis,
        det: ch.det,
        rank: ch.rank,
    })
}
