//! Parameter families `ε ↦ (L(ε), B(ε), f(ε), c(ε))` on `[0, ε₀)`.
//!
//! For a family this module checks Condition (0) on the limit problem, the
//! convergence of coefficients (Limit Condition I) and of boundary operators
//! on a probe set (Limit Condition II), and tabulates the error of the
//! ε-solutions against their discrepancy to estimate the constants of the
//! two-sided bound `γ₁ d̃(ε) ≤ ‖y(0) − y(ε)‖ ≤ γ₂ d̃(ε)`.

use std::fmt;
use std::sync::Arc;

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::cauchy::fundamental_matrices;
use crate::error::{Error, Result};
use crate::grid::{sobolev_norm, sobolev_norm_of_jet, Exponent, GridFunction, Jet};
use crate::report::{pair, Pair};
use crate::solver::{fredholm_report_with, solve_with, Classification, Problem, SolverOptions};
use crate::C64;

/// Builds the problem at a parameter value; called with `ε = 0` for the limit.
pub type ProblemMaker = Arc<dyn Fn(f64) -> Result<Problem> + Send + Sync>;

/// Default convergence tolerance, relative to the largest tabulated value.
pub const DEFAULT_CONV_TOL: f64 = 1e-3;

/// Ratios are only formed where the discrepancy exceeds this.
pub const RATIO_FLOOR: f64 = 1e-10;

/// Values at or below this count as converged regardless of scale.
const ABS_ZERO: f64 = 1e-12;

/// Allowed growth between consecutive entries in the tail of a table.
const TAIL_SLACK: f64 = 1.1;

#[derive(Clone)]
pub struct ParamFamily {
    limit: Problem,
    eps0: f64,
    eps_values: Vec<f64>,
    make: ProblemMaker,
    conv_tol: f64,
    options: SolverOptions,
}

impl fmt::Debug for ParamFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParamFamily")
            .field("eps0", &self.eps0)
            .field("eps_values", &self.eps_values)
            .field("conv_tol", &self.conv_tol)
            .finish_non_exhaustive()
    }
}

impl ParamFamily {
    pub fn new(make: ProblemMaker, eps0: f64, eps_values: Vec<f64>) -> Result<Self> {
        if !(eps0.is_finite() && eps0 > 0.0) {
            return Err(Error::schema("family.eps0", "must be a positive finite number"));
        }
        if eps_values.is_empty() {
            return Err(Error::schema("family.eps_values", "must not be empty"));
        }
        if eps_values.iter().any(|&e| !(e > 0.0 && e < eps0)) {
            return Err(Error::schema("family.eps_values", "every value must lie in (0, eps0)"));
        }
        if eps_values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::schema("family.eps_values", "must be strictly decreasing"));
        }
        let limit = make(0.0)?;
        Ok(ParamFamily {
            limit,
            eps0,
            eps_values,
            make,
            conv_tol: DEFAULT_CONV_TOL,
            options: SolverOptions::default(),
        })
    }

    pub fn with_conv_tol(mut self, tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol <= 1.0) {
            return Err(Error::schema("family.conv_tolerance", "must lie in (0, 1]"));
        }
        self.conv_tol = tol;
        Ok(self)
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self
    }

    pub fn limit(&self) -> &Problem {
        &self.limit
    }

    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    pub fn eps_values(&self) -> &[f64] {
        &self.eps_values
    }

    pub fn conv_tol(&self) -> f64 {
        self.conv_tol
    }

    pub fn options(&self) -> SolverOptions {
        self.options
    }

    /// Problem at `eps`, checked against the structure of the limit problem.
    pub fn problem(&self, eps: f64) -> Result<Problem> {
        if eps == 0.0 {
            return Ok(self.limit.clone());
        }
        let p = (self.make)(eps)?;
        let l = &self.limit;
        if (p.m, p.n, p.r) != (l.m, l.n, l.r) || p.p != l.p || p.grid != l.grid {
            return Err(Error::shape(format!(
                "problem at eps = {eps} differs in (m, n, r, p, grid) from the limit problem"
            )));
        }
        Ok(p)
    }

    fn problems(&self) -> Result<Vec<Problem>> {
        self.eps_values.par_iter().map(|&e| self.problem(e)).collect()
    }
}

/// A test function for Limit Condition II, carried with its derivatives.
#[derive(Debug, Clone)]
pub struct Probe {
    pub label: String,
    pub jet: Jet,
}

/// Monomials `t^k e_i` for `k = 0, …, n + r` with exact derivatives, followed
/// by the columns of the limit problem's fundamental matrices.
pub fn default_probes(limit: &Problem) -> Result<Vec<Probe>> {
    let grid = limit.grid;
    let top = limit.n + limit.r;
    let mut probes = Vec::new();
    for i in 0..limit.m {
        for k in 0..=top {
            let derivs = (0..=top)
                .map(|d| {
                    GridFunction::from_matrix_fn(grid, limit.m, 1, |t| {
                        let mut v = nalgebra::DMatrix::zeros(limit.m, 1);
                        if d <= k {
                            let fall: f64 = ((k - d + 1)..=k).map(|j| j as f64).product();
                            v[(i, 0)] = C64::new(fall * t.powi((k - d) as i32), 0.0);
                        }
                        v
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            probes.push(Probe {
                label: format!("t^{k} e{i}"),
                jet: Jet::from_derivatives(derivs)?,
            });
        }
    }
    let fs = fundamental_matrices(&limit.coefficients, grid.a())?;
    let basis = fs.jet(top.max(limit.boundary.max_order()))?;
    for j in 0..limit.r * limit.m {
        probes.push(Probe {
            label: format!("Y[:, {j}]"),
            jet: basis.column(j),
        });
    }
    Ok(probes)
}

/// Convergence verdict for a table ordered by decreasing ε: the last value is
/// within `conv_tol` of the largest (or below an absolute floor) and the
/// second half of the table is nonincreasing up to 10% slack.
pub fn converges(values: &[f64], conv_tol: f64) -> bool {
    let Some(&last) = values.last() else {
        return true;
    };
    if values.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let max = values.iter().copied().fold(0.0, f64::max);
    let small = last <= ABS_ZERO || last <= conv_tol * max * (1.0 + 1e-9);
    let tail = &values[values.len() / 2..];
    let monotone = tail.windows(2).all(|w| w[1] <= TAIL_SLACK * w[0] + ABS_ZERO);
    small && monotone
}

/// Least-squares slope of `log v` against `log ε` over entries above the
/// absolute floor; `None` with fewer than two such entries.
pub fn loglog_slope(eps: &[f64], values: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(values)
        .filter(|(_, &v)| v > ABS_ZERO && v.is_finite())
        .map(|(&e, &v)| (e.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition0 {
    pub holds: bool,
    pub det: Pair,
    pub abs_det: f64,
    pub kernel_dim: usize,
    pub cokernel_dim: usize,
}

pub fn check_condition0(f: &ParamFamily) -> Result<Condition0> {
    let fr = fredholm_report_with(&f.limit, f.options)?;
    Ok(Condition0 {
        holds: fr.condition0(),
        det: pair(fr.det),
        abs_det: fr.det.norm(),
        kernel_dim: fr.kernel_dim,
        cokernel_dim: fr.cokernel_dim,
    })
}

/// `δ_k(ε) = ‖A_k(ε) − A_k(0)‖_{n,p}`, one column per coefficient.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitI {
    pub eps: Vec<f64>,
    /// `deltas[i][k]` for `eps[i]` and `A_k`.
    pub deltas: Vec<Vec<f64>>,
    pub slopes: Vec<Option<f64>>,
    pub holds: bool,
}

impl LimitI {
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.deltas.iter().map(|row| row[k]).collect()
    }
}

fn limit_i_from(f: &ParamFamily, problems: &[Problem]) -> Result<LimitI> {
    let limit = &f.limit;
    let idx = limit.data_index();
    let deltas = problems
        .par_iter()
        .map(|p| {
            p.coefficients
                .iter()
                .zip(&limit.coefficients)
                .map(|(ae, a0)| sobolev_norm(&ae.try_sub(a0)?, idx))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = LimitI {
        eps: f.eps_values.clone(),
        deltas,
        slopes: Vec::new(),
        holds: true,
    };
    for k in 0..limit.r {
        let col = table.column(k);
        table.slopes.push(loglog_slope(&table.eps, &col));
        table.holds &= converges(&col, f.conv_tol);
    }
    Ok(table)
}

pub fn check_limit_i(f: &ParamFamily) -> Result<LimitI> {
    limit_i_from(f, &f.problems()?)
}

/// `max_y |B(ε) y − B(0) y|` over a named probe set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitII {
    pub eps: Vec<f64>,
    pub gaps: Vec<f64>,
    pub probes: Vec<String>,
    pub slope: Option<f64>,
    pub holds: bool,
}

fn limit_ii_from(f: &ParamFamily, problems: &[Problem], probes: &[Probe]) -> Result<LimitII> {
    if probes.is_empty() {
        return Err(Error::schema("probes", "probe set must not be empty"));
    }
    let reference = probes
        .iter()
        .map(|pr| f.limit.boundary.apply(&pr.jet))
        .collect::<Result<Vec<_>>>()?;
    let gaps = problems
        .par_iter()
        .map(|p| {
            probes.iter().zip(&reference).try_fold(0.0f64, |acc, (pr, b0)| {
                let be = p.boundary.apply(&pr.jet)?;
                Ok(acc.max((be - b0).norm()))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(LimitII {
        slope: loglog_slope(&f.eps_values, &gaps),
        holds: converges(&gaps, f.conv_tol),
        eps: f.eps_values.clone(),
        gaps,
        probes: probes.iter().map(|p| p.label.clone()).collect(),
    })
}

pub fn check_limit_ii(f: &ParamFamily, probes: &[Probe]) -> Result<LimitII> {
    limit_ii_from(f, &f.problems()?, probes)
}

/// Condition (0) and both limit conditions; `continuous` is their conjunction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conditions {
    pub cond0: Condition0,
    pub limit_i: LimitI,
    pub limit_ii: LimitII,
    pub continuous: bool,
}

pub fn check_conditions(f: &ParamFamily) -> Result<Conditions> {
    let problems = f.problems()?;
    let cond0 = check_condition0(f)?;
    let limit_i = limit_i_from(f, &problems)?;
    let limit_ii = limit_ii_from(f, &problems, &default_probes(&f.limit)?)?;
    Ok(Conditions {
        continuous: cond0.holds && limit_i.holds && limit_ii.holds,
        cond0,
        limit_i,
        limit_ii,
    })
}

/// `‖L(ε) y₀ − f(ε)‖_{n,p} + |B(ε) y₀ − c(ε)|` for the limit solution jet `y₀`.
///
/// `y₀^{(r)}` in the jet comes from the limit equation, so the equation part
/// is formed as `Σ_k (A_k(ε) − A_k(0)) y₀^{(k)} − (f(ε) − f(0))`, which
/// equals `L(ε) y₀ − f(ε)` without cancelling two large terms.
fn discrepancy_of(limit: &Problem, y0: &Jet, pe: &Problem) -> Result<f64> {
    let mut res = limit.rhs.try_sub(&pe.rhs)?;
    for (k, (ae, a0)) in pe.coefficients.iter().zip(&limit.coefficients).enumerate() {
        res = res.try_add(&ae.try_sub(a0)?.matmul(&y0.derivatives()[k])?)?;
    }
    let eq = sobolev_norm(&res, limit.data_index())?;
    let bd = (pe.boundary.apply(y0)?.column(0) - &pe.c).norm();
    Ok(eq + bd)
}

fn limit_jet(f: &ParamFamily) -> Result<Jet> {
    let s = solve_with(&f.limit, f.options)?;
    if s.classification != Classification::Unique {
        return Err(Error::Condition0Fails);
    }
    Ok(s.jet)
}

pub fn discrepancy(f: &ParamFamily, eps: f64) -> Result<f64> {
    let y0 = limit_jet(f)?;
    discrepancy_of(&f.limit, &y0, &f.problem(eps)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsRow {
    pub eps: f64,
    pub classification: String,
    pub abs_det: f64,
    /// `‖y(0) − y(ε)‖_{n+r,p}`.
    pub error: Option<f64>,
    pub discrepancy: Option<f64>,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub p: Exponent,
    pub grid_n: usize,
    pub conv_tolerance: f64,
    pub cond0: Condition0,
    pub limit_i: LimitI,
    pub limit_ii: LimitII,
    /// How the limit problem was solved; the reference `y(0)` is the
    /// minimum-norm or least-squares solution when Condition (0) fails.
    pub limit_classification: String,
    pub rows: Vec<EpsRow>,
    pub gamma1_hat: Option<f64>,
    pub gamma2_hat: Option<f64>,
    /// Largest tabulated ε such that every tabulated ε-problem up to it is
    /// uniquely solvable.
    pub eps1_hat: Option<f64>,
    /// Largest tabulated ε such that the ratio is defined for every tabulated
    /// value up to it.
    pub eps2_hat: Option<f64>,
    pub error_slope: Option<f64>,
    pub discrepancy_slope: Option<f64>,
    /// Condition (0) and Limit Conditions I and II all hold.
    pub continuous: bool,
    /// The tabulated errors themselves pass the convergence test.
    pub observed_convergence: bool,
    pub consistent: bool,
    pub warnings: Vec<String>,
}

impl AnalysisReport {
    pub fn errors(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.error).collect()
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.ratio).collect()
    }
}

/// Largest `eps` such that `ok` holds on that row and on every smaller one.
fn largest_prefix_from_below(rows: &[EpsRow], ok: impl Fn(&EpsRow) -> bool) -> Option<f64> {
    rows.iter()
        .rev()
        .take_while(|r| ok(r))
        .last()
        .map(|r| r.eps)
}

pub fn two_sided_report(f: &ParamFamily) -> Result<AnalysisReport> {
    two_sided_report_with(f, None)
}

/// As [`two_sided_report`], with an explicit probe set for Limit Condition II.
pub fn two_sided_report_with(f: &ParamFamily, probes: Option<&[Probe]>) -> Result<AnalysisReport> {
    let limit = &f.limit;
    let problems = f.problems()?;
    let cond0 = check_condition0(f)?;
    let limit_i = limit_i_from(f, &problems)?;
    let default;
    let probes = match probes {
        Some(p) => p,
        None => {
            default = default_probes(limit)?;
            &default
        }
    };
    let limit_ii = limit_ii_from(f, &problems, probes)?;

    let s0 = solve_with(limit, f.options)?;
    let mut warnings = s0.warnings.clone();
    let y0 = s0.jet;
    let sol_idx = limit.solution_index();
    let unique_limit = s0.classification == Classification::Unique;
    if !unique_limit {
        let msg = format!(
            "condition-0-fails: limit problem is {}; errors are measured against its {} solution",
            s0.classification.label(),
            match s0.classification {
                Classification::Unsolvable { .. } => "least-squares",
                _ => "minimum-norm",
            }
        );
        warn!("{msg}");
        warnings.push(msg);
    }

    let rows = f
        .eps_values
        .par_iter()
        .zip(problems.par_iter())
        .map(|(&eps, pe)| -> Result<(EpsRow, Vec<String>)> {
            let s = solve_with(pe, f.options)?;
            let error = match s.classification {
                Classification::Unique => {
                    let diff = y0.try_sub(&s.jet)?;
                    Some(sobolev_norm_of_jet(&diff, sol_idx)?)
                }
                _ => None,
            };
            let discrepancy = if unique_limit {
                Some(discrepancy_of(limit, &y0, pe)?)
            } else {
                None
            };
            let ratio = match (error, discrepancy) {
                (Some(e), Some(d)) if d > RATIO_FLOOR => Some(e / d),
                _ => None,
            };
            let mut notes: Vec<String> = s.warnings.iter().map(|w| format!("eps = {eps:e}: {w}")).collect();
            if let Classification::Unsolvable { residual } = s.classification {
                notes.push(format!("eps = {eps:e}: unsolvable, residual {residual:e}"));
            }
            Ok((
                EpsRow {
                    eps,
                    classification: s.classification.label().to_string(),
                    abs_det: s.characteristic.det.norm(),
                    error,
                    discrepancy,
                    ratio,
                },
                notes,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let (rows, notes): (Vec<EpsRow>, Vec<Vec<String>>) = rows.into_iter().unzip();
    warnings.extend(notes.into_iter().flatten());

    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    let gamma1_hat = (!ratios.is_empty()).then(|| ratios.iter().copied().fold(f64::INFINITY, f64::min));
    let gamma2_hat = (!ratios.is_empty()).then(|| ratios.iter().copied().fold(0.0, f64::max));
    let eps1_hat = largest_prefix_from_below(&rows, |r| r.classification == "unique");
    let eps2_hat = largest_prefix_from_below(&rows, |r| r.ratio.is_some());

    let errors: Option<Vec<f64>> = rows.iter().map(|r| r.error).collect();
    let observed_convergence = errors
        .as_deref()
        .is_some_and(|e| converges(e, f.conv_tol));
    let eps = &f.eps_values;
    let error_slope = errors.as_deref().and_then(|e| loglog_slope(eps, e));
    let discrepancies: Option<Vec<f64>> = rows.iter().map(|r| r.discrepancy).collect();
    let discrepancy_slope = discrepancies.as_deref().and_then(|d| loglog_slope(eps, d));

    let continuous = cond0.holds && limit_i.holds && limit_ii.holds;
    let consistent = continuous == observed_convergence;
    if !consistent {
        let msg = format!(
            "continuity verdict {continuous} disagrees with observed convergence {observed_convergence}"
        );
        warn!("{msg}");
        warnings.push(msg);
    }
    info!(
        "analysis: cond0 {}, limit I {}, limit II {}, gamma in [{:?}, {:?}]",
        cond0.holds, limit_i.holds, limit_ii.holds, gamma1_hat, gamma2_hat
    );

    Ok(AnalysisReport {
        m: limit.m,
        n: limit.n,
        r: limit.r,
        p: limit.p,
        grid_n: limit.grid.intervals(),
        conv_tolerance: f.conv_tol,
        cond0,
        limit_i,
        limit_ii,
        limit_classification: s0.classification.label().to_string(),
        rows,
        gamma1_hat,
        gamma2_hat,
        eps1_hat,
        eps2_hat,
        error_slope,
        discrepancy_slope,
        continuous,
        observed_convergence,
        consistent,
        warnings,
    })
}
