//! JSON scenario files.
//!
//! A scenario describes one problem, or a family of problems when it carries
//! a `family` block. Every coefficient, right-hand side, boundary weight and
//! boundary constant is an expression in `t` and `eps` (or a plain number);
//! the parameter enters only through these expressions.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "interval": { "a": 0, "b": 1 },
//!   "dims": { "m": 1, "n": 0, "r": 2 },
//!   "p": 2,
//!   "grid": { "N": 200 },
//!   "coefficients": [[["0"]], [["0"]]],
//!   "rhs": ["-pi^2*sin(pi*t)"],
//!   "boundary": [
//!     { "terms": [{ "kind": "point", "tau": 0, "order": 0, "weight": [1] }] },
//!     { "terms": [{ "kind": "point", "tau": 1, "order": 0, "weight": [1] }] }
//!   ],
//!   "c": [0, 0]
//! }
//! ```
//!
//! `coefficients[k]` is the `m x m` matrix `A_k` multiplying `y^{(k)}` in
//! `y^{(r)} + Σ_k A_k y^{(k)} = f`. Boundary row `i` is the scalar functional
//! `Σ_terms w · y^{(order)}(τ)` or `Σ_terms ∫ w(t) · y^{(order)}(t) dt`, where
//! `w` has one entry per component of `y`. Entries of `c` are numbers,
//! expressions in `eps`, or `[re, im]` pairs of either.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::analysis::{ParamFamily, ProblemMaker};
use crate::boundary::BoundaryOperator;
use crate::error::{Error, Result};
use crate::expr::{parse, Expr, Var};
use crate::grid::{Exponent, Grid, GridFunction};
use crate::solver::Problem;
use crate::C64;

pub const SCHEMA_VERSION: u32 = 1;

/// A number or an expression string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Num(f64),
    Text(String),
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Num(v)
    }
}

impl From<&str> for Scalar {
    fn from(s: &str) -> Self {
        Scalar::Text(s.to_string())
    }
}

/// Boundary constant: real scalar or `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CEntry {
    Real(Scalar),
    Complex([Scalar; 2]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dims {
    pub m: usize,
    pub n: usize,
    pub r: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TermSpec {
    Point {
        tau: Scalar,
        order: usize,
        weight: Vec<Scalar>,
    },
    Integral {
        order: usize,
        kernel: Vec<Scalar>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryRow {
    pub terms: Vec<TermSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub eps0: f64,
    pub eps_values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conv_tolerance: Option<f64>,
}

/// A norm requested by the `norms` command: `‖expr‖_{n,p}` at `eps = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSpec {
    pub label: String,
    pub expr: Vec<Scalar>,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Exponent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub interval: Interval,
    pub dims: Dims,
    pub p: Exponent,
    pub grid: GridSpec,
    pub coefficients: Vec<Vec<Vec<Scalar>>>,
    pub rhs: Vec<Scalar>,
    pub boundary: Vec<BoundaryRow>,
    pub c: Vec<CEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub norms: Vec<NormSpec>,
}

fn compile(s: &Scalar, field: &str) -> Result<Expr> {
    match s {
        Scalar::Num(v) if v.is_finite() => Ok(Expr::Num(*v)),
        Scalar::Num(_) => Err(Error::schema(field, "number must be finite")),
        Scalar::Text(src) => parse(src).map_err(|e| Error::schema(field, format!("syntax-error {e}"))),
    }
}

/// Expression that may depend on `eps` but not on `t`.
fn compile_const(s: &Scalar, field: &str) -> Result<Expr> {
    let e = compile(s, field)?;
    if e.depends_on(Var::T) {
        return Err(Error::schema(field, "must not depend on t"));
    }
    Ok(e)
}

fn eval_const(e: &Expr, eps: f64, field: &str) -> Result<f64> {
    match e.eval(0.0, eps) {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(v) => Err(Error::schema(field, format!("evaluates to {v} at eps = {eps}"))),
        Err(err) => Err(Error::schema(field, format!("{err} at eps = {eps}"))),
    }
}

/// Samples an `rows x cols` matrix of expressions, naming the failing entry.
fn sample_matrix(entries: &[Vec<(Expr, String)>], grid: Grid, eps: f64) -> Result<GridFunction> {
    let rows = entries.len();
    let cols = entries.first().map_or(0, Vec::len);
    let mut data = Vec::with_capacity(grid.len() * rows * cols);
    for (i, t) in grid.nodes().into_iter().enumerate() {
        for row in entries {
            for (e, field) in row {
                let v = e.eval(t, eps).map_err(|err| Error::NonFiniteSample {
                    what: format!("{field} ({err})"),
                    node: i,
                    t,
                })?;
                if !v.is_finite() {
                    return Err(Error::NonFiniteSample {
                        what: field.clone(),
                        node: i,
                        t,
                    });
                }
                data.push(C64::new(v, 0.0));
            }
        }
    }
    GridFunction::from_samples(grid, rows, cols, data)
}

#[derive(Debug, Clone)]
enum Term {
    Point {
        tau: (Expr, String),
        order: usize,
        weight: Vec<(Expr, String)>,
    },
    Integral {
        order: usize,
        kernel: Vec<(Expr, String)>,
    },
}

#[derive(Debug, Clone)]
struct Compiled {
    grid: Grid,
    dims: Dims,
    p: Exponent,
    coefficients: Vec<Vec<Vec<(Expr, String)>>>,
    rhs: Vec<Vec<(Expr, String)>>,
    rows: Vec<Vec<Term>>,
    c: Vec<[(Expr, String); 2]>,
    uses_eps: bool,
}

impl Compiled {
    fn new(f: &ScenarioFile, grid_n: Option<usize>) -> Result<Self> {
        if f.schema_version != SCHEMA_VERSION {
            return Err(Error::schema(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", f.schema_version),
            ));
        }
        let Dims { m, n: _, r } = f.dims;
        if m == 0 || r == 0 {
            return Err(Error::schema("dims", "m and r must be positive"));
        }
        let grid = Grid::new(f.interval.a, f.interval.b, grid_n.unwrap_or(f.grid.n))
            .map_err(|e| Error::schema("grid", e.to_string()))?;
        let mut uses_eps = false;
        let mut track = |e: Expr| {
            uses_eps |= e.depends_on(Var::Eps);
            e
        };

        if f.coefficients.len() != r {
            return Err(Error::schema(
                "coefficients",
                format!("expected r = {r} matrices, found {}", f.coefficients.len()),
            ));
        }
        let mut coefficients = Vec::with_capacity(r);
        for (k, mat) in f.coefficients.iter().enumerate() {
            if mat.len() != m || mat.iter().any(|row| row.len() != m) {
                return Err(Error::schema(format!("coefficients[{k}]"), format!("must be {m}x{m}")));
            }
            let mut rows = Vec::with_capacity(m);
            for (i, row) in mat.iter().enumerate() {
                let mut out = Vec::with_capacity(m);
                for (j, s) in row.iter().enumerate() {
                    let field = format!("coefficients[{k}][{i}][{j}]");
                    out.push((track(compile(s, &field)?), field));
                }
                rows.push(out);
            }
            coefficients.push(rows);
        }

        if f.rhs.len() != m {
            return Err(Error::schema("rhs", format!("expected m = {m} entries, found {}", f.rhs.len())));
        }
        let rhs = f
            .rhs
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let field = format!("rhs[{i}]");
                Ok(vec![(track(compile(s, &field)?), field)])
            })
            .collect::<Result<Vec<_>>>()?;

        if f.boundary.len() != r * m {
            return Err(Error::BoundaryRowCount {
                expected: r * m,
                found: f.boundary.len(),
            });
        }
        let mut rows = Vec::with_capacity(r * m);
        for (i, row) in f.boundary.iter().enumerate() {
            if row.terms.is_empty() {
                return Err(Error::schema(format!("boundary[{i}].terms"), "must not be empty"));
            }
            let mut terms = Vec::with_capacity(row.terms.len());
            for (j, t) in row.terms.iter().enumerate() {
                let base = format!("boundary[{i}].terms[{j}]");
                let vector = |v: &[Scalar], name: &str, constant: bool| -> Result<Vec<(Expr, String)>> {
                    if v.len() != m {
                        return Err(Error::schema(format!("{base}.{name}"), format!("expected m = {m} entries")));
                    }
                    v.iter()
                        .enumerate()
                        .map(|(q, s)| {
                            let field = format!("{base}.{name}[{q}]");
                            let e = if constant {
                                compile_const(s, &field)?
                            } else {
                                compile(s, &field)?
                            };
                            Ok((e, field))
                        })
                        .collect()
                };
                let term = match t {
                    TermSpec::Point { tau, order, weight } => {
                        let field = format!("{base}.tau");
                        Term::Point {
                            tau: (compile_const(tau, &field)?, field),
                            order: *order,
                            weight: vector(weight, "weight", true)?,
                        }
                    }
                    TermSpec::Integral { order, kernel } => Term::Integral {
                        order: *order,
                        kernel: vector(kernel, "kernel", false)?,
                    },
                };
                match &term {
                    Term::Point { tau, weight, .. } => {
                        track(tau.0.clone());
                        weight.iter().for_each(|w| {
                            track(w.0.clone());
                        });
                    }
                    Term::Integral { kernel, .. } => kernel.iter().for_each(|w| {
                        track(w.0.clone());
                    }),
                }
                terms.push(term);
            }
            rows.push(terms);
        }

        if f.c.len() != r * m {
            return Err(Error::BoundaryRowCount {
                expected: r * m,
                found: f.c.len(),
            });
        }
        let c = f
            .c
            .iter()
            .enumerate()
            .map(|(i, entry)| {
                let (re, im) = match entry {
                    CEntry::Real(s) => (s.clone(), Scalar::Num(0.0)),
                    CEntry::Complex([re, im]) => (re.clone(), im.clone()),
                };
                let fre = format!("c[{i}]");
                let fim = format!("c[{i}].im");
                Ok([
                    (track(compile_const(&re, &fre)?), fre),
                    (track(compile_const(&im, &fim)?), fim),
                ])
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Compiled {
            grid,
            dims: f.dims,
            p: f.p,
            coefficients,
            rhs,
            rows,
            c,
            uses_eps,
        })
    }

    fn problem(&self, eps: f64) -> Result<Problem> {
        let Dims { m, n, r } = self.dims;
        let grid = self.grid;
        let coefficients = self
            .coefficients
            .iter()
            .map(|mat| sample_matrix(mat, grid, eps))
            .collect::<Result<Vec<_>>>()?;
        let rhs = sample_matrix(&self.rhs, grid, eps)?;
        let mut b = BoundaryOperator::new(grid, m, n, r)?;
        for (i, terms) in self.rows.iter().enumerate() {
            for (j, term) in terms.iter().enumerate() {
                let field = format!("boundary[{i}].terms[{j}]");
                let wrap = |e: Error| match e {
                    Error::OrderOutOfRange { .. } | Error::PointOutOfRange { .. } => {
                        Error::schema(field.clone(), e.to_string())
                    }
                    other => other,
                };
                b = match term {
                    Term::Point { tau, order, weight } => {
                        let tau = eval_const(&tau.0, eps, &tau.1)?;
                        let mut w = DMatrix::zeros(r * m, m);
                        for (q, (e, f)) in weight.iter().enumerate() {
                            w[(i, q)] = C64::new(eval_const(e, eps, f)?, 0.0);
                        }
                        b.with_point(tau, *order, w).map_err(wrap)?
                    }
                    Term::Integral { order, kernel } => {
                        let row = sample_matrix(std::slice::from_ref(kernel), grid, eps)?;
                        let mut w = GridFunction::zeros(grid, r * m, m);
                        for node in 0..grid.len() {
                            for q in 0..m {
                                *w.at_mut(node, i, q) = row.at(node, 0, q);
                            }
                        }
                        b.with_integral(*order, w).map_err(wrap)?
                    }
                };
            }
        }
        let c = self
            .c
            .iter()
            .map(|[re, im]| Ok(C64::new(eval_const(&re.0, eps, &re.1)?, eval_const(&im.0, eps, &im.1)?)))
            .collect::<Result<Vec<_>>>()?;
        Problem::new(n, self.p, coefficients, rhs, b, DVector::from_vec(c))
    }
}

/// A parsed and validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    file: ScenarioFile,
    compiled: Arc<Compiled>,
}

/// What a scenario describes.
#[derive(Debug, Clone)]
pub enum Loaded {
    Problem(Problem),
    Family(ParamFamily),
}

impl Scenario {
    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        Self::with_grid(file, None)
    }

    /// Validates `file`, optionally replacing the number of grid intervals.
    pub fn with_grid(file: ScenarioFile, grid_n: Option<usize>) -> Result<Self> {
        let compiled = Compiled::new(&file, grid_n)?;
        if compiled.uses_eps && file.family.is_none() {
            return Err(Error::schema("family", "required when expressions depend on eps"));
        }
        Ok(Scenario {
            file,
            compiled: Arc::new(compiled),
        })
    }

    pub fn parse(text: &str, grid_n: Option<usize>) -> Result<Self> {
        let file: ScenarioFile =
            serde_json::from_str(text).map_err(|e| Error::schema("scenario", e.to_string()))?;
        Self::with_grid(file, grid_n)
    }

    pub fn load(path: &Path, grid_n: Option<usize>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::schema("scenario", format!("{}: {e}", path.display())))?;
        Self::parse(&text, grid_n)
    }

    pub fn file(&self) -> &ScenarioFile {
        &self.file
    }

    pub fn grid(&self) -> Grid {
        self.compiled.grid
    }

    pub fn is_family(&self) -> bool {
        self.file.family.is_some()
    }

    /// The problem at `eps` (`eps = 0` is the limit problem).
    pub fn problem(&self, eps: f64) -> Result<Problem> {
        self.compiled.problem(eps)
    }

    pub fn family(&self) -> Result<ParamFamily> {
        let spec = self
            .file
            .family
            .as_ref()
            .ok_or_else(|| Error::schema("family", "scenario has no family block"))?;
        let compiled = self.compiled.clone();
        let make: ProblemMaker = Arc::new(move |eps| compiled.problem(eps));
        let fam = ParamFamily::new(make, spec.eps0, spec.eps_values.clone())?;
        match spec.conv_tolerance {
            Some(tol) => fam.with_conv_tol(tol),
            None => Ok(fam),
        }
    }

    pub fn build(&self) -> Result<Loaded> {
        if self.is_family() {
            self.family().map(Loaded::Family)
        } else {
            self.problem(0.0).map(Loaded::Problem)
        }
    }

    /// Requested norms as `(label, function at eps = 0, n, p)`.
    pub fn requested_norms(&self) -> Result<Vec<(String, GridFunction, usize, Exponent)>> {
        let m = self.file.dims.m;
        self.file
            .norms
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                if spec.expr.len() != m {
                    return Err(Error::schema(format!("norms[{i}].expr"), format!("expected m = {m} entries")));
                }
                let entries = spec
                    .expr
                    .iter()
                    .enumerate()
                    .map(|(q, s)| {
                        let field = format!("norms[{i}].expr[{q}]");
                        Ok(vec![(compile(s, &field)?, field)])
                    })
                    .collect::<Result<Vec<_>>>()?;
                let f = sample_matrix(&entries, self.compiled.grid, 0.0)?;
                Ok((spec.label.clone(), f, spec.n, spec.p.unwrap_or(self.file.p)))
            })
            .collect()
    }
}

/// Loads a scenario file into a problem or a family.
pub fn load_scenario(path: &Path, grid_n: Option<usize>) -> Result<Loaded> {
    Scenario::load(path, grid_n)?.build()
}

fn normalize(s: &Scalar) -> Scalar {
    match s {
        Scalar::Text(src) => match parse(src) {
            Ok(e) => Scalar::Text(e.to_string()),
            Err(_) => s.clone(),
        },
        Scalar::Num(v) => Scalar::Num(*v),
    }
}

/// Serializes a scenario with every expression in canonical printed form.
pub fn write_scenario(file: &ScenarioFile) -> Result<String> {
    let mut out = file.clone();
    for mat in &mut out.coefficients {
        for row in mat {
            for s in row {
                *s = normalize(s);
            }
        }
    }
    for s in &mut out.rhs {
        *s = normalize(s);
    }
    for row in &mut out.boundary {
        for t in &mut row.terms {
            match t {
                TermSpec::Point { tau, weight, .. } => {
                    *tau = normalize(tau);
                    weight.iter_mut().for_each(|w| *w = normalize(w));
                }
                TermSpec::Integral { kernel, .. } => kernel.iter_mut().for_each(|w| *w = normalize(w)),
            }
        }
    }
    for c in &mut out.c {
        match c {
            CEntry::Real(s) => *s = normalize(s),
            CEntry::Complex(pair) => pair.iter_mut().for_each(|s| *s = normalize(s)),
        }
    }
    for n in &mut out.norms {
        n.expr.iter_mut().for_each(|s| *s = normalize(s));
    }
    crate::report::to_json(&out)
}
