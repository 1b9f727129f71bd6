//! C ABI for `bvp-core`.
//!
//! Problems and solutions are opaque handles created and destroyed by this
//! library. Every fallible function returns a [`BvpStatus`]; on failure the
//! message is available from [`bvp_last_error`] on the same thread. Panics
//! never cross the boundary; they are reported as `BVP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bvp_core::analysis::two_sided_report;
use bvp_core::grid::{sobolev_norm, Exponent, Grid, GridFunction, SobolevIndex};
use bvp_core::report::to_json;
use bvp_core::scenario::Scenario;
use bvp_core::solver::{residuals, solve_with, Classification, Problem, Solution, SolverOptions};
use bvp_core::Error;
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BvpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Input rejected: schema, parse, shape or range errors.
    Validation = 3,
    /// A numerical step failed.
    Numerical = 4,
    /// An index or buffer length is out of range.
    OutOfRange = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BvpClassification {
    Unique = 0,
    Underdetermined = 1,
    Unsolvable = 2,
}

/// A problem loaded from a scenario (the limit problem for a family).
pub struct BvpProblem {
    inner: Problem,
}

pub struct BvpSolution {
    inner: Solution,
    equation_residual: f64,
    boundary_residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: BvpStatus, msg: impl Into<String>) -> BvpStatus {
    set_error(msg);
    status
}

fn from_core(e: Error) -> BvpStatus {
    let status = if e.is_validation() {
        BvpStatus::Validation
    } else {
        BvpStatus::Numerical
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> BvpStatus) -> BvpStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(BvpStatus::Panic, format!("panic: {msg}"))
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, BvpStatus> {
    if s.is_null() {
        return Err(fail(BvpStatus::NullPointer, "string argument is null"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(BvpStatus::InvalidUtf8, "string argument is not UTF-8"))
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(BvpStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn bvp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bvp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a JSON scenario. `grid_n = 0` keeps the scenario's grid.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bvp_problem_from_json(
    json: *const c_char,
    grid_n: usize,
    out: *mut *mut BvpProblem,
) -> BvpStatus {
    guard(|| {
        non_null!(out);
        *out = ptr::null_mut();
        let text = try_status!(read_str(json));
        let n = (grid_n > 0).then_some(grid_n);
        let problem = match Scenario::parse(text, n).and_then(|s| s.problem(0.0)) {
            Ok(p) => p,
            Err(e) => return from_core(e),
        };
        *out = Box::into_raw(Box::new(BvpProblem { inner: problem }));
        BvpStatus::Ok
    })
}

/// # Safety
/// `p` must come from [`bvp_problem_from_json`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bvp_problem_free(p: *mut BvpProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of grid nodes, `N + 1`; 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn bvp_problem_nodes(p: *const BvpProblem) -> usize {
    p.as_ref().map_or(0, |p| p.inner.grid.len())
}

/// Writes `m`, `n` and `r` of the problem.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bvp_problem_dims(
    p: *const BvpProblem,
    m: *mut usize,
    n: *mut usize,
    r: *mut usize,
) -> BvpStatus {
    guard(|| {
        non_null!(p, m, n, r);
        let p = &(*p).inner;
        *m = p.m;
        *n = p.n;
        *r = p.r;
        BvpStatus::Ok
    })
}

/// Solves the problem. `rank_rtol <= 0` selects the default rank tolerance.
///
/// # Safety
/// `p` must be a live problem handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bvp_solve(
    p: *const BvpProblem,
    rank_rtol: f64,
    out: *mut *mut BvpSolution,
) -> BvpStatus {
    guard(|| {
        non_null!(p, out);
        *out = ptr::null_mut();
        let problem = &(*p).inner;
        let opts = SolverOptions {
            rank_rtol: (rank_rtol > 0.0).then_some(rank_rtol),
        };
        let result = solve_with(problem, opts).and_then(|s| {
            let res = residuals(problem, &s)?;
            Ok(BvpSolution {
                inner: s,
                equation_residual: res.equation,
                boundary_residual: res.boundary,
            })
        });
        match result {
            Ok(s) => {
                *out = Box::into_raw(Box::new(s));
                BvpStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `s` must come from [`bvp_solve`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bvp_solution_free(s: *mut BvpSolution) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Solvability class; `kernel_dim` and `residual` (least-squares residual of
/// an unsolvable problem, 0 otherwise) may be null.
///
/// # Safety
/// `s` and `class` must be valid; the optional outputs null or valid.
#[no_mangle]
pub unsafe extern "C" fn bvp_solution_classification(
    s: *const BvpSolution,
    class: *mut BvpClassification,
    kernel_dim: *mut usize,
    residual: *mut f64,
) -> BvpStatus {
    guard(|| {
        non_null!(s, class);
        let s = &(*s).inner;
        let (c, res) = match s.classification {
            Classification::Unique => (BvpClassification::Unique, 0.0),
            Classification::Underdetermined { .. } => (BvpClassification::Underdetermined, 0.0),
            Classification::Unsolvable { residual } => (BvpClassification::Unsolvable, residual),
        };
        *class = c;
        if !kernel_dim.is_null() {
            *kernel_dim = s.kernel_dim();
        }
        if !residual.is_null() {
            *residual = res;
        }
        BvpStatus::Ok
    })
}

/// Determinant of the characteristic matrix `[B Y]`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bvp_solution_det(s: *const BvpSolution, re: *mut f64, im: *mut f64) -> BvpStatus {
    guard(|| {
        non_null!(s, re, im);
        let d = (*s).inner.characteristic.det;
        *re = d.re;
        *im = d.im;
        BvpStatus::Ok
    })
}

/// `‖L y − f‖_{L_2}` and `|B y − c|` of the computed solution.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bvp_solution_residuals(
    s: *const BvpSolution,
    equation: *mut f64,
    boundary: *mut f64,
) -> BvpStatus {
    guard(|| {
        non_null!(s, equation, boundary);
        *equation = (*s).equation_residual;
        *boundary = (*s).boundary_residual;
        BvpStatus::Ok
    })
}

/// Copies `y_component^{(derivative)}` at every node into `re` and `im`,
/// each of length `len` (must equal the node count; `im` may be null).
///
/// # Safety
/// `re` must have room for `len` doubles, as must `im` when non-null.
#[no_mangle]
pub unsafe extern "C" fn bvp_solution_values(
    s: *const BvpSolution,
    derivative: usize,
    component: usize,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> BvpStatus {
    guard(|| {
        non_null!(s, re);
        let jet = &(*s).inner.jet;
        let Some(d) = jet.derivative(derivative) else {
            return fail(
                BvpStatus::OutOfRange,
                format!("derivative {derivative} exceeds jet order {}", jet.order()),
            );
        };
        if component >= d.rows() {
            return fail(BvpStatus::OutOfRange, format!("component {component} >= m = {}", d.rows()));
        }
        if len != d.grid().len() {
            return fail(
                BvpStatus::OutOfRange,
                format!("buffer length {len} != node count {}", d.grid().len()),
            );
        }
        for i in 0..len {
            let z = d.at(i, component, 0);
            *re.add(i) = z.re;
            if !im.is_null() {
                *im.add(i) = z.im;
            }
        }
        BvpStatus::Ok
    })
}

/// `W_p^n` norm of a scalar function sampled at `len` uniform nodes of
/// `[a, b]`. `p = INFINITY` selects the sup norm; `im` may be null.
///
/// # Safety
/// `re` (and `im` when non-null) must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bvp_sobolev_norm(
    re: *const f64,
    im: *const f64,
    len: usize,
    a: f64,
    b: f64,
    n: usize,
    p: f64,
    out: *mut f64,
) -> BvpStatus {
    guard(|| {
        non_null!(re, out);
        if len < 2 {
            return fail(BvpStatus::Validation, "need at least two samples");
        }
        let exp = if p == f64::INFINITY {
            Exponent::Infinity
        } else {
            match Exponent::finite(p) {
                Ok(e) => e,
                Err(e) => return from_core(e),
            }
        };
        let re = std::slice::from_raw_parts(re, len);
        let samples: Vec<Complex64> = if im.is_null() {
            re.iter().map(|&x| Complex64::new(x, 0.0)).collect()
        } else {
            let im = std::slice::from_raw_parts(im, len);
            re.iter().zip(im).map(|(&x, &y)| Complex64::new(x, y)).collect()
        };
        let result = Grid::new(a, b, len - 1)
            .and_then(|g| GridFunction::from_samples(g, 1, 1, samples))
            .and_then(|f| sobolev_norm(&f, SobolevIndex::new(n, exp)));
        match result {
            Ok(v) => {
                *out = v;
                BvpStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Runs the two-sided analysis of a family scenario and returns the report
/// as JSON. Free the string with [`bvp_string_free`].
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bvp_analyze_json(json: *const c_char, grid_n: usize, out: *mut *mut c_char) -> BvpStatus {
    guard(|| {
        non_null!(out);
        *out = ptr::null_mut();
        let text = try_status!(read_str(json));
        let n = (grid_n > 0).then_some(grid_n);
        let report = Scenario::parse(text, n)
            .and_then(|s| s.family())
            .and_then(|f| two_sided_report(&f))
            .and_then(|r| to_json(&r));
        match report {
            Ok(s) => match CString::new(s) {
                Ok(c) => {
                    *out = c.into_raw();
                    BvpStatus::Ok
                }
                Err(_) => fail(BvpStatus::Numerical, "report contains NUL"),
            },
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bvp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
