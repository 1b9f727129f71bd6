//! Shared fixtures for the integration tests: a problem corpus and an
//! independent dense collocation solver used as an oracle.

#![allow(dead_code)]

pub mod golden;

use std::f64::consts::PI;

use bvp_core::{BoundaryOperator, Exponent, Grid, GridFunction, Jet, Problem, C64};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn col(v: &[f64]) -> DMatrix<C64> {
    DMatrix::from_iterator(v.len(), 1, v.iter().map(|&x| c(x)))
}

pub fn mat(rows: usize, cols: usize, v: &[f64]) -> DMatrix<C64> {
    DMatrix::from_row_iterator(rows, cols, v.iter().map(|&x| c(x)))
}

pub fn real(g: Grid, f: impl Fn(f64) -> f64) -> GridFunction {
    GridFunction::from_real_fn(g, f).unwrap()
}

pub fn cvec(v: &[f64]) -> DVector<C64> {
    DVector::from_iterator(v.len(), v.iter().map(|&x| c(x)))
}

pub fn max_node_error(f: &GridFunction, exact: impl Fn(f64) -> f64) -> f64 {
    f.grid()
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &t)| (f.at(i, 0, 0) - c(exact(t))).norm())
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Collocation oracle
// ---------------------------------------------------------------------------

/// Weights of the `k`-th derivative at offset 0 from samples at `offsets`
/// (unit spacing), by solving the moment equations directly.
pub fn vandermonde_weights(offsets: &[f64], k: usize) -> Vec<f64> {
    let s = offsets.len();
    let v = DMatrix::from_fn(s, s, |q, j| offsets[j].powi(q as i32));
    let mut rhs = DVector::zeros(s);
    rhs[k] = (1..=k).map(|v| v as f64).product();
    v.lu().solve(&rhs).expect("distinct offsets").iter().copied().collect()
}

/// Dense differentiation matrix of order `k` on `np` equispaced nodes.
/// Stencils are centred where possible, one-sided near the ends, with
/// at least four orders of accuracy.
pub fn diff_matrix(np: usize, h: f64, k: usize) -> DMatrix<f64> {
    if k == 0 {
        return DMatrix::identity(np, np);
    }
    let width = (k + 4) | 1;
    assert!(width <= np);
    let mut d = DMatrix::zeros(np, np);
    for row in 0..np {
        let start = row.saturating_sub(width / 2).min(np - width);
        let offsets: Vec<f64> = (start..start + width).map(|j| j as f64 - row as f64).collect();
        for (q, w) in vandermonde_weights(&offsets, k).into_iter().enumerate() {
            d[(row, start + q)] = w / h.powi(k as i32);
        }
    }
    d
}

/// Solves `p` by global finite-difference collocation: the ODE is imposed at
/// all but `r` nodes and the `rm` boundary rows come from applying `B` to the
/// cardinal functions of the grid. Returns node values, `len x m`.
pub fn collocation_solve(p: &Problem) -> DMatrix<C64> {
    let g = p.grid;
    let (np, m, r) = (g.len(), p.m, p.r);
    let order = p.boundary.max_order().max(r);
    let dmats: Vec<DMatrix<f64>> = (0..=order).map(|k| diff_matrix(np, g.step(), k)).collect();
    let dim = np * m;
    let unknown = |node: usize, i: usize| node * m + i;

    // Column unknown(j, i) of the jet is the cardinal function e_i δ_j.
    let derivs = dmats
        .iter()
        .map(|d| {
            let mut data = vec![c(0.0); np * m * dim];
            for node in 0..np {
                for j in 0..np {
                    let w = d[(node, j)];
                    if w != 0.0 {
                        for i in 0..m {
                            data[(node * m + i) * dim + unknown(j, i)] = c(w);
                        }
                    }
                }
            }
            GridFunction::from_samples(g, m, dim, data).unwrap()
        })
        .collect();
    let rows = p.boundary.apply(&Jet::from_derivatives(derivs).unwrap()).unwrap();

    let mut a = DMatrix::<C64>::zeros(dim, dim);
    let mut rhs = DVector::<C64>::zeros(dim);
    a.rows_mut(0, r * m).copy_from(&rows);
    rhs.rows_mut(0, r * m).copy_from(&p.c);

    let lo = r.div_ceil(2);
    let hi = np - r / 2;
    let mut row = r * m;
    for node in lo..hi {
        for i in 0..m {
            for j in 0..np {
                let top = dmats[r][(node, j)];
                if top != 0.0 {
                    a[(row, unknown(j, i))] += c(top);
                }
                for (k, ak) in p.coefficients.iter().enumerate() {
                    let w = dmats[k][(node, j)];
                    if w == 0.0 {
                        continue;
                    }
                    for l in 0..m {
                        a[(row, unknown(j, l))] += ak.at(node, i, l) * w;
                    }
                }
            }
            rhs[row] = p.rhs.at(node, i, 0);
            row += 1;
        }
    }
    assert_eq!(row, dim);
    let x = a.lu().solve(&rhs).expect("collocation matrix is singular");
    DMatrix::from_fn(np, m, |node, i| x[unknown(node, i)])
}

// ---------------------------------------------------------------------------
// Corpus
// ---------------------------------------------------------------------------

pub struct Case {
    pub name: String,
    pub problem: Problem,
    /// Expected kernel dimension; 0 means the problem is uniquely solvable.
    pub kernel_dim: usize,
    /// Closed-form first component when known.
    pub exact: Option<fn(f64) -> f64>,
}

fn scalar(
    g: Grid,
    n: usize,
    coeffs: &[&dyn Fn(f64) -> f64],
    f: &dyn Fn(f64) -> f64,
    b: BoundaryOperator,
    cv: &[f64],
) -> Problem {
    let a = coeffs.iter().map(|ak| real(g, ak)).collect();
    Problem::new(n, Exponent::Finite(2.0), a, real(g, f), b, cvec(cv)).unwrap()
}

fn op(g: Grid, m: usize, n: usize, r: usize) -> BoundaryOperator {
    BoundaryOperator::new(g, m, n, r).unwrap()
}

fn dirichlet(g: Grid, n: usize) -> BoundaryOperator {
    op(g, 1, n, 2)
        .with_point(g.a(), 0, col(&[1.0, 0.0]))
        .unwrap()
        .with_point(g.b(), 0, col(&[0.0, 1.0]))
        .unwrap()
}

fn zero(_: f64) -> f64 {
    0.0
}

/// A random boundary operator for `(m, r)` built from point and integral
/// terms. With `rank_one`, every weight is `u wᵀ` for one fixed `u`, so all
/// rows are proportional and the kernel has dimension `rm - 1`.
fn random_boundary(g: Grid, m: usize, r: usize, seed: u64, rank_one: bool) -> BoundaryOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = r * m;
    let u: Vec<f64> = (0..rows).map(|_| rng.random_range(0.5..1.5)).collect();
    let weight = |rng: &mut ChaCha8Rng| {
        if rank_one {
            let w: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            DMatrix::from_fn(rows, m, |i, j| c(u[i] * w[j]))
        } else {
            DMatrix::from_fn(rows, m, |_, _| c(rng.random_range(-1.0..1.0)))
        }
    };
    let mut b = op(g, m, 0, r);
    for _ in 0..3 {
        // node-aligned points keep interpolation exact
        let tau = g.node(rng.random_range(0..g.len()));
        let order = rng.random_range(0..r);
        b = b.with_point(tau, order, weight(&mut rng)).unwrap();
    }
    let w = weight(&mut rng);
    let kernel = GridFunction::from_matrix_fn(g, rows, m, |t| w.map(|z| z * (1.0 + t))).unwrap();
    b.with_integral(0, kernel).unwrap()
}

/// At least twelve problems on `[0, 1]` with `n` intervals, mixing scalar
/// and system problems, invertible and singular cases.
pub fn corpus(n: usize) -> Vec<Case> {
    let g = Grid::new(0.0, 1.0, n).unwrap();
    let mut out = Vec::new();
    let mut push = |name: &str, problem: Problem, kernel_dim: usize, exact: Option<fn(f64) -> f64>| {
        out.push(Case {
            name: name.to_string(),
            problem,
            kernel_dim,
            exact,
        })
    };

    push(
        "dirichlet sine",
        scalar(g, 0, &[&zero, &zero], &|t| -PI * PI * (PI * t).sin(), dirichlet(g, 0), &[0.0, 0.0]),
        0,
        Some(|t| (PI * t).sin()),
    );
    push(
        "dirichlet sine in W^1",
        scalar(g, 1, &[&zero, &zero], &|t| -PI * PI * (PI * t).sin(), dirichlet(g, 1), &[0.0, 0.0]),
        0,
        Some(|t| (PI * t).sin()),
    );
    push(
        "oscillator",
        scalar(g, 0, &[&|_| 1.0, &zero], &|_| 1.0, dirichlet(g, 0), &[0.0, 0.0]),
        0,
        Some(|t| 1.0 - t.cos() - (1.0 - 1f64.cos()) / 1f64.sin() * t.sin()),
    );
    push(
        "periodic first order",
        scalar(
            g,
            0,
            &[&zero],
            &|t| (2.0 * PI * t).cos(),
            op(g, 1, 0, 1)
                .with_point(1.0, 0, col(&[1.0]))
                .unwrap()
                .with_point(0.0, 0, col(&[-1.0]))
                .unwrap(),
            &[0.0],
        ),
        1,
        None,
    );
    push(
        "resonant dirichlet",
        scalar(g, 0, &[&|_| PI * PI, &zero], &zero, dirichlet(g, 0), &[0.0, 0.0]),
        1,
        None,
    );
    push(
        "periodic second order",
        scalar(
            g,
            0,
            &[&zero, &zero],
            &|t| (2.0 * PI * t).sin(),
            op(g, 1, 0, 2)
                .with_point(0.0, 0, col(&[1.0, 0.0]))
                .unwrap()
                .with_point(1.0, 0, col(&[-1.0, 0.0]))
                .unwrap()
                .with_point(0.0, 1, col(&[0.0, 1.0]))
                .unwrap()
                .with_point(1.0, 1, col(&[0.0, -1.0]))
                .unwrap(),
            &[0.0, 0.0],
        ),
        1,
        None,
    );
    // y = e^t: y'' + t y' - (1 + t) y = 0 with Neumann at 0, Dirichlet at 1.
    push(
        "variable coefficients, mixed conditions",
        scalar(
            g,
            0,
            &[&|t| -(1.0 + t), &|t| t],
            &zero,
            op(g, 1, 0, 2)
                .with_point(0.0, 1, col(&[1.0, 0.0]))
                .unwrap()
                .with_point(1.0, 0, col(&[0.0, 1.0]))
                .unwrap(),
            &[1.0, 1f64.exp()],
        ),
        0,
        Some(f64::exp),
    );
    // y = cos t: Robin conditions y - y' at 0 and y + 2y' at 1.
    push(
        "robin",
        scalar(
            g,
            0,
            &[&|t| -(1.0 + t * t), &zero],
            &|t| -(2.0 + t * t) * t.cos(),
            op(g, 1, 0, 2)
                .with_point(0.0, 0, col(&[1.0, 0.0]))
                .unwrap()
                .with_point(0.0, 1, col(&[-1.0, 0.0]))
                .unwrap()
                .with_point(1.0, 0, col(&[0.0, 1.0]))
                .unwrap()
                .with_point(1.0, 1, col(&[0.0, 2.0]))
                .unwrap(),
            &[1.0, 1f64.cos() - 2.0 * 1f64.sin()],
        ),
        0,
        Some(f64::cos),
    );
    // y = t^2: y(0) + y(1/2) = 1/4 and y(1) = 1.
    push(
        "three-point",
        scalar(
            g,
            0,
            &[&|_| 1.0, &zero],
            &|t| 2.0 + t * t,
            op(g, 1, 0, 2)
                .with_point(0.0, 0, col(&[1.0, 0.0]))
                .unwrap()
                .with_point(0.5, 0, col(&[1.0, 0.0]))
                .unwrap()
                .with_point(1.0, 0, col(&[0.0, 1.0]))
                .unwrap(),
            &[0.25, 1.0],
        ),
        0,
        Some(|t| t * t),
    );
    // y = e^{-2t}: y' + 2y = 0 with the integral condition ∫ y = (1 - e^{-2})/2.
    push(
        "integral condition",
        scalar(
            g,
            0,
            &[&|_| 2.0],
            &zero,
            op(g, 1, 0, 1).with_integral(0, real(g, |_| 1.0)).unwrap(),
            &[(1.0 - (-2f64).exp()) / 2.0],
        ),
        0,
        Some(|t| (-2.0 * t).exp()),
    );
    // y = t^3: y''' + y' = 6 + 3t^2.
    push(
        "third order",
        scalar(
            g,
            0,
            &[&zero, &|_| 1.0, &zero],
            &|t| 6.0 + 3.0 * t * t,
            op(g, 1, 0, 3)
                .with_point(0.0, 0, col(&[1.0, 0.0, 0.0]))
                .unwrap()
                .with_point(0.0, 1, col(&[0.0, 1.0, 0.0]))
                .unwrap()
                .with_point(1.0, 0, col(&[0.0, 0.0, 1.0]))
                .unwrap(),
            &[0.0, 0.0, 1.0],
        ),
        0,
        Some(|t| t * t * t),
    );
    // Rotation system y' + J y = 0 with y(t) = (cos t, sin t) and
    // conditions y_1(0) = 1, y_2(1) = sin 1.
    {
        let a0 = GridFunction::constant(g, &mat(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let b = op(g, 2, 0, 1)
            .with_point(0.0, 0, mat(2, 2, &[1.0, 0.0, 0.0, 0.0]))
            .unwrap()
            .with_point(1.0, 0, mat(2, 2, &[0.0, 0.0, 0.0, 1.0]))
            .unwrap();
        let f = GridFunction::zeros(g, 2, 1);
        push(
            "rotation system",
            Problem::new(0, Exponent::Finite(2.0), vec![a0], f, b, cvec(&[1.0, 1f64.sin()])).unwrap(),
            0,
            Some(f64::cos),
        );
    }
    // Coupled second-order system with multipoint and integral rows.
    {
        let a0 = GridFunction::from_matrix_fn(g, 2, 2, |t| mat(2, 2, &[1.0, t, 0.5, 2.0])).unwrap();
        let a1 = GridFunction::constant(g, &mat(2, 2, &[0.0, 0.3, -0.3, 0.0]));
        let f = GridFunction::from_matrix_fn(g, 2, 1, |t| col(&[t.exp(), 1.0 - t])).unwrap();
        let mut w = DMatrix::zeros(4, 2);
        w[(2, 0)] = c(1.0);
        w[(3, 1)] = c(1.0);
        let b = op(g, 2, 0, 2)
            .with_point(0.0, 0, mat(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]))
            .unwrap()
            .with_point(0.25, 1, mat(4, 2, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]))
            .unwrap()
            .with_integral(0, GridFunction::constant(g, &w))
            .unwrap();
        push(
            "coupled multipoint system",
            Problem::new(0, Exponent::Finite(2.0), vec![a0, a1], f, b, cvec(&[0.0, 1.0, 0.5, -0.5])).unwrap(),
            0,
            None,
        );
    }
    // Complex coefficient: y' + (1 + 2i) y = 1, y(0) + y(1) = 0.
    {
        let a0 = GridFunction::from_scalar_fn(g, |_| C64::new(1.0, 2.0)).unwrap();
        let b = op(g, 1, 0, 1)
            .with_point(0.0, 0, col(&[1.0]))
            .unwrap()
            .with_point(1.0, 0, col(&[1.0]))
            .unwrap();
        push(
            "complex coefficient",
            Problem::new(0, Exponent::Finite(2.0), vec![a0], real(g, |_| 1.0), b, cvec(&[0.0])).unwrap(),
            0,
            None,
        );
    }
    // Canonical operator with α_0 = (1, 0), α_1 = (0, 1), Φ = (0, 1 - t):
    // the rows are y(0) and y'(0) + ∫ (1 - t) y'' dt = y(1) - y(0).
    // y = t^2 solves y'' + y' = 2 + 2t.
    {
        let alphas = vec![col(&[1.0, 0.0]), col(&[0.0, 1.0])];
        let kernel = GridFunction::from_matrix_fn(g, 2, 1, |t| col(&[0.0, 1.0 - t])).unwrap();
        let b = op(g, 1, 0, 2).with_canonical(alphas, kernel).unwrap();
        push(
            "canonical form",
            scalar(g, 0, &[&zero, &|_| 1.0], &|t| 2.0 + 2.0 * t, b, &[0.0, 1.0]),
            0,
            Some(|t| t * t),
        );
    }
    for (seed, m, r) in [(11, 1, 2), (12, 2, 1), (13, 1, 3)] {
        push(
            &format!("random full-rank boundary {seed}"),
            scalar_or_system(g, m, r, random_boundary(g, m, r, seed, false)),
            0,
            None,
        );
        push(
            &format!("random rank-one boundary {seed}"),
            scalar_or_system(g, m, r, random_boundary(g, m, r, seed, true)),
            r * m - 1,
            None,
        );
    }
    out
}

/// Smooth operator `y^{(r)} + Σ A_k y^{(k)}` with small coefficients and a
/// generic right-hand side, for random boundary operators.
fn scalar_or_system(g: Grid, m: usize, r: usize, b: BoundaryOperator) -> Problem {
    let coeffs = (0..r)
        .map(|k| {
            GridFunction::from_matrix_fn(g, m, m, |t| {
                DMatrix::from_fn(m, m, |i, j| c(0.2 * ((k + 1) as f64) * (t + (i + 2 * j) as f64).sin()))
            })
            .unwrap()
        })
        .collect();
    let f = GridFunction::from_matrix_fn(g, m, 1, |t| DMatrix::from_fn(m, 1, |i, _| c((t + i as f64).cos()))).unwrap();
    let cv: Vec<f64> = (0..r * m).map(|i| 0.5 - 0.25 * i as f64).collect();
    Problem::new(0, Exponent::Finite(2.0), coeffs, f, b, cvec(&cv)).unwrap()
}

// ---------------------------------------------------------------------------
// Random operators and exact polynomial jets
// ---------------------------------------------------------------------------

/// `k`-th derivative of `Σ c_j t^j` at `t`.
pub fn poly_derivative(coeffs: &[f64], k: usize, t: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(k)
        .map(|(j, cj)| {
            let falling: f64 = ((j - k + 1)..=j).map(|v| v as f64).product();
            cj * falling * t.powi((j - k) as i32)
        })
        .sum()
}

/// Exact jet of an `m`-vector of polynomials, one coefficient list per
/// component, up to `order`.
pub fn poly_jet(g: Grid, polys: &[Vec<f64>], order: usize) -> Jet {
    let m = polys.len();
    let derivs = (0..=order)
        .map(|k| {
            GridFunction::from_matrix_fn(g, m, 1, |t| {
                DMatrix::from_fn(m, 1, |i, _| c(poly_derivative(&polys[i], k, t)))
            })
            .unwrap()
        })
        .collect();
    Jet::from_derivatives(derivs).unwrap()
}

/// Random composite operator on `(W^{n+r})^m`: point terms at arbitrary
/// `τ ∈ [a, b]` of every admissible order and smooth integral weights on
/// `y^{(d)}` for several `d ≤ n + r`.
pub fn random_operator(g: Grid, m: usize, n: usize, r: usize, rng: &mut ChaCha8Rng) -> BoundaryOperator {
    let rows = r * m;
    let top = n + r;
    let mut b = op(g, m, n, r);
    for d in 0..top {
        let tau = rng.random_range(g.a()..=g.b());
        let w = DMatrix::from_fn(rows, m, |_, _| c(rng.random_range(-1.0..1.0)));
        b = b.with_point(tau, d, w).unwrap();
    }
    b = b.with_point(g.a(), 0, DMatrix::from_fn(rows, m, |_, _| c(rng.random_range(-1.0..1.0)))).unwrap();
    b = b.with_point(g.b(), top - 1, DMatrix::from_fn(rows, m, |_, _| c(rng.random_range(-1.0..1.0)))).unwrap();
    for d in [0, top / 2, top] {
        let w = DMatrix::from_fn(rows, m, |_, _| c(rng.random_range(-1.0..1.0)));
        let freq = rng.random_range(0.5..3.0);
        let kernel = GridFunction::from_matrix_fn(g, rows, m, |t| w.map(|z| z * (freq * t).cos())).unwrap();
        b = b.with_integral(d, kernel).unwrap();
    }
    b
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn max_entry(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn random_polys(rng: &mut impl Rng, m: usize, degree: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|_| (0..=degree).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

/// Both sides carry the O(h^4) error of interpolating point values and
/// integrating against `y^{(n+r)}`; at (n, r) = (2, 3) it is about 7e-8 at
/// N = 200 and 3e-10 at N = 800.
pub const FIDELITY_GRID: usize = 800;

/// Largest deviation between direct and canonical application over `count`
/// random polynomials of degree `n + r + 2`.
pub fn canonical_gap(n: usize, r: usize, m: usize, grid_n: usize, seed: u64, count: usize) -> f64 {
    let g = Grid::new(0.0, 1.0, grid_n).unwrap();
    let mut rng = rng(seed);
    let b = random_operator(g, m, n, r, &mut rng);
    let canon = b.canonicalize().unwrap();
    assert!(canon.terms().is_empty());
    (0..count)
        .map(|_| {
            let polys = random_polys(&mut rng, m, n + r + 2);
            let jet = poly_jet(g, &polys, n + r);
            let direct = b.apply(&jet).unwrap();
            let via = canon.apply(&jet).unwrap();
            max_entry(&(direct - via))
        })
        .fold(0.0, f64::max)
}
