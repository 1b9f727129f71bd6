//! Linear boundary-value problems for systems of `m` ODEs of order `r`
//!
//! ```text
//! y^{(r)}(t) + Σ_{k<r} A_k(t) y^{(k)}(t) = f(t),  t ∈ (a, b),      B y = c,
//! ```
//!
//! with an arbitrary continuous linear boundary operator `B` into `ℂ^{rm}`,
//! posed in Sobolev spaces `W_p^{n+r}`. The crate provides
//!
//! * [`grid`]: sampled functions, finite differences, quadrature, Sobolev norms;
//! * [`expr`]: a small expression language for coefficients in `t` and `eps`;
//! * [`companion`] and [`cauchy`]: first-order reduction, RK4, fundamental matrices;
//! * [`boundary`]: boundary operators in composite and canonical form and the
//!   characteristic matrix `[B Y]`;
//! * [`solver`]: superposition solver with kernel/cokernel diagnostics;
//! * [`analysis`]: continuity in a parameter `ε → 0+` and error/discrepancy
//!   tables for problem families;
//! * [`scenario`], [`report`] and [`cli`]: JSON scenarios and CSV/JSON output
//!   behind the `bvp` binary.

pub mod analysis;
pub mod boundary;
pub mod cauchy;
pub mod cli;
pub mod companion;
pub mod error;
pub mod expr;
pub mod grid;
pub mod linalg;
pub mod report;
pub mod scenario;
pub mod solver;

pub use num_complex::Complex64 as C64;

pub use boundary::{characteristic_matrix, BoundaryOperator, CharacteristicMatrix};
pub use cauchy::{fundamental_matrices, integrate, FundamentalSet};
pub use companion::{build_companion, extract_state, CompanionSystem};
pub use error::{Error, Result};
pub use grid::{Exponent, Grid, GridFunction, Jet, SobolevIndex};
pub use solver::{Classification, Problem, Solution};
