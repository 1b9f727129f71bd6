use serde::{Deserialize, Serialize};

use super::{nth_derivative, quad, GridFunction, Jet};
use crate::error::{Error, Result};

/// Integrability exponent `p ∈ [1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExponentRepr", into = "ExponentRepr")]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExponentRepr {
    Num(f64),
    Text(String),
}

impl TryFrom<ExponentRepr> for Exponent {
    type Error = String;

    fn try_from(r: ExponentRepr) -> std::result::Result<Self, String> {
        match r {
            ExponentRepr::Num(p) => Exponent::finite(p).map_err(|e| e.to_string()),
            ExponentRepr::Text(s) if s == "inf" => Ok(Exponent::Infinity),
            ExponentRepr::Text(s) => Err(format!("expected a number >= 1 or \"inf\", got {s:?}")),
        }
    }
}

impl From<Exponent> for ExponentRepr {
    fn from(p: Exponent) -> Self {
        match p {
            Exponent::Finite(p) => ExponentRepr::Num(p),
            Exponent::Infinity => ExponentRepr::Text("inf".into()),
        }
    }
}

impl Exponent {
    pub fn finite(p: f64) -> Result<Self> {
        if p.is_finite() && p >= 1.0 {
            Ok(Exponent::Finite(p))
        } else if p == f64::INFINITY {
            Ok(Exponent::Infinity)
        } else {
            Err(Error::schema("p", format!("exponent must lie in [1, inf], got {p}")))
        }
    }

    /// Conjugate exponent `p'` with `1/p + 1/p' = 1`.
    pub fn conjugate(self) -> Exponent {
        match self {
            Exponent::Infinity => Exponent::Finite(1.0),
            Exponent::Finite(1.0) => Exponent::Infinity,
            Exponent::Finite(p) => Exponent::Finite(p / (p - 1.0)),
        }
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

/// Sobolev space index `W_p^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevIndex {
    pub n: usize,
    pub p: Exponent,
}

impl SobolevIndex {
    pub fn new(n: usize, p: Exponent) -> Self {
        SobolevIndex { n, p }
    }
}

fn scalar_lp(samples: &[crate::C64], h: f64, p: Exponent) -> f64 {
    match p {
        Exponent::Infinity => samples.iter().map(|z| z.norm()).fold(0.0, f64::max),
        Exponent::Finite(p) => {
            let pw: Vec<f64> = samples.iter().map(|z| z.norm().powf(p)).collect();
            quad::simpson(&pw, h).max(0.0).powf(p.recip())
        }
    }
}

/// `L_p` norm; for vector and matrix shapes the entry norms are summed.
pub fn lp_norm(f: &GridFunction, p: Exponent) -> f64 {
    let h = f.grid().step();
    let (rows, cols) = f.shape();
    let mut total = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            total += scalar_lp(&f.component(r, c), h, p);
        }
    }
    total
}

/// Combines per-derivative `L_p` norms of one scalar component.
fn combine(norms: &[f64], p: Exponent) -> f64 {
    match p {
        Exponent::Infinity => norms.iter().copied().fold(0.0, f64::max),
        Exponent::Finite(p) => norms.iter().map(|v| v.powf(p)).sum::<f64>().powf(p.recip()),
    }
}

fn norm_from_derivatives(derivs: &[GridFunction], p: Exponent) -> f64 {
    let (rows, cols) = derivs[0].shape();
    let h = derivs[0].grid().step();
    let mut total = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            let per: Vec<f64> = derivs
                .iter()
                .map(|d| scalar_lp(&d.component(r, c), h, p))
                .collect();
            total += combine(&per, p);
        }
    }
    total
}

/// `W_p^n` norm with derivatives taken by finite differences.
///
/// Scalar components use `(Σ_k ‖f^{(k)}‖_p^p)^{1/p}` (max over `k` for
/// `p = ∞`); vector and matrix functions sum the component norms.
pub fn sobolev_norm(f: &GridFunction, idx: SobolevIndex) -> Result<f64> {
    let derivs = (0..=idx.n)
        .map(|k| nth_derivative(f, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(norm_from_derivatives(&derivs, idx.p))
}

/// `W_p^n` norm using the derivatives already carried by a jet.
pub fn sobolev_norm_of_jet(jet: &Jet, idx: SobolevIndex) -> Result<f64> {
    if jet.order() < idx.n {
        return Err(Error::OrderOutOfRange {
            order: idx.n,
            max: jet.order(),
        });
    }
    Ok(norm_from_derivatives(&jet.derivatives()[..=idx.n], idx.p))
}
