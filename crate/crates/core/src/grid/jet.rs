use nalgebra::DMatrix;

use super::{nth_derivative, GridFunction};
use crate::error::{Error, Result};
use crate::C64;

/// A sampled function together with its derivatives `f, f', …, f^{(q)}`.
///
/// Boundary operators and Sobolev norms read derivatives from a jet so that
/// exact derivative data (from a companion state or closed forms) is used
/// when available instead of repeated finite differencing.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    derivs: Vec<GridFunction>,
}

impl Jet {
    pub fn from_derivatives(derivs: Vec<GridFunction>) -> Result<Self> {
        let first = derivs
            .first()
            .ok_or_else(|| Error::shape("jet needs at least the function itself"))?;
        for d in &derivs[1..] {
            if d.grid() != first.grid() || d.shape() != first.shape() {
                return Err(Error::shape("jet derivatives disagree in grid or shape"));
            }
        }
        Ok(Jet { derivs })
    }

    /// Jet of order `order` computed by finite differences.
    pub fn from_function(f: &GridFunction, order: usize) -> Result<Self> {
        let derivs = (0..=order)
            .map(|k| nth_derivative(f, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Jet { derivs })
    }

    /// Highest derivative order carried.
    pub fn order(&self) -> usize {
        self.derivs.len() - 1
    }

    pub fn value(&self) -> &GridFunction {
        &self.derivs[0]
    }

    pub fn derivative(&self, k: usize) -> Option<&GridFunction> {
        self.derivs.get(k)
    }

    pub fn derivatives(&self) -> &[GridFunction] {
        &self.derivs
    }

    pub fn shape(&self) -> (usize, usize) {
        self.derivs[0].shape()
    }

    /// Extends the jet to `order` by differencing the top derivative.
    pub fn extended(mut self, order: usize) -> Result<Self> {
        let top = self.order();
        if order > top {
            let base = self.derivs[top].clone();
            for k in 1..=(order - top) {
                self.derivs.push(nth_derivative(&base, k)?);
            }
        }
        Ok(self)
    }

    pub fn truncated(&self, order: usize) -> Jet {
        Jet {
            derivs: self.derivs[..=order.min(self.order())].to_vec(),
        }
    }

    pub fn try_add(&self, other: &Jet) -> Result<Jet> {
        self.zip(other, GridFunction::try_add)
    }

    pub fn try_sub(&self, other: &Jet) -> Result<Jet> {
        self.zip(other, GridFunction::try_sub)
    }

    fn zip(
        &self,
        other: &Jet,
        f: impl Fn(&GridFunction, &GridFunction) -> Result<GridFunction>,
    ) -> Result<Jet> {
        let k = self.order().min(other.order());
        let derivs = (0..=k)
            .map(|i| f(&self.derivs[i], &other.derivs[i]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Jet { derivs })
    }

    /// Right-multiplies every derivative by a constant matrix.
    pub fn mul_const(&self, m: &DMatrix<C64>) -> Result<Jet> {
        let derivs = self
            .derivs
            .iter()
            .map(|d| d.mul_const(m))
            .collect::<Result<Vec<_>>>()?;
        Ok(Jet { derivs })
    }

    pub fn scale(&self, s: C64) -> Jet {
        Jet {
            derivs: self.derivs.iter().map(|d| d.scale(s)).collect(),
        }
    }

    pub fn column(&self, c: usize) -> Jet {
        Jet {
            derivs: self.derivs.iter().map(|d| d.column(c)).collect(),
        }
    }
}
