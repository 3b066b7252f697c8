//! Operator families `β ↦ H(β)` over the truncated coupling space.

use crate::lattice::{lp_norm, DiscreteOperator, SampledFamily};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

pub trait OperatorFamily: Sync {
    /// Size of the operators.
    fn dim(&self) -> usize;
    /// Number of couplings in the truncation.
    fn params(&self) -> usize;
    fn at(&self, beta: &[C64]) -> Result<DiscreteOperator>;
}

/// `H₀ + Σᵢ βᵢVᵢ`.
#[derive(Debug, Clone)]
pub struct AffineFamily {
    h0: DiscreteOperator,
    terms: Vec<DiscreteOperator>,
}

impl AffineFamily {
    pub fn new(h0: DiscreteOperator, terms: Vec<DiscreteOperator>) -> Result<Self> {
        if let Some(t) = terms.iter().find(|t| t.dim() != h0.dim()) {
            return Err(Error::DimensionMismatch {
                expected: h0.dim(),
                got: t.dim(),
            });
        }
        Ok(AffineFamily { h0, terms })
    }

    pub fn from_sampled(h0: DiscreteOperator, family: &SampledFamily) -> Result<Self> {
        if family.grid().len() != h0.dim() {
            return Err(Error::GridMismatch(format!(
                "family sampled on {} nodes, operator has dimension {}",
                family.grid().len(),
                h0.dim()
            )));
        }
        AffineFamily::new(
            h0,
            (0..family.len()).map(|i| family.term_operator(i)).collect(),
        )
    }

    pub fn h0(&self) -> &DiscreteOperator {
        &self.h0
    }

    pub fn terms(&self) -> &[DiscreteOperator] {
        &self.terms
    }

    /// `Σᵢ tᵢVᵢ`, the derivative along `t`.
    pub fn direction_operator(&self, t: &[C64]) -> Result<DiscreteOperator> {
        let mut acc = DiscreteOperator::zero(self.h0.dim());
        for (ti, v) in t.iter().zip(&self.terms) {
            if *ti != C64::new(0.0, 0.0) {
                acc = acc.add_scaled(*ti, v)?;
            }
        }
        Ok(acc)
    }
}

impl OperatorFamily for AffineFamily {
    fn dim(&self) -> usize {
        self.h0.dim()
    }

    fn params(&self) -> usize {
        self.terms.len()
    }

    fn at(&self, beta: &[C64]) -> Result<DiscreteOperator> {
        if beta.len() > self.terms.len() {
            return Err(Error::InvalidInput(format!(
                "{} couplings for a family of {} terms",
                beta.len(),
                self.terms.len()
            )));
        }
        let mut h = self.h0.clone();
        for (b, v) in beta.iter().zip(&self.terms) {
            if *b != C64::new(0.0, 0.0) {
                h = h.add_scaled(*b, v)?;
            }
        }
        Ok(h)
    }
}

/// A family given by a closure.
pub struct FnFamily<F> {
    dim: usize,
    params: usize,
    f: F,
}

impl<F> FnFamily<F>
where
    F: Fn(&[C64]) -> Result<DiscreteOperator> + Sync,
{
    pub fn new(dim: usize, params: usize, f: F) -> Self {
        FnFamily { dim, params, f }
    }
}

impl<F> OperatorFamily for FnFamily<F>
where
    F: Fn(&[C64]) -> Result<DiscreteOperator> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn params(&self) -> usize {
        self.params
    }

    fn at(&self, beta: &[C64]) -> Result<DiscreteOperator> {
        let h = (self.f)(beta)?;
        if h.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: h.dim(),
            });
        }
        Ok(h)
    }
}

/// Nonzero direction `t` in the truncated coupling space, with the exponent
/// of the norm it is measured in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    t: Vec<C64>,
    p: f64,
}

impl Direction {
    pub fn new(t: Vec<C64>, p: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::InvalidInput(format!("ℓᵖ exponent {p} must be ≥ 1")));
        }
        if t.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("direction".into()));
        }
        if t.iter().all(|z| *z == C64::new(0.0, 0.0)) {
            return Err(Error::InvalidInput("direction must be nonzero".into()));
        }
        Ok(Direction { t, p })
    }

    /// The `i`-th coordinate direction.
    pub fn coordinate(i: usize, len: usize) -> Result<Self> {
        if i >= len {
            return Err(Error::InvalidInput(format!(
                "coordinate {i} outside {len} couplings"
            )));
        }
        let mut t = vec![C64::new(0.0, 0.0); len];
        t[i] = C64::new(1.0, 0.0);
        Direction::new(t, 2.0)
    }

    pub fn values(&self) -> &[C64] {
        &self.t
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn norm(&self) -> f64 {
        lp_norm(&self.t, self.p)
    }

    pub fn scaled(&self, c: C64) -> Result<Self> {
        Direction::new(self.t.iter().map(|z| z * c).collect(), self.p)
    }

    /// `base + ζ t`, padded to the longer of the two.
    pub fn point(&self, base: &[C64], zeta: C64) -> Vec<C64> {
        let n = base.len().max(self.t.len());
        (0..n)
            .map(|i| {
                base.get(i).copied().unwrap_or_default()
                    + zeta * self.t.get(i).copied().unwrap_or_default()
            })
            .collect()
    }
}
