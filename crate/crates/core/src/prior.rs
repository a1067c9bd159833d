use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rejection draws allowed before a constrained prior is declared unsatisfiable.
pub const PRIOR_RETRY_CAP: usize = 1_000_000;

/// Pairwise linear constraint `theta[lesser] <= theta[greater]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderConstraint {
    pub lesser: usize,
    pub greater: usize,
}

/// Uniform prior on a box, optionally cut down by order constraints.
///
/// The density is reported unnormalized: 1 on the feasible region, 0 outside.
/// Every weight formula in the samplers is normalized afterwards, so the
/// constant never matters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxPrior {
    lower: Vec<f64>,
    upper: Vec<f64>,
    #[serde(default)]
    constraints: Vec<OrderConstraint>,
}

impl BoxPrior {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        Self::with_constraints(lower, upper, Vec::new())
    }

    pub fn with_constraints(
        lower: Vec<f64>,
        upper: Vec<f64>,
        constraints: Vec<OrderConstraint>,
    ) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidPrior("zero-dimensional box".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (k, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::InvalidPrior(format!(
                    "component {k}: bounds [{lo}, {hi}]"
                )));
            }
        }
        for c in &constraints {
            if c.lesser >= lower.len() || c.greater >= lower.len() || c.lesser == c.greater {
                return Err(Error::InvalidPrior(format!(
                    "constraint {} <= {} out of range",
                    c.lesser, c.greater
                )));
            }
        }
        Ok(Self {
            lower,
            upper,
            constraints,
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn constraints(&self) -> &[OrderConstraint] {
        &self.constraints
    }

    fn feasible(&self, theta: &[f64]) -> bool {
        let in_box = theta
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (lo, hi))| x >= lo && x <= hi);
        in_box
            && self
                .constraints
                .iter()
                .all(|c| theta[c.lesser] <= theta[c.greater])
    }

    /// Unnormalized density: 1 inside the feasible region, 0 outside.
    pub fn density(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: theta.len(),
            });
        }
        Ok(if self.feasible(theta) { 1.0 } else { 0.0 })
    }

    /// Shorthand for `density(theta) > 0` on a vector of known dimension.
    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim() && self.feasible(theta)
    }

    /// Draws from the box and rejects until all constraints hold.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let mut theta = vec![0.0; self.dim()];
        for _ in 0..PRIOR_RETRY_CAP {
            for (k, x) in theta.iter_mut().enumerate() {
                let (lo, hi) = (self.lower[k], self.upper[k]);
                *x = if hi > lo { rng.random_range(lo..hi) } else { lo };
            }
            if self.feasible(&theta) {
                return Ok(theta);
            }
        }
        Err(Error::UnsatisfiablePrior {
            attempts: PRIOR_RETRY_CAP,
        })
    }
}
