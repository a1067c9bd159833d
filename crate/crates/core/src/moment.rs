//! Moment estimation, the Cholesky moment-matching transform and the
//! empirical raw-moment error metric.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernels::{factor_with_jitter, sample_mean_cov};

/// Mean, covariance and Cholesky factor of a particle set.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSummary {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub chol: DMatrix<f64>,
}

impl MomentSummary {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::ShapeMismatch {
                lhs: (cov.nrows(), cov.ncols()),
                rhs: (mean.len(), mean.len()),
            });
        }
        let (cov, chol) = factor_with_jitter(&cov)?;
        Ok(Self { mean, cov, chol })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Sample mean (1/M) and unbiased covariance (1/(M-1)) of a particle set.
pub fn empirical_moments(particles: &[Vec<f64>]) -> Result<MomentSummary> {
    let (mean, cov) = sample_mean_cov(particles)?;
    MomentSummary::new(mean, cov)
}

/// θ' = L_tgt [ L_src⁻¹ (θ − μ_src) ] + μ_tgt for every particle.
pub fn moment_match_transform(
    source: &[Vec<f64>],
    src: &MomentSummary,
    tgt: &MomentSummary,
) -> Result<Vec<Vec<f64>>> {
    let n = src.dim();
    if tgt.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: tgt.dim(),
        });
    }
    if src.chol.diagonal().iter().any(|d| !(d.abs() > 0.0)) {
        return Err(Error::NotPositiveDefinite {
            pivot: 0,
            value: 0.0,
        });
    }
    // A = L_tgt L_src⁻¹, computed once.
    let src_inv = src
        .chol
        .clone()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::Numeric("singular source factor".into()))?;
    let a = &tgt.chol * src_inv;
    source
        .iter()
        .map(|p| {
            if p.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: p.len(),
                });
            }
            let centered = DVector::from_iterator(n, p.iter().zip(src.mean.iter()).map(|(x, m)| x - m));
            let out = &a * centered + &tgt.mean;
            Ok(out.iter().cloned().collect())
        })
        .collect()
}

/// All multi-indices b ∈ ℕⁿ with |b| = m, in graded lexicographic order
/// (first component largest first).
pub fn multi_indices(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, remaining: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n - 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=remaining).rev() {
            prefix.push(first);
            rec(n, remaining - first, prefix, out);
            prefix.pop();
        }
    }
    if n == 0 {
        return if m == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    rec(n, m, &mut Vec::with_capacity(n), &mut out);
    out
}

/// |S_m| = C(m + n − 1, n − 1).
pub fn multi_index_count(n: usize, m: usize) -> u64 {
    if n == 0 {
        return u64::from(m == 0);
    }
    let (top, k) = ((m + n - 1) as u64, (n - 1) as u64);
    let k = k.min(top - k);
    (0..k).fold(1u64, |acc, i| acc * (top - i) / (i + 1))
}

/// (1/M) Σᵢ Πₖ x_{i,k}^{b_k}.
pub fn raw_moment(samples: &[Vec<f64>], b: &[usize]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::DegeneratePopulation("empty sample set".into()));
    }
    let mut acc = 0.0;
    for x in samples {
        if x.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: b.len(),
                got: x.len(),
            });
        }
        acc += x
            .iter()
            .zip(b)
            .map(|(v, &e)| v.powi(e as i32))
            .product::<f64>();
    }
    Ok(acc / samples.len() as f64)
}

/// Reference raw moments below this magnitude make the relative error
/// undefined.
pub const MOMENT_GUARD: f64 = 1e-12;

/// P-th order empirical moment-matching distance
/// Σ_{m=0}^{P} Σ_{b∈S_m} |S_m|^{-m} ((μ̂(X)^b − μ̂(Y)^b) / μ̂(X)^b)².
pub fn moment_error(x: &[Vec<f64>], y: &[Vec<f64>], order: usize) -> Result<f64> {
    let n = x
        .first()
        .map(|p| p.len())
        .ok_or_else(|| Error::DegeneratePopulation("empty reference set".into()))?;
    if let Some(p) = y.first() {
        if p.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: p.len(),
            });
        }
    }
    let mut total = 0.0;
    for m in 0..=order {
        let size = multi_index_count(n, m) as f64;
        let weight = size.powi(m as i32).recip();
        for b in multi_indices(n, m) {
            let mx = raw_moment(x, &b)?;
            if mx.abs() < MOMENT_GUARD {
                return Err(Error::VanishingMoment { index: b, value: mx });
            }
            let my = raw_moment(y, &b)?;
            total += weight * ((mx - my) / mx).powi(2);
        }
    }
    Ok(total)
}
