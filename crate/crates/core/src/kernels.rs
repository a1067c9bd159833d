//! Adaptive multivariate Gaussian proposal kernels.
//!
//! The kernel for level r is a mean-zero Gaussian perturbation whose
//! covariance is twice the unbiased sample covariance of the level r-1
//! particles.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Relative pivot size below which a factorization is treated as singular
/// and retried with diagonal jitter.
const SINGULAR_PIVOT: f64 = 1e-14;

/// Jitter scale: `JITTER * max(max diag, 1)` is added to the diagonal.
pub const JITTER: f64 = 1e-10;

/// Plain Cholesky factorization `S = L Lᵀ` with `L` lower triangular.
///
/// Only the lower triangle of `s` is read. Fails on the first non-positive
/// pivot.
pub fn cholesky(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = s.nrows();
    if s.ncols() != n {
        return Err(Error::ShapeMismatch {
            lhs: (s.nrows(), s.ncols()),
            rhs: (n, n),
        });
    }
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = s[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut v = s[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / ljj;
        }
    }
    Ok(l)
}

/// Factorizes a symmetric positive semi-definite matrix, adding diagonal
/// jitter when the plain factorization fails or is numerically singular.
///
/// Returns the (possibly jittered) matrix actually factorized together with
/// its factor.
pub fn factor_with_jitter(s: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let max_diag = s.diagonal().iter().cloned().fold(0.0f64, f64::max);
    if let Ok(l) = cholesky(s) {
        let min_pivot_sq = l.diagonal().iter().map(|d| d * d).fold(f64::INFINITY, f64::min);
        if min_pivot_sq > SINGULAR_PIVOT * max_diag {
            return Ok((s.clone(), l));
        }
    }
    let mut jittered = s.clone();
    let eps = JITTER * max_diag.max(1.0);
    for i in 0..s.nrows() {
        jittered[(i, i)] += eps;
    }
    let l = cholesky(&jittered)?;
    Ok((jittered, l))
}

/// Unbiased sample mean and covariance (denominator M-1).
pub fn sample_mean_cov(particles: &[Vec<f64>]) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let m = particles.len();
    if m < 2 {
        return Err(Error::DegeneratePopulation(format!(
            "{m} particles; covariance needs at least 2"
        )));
    }
    let n = particles[0].len();
    let mut mean = DVector::<f64>::zeros(n);
    for p in particles {
        if p.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: p.len(),
            });
        }
        for k in 0..n {
            mean[k] += p[k];
        }
    }
    mean /= m as f64;
    let mut cov = DMatrix::<f64>::zeros(n, n);
    for p in particles {
        for i in 0..n {
            let di = p[i] - mean[i];
            for j in 0..=i {
                cov[(i, j)] += di * (p[j] - mean[j]);
            }
        }
    }
    for i in 0..n {
        for j in 0..=i {
            let v = cov[(i, j)] / (m - 1) as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok((mean, cov))
}

/// Mean-zero multivariate Gaussian perturbation kernel.
#[derive(Debug, Clone)]
pub struct GaussianKernel {
    cov: DMatrix<f64>,
    chol: DMatrix<f64>,
    log_norm_const: f64,
}

impl GaussianKernel {
    /// Builds a kernel from a covariance matrix, jittering if singular.
    pub fn from_covariance(cov: DMatrix<f64>) -> Result<Self> {
        let (cov, chol) = factor_with_jitter(&cov)?;
        let n = cov.nrows();
        let log_det: f64 = 2.0 * chol.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(Self {
            cov,
            chol,
            log_norm_const: -0.5 * (n as f64 * LN_2PI + log_det),
        })
    }

    /// Σ = 2/(M-1) Σᵢ (θᵢ − μ)(θᵢ − μ)ᵀ over the (unweighted) particles.
    pub fn adapt(particles: &[Vec<f64>]) -> Result<Self> {
        let (_, cov) = sample_mean_cov(particles)?;
        Self::from_covariance(cov * 2.0)
    }

    /// Kernel for perturbing `base` particles toward a target represented by
    /// `target`: the covariance of the difference of independent draws from
    /// the two sets, Σ_b + Σ_t + (μ_b − μ_t)(μ_b − μ_t)ᵀ. Equal to [`adapt`]
    /// when both sets have the same moments.
    ///
    /// [`adapt`]: GaussianKernel::adapt
    pub fn bridge(base: &[Vec<f64>], target: &[Vec<f64>]) -> Result<Self> {
        let (mb, cb) = sample_mean_cov(base)?;
        let (mt, ct) = sample_mean_cov(target)?;
        if mb.len() != mt.len() {
            return Err(Error::DimensionMismatch {
                expected: mb.len(),
                got: mt.len(),
            });
        }
        let d = mb - mt;
        Self::from_covariance(cb + ct + &d * d.transpose())
    }

    pub fn dim(&self) -> usize {
        self.cov.nrows()
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn log_norm_const(&self) -> f64 {
        self.log_norm_const
    }

    /// Draws `center + L z` with `z` standard normal.
    pub fn sample<R: Rng + ?Sized>(&self, center: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        let n = self.dim();
        if center.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: center.len(),
            });
        }
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let mut out = center.to_vec();
        for i in 0..n {
            for j in 0..=i {
                out[i] += self.chol[(i, j)] * z[j];
            }
        }
        Ok(out)
    }

    /// log K(theta | center).
    pub fn log_density(&self, theta: &[f64], center: &[f64]) -> f64 {
        let n = self.dim();
        debug_assert_eq!(theta.len(), n);
        debug_assert_eq!(center.len(), n);
        let mut buf = [0.0f64; 16];
        let mut heap;
        let y: &mut [f64] = if n <= 16 {
            &mut buf[..n]
        } else {
            heap = vec![0.0; n];
            &mut heap
        };
        // Forward substitution L y = theta - center.
        let mut quad = 0.0;
        for i in 0..n {
            let mut v = theta[i] - center[i];
            for j in 0..i {
                v -= self.chol[(i, j)] * y[j];
            }
            y[i] = v / self.chol[(i, i)];
            quad += y[i] * y[i];
        }
        self.log_norm_const - 0.5 * quad
    }

    pub fn density(&self, theta: &[f64], center: &[f64]) -> Result<f64> {
        let n = self.dim();
        if theta.len() != n || center.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: theta.len().min(center.len()),
            });
        }
        Ok(self.log_density(theta, center).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use num_rational::Rational64;

    fn m2(a: f64, b: f64, c: f64, d: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[a, b, c, d])
    }

    #[test]
    fn cholesky_identity() {
        let i = DMatrix::<f64>::identity(3, 3);
        assert_eq!(cholesky(&i).unwrap(), i);
    }

    #[test]
    fn cholesky_two_by_two() {
        let s = m2(4.0, 2.0, 2.0, 3.0);
        let l = cholesky(&s).unwrap();
        let expected = m2(2.0, 0.0, 1.0, 2f64.sqrt());
        assert!((&l - &expected).norm() < 1e-15);
        assert!((&l * l.transpose() - &s).norm() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        assert!(matches!(
            cholesky(&m2(1.0, 2.0, 2.0, 1.0)),
            Err(Error::NotPositiveDefinite { .. })
        ));
        // Jitter cannot rescue a negative eigenvalue either.
        assert!(factor_with_jitter(&m2(1.0, 2.0, 2.0, 1.0)).is_err());
    }

    #[test]
    fn adapt_1d_pair() {
        let k = GaussianKernel::adapt(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(k.covariance()[(0, 0)], 4.0);
    }

    #[test]
    fn adapt_is_twice_unbiased_covariance_in_rational_arithmetic() {
        let pts: Vec<[i64; 2]> = vec![[1, 4], [3, -2], [0, 0], [5, 7], [-2, 3]];
        let m = pts.len() as i64;
        let r = |x: i64| Rational64::from_integer(x);
        let mean = [
            pts.iter().map(|p| r(p[0])).sum::<Rational64>() / r(m),
            pts.iter().map(|p| r(p[1])).sum::<Rational64>() / r(m),
        ];
        let k = GaussianKernel::adapt(
            &pts.iter().map(|p| vec![p[0] as f64, p[1] as f64]).collect::<Vec<_>>(),
        )
        .unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let exact: Rational64 = pts
                    .iter()
                    .map(|p| (r(p[i]) - mean[i]) * (r(p[j]) - mean[j]))
                    .sum::<Rational64>()
                    * r(2)
                    / r(m - 1);
                let want = *exact.numer() as f64 / *exact.denom() as f64;
                assert!((k.covariance()[(i, j)] - want).abs() <= 1e-14 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn identical_particles_get_jittered_kernel() {
        let pts = vec![vec![0.5, 0.5]; 10];
        let k = GaussianKernel::adapt(&pts).unwrap();
        let c = k.covariance();
        assert!(c[(0, 0)] > 0.0 && c[(0, 0)] <= 1e-9);
        let mut rng = stream(1, &[]);
        let x = k.sample(&[0.5, 0.5], &mut rng).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-3 && (x[1] - 0.5).abs() < 1e-3);
    }

    #[test]
    fn collinear_particles_factor_after_jitter() {
        let pts: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let (_, raw) = sample_mean_cov(&pts).unwrap();
        assert!(raw.determinant().abs() < 1e-8 * raw.norm());
        let k = GaussianKernel::adapt(&pts).unwrap();
        let l = k.cholesky_factor();
        assert!(l.diagonal().iter().all(|d| *d > 0.0));
        let recon = l * l.transpose();
        assert!((&recon - k.covariance()).norm() / k.covariance().norm() < 1e-10);
    }

    #[test]
    fn standard_normal_mode_density() {
        let k = GaussianKernel::from_covariance(DMatrix::identity(1, 1)).unwrap();
        let d = k.density(&[0.3], &[0.3]).unwrap();
        assert!((d - 0.398_942_280_401_432_7).abs() < 1e-12);
    }

    #[test]
    fn density_matches_analytic_inverse() {
        let s = m2(4.0, 2.0, 2.0, 3.0);
        let k = GaussianKernel::from_covariance(s).unwrap();
        // det = 8, inverse = [[3,-2],[-2,4]]/8
        let (dx, dy) = (1.0f64, 1.0f64);
        let quad = (3.0 * dx * dx - 4.0 * dx * dy + 4.0 * dy * dy) / 8.0;
        let want = (-0.5 * quad).exp() / (2.0 * std::f64::consts::PI * 8f64.sqrt());
        let got = k.density(&[1.0, 1.0], &[0.0, 0.0]).unwrap();
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    fn density_is_symmetric() {
        let k = GaussianKernel::from_covariance(m2(4.0, 2.0, 2.0, 3.0)).unwrap();
        let mut rng = stream(2, &[]);
        for _ in 0..100 {
            let a = [rng.random::<f64>() * 5.0, rng.random::<f64>() * 5.0];
            let b = [rng.random::<f64>() * 5.0, rng.random::<f64>() * 5.0];
            assert_eq!(k.log_density(&a, &b), k.log_density(&b, &a));
        }
    }

    #[test]
    fn density_integrates_to_one() {
        // 1-D, sigma = 2, trapezoid over +-6 sigma.
        let k1 = GaussianKernel::from_covariance(DMatrix::from_element(1, 1, 4.0)).unwrap();
        let n = 4001;
        let h = 24.0 / (n - 1) as f64;
        let mut s = 0.0;
        for i in 0..n {
            let x = -12.0 + i as f64 * h;
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            s += w * k1.density(&[x], &[0.0]).unwrap();
        }
        assert!((s * h - 1.0).abs() < 1e-3);

        // 2-D over a box of +-6 marginal sd.
        let k2 = GaussianKernel::from_covariance(m2(4.0, 2.0, 2.0, 3.0)).unwrap();
        let (sx, sy) = (2.0, 3f64.sqrt());
        let n = 401;
        let (hx, hy) = (12.0 * sx / (n - 1) as f64, 12.0 * sy / (n - 1) as f64);
        let mut s = 0.0;
        for i in 0..n {
            let wi = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            for j in 0..n {
                let wj = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                let x = -6.0 * sx + i as f64 * hx;
                let y = -6.0 * sy + j as f64 * hy;
                s += wi * wj * k2.log_density(&[x, y], &[0.0, 0.0]).exp();
            }
        }
        assert!((s * hx * hy - 1.0).abs() < 1e-3);
    }

    #[test]
    fn bridge_of_identical_sets_is_adapt() {
        let pts = vec![vec![0.0, 1.0], vec![2.0, -1.0], vec![1.0, 3.0], vec![4.0, 0.5]];
        let a = GaussianKernel::adapt(&pts).unwrap();
        let b = GaussianKernel::bridge(&pts, &pts).unwrap();
        assert!((a.covariance() - b.covariance()).abs().max() < 1e-12);
    }

    #[test]
    fn bridge_adds_mean_offset() {
        // Base {0, 2} (mean 1, var 2), target {5, 7} (mean 6, var 2): 2 + 2 + 25.
        let k = GaussianKernel::bridge(&[vec![0.0], vec![2.0]], &[vec![5.0], vec![7.0]]).unwrap();
        assert!((k.covariance()[(0, 0)] - 29.0).abs() < 1e-12);
        assert!(GaussianKernel::bridge(&[vec![0.0], vec![2.0]], &[vec![0.0, 1.0], vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn sample_variance_1d() {
        let k = GaussianKernel::from_covariance(DMatrix::from_element(1, 1, 4.0)).unwrap();
        let mut rng = stream(3, &[]);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| k.sample(&[0.0], &mut rng).unwrap()[0]).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((3.9..=4.1).contains(&var), "{var}");
        assert!(mean.abs() < 4.0 * 2.0 / (n as f64).sqrt());
    }

    #[test]
    fn sample_covariance_2d() {
        let s = m2(4.0, 2.0, 2.0, 3.0);
        let k = GaussianKernel::from_covariance(s.clone()).unwrap();
        let mut rng = stream(4, &[]);
        let n = 100_000;
        let xs: Vec<Vec<f64>> = (0..n).map(|_| k.sample(&[1.0, -1.0], &mut rng).unwrap()).collect();
        let (mean, cov) = sample_mean_cov(&xs).unwrap();
        for i in 0..2 {
            assert!((mean[i] - [1.0, -1.0][i]).abs() < 4.0 * (s[(i, i)] / n as f64).sqrt());
            for j in 0..2 {
                // se of a covariance entry: sqrt((s_ii s_jj + s_ij^2)/n)
                let se = ((s[(i, i)] * s[(j, j)] + s[(i, j)].powi(2)) / n as f64).sqrt();
                assert!((cov[(i, j)] - s[(i, j)]).abs() < 4.0 * se, "{i}{j}");
            }
        }
    }
}
