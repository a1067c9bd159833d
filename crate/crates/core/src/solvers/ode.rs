//! Runge–Kutta–Fehlberg 4(5) for scalar ODEs.

use crate::error::{Error, Result};

/// Tableau entries as exact fractions (numerator, denominator).
pub mod tableau {
    pub type Frac = (i64, i64);

    pub const C: [Frac; 6] = [(0, 1), (1, 4), (3, 8), (12, 13), (1, 1), (1, 2)];

    pub const A: [[Frac; 5]; 6] = [
        [(0, 1), (0, 1), (0, 1), (0, 1), (0, 1)],
        [(1, 4), (0, 1), (0, 1), (0, 1), (0, 1)],
        [(3, 32), (9, 32), (0, 1), (0, 1), (0, 1)],
        [(1932, 2197), (-7200, 2197), (7296, 2197), (0, 1), (0, 1)],
        [(439, 216), (-8, 1), (3680, 513), (-845, 4104), (0, 1)],
        [(-8, 27), (2, 1), (-3544, 2565), (1859, 4104), (-11, 40)],
    ];

    /// Fourth-order weights.
    pub const B4: [Frac; 6] = [(25, 216), (0, 1), (1408, 2565), (2197, 4104), (-1, 5), (0, 1)];

    /// Fifth-order weights.
    pub const B5: [Frac; 6] = [
        (16, 135),
        (0, 1),
        (6656, 12825),
        (28561, 56430),
        (-9, 50),
        (2, 55),
    ];

    pub(crate) const fn f(x: Frac) -> f64 {
        x.0 as f64 / x.1 as f64
    }
}

/// Smallest step allowed before the problem is declared too stiff.
pub const MIN_STEP: f64 = 1e-14;

const S_MIN: f64 = 0.1;
const S_MAX: f64 = 4.0;

/// Integrates dc/dt = h(t, c) from c(0) = c0 and returns c at each of
/// `times` (increasing, non-negative). Steps are accepted when the
/// embedded error |c4 − c5| ≤ tol and rescaled by s = (tol / 2ε)^{1/4}; the
/// solution advances with the fourth-order value.
pub fn rkf45_solve<H>(h: H, c0: f64, times: &[f64], tol: f64) -> Result<Vec<f64>>
where
    H: Fn(f64, f64) -> f64,
{
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance {tol} must be positive")));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::Config("output times must be increasing and non-negative".into()));
    }
    use tableau::{f, A, B4, B5, C};
    let t_end = times.last().copied().unwrap_or(0.0);
    let mut dt = if t_end > 0.0 { t_end / 1000.0 } else { 1.0 };
    let (mut t, mut c) = (0.0f64, c0);
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        while t < target {
            let step = dt.min(target - t);
            let mut k = [0.0f64; 6];
            for s in 0..6 {
                let mut y = c;
                for (r, a) in A[s].iter().enumerate().take(s) {
                    y += step * f(*a) * k[r];
                }
                k[s] = h(t + f(C[s]) * step, y);
            }
            let (mut c4, mut c5) = (c, c);
            for s in 0..6 {
                c4 += step * f(B4[s]) * k[s];
                c5 += step * f(B5[s]) * k[s];
            }
            if !c4.is_finite() || !c5.is_finite() {
                return Err(Error::Solver(format!("non-finite state at t = {t}")));
            }
            let err = (c4 - c5).abs();
            let s = if err > 0.0 {
                (tol / (2.0 * err)).powf(0.25).clamp(S_MIN, S_MAX)
            } else {
                S_MAX
            };
            if err <= tol {
                debug_assert!(err <= tol);
                t = if step == target - t { target } else { t + step };
                c = c4;
            }
            dt = s * step;
            if dt < MIN_STEP {
                return Err(Error::Solver(format!(
                    "step size {dt:e} underflow at t = {t}; problem too stiff"
                )));
            }
        }
        out.push(c);
    }
    Ok(out)
}

/// λ c (1 − c/K)((A + c)/K).
pub fn weak_allee_rhs(c: f64, lambda: f64, k: f64, a: f64) -> f64 {
    lambda * c * (1.0 - c / k) * ((a + c) / k)
}

/// λ c (1 − c/K).
pub fn logistic_rhs(c: f64, lambda: f64, k: f64) -> f64 {
    lambda * c * (1.0 - c / k)
}

/// Closed-form logistic solution K c0 e^{λt} / (K + c0 (e^{λt} − 1)).
pub fn logistic_exact(t: f64, c0: f64, lambda: f64, k: f64) -> f64 {
    let e = (lambda * t).exp();
    k * c0 * e / (k + c0 * (e - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_is_constant() {
        let out = rkf45_solve(|_, _| 0.0, 0.3, &[1.0, 10.0, 100.0], 1e-6).unwrap();
        assert_eq!(out, vec![0.3; 3]);
    }

    #[test]
    fn exponential_growth() {
        let out = rkf45_solve(|_, c| c, 1.0, &[1.0], 1e-10).unwrap();
        assert!((out[0] - 1f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn logistic_within_tolerance() {
        let (l, k, c0) = (1e-3, 5.0 / 6.0, 0.25);
        for tol in [1e-4, 1e-6, 1e-8] {
            let out = rkf45_solve(|_, c| logistic_rhs(c, l, k), c0, &[5000.0], tol).unwrap();
            let err = (out[0] - logistic_exact(5000.0, c0, l, k)).abs();
            assert!(err < 10.0 * tol, "tol {tol}: err {err}");
        }
    }

    #[test]
    fn output_times_include_zero() {
        let out = rkf45_solve(|_, c| -c, 2.0, &[0.0, 1.0], 1e-9).unwrap();
        assert_eq!(out[0], 2.0);
        assert!((out[1] - 2.0 * (-1f64).exp()).abs() < 1e-7);
    }

    #[test]
    fn weak_allee_values() {
        let k = 5.0 / 6.0;
        assert_eq!(weak_allee_rhs(k, 1e-3, k, 0.1), 0.0);
        assert_eq!(weak_allee_rhs(0.0, 1e-3, k, 0.1), 0.0);
        assert!((weak_allee_rhs(0.25, 1e-3, k, 0.1) - 7.35e-5).abs() < 1e-18);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(rkf45_solve(|_, c| c, 1.0, &[1.0], 0.0).is_err());
        assert!(rkf45_solve(|_, c| c, 1.0, &[2.0, 1.0], 1e-6).is_err());
    }

    #[test]
    fn stiff_blowup_errors() {
        let r = rkf45_solve(|_, c| c * c, 1.0, &[2.0], 1e-8);
        assert!(r.is_err());
    }
}
