//! Adaptive backward-Euler, centred-space solver for
//! ∂c/∂t = D ∂²c/∂x² + λ c f(c) with zero-flux boundaries.

use serde::{Deserialize, Serialize};

use crate::data::DataSet;
use crate::error::{Error, Result};
use crate::models::lattice::CrowdingFunction;

/// Relative tolerance of the inner fixed-point iteration.
pub const PICARD_TOL: f64 = 1e-10;
/// Fixed-point iterations allowed per attempted step.
pub const PICARD_CAP: usize = 100;
/// Smallest step allowed before the problem is declared too stiff.
pub const MIN_STEP: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeProblem {
    pub d: f64,
    pub lambda: f64,
    pub crowding: CrowdingFunction,
    pub c0: Vec<f64>,
    pub dx: f64,
    pub tol: f64,
    pub times: Vec<f64>,
}

impl PdeProblem {
    fn validate(&self) -> Result<()> {
        if !(self.d >= 0.0) || !(self.dx > 0.0) || !(self.tol > 0.0) || self.c0.len() < 3 {
            return Err(Error::Config(format!(
                "invalid PDE problem: D = {}, dx = {}, tol = {}, {} nodes",
                self.d,
                self.dx,
                self.tol,
                self.c0.len()
            )));
        }
        if self.times.windows(2).any(|w| w[1] < w[0]) || self.times.first().is_some_and(|&t| t < 0.0) {
            return Err(Error::Config("output times must be increasing and non-negative".into()));
        }
        Ok(())
    }

    fn reaction(&self, c: f64) -> f64 {
        self.lambda * c * self.crowding.raw(c)
    }

    /// Semi-discrete right-hand side at interior nodes; boundary entries are
    /// copied from their inner neighbours.
    fn rate(&self, c: &[f64]) -> Vec<f64> {
        let n = c.len();
        let k = self.d / (self.dx * self.dx);
        let mut r = vec![0.0; n];
        for i in 1..n - 1 {
            r[i] = k * (c[i + 1] - 2.0 * c[i] + c[i - 1]) + self.reaction(c[i]);
        }
        r[0] = r[1];
        r[n - 1] = r[n - 2];
        r
    }
}

/// Solves the tridiagonal system with sub-diagonal `a`, diagonal `b`,
/// super-diagonal `c` and right-hand side `d` (Thomas algorithm).
pub fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    let mut denom = b[0];
    if denom == 0.0 {
        return Err(Error::Numeric("zero pivot in tridiagonal solve".into()));
    }
    cp[0] = c[0] / denom;
    dp[0] = d[0] / denom;
    for i in 1..n {
        denom = b[i] - a[i] * cp[i - 1];
        if denom == 0.0 {
            return Err(Error::Numeric("zero pivot in tridiagonal solve".into()));
        }
        cp[i] = if i + 1 < n { c[i] / denom } else { 0.0 };
        dp[i] = (d[i] - a[i] * dp[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    Ok(x)
}

/// Outcome of one implicit step attempt.
enum Implicit {
    Converged(Vec<f64>),
    Stalled,
}

fn implicit_step(p: &PdeProblem, c: &[f64], dt: f64) -> Result<Implicit> {
    let n = c.len();
    let r = p.d * dt / (p.dx * p.dx);
    let (mut a, mut b, mut up) = (vec![-r; n], vec![1.0 + 2.0 * r; n], vec![-r; n]);
    (a[0], b[0], up[0]) = (0.0, 1.0, -1.0);
    (a[n - 1], b[n - 1], up[n - 1]) = (-1.0, 1.0, 0.0);

    // Forward Euler starting guess.
    let rate = p.rate(c);
    let mut guess: Vec<f64> = c.iter().zip(&rate).map(|(x, v)| x + dt * v).collect();
    guess[0] = guess[1];
    guess[n - 1] = guess[n - 2];

    let mut rhs = vec![0.0; n];
    for _ in 0..PICARD_CAP {
        for i in 1..n - 1 {
            rhs[i] = c[i] + dt * p.reaction(guess[i]);
        }
        let next = thomas(&a, &b, &up, &rhs)?;
        let diff = next
            .iter()
            .zip(&guess)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        let scale = next.iter().map(|x| x.abs()).fold(1.0, f64::max);
        if next.iter().any(|x| !x.is_finite()) {
            return Ok(Implicit::Stalled);
        }
        guess = next;
        if diff <= PICARD_TOL * scale {
            return Ok(Implicit::Converged(guess));
        }
    }
    Ok(Implicit::Stalled)
}

/// Returns the N × T matrix of nodal values at each output time.
///
/// The truncation error of a step is (Δt/2)·max|(dc/dt)^{j+1} − (dc/dt)^j|
/// with backward-difference rates; the step is accepted when it is at most
/// `tol` and rescaled by s = 0.9√(tol/ε). A step whose fixed-point iteration
/// does not converge is retried at half the size.
pub fn btcs_solve(p: &PdeProblem) -> Result<DataSet> {
    p.validate()?;
    let n = p.c0.len();
    let mut c = p.c0.clone();
    let mut prev_rate = p.rate(&c);
    let mut dt = 0.25 * p.dx * p.dx / p.d.max(f64::EPSILON);
    let mut t = 0.0f64;
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(p.times.len());
    for &target in &p.times {
        while t < target {
            let step = dt.min(target - t);
            let next = match implicit_step(p, &c, step)? {
                Implicit::Converged(v) => v,
                Implicit::Stalled => {
                    dt = 0.5 * step;
                    if dt < MIN_STEP {
                        return Err(Error::Solver(format!(
                            "fixed-point iteration failed to converge at t = {t}"
                        )));
                    }
                    continue;
                }
            };
            let rate: Vec<f64> = next.iter().zip(&c).map(|(x, y)| (x - y) / step).collect();
            let err = 0.5
                * step
                * rate[1..n - 1]
                    .iter()
                    .zip(&prev_rate[1..n - 1])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
            let s = if err > 0.0 {
                (0.9 * (p.tol / err).sqrt()).clamp(0.1, 4.0)
            } else {
                4.0
            };
            if err <= p.tol {
                debug_assert!(err <= p.tol);
                t = if step == target - t { target } else { t + step };
                c = next;
                prev_rate = rate;
            }
            dt = s * step;
            if dt < MIN_STEP {
                return Err(Error::Solver(format!(
                    "step size {dt:e} underflow at t = {t}; problem too stiff"
                )));
            }
        }
        cols.push(c.clone());
    }
    let t_len = cols.len();
    let mut values = vec![0.0; n * t_len];
    for (k, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            values[i * t_len + k] = *v;
        }
    }
    DataSet::matrix(n, t_len, values)
}

/// Σ_{i=2}^{N−1} c_i dx, the quantity the zero-flux scheme conserves when λ = 0.
pub fn interior_mass(c: &[f64], dx: f64) -> f64 {
    c[1..c.len() - 1].iter().sum::<f64>() * dx
}
