//! Ornstein–Uhlenbeck process: Euler–Maruyama simulator, transient and
//! stationary Gaussian solutions, and the summary statistics used for ABC.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::DataSet;
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::samplers::{CostClass, Model};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuParams {
    pub mu: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub x0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub n: usize,
}

impl OuParams {
    /// γ=2, μ=1, σ=2√5 (D=10), x₀=10, T=1, Δt=0.01, N=1000.
    pub fn reference() -> Self {
        Self {
            mu: 1.0,
            gamma: 2.0,
            sigma: 20f64.sqrt(),
            x0: 10.0,
            t_end: 1.0,
            dt: 0.01,
            n: 1000,
        }
    }

    /// D = σ²/2.
    pub fn diffusivity(&self) -> f64 {
        0.5 * self.sigma * self.sigma
    }

    pub fn with_diffusivity(mut self, d: f64) -> Self {
        self.sigma = (2.0 * d.max(0.0)).sqrt();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.gamma >= 0.0
            && self.sigma >= 0.0
            && self.dt > 0.0
            && self.t_end >= 0.0
            && self.n >= 1
            && [self.mu, self.gamma, self.sigma, self.x0, self.t_end, self.dt]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid OU parameters {self:?}")))
        }
    }
}

/// N independent Euler–Maruyama paths from x₀ to T; returns the terminal
/// states. A final partial step is taken when T/Δt is not an integer.
pub fn ou_euler_maruyama(p: &OuParams, rng: &mut SimRng) -> Result<DataSet> {
    p.validate()?;
    let full = (p.t_end / p.dt + 1e-9).floor() as usize;
    let rest = p.t_end - full as f64 * p.dt;
    let rest = if rest > 1e-12 * p.dt.max(1.0) { rest } else { 0.0 };
    let (drift, noise) = (p.gamma * p.dt, p.sigma * p.dt.sqrt());
    let mut out = Vec::with_capacity(p.n);
    for _ in 0..p.n {
        let mut x = p.x0;
        for _ in 0..full {
            let xi: f64 = rng.sample(StandardNormal);
            x += drift * (p.mu - x) + noise * xi;
        }
        if rest > 0.0 {
            let xi: f64 = rng.sample(StandardNormal);
            x += p.gamma * rest * (p.mu - x) + p.sigma * rest.sqrt() * xi;
        }
        if !x.is_finite() {
            return Err(Error::Simulation(format!("OU path diverged with {p:?}")));
        }
        out.push(x);
    }
    Ok(DataSet::Series(out))
}

/// Mean μ+(x₀−μ)e^{−γT} and variance (σ²/2γ)(1−e^{−2γT}) of X_T.
pub fn ou_transient_params(p: &OuParams) -> (f64, f64) {
    let mean = p.mu + (p.x0 - p.mu) * (-p.gamma * p.t_end).exp();
    let var = if p.gamma > 0.0 {
        p.sigma * p.sigma / (2.0 * p.gamma) * (-(-2.0 * p.gamma * p.t_end).exp_m1())
    } else {
        p.sigma * p.sigma * p.t_end
    };
    (mean, var)
}

/// N exact draws of X_T from the transient Gaussian solution.
pub fn ou_transient_sample(p: &OuParams, rng: &mut SimRng) -> Result<DataSet> {
    p.validate()?;
    let (m, v) = ou_transient_params(p);
    Ok(gaussian_draws(m, v.sqrt(), p.n, rng))
}

/// N draws from the stationary distribution N(μ, σ²/2γ).
pub fn ou_stationary_sample(p: &OuParams, rng: &mut SimRng) -> Result<DataSet> {
    p.validate()?;
    if !(p.gamma > 0.0) {
        return Err(Error::Config("stationary distribution needs gamma > 0".into()));
    }
    let sd = p.sigma / (2.0 * p.gamma).sqrt();
    Ok(gaussian_draws(p.mu, sd, p.n, rng))
}

fn gaussian_draws(mean: f64, sd: f64, n: usize, rng: &mut SimRng) -> DataSet {
    DataSet::Series(
        (0..n)
            .map(|_| mean + sd * rng.sample::<f64, _>(StandardNormal))
            .collect(),
    )
}

/// (sample mean, unbiased sample standard deviation).
pub fn ou_summary(data: &DataSet) -> Result<[f64; 2]> {
    let v = data.values();
    if v.len() < 2 {
        return Err(Error::DegeneratePopulation(format!(
            "{} values; summary needs at least 2",
            v.len()
        )));
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let ss = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    Ok([mean, (ss / (n - 1.0)).sqrt()])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OuSimulator {
    EulerMaruyama,
    Transient,
    Stationary,
}

/// Which parameters θ holds. Everything else comes from the base parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OuTheta {
    /// θ = (D)
    D,
    /// θ = (μ, D)
    MuD,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OuSummaryKind {
    MeanStd,
    Std,
}

impl OuSummaryKind {
    pub fn apply(&self, data: &DataSet) -> Result<DataSet> {
        let [m, s] = ou_summary(data)?;
        Ok(DataSet::Series(match self {
            OuSummaryKind::MeanStd => vec![m, s],
            OuSummaryKind::Std => vec![s],
        }))
    }
}

/// OU simulator exposed to the samplers; returns the summary of N values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuModel {
    pub base: OuParams,
    pub theta: OuTheta,
    pub summary: OuSummaryKind,
    pub simulator: OuSimulator,
}

impl OuModel {
    pub fn params(&self, theta: &[f64]) -> Result<OuParams> {
        match (self.theta, theta) {
            (OuTheta::D, [d]) => Ok(self.base.with_diffusivity(*d)),
            (OuTheta::MuD, [mu, d]) => Ok(OuParams {
                mu: *mu,
                ..self.base.with_diffusivity(*d)
            }),
            (kind, _) => Err(Error::DimensionMismatch {
                expected: if kind == OuTheta::D { 1 } else { 2 },
                got: theta.len(),
            }),
        }
    }

    pub fn raw(&self, theta: &[f64], rng: &mut SimRng) -> Result<DataSet> {
        let p = self.params(theta)?;
        match self.simulator {
            OuSimulator::EulerMaruyama => ou_euler_maruyama(&p, rng),
            OuSimulator::Transient => ou_transient_sample(&p, rng),
            OuSimulator::Stationary => ou_stationary_sample(&p, rng),
        }
    }
}

impl Model for OuModel {
    fn simulate(&self, theta: &[f64], rng: &mut SimRng) -> Result<DataSet> {
        self.summary.apply(&self.raw(theta, rng)?)
    }

    fn cost_class(&self) -> CostClass {
        match self.simulator {
            OuSimulator::EulerMaruyama => CostClass::ExactExpensive,
            _ => CostClass::ApproximateCheap,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn sample_mean_var(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
    }

    #[test]
    fn no_dynamics() {
        let p = OuParams {
            gamma: 0.0,
            sigma: 0.0,
            n: 5,
            ..OuParams::reference()
        };
        let d = ou_euler_maruyama(&p, &mut stream(1, &[])).unwrap();
        assert!(d.values().iter().all(|&x| x == 10.0));
    }

    #[test]
    fn deterministic_decay() {
        let p = OuParams {
            sigma: 0.0,
            dt: 1e-3,
            n: 1,
            ..OuParams::reference()
        };
        let x = ou_euler_maruyama(&p, &mut stream(2, &[])).unwrap().values()[0];
        let exact = 1.0 + 9.0 * (-2.0f64).exp();
        assert!((x - exact).abs() < 10.0 * p.dt * 9.0);
        assert!((x - 2.2180).abs() < 0.01);
    }

    #[test]
    fn partial_final_step() {
        let p = OuParams {
            sigma: 0.0,
            dt: 0.3,
            n: 1,
            ..OuParams::reference()
        };
        // Steps 0.3, 0.3, 0.3, 0.1.
        let mut x: f64 = 10.0;
        for h in [0.3, 0.3, 0.3, 0.1] {
            x += 2.0 * h * (1.0 - x);
        }
        let got = ou_euler_maruyama(&p, &mut stream(3, &[])).unwrap().values()[0];
        assert!((got - x).abs() < 1e-12);
    }

    #[test]
    fn transient_values() {
        let p = OuParams::reference();
        let (m, v) = ou_transient_params(&p);
        assert!((m - 2.2180).abs() < 1e-4);
        assert!((v - 4.9084).abs() < 1e-4);
        let (m0, v0) = ou_transient_params(&OuParams { t_end: 0.0, ..p });
        assert_eq!((m0, v0), (10.0, 0.0));
        let (_, vinf) = ou_transient_params(&OuParams { t_end: 10.0, ..p });
        assert!((vinf - 5.0).abs() < 1e-6);
    }

    #[test]
    fn transient_variance_monotone_and_bounded() {
        let p = OuParams::reference();
        let mut prev = 0.0;
        for k in 1..200 {
            let (_, v) = ou_transient_params(&OuParams {
                t_end: k as f64 * 0.05,
                ..p
            });
            assert!(v >= prev && v <= 5.0 + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn euler_maruyama_matches_transient_solution() {
        let p = OuParams {
            dt: 1e-3,
            n: 100_000,
            ..OuParams::reference()
        };
        let d = ou_euler_maruyama(&p, &mut stream(4, &[])).unwrap();
        let (m, v) = sample_mean_var(d.values());
        let (em, ev) = ou_transient_params(&p);
        let n = p.n as f64;
        assert!((m - em).abs() < 4.0 * (ev / n).sqrt(), "{m} {em}");
        assert!((v - ev).abs() < 4.0 * ev * (2.0 / (n - 1.0)).sqrt(), "{v} {ev}");
    }

    #[test]
    fn stationary_draws() {
        let p = OuParams {
            n: 100_000,
            ..OuParams::reference()
        };
        let (_, v) = sample_mean_var(ou_stationary_sample(&p, &mut stream(5, &[])).unwrap().values());
        assert!((4.9..=5.1).contains(&v));
        let flat = ou_stationary_sample(&OuParams { sigma: 0.0, ..p }, &mut stream(5, &[])).unwrap();
        assert!(flat.values().iter().all(|&x| x == 1.0));
        assert!((p.diffusivity() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn stationary_and_transient_agree_at_long_times() {
        let p = OuParams {
            t_end: 10.0,
            ..OuParams::reference()
        };
        let (_, v) = ou_transient_params(&p);
        assert!((v - p.sigma * p.sigma / (2.0 * p.gamma)).abs() < 1e-6);
    }

    #[test]
    fn summary_examples() {
        assert_eq!(ou_summary(&DataSet::Series(vec![3.0; 4])).unwrap(), [3.0, 0.0]);
        let [m, s] = ou_summary(&DataSet::Series(vec![0.0, 2.0])).unwrap();
        assert_eq!(m, 1.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
        assert!(ou_summary(&DataSet::Series(vec![1.0])).is_err());
    }

    #[test]
    fn model_is_pure_in_stream() {
        let model = OuModel {
            base: OuParams::reference(),
            theta: OuTheta::D,
            summary: OuSummaryKind::MeanStd,
            simulator: OuSimulator::EulerMaruyama,
        };
        let a = model.simulate(&[10.0], &mut stream(9, &[1])).unwrap();
        let b = model.simulate(&[10.0], &mut stream(9, &[1])).unwrap();
        assert_eq!(a, b);
        assert!(model.simulate(&[1.0, 2.0], &mut stream(9, &[1])).is_err());
    }
}
