//! Continuum-limit solvers and the approximate models built on them.

mod ode;
mod pde;

pub use ode::{logistic_exact, logistic_rhs, rkf45_solve, tableau, weak_allee_rhs};
pub use pde::{btcs_solve, interior_mass, thomas, PdeProblem};

use serde::{Deserialize, Serialize};

use crate::data::DataSet;
use crate::error::{Error, Result};
use crate::models::lattice::CrowdingFunction;
use crate::rng::SimRng;
use crate::samplers::{CostClass, Model};

/// Mean-field weak Allee growth, θ = (λ, A, K).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlleeOdeModel {
    pub c0: f64,
    pub times: Vec<f64>,
    pub tol: f64,
}

impl AlleeOdeModel {
    pub fn solve(&self, theta: &[f64]) -> Result<DataSet> {
        let [lambda, a, k] = three(theta)?;
        if !(k > 0.0) {
            return Err(Error::Config(format!("carrying capacity {k} must be positive")));
        }
        rkf45_solve(|_, c| weak_allee_rhs(c, lambda, k, a), self.c0, &self.times, self.tol)
            .map(DataSet::Series)
    }
}

impl Model for AlleeOdeModel {
    fn simulate(&self, theta: &[f64], _rng: &mut SimRng) -> Result<DataSet> {
        self.solve(theta)
    }

    fn cost_class(&self) -> CostClass {
        CostClass::ApproximateCheap
    }
}

/// Fisher–KPP continuum model of the scratch assay, θ = (λ, D, K).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherKppModel {
    pub c0: Vec<f64>,
    pub dx: f64,
    pub times: Vec<f64>,
    pub tol: f64,
}

impl FisherKppModel {
    /// Expected scratch initial profile: `p_out` outside columns
    /// `first..=last`, zero inside; nodes at the lattice column positions.
    pub fn scratch(ni: usize, p_out: f64, first: usize, last: usize, delta: f64, times: Vec<f64>, tol: f64) -> Self {
        Self {
            c0: (0..ni)
                .map(|i| if (first..=last).contains(&i) { 0.0 } else { p_out })
                .collect(),
            dx: delta * 3f64.sqrt() / 2.0,
            times,
            tol,
        }
    }

    pub fn solve(&self, theta: &[f64]) -> Result<DataSet> {
        let [lambda, d, k] = three(theta)?;
        if !(k > 0.0) {
            return Err(Error::Config(format!("carrying capacity {k} must be positive")));
        }
        btcs_solve(&PdeProblem {
            d,
            lambda,
            crowding: CrowdingFunction::Logistic { k },
            c0: self.c0.clone(),
            dx: self.dx,
            tol: self.tol,
            times: self.times.clone(),
        })
    }
}

/// Deterministic; the stream argument is ignored.
pub fn fisher_kpp_model(model: &FisherKppModel, theta: &[f64]) -> Result<DataSet> {
    model.solve(theta)
}

impl Model for FisherKppModel {
    fn simulate(&self, theta: &[f64], _rng: &mut SimRng) -> Result<DataSet> {
        self.solve(theta)
    }

    fn cost_class(&self) -> CostClass {
        CostClass::ApproximateCheap
    }
}

fn three(theta: &[f64]) -> Result<[f64; 3]> {
    theta.try_into().map_err(|_| Error::DimensionMismatch {
        expected: 3,
        got: theta.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_pde_matches_ode() {
        let times: Vec<f64> = (1..=10).map(|k| 1000.0 * k as f64).collect();
        let (lambda, k) = (1e-3, 5.0 / 6.0);
        let pde = FisherKppModel {
            c0: vec![0.25; 20],
            dx: 3f64.sqrt() / 2.0,
            times: times.clone(),
            tol: 1e-8,
        };
        let sol = pde.solve(&[lambda, 0.0, k]).unwrap();
        let ode = rkf45_solve(|_, c| logistic_rhs(c, lambda, k), 0.25, &times, 1e-10).unwrap();
        for (kk, want) in ode.iter().enumerate() {
            for i in 0..20 {
                assert!((sol.get(i, kk) - want).abs() < 1e-4, "{} {want}", sol.get(i, kk));
            }
        }
    }

    #[test]
    fn long_time_saturation() {
        let m = FisherKppModel::scratch(80, 1.0 / 3.0, 31, 50, 1.0, vec![4000.0], 1e-4);
        let sol = m.solve(&[8e-3, 0.25, 0.8]).unwrap();
        assert!(sol.values().iter().all(|v| (v - 0.8).abs() < 1e-3));
    }

    #[test]
    fn allee_model_output() {
        let m = AlleeOdeModel {
            c0: 0.25,
            times: vec![1000.0, 2000.0],
            tol: 1e-6,
        };
        let s = m.solve(&[1e-3, 0.1, 5.0 / 6.0]).unwrap();
        assert_eq!(s.shape(), (2, 1));
        assert!(s.values()[0] > 0.25 && s.values()[1] > s.values()[0]);
        assert!(m.solve(&[1e-3, 0.1]).is_err());
    }
}
