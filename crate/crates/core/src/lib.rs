//! Sequential Monte Carlo approximate Bayesian computation with
//! approximate-model acceleration.
//!
//! Three SMC-ABC variants share one particle-population machinery:
//! the plain sampler, a preconditioned sampler that screens proposals with a
//! cheap approximate model, and a moment-matching sampler that transports an
//! approximate-model population onto the moments of a small exact one.

pub mod data;
pub mod error;
pub mod kernels;
pub mod models;
pub mod moment;
pub mod population;
pub mod prior;
pub mod rng;
pub mod samplers;
pub mod solvers;

pub use data::{DataSet, Discrepancy};
pub use error::{Error, Result};
pub use kernels::GaussianKernel;
pub use population::{ThresholdSchedule, WeightedPopulation};
pub use prior::{BoxPrior, OrderConstraint};
pub use samplers::{
    abc_rejection, mm_smc_abc, pc_smc_abc, smc_abc, AbcProblem, CostClass, MmConfig, Model,
    SamplerReport,
};
