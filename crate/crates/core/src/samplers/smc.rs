use std::time::Instant;

use super::{prior_population, weighted_move, AbcProblem, CostClass, Model, SamplerReport, Stage};
use crate::error::Result;
use crate::kernels::GaussianKernel;
use crate::population::{multinomial_resample, ThresholdSchedule, WeightedPopulation};
use crate::rng::{stream, tag};

/// Sequential Monte Carlo ABC with an adaptive Gaussian random-walk kernel.
pub fn smc_abc<M: Model + ?Sized>(
    model: &M,
    problem: &AbcProblem,
    schedule: &ThresholdSchedule,
    particles: usize,
    seed: u64,
) -> Result<SamplerReport> {
    let started = Instant::now();
    let mut report = SamplerReport::start("smc", particles, schedule.epsilons().to_vec());
    let mut pop = prior_population(&problem.prior, particles, seed, tag::PRIOR)?;
    for (r, &eps) in schedule.epsilons().iter().enumerate() {
        let level = r + 1;
        pop = smc_level(model, problem, &pop, level, eps, seed, &mut report)?;
        report.populations.push(pop.clone());
    }
    report.finish(pop, started);
    Ok(report)
}

pub(super) fn stage_name(model: &(impl Model + ?Sized)) -> &'static str {
    match model.cost_class() {
        CostClass::ExactExpensive => "exact",
        CostClass::ApproximateCheap => "approximate",
    }
}

/// One level of the plain sampler: adapt, move, weight, resample.
pub(super) fn smc_level<M: Model + ?Sized>(
    model: &M,
    problem: &AbcProblem,
    prev: &WeightedPopulation,
    level: usize,
    eps: f64,
    seed: u64,
    report: &mut SamplerReport,
) -> Result<WeightedPopulation> {
    let kernel = GaussianKernel::adapt(prev.particles())?;
    let stage = Stage {
        level,
        name: stage_name(model),
        epsilon: eps,
        tag: tag::EXACT,
    };
    let (weighted, rec) = weighted_move(&stage, problem, model, prev, &kernel, prev.len(), seed)?;
    report.record(rec);
    multinomial_resample(&weighted, &mut stream(seed, &[tag::RESAMPLE, level as u64, 0]))
}
