use std::time::Instant;

use super::{prior_population, weighted_move, AbcProblem, Model, SamplerReport, Stage};
use crate::error::Result;
use crate::kernels::GaussianKernel;
use crate::population::{multinomial_resample, ThresholdSchedule};
use crate::rng::{stream, tag};

/// Preconditioned SMC-ABC. Each level first moves the population with the
/// approximate model, then corrects it with the exact model using the
/// preconditioned population as the proposal. The correction kernel bridges
/// the preconditioned population and the previous exact population, so a
/// biased approximation widens the proposal instead of starving the tails.
pub fn pc_smc_abc<E, A>(
    exact: &E,
    approx: &A,
    problem: &AbcProblem,
    schedule: &ThresholdSchedule,
    particles: usize,
    seed: u64,
) -> Result<SamplerReport>
where
    E: Model + ?Sized,
    A: Model + ?Sized,
{
    let started = Instant::now();
    let mut report = SamplerReport::start("pc-smc", particles, schedule.epsilons().to_vec());
    let mut pop = prior_population(&problem.prior, particles, seed, tag::PRIOR)?;
    for (r, &eps) in schedule.epsilons().iter().enumerate() {
        let level = r + 1;
        let k1 = GaussianKernel::adapt(pop.particles())?;
        let stage1 = Stage {
            level,
            name: "precondition",
            epsilon: eps,
            tag: tag::PRECONDITION,
        };
        let (pre, rec) = weighted_move(&stage1, problem, approx, &pop, &k1, particles, seed)?;
        report.record(rec);

        let k2 = GaussianKernel::bridge(pre.particles(), pop.particles())?;
        let stage2 = Stage {
            level,
            name: "correct",
            epsilon: eps,
            tag: tag::EXACT,
        };
        let (post, rec) = weighted_move(&stage2, problem, exact, &pre, &k2, particles, seed)?;
        report.record(rec);

        pop = multinomial_resample(&post, &mut stream(seed, &[tag::RESAMPLE, level as u64, 0]))?;
        report.populations.push(pop.clone());
    }
    report.finish(pop, started);
    Ok(report)
}
