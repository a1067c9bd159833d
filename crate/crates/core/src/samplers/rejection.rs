use std::time::Instant;

use super::{AbcProblem, Model, Proposal, SamplerReport, Stage};
use crate::error::{Error, Result};
use crate::population::WeightedPopulation;
use crate::rng::tag;

/// Plain ABC rejection: M independent prior draws, each accepted at ε with
/// its own simulation. Returned as a single-level report with uniform weights.
pub fn abc_rejection<M: Model + ?Sized>(
    model: &M,
    problem: &AbcProblem,
    epsilon: f64,
    particles: usize,
    seed: u64,
) -> Result<SamplerReport> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidSchedule(format!("threshold {epsilon} must be positive")));
    }
    let started = Instant::now();
    let mut report = SamplerReport::start("rejection", particles, vec![epsilon]);
    let stage = Stage {
        level: 1,
        name: "rejection",
        epsilon,
        tag: tag::EXACT,
    };
    let out = stage.run(problem, model, &Proposal::Prior, particles, seed)?;
    report.record(out.record);
    let pop = WeightedPopulation::uniform(out.particles, 1, epsilon)?;
    report.populations.push(pop.clone());
    report.finish(pop, started);
    Ok(report)
}
