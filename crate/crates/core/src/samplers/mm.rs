use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::smc::smc_abc;
use super::{prior_population, weighted_move, AbcProblem, CostClass, LevelRecord, Model, SamplerReport, Stage};
use crate::error::{Error, Result};
use crate::kernels::GaussianKernel;
use crate::moment::{empirical_moments, moment_match_transform};
use crate::population::{resample_to, ThresholdSchedule, WeightedPopulation};
use crate::rng::{child_seed, stream, tag};

/// Split between exact-model particles (fraction α) and moment-matched
/// approximate-model particles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmConfig {
    pub alpha: f64,
}

impl MmConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Config(format!("alpha = {alpha} outside (0, 1]")));
        }
        Ok(Self { alpha })
    }

    /// M̂ = ⌈αM⌉.
    pub fn exact_count(&self, m: usize) -> usize {
        (self.alpha * m as f64 - 1e-9).ceil().max(0.0) as usize
    }

    /// M̃ = ⌊(1−α)M⌋.
    pub fn approx_count(&self, m: usize) -> usize {
        ((1.0 - self.alpha) * m as f64 + 1e-9).floor().max(0.0) as usize
    }
}

/// Moment-matching SMC-ABC.
pub fn mm_smc_abc<E, A>(
    exact: &E,
    approx: &A,
    problem: &AbcProblem,
    schedule: &ThresholdSchedule,
    particles: usize,
    cfg: MmConfig,
    seed: u64,
) -> Result<SamplerReport>
where
    E: Model + ?Sized,
    A: Model + ?Sized,
{
    let cfg = MmConfig::new(cfg.alpha)?;
    let m_hat = cfg.exact_count(particles);
    let m_tilde = cfg.approx_count(particles);
    if m_hat < 2 {
        return Err(Error::Config(format!(
            "alpha = {} gives {m_hat} exact particles; at least 2 required",
            cfg.alpha
        )));
    }
    if m_tilde == 0 {
        let mut report = smc_abc(exact, problem, schedule, particles, seed)?;
        report.method = "mm-smc".into();
        return Ok(report);
    }
    if m_tilde == 1 {
        return Err(Error::Config(
            "a single approximate particle has no covariance; change alpha".into(),
        ));
    }

    let started = Instant::now();
    let mut report = SamplerReport::start("mm-smc", particles, schedule.epsilons().to_vec());
    let approx_seed = child_seed(&mut stream(seed, &[tag::APPROX]));
    let approx_run = smc_abc(approx, problem, schedule, m_tilde, approx_seed)?;
    for rec in &approx_run.levels {
        report.record(rec.clone());
    }

    let mut pop = prior_population(&problem.prior, particles, seed, tag::PRIOR)?;
    for (r, &eps) in schedule.epsilons().iter().enumerate() {
        let level = r + 1;
        let kernel = GaussianKernel::adapt(pop.particles())?;
        let stage = Stage {
            level,
            name: "exact",
            epsilon: eps,
            tag: tag::EXACT,
        };
        let (weighted, rec) = weighted_move(&stage, problem, exact, &pop, &kernel, m_hat, seed)?;
        report.record(rec);
        let exact_pop = resample_to(&weighted, m_hat, &mut stream(seed, &[tag::RESAMPLE, level as u64, 1]))?;

        let approx_pop = &approx_run.populations[r];
        let src = empirical_moments(approx_pop.particles())?;
        let tgt = empirical_moments(exact_pop.particles())?;
        let moved = moment_match_transform(approx_pop.particles(), &src, &tgt)?;

        // Exact subset carries mass M̂/M and the transformed subset M̃/M; both
        // are uniform within, so every particle gets 1/M unless the transform
        // pushed it outside the prior.
        let unit = 1.0 / particles as f64;
        let mut outside = 0u64;
        let mut all = exact_pop.into_particles();
        let mut weights = vec![unit; all.len()];
        for t in moved {
            let w = if problem.prior.contains(&t) {
                unit
            } else {
                outside += 1;
                0.0
            };
            weights.push(w);
            all.push(t);
        }
        report.levels.push(LevelRecord {
            level,
            epsilon: eps,
            stage: "transform".into(),
            model: CostClass::ApproximateCheap,
            accepted: m_tilde - outside as usize,
            attempts: m_tilde as u64,
            simulations: 0,
            prior_rejections: outside,
            ess: 0.0,
            max_discrepancy: approx_pop.epsilon,
        });
        let pooled = WeightedPopulation::new(all, weights, level, eps)?;
        pop = resample_to(&pooled, particles, &mut stream(seed, &[tag::RESAMPLE, level as u64, 0]))?;
        report.populations.push(pop.clone());
    }
    report.finish(pop, started);
    Ok(report)
}
