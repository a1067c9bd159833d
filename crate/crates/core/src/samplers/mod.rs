//! ABC samplers generic over a model-simulation interface.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{DataSet, Discrepancy};
use crate::error::{Error, Result};
use crate::kernels::GaussianKernel;
use crate::population::{Categorical, WeightedPopulation};
use crate::prior::BoxPrior;
use crate::rng::{stream, SimRng};

mod mm;
mod pc;
mod rejection;
mod smc;

pub use mm::{mm_smc_abc, MmConfig};
pub use pc::pc_smc_abc;
pub use rejection::abc_rejection;
pub use smc::smc_abc;

/// Proposal attempts allowed per particle per stage.
pub const ATTEMPT_CAP: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostClass {
    ExactExpensive,
    ApproximateCheap,
}

/// A stochastic (or deterministic) forward model. `simulate` must be a pure
/// function of its parameter and random stream.
pub trait Model: Sync {
    fn simulate(&self, theta: &[f64], rng: &mut SimRng) -> Result<DataSet>;
    fn cost_class(&self) -> CostClass;
}

impl<T: Model + ?Sized> Model for &T {
    fn simulate(&self, theta: &[f64], rng: &mut SimRng) -> Result<DataSet> {
        (**self).simulate(theta, rng)
    }

    fn cost_class(&self) -> CostClass {
        (**self).cost_class()
    }
}

/// Wraps a closure as a [`Model`].
pub struct FnModel<F> {
    f: F,
    class: CostClass,
}

impl<F> FnModel<F>
where
    F: Fn(&[f64], &mut SimRng) -> Result<DataSet> + Sync,
{
    pub fn new(class: CostClass, f: F) -> Self {
        Self { f, class }
    }
}

impl<F> Model for FnModel<F>
where
    F: Fn(&[f64], &mut SimRng) -> Result<DataSet> + Sync,
{
    fn simulate(&self, theta: &[f64], rng: &mut SimRng) -> Result<DataSet> {
        (self.f)(theta, rng)
    }

    fn cost_class(&self) -> CostClass {
        self.class
    }
}

/// Observed data, prior and discrepancy shared by every stage of a run.
#[derive(Debug, Clone)]
pub struct AbcProblem {
    pub prior: BoxPrior,
    pub data: DataSet,
    pub metric: Discrepancy,
}

impl AbcProblem {
    pub fn new(prior: BoxPrior, data: DataSet, metric: Discrepancy) -> Self {
        Self {
            prior,
            data,
            metric,
        }
    }
}

/// Book-keeping for one accept/reject stage of one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: usize,
    pub epsilon: f64,
    pub stage: String,
    pub model: CostClass,
    pub accepted: usize,
    pub attempts: u64,
    pub simulations: u64,
    pub prior_rejections: u64,
    pub ess: f64,
    pub max_discrepancy: f64,
}

impl LevelRecord {
    pub fn acceptance_rate(&self) -> f64 {
        if self.simulations == 0 {
            0.0
        } else {
            self.accepted as f64 / self.simulations as f64
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplerReport {
    pub method: String,
    pub particles: usize,
    pub epsilons: Vec<f64>,
    pub exact_sim_count: u64,
    pub approx_sim_count: u64,
    pub wall_time: f64,
    pub posterior_mean: Vec<f64>,
    pub posterior_std: Vec<f64>,
    pub levels: Vec<LevelRecord>,
    #[serde(skip)]
    pub populations: Vec<WeightedPopulation>,
    #[serde(skip)]
    pub population: Option<WeightedPopulation>,
}

impl SamplerReport {
    fn start(method: &str, particles: usize, epsilons: Vec<f64>) -> Self {
        Self {
            method: method.to_string(),
            particles,
            epsilons,
            exact_sim_count: 0,
            approx_sim_count: 0,
            wall_time: 0.0,
            posterior_mean: Vec::new(),
            posterior_std: Vec::new(),
            levels: Vec::new(),
            populations: Vec::new(),
            population: None,
        }
    }

    fn record(&mut self, rec: LevelRecord) {
        match rec.model {
            CostClass::ExactExpensive => self.exact_sim_count += rec.simulations,
            CostClass::ApproximateCheap => self.approx_sim_count += rec.simulations,
        }
        self.levels.push(rec);
    }

    fn finish(&mut self, pop: WeightedPopulation, started: Instant) {
        self.wall_time = started.elapsed().as_secs_f64();
        self.posterior_mean = pop.mean();
        self.posterior_std = pop.std_dev();
        self.population = Some(pop);
    }

    /// The final population. Present on every report returned by a sampler.
    pub fn final_population(&self) -> &WeightedPopulation {
        self.population
            .as_ref()
            .expect("sampler reports always carry a final population")
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }
}

/// p(θ) / Σ_j w_j K(θ | θ_j), evaluated in log space.
pub fn importance_weight(
    theta: &[f64],
    prev: &WeightedPopulation,
    kernel: &GaussianKernel,
    prior: &BoxPrior,
) -> Result<f64> {
    Ok(log_importance_weight(theta, prev, kernel, prior)?.exp())
}

fn log_importance_weight(
    theta: &[f64],
    prev: &WeightedPopulation,
    kernel: &GaussianKernel,
    prior: &BoxPrior,
) -> Result<f64> {
    let p = prior.density(theta)?;
    if p <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let total = prev.total_weight();
    let mut max = f64::NEG_INFINITY;
    let terms: Vec<f64> = prev
        .particles()
        .iter()
        .zip(prev.weights())
        .map(|(c, &w)| {
            let t = if w > 0.0 {
                (w / total).ln() + kernel.log_density(theta, c)
            } else {
                f64::NEG_INFINITY
            };
            max = max.max(t);
            t
        })
        .collect();
    if !max.is_finite() {
        return Err(Error::Numeric(
            "importance weight denominator vanished".into(),
        ));
    }
    let lse = max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln();
    Ok(p.ln() - lse)
}

/// Turns log weights into finite non-negative weights summing to 1.
fn normalize_log_weights(logw: &[f64]) -> Result<Vec<f64>> {
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::DegeneratePopulation("all importance weights zero".into()));
    }
    let w: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
    let s: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / s).collect())
}

/// How a stage proposes candidate parameters.
enum Proposal<'a> {
    Prior,
    Perturb {
        base: &'a WeightedPopulation,
        picker: Categorical,
        kernel: &'a GaussianKernel,
    },
}

struct Accepted {
    theta: Vec<f64>,
    distance: f64,
    attempts: u64,
    simulations: u64,
    prior_rejections: u64,
}

struct StageOutput {
    particles: Vec<Vec<f64>>,
    record: LevelRecord,
}

struct Stage {
    level: usize,
    name: &'static str,
    epsilon: f64,
    tag: u64,
}

impl Stage {
    /// Runs the Repeat-Until loop for `count` particles in parallel, each on
    /// its own random stream keyed by (seed, tag, level, particle).
    fn run<M: Model + ?Sized>(
        &self,
        problem: &AbcProblem,
        model: &M,
        proposal: &Proposal<'_>,
        count: usize,
        seed: u64,
    ) -> Result<StageOutput> {
        let results: Vec<Accepted> = (0..count)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(seed, &[self.tag, self.level as u64, i as u64]);
                self.one_particle(problem, model, proposal, i, &mut rng)
            })
            .collect::<Result<_>>()?;
        let mut record = LevelRecord {
            level: self.level,
            epsilon: self.epsilon,
            stage: self.name.to_string(),
            model: model.cost_class(),
            accepted: results.len(),
            attempts: 0,
            simulations: 0,
            prior_rejections: 0,
            ess: results.len() as f64,
            max_discrepancy: 0.0,
        };
        let mut particles = Vec::with_capacity(results.len());
        for a in results {
            debug_assert!(a.distance <= self.epsilon);
            record.attempts += a.attempts;
            record.simulations += a.simulations;
            record.prior_rejections += a.prior_rejections;
            record.max_discrepancy = record.max_discrepancy.max(a.distance);
            particles.push(a.theta);
        }
        Ok(StageOutput { particles, record })
    }

    fn one_particle<M: Model + ?Sized>(
        &self,
        problem: &AbcProblem,
        model: &M,
        proposal: &Proposal<'_>,
        index: usize,
        rng: &mut SimRng,
    ) -> Result<Accepted> {
        let mut simulations = 0;
        let mut prior_rejections = 0;
        for attempt in 1..=ATTEMPT_CAP {
            let theta = match proposal {
                Proposal::Prior => problem.prior.sample(rng)?,
                Proposal::Perturb {
                    base,
                    picker,
                    kernel,
                } => {
                    let j = picker.sample(rng);
                    let t = kernel.sample(&base.particles()[j], rng)?;
                    if !problem.prior.contains(&t) {
                        prior_rejections += 1;
                        continue;
                    }
                    t
                }
            };
            simulations += 1;
            // A deterministic solver that cannot integrate θ produces no data
            // to compare; the proposal is rejected like a distant one.
            let sim = match model.simulate(&theta, rng) {
                Err(Error::Solver(_)) => continue,
                other => other?,
            };
            let distance = problem.metric.distance(&problem.data, &sim)?;
            if distance <= self.epsilon {
                return Ok(Accepted {
                    theta,
                    distance,
                    attempts: attempt,
                    simulations,
                    prior_rejections,
                });
            }
        }
        Err(Error::AttemptCap {
            level: self.level,
            stage: self.name,
            particle: index,
            attempts: ATTEMPT_CAP,
        })
    }
}

/// Proposes from `base` through `kernel`, accepts at ε and weights each
/// accepted particle by p(θ)/Σ w K.
fn weighted_move<M: Model + ?Sized>(
    stage: &Stage,
    problem: &AbcProblem,
    model: &M,
    base: &WeightedPopulation,
    kernel: &GaussianKernel,
    count: usize,
    seed: u64,
) -> Result<(WeightedPopulation, LevelRecord)> {
    let proposal = Proposal::Perturb {
        base,
        picker: Categorical::new(base.weights())?,
        kernel,
    };
    let out = stage.run(problem, model, &proposal, count, seed)?;
    let logw: Vec<f64> = out
        .particles
        .par_iter()
        .map(|t| log_importance_weight(t, base, kernel, &problem.prior))
        .collect::<Result<_>>()?;
    let weights = normalize_log_weights(&logw)?;
    let pop = WeightedPopulation::new(out.particles, weights, stage.level, stage.epsilon)?;
    let mut record = out.record;
    record.ess = pop.ess();
    Ok((pop, record))
}

/// M particles drawn from the prior with uniform weights (level 0).
fn prior_population(prior: &BoxPrior, count: usize, seed: u64, tag: u64) -> Result<WeightedPopulation> {
    let particles = (0..count)
        .map(|i| prior.sample(&mut stream(seed, &[tag, 0, i as u64])))
        .collect::<Result<Vec<_>>>()?;
    WeightedPopulation::uniform(particles, 0, f64::INFINITY)
}
