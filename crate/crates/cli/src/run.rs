//! Binds models, samplers and outputs into the experiments.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use smcabc::models::lattice::{
    init_lattice, simulate_growth, CrowdingFunction, InitSpec, LatticeModel,
    LatticeTheta, StepParams,
};
use smcabc::models::ou::{
    ou_euler_maruyama, ou_transient_params, OuModel, OuParams, OuSimulator, OuSummaryKind, OuTheta,
};
use smcabc::rng::{stream, tag};
use smcabc::samplers::FnModel;
use smcabc::solvers::{logistic_rhs, rkf45_solve, weak_allee_rhs, AlleeOdeModel, FisherKppModel};
use smcabc::{
    abc_rejection, mm_smc_abc, pc_smc_abc, smc_abc, AbcProblem, BoxPrior, CostClass, DataSet,
    Discrepancy, Error, MmConfig, Model, OrderConstraint, Result, SamplerReport,
    ThresholdSchedule,
};

use crate::config::{CrowdingKind, ExperimentConfig, ExperimentKind, Method, Target};

/// Everything a sampler needs for one inference problem.
pub struct Setup {
    pub problem: AbcProblem,
    pub exact: Box<dyn Model>,
    pub approx: Box<dyn Model>,
    pub truth: Vec<f64>,
    pub names: Vec<String>,
    /// Observation times of the data, when it is a time course.
    pub times: Option<Vec<f64>>,
}

pub fn target_of(cfg: &ExperimentConfig) -> Target {
    match cfg.experiment {
        ExperimentKind::OuInfer => Target::Ou,
        ExperimentKind::AlleeInfer => Target::Allee,
        ExperimentKind::ScratchInfer => Target::Scratch,
        ExperimentKind::ForwardsSim => cfg.target,
        ExperimentKind::AlphaBench => cfg.bench.target,
    }
}

fn ou_base(cfg: &ExperimentConfig) -> OuParams {
    let o = &cfg.ou;
    OuParams {
        mu: o.mu,
        gamma: o.gamma,
        sigma: 0.0,
        x0: o.x0,
        t_end: o.t_end,
        dt: o.dt,
        n: o.n,
    }
    .with_diffusivity(o.d)
}

fn lattice_model(cfg: &ExperimentConfig, target: Target) -> LatticeModel {
    let l = &cfg.lattice;
    let (init, theta) = match target {
        Target::Scratch => (
            InitSpec::Scratch {
                p_out: l.p_out,
                first: l.scratch_first,
                last: l.scratch_last,
            },
            LatticeTheta::Scratch,
        ),
        _ => (InitSpec::Uniform { p: l.init_p }, LatticeTheta::Allee),
    };
    LatticeModel {
        ni: l.ni,
        nj: l.nj,
        delta: l.delta,
        tau: l.tau,
        init,
        theta,
        pm: l.pm,
        obs_steps: l.obs_steps(),
        placement: l.placement,
    }
}

fn prior(cfg: &ExperimentConfig, dim: usize, constraints: Vec<OrderConstraint>) -> Result<BoxPrior> {
    if cfg.prior.lower.len() != dim {
        return Err(Error::Config(format!(
            "prior has {} components; this experiment infers {dim}",
            cfg.prior.lower.len()
        )));
    }
    BoxPrior::with_constraints(cfg.prior.lower.clone(), cfg.prior.upper.clone(), constraints)
}

/// Builds the model pair, prior and observed data for `target`. Observed data
/// comes from the generative parameters on the `DATA` stream of the seed.
pub fn setup(cfg: &ExperimentConfig, target: Target) -> Result<Setup> {
    cfg.validate()?;
    let mut data_rng = stream(cfg.seed, &[tag::DATA]);
    let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    match target {
        Target::Toy => {
            let dim = cfg.prior.lower.len();
            let truth: Vec<f64> = cfg
                .prior
                .lower
                .iter()
                .zip(&cfg.prior.upper)
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            let bias = cfg.bench.toy_bias;
            let exact = FnModel::new(CostClass::ExactExpensive, |t: &[f64], _: &mut _| {
                Ok(DataSet::Series(t.to_vec()))
            });
            let approx = FnModel::new(CostClass::ApproximateCheap, move |t: &[f64], _: &mut _| {
                Ok(DataSet::Series(t.iter().map(|x| x + bias).collect()))
            });
            Ok(Setup {
                problem: AbcProblem::new(
                    prior(cfg, dim, vec![])?,
                    DataSet::Series(truth.clone()),
                    Discrepancy::Euclidean,
                ),
                exact: Box::new(exact),
                approx: Box::new(approx),
                truth,
                names: (0..dim).map(|k| format!("theta{k}")).collect(),
                times: None,
            })
        }
        Target::Ou => {
            let base = ou_base(cfg);
            let (theta, summary, truth, names) = if cfg.ou.infer_mu {
                (OuTheta::MuD, OuSummaryKind::MeanStd, vec![cfg.ou.mu, cfg.ou.d], names(&["mu", "D"]))
            } else {
                (OuTheta::D, OuSummaryKind::Std, vec![cfg.ou.d], names(&["D"]))
            };
            let model = |simulator| OuModel {
                base,
                theta,
                summary,
                simulator,
            };
            let raw = model(cfg.ou.data).raw(&truth, &mut data_rng)?;
            Ok(Setup {
                problem: AbcProblem::new(
                    prior(cfg, truth.len(), vec![])?,
                    summary.apply(&raw)?,
                    Discrepancy::Euclidean,
                ),
                exact: Box::new(model(OuSimulator::EulerMaruyama)),
                approx: Box::new(model(OuSimulator::Stationary)),
                truth,
                names,
                times: None,
            })
        }
        Target::Allee => {
            let l = &cfg.lattice;
            let exact = lattice_model(cfg, target);
            let truth = vec![l.lambda, l.a, l.k];
            let data = exact.simulate(&truth, &mut data_rng)?;
            let approx = AlleeOdeModel {
                c0: l.init_p,
                times: l.obs_times(),
                tol: cfg.solver.ode_tol,
            };
            Ok(Setup {
                problem: AbcProblem::new(
                    prior(cfg, 3, vec![OrderConstraint { lesser: 1, greater: 2 }])?,
                    data,
                    Discrepancy::Euclidean,
                ),
                exact: Box::new(exact),
                approx: Box::new(approx),
                truth,
                names: names(&["lambda", "A", "K"]),
                times: Some(l.obs_times()),
            })
        }
        Target::Scratch => {
            let l = &cfg.lattice;
            let exact = lattice_model(cfg, target);
            let truth = vec![l.lambda, l.d, l.k];
            let data = exact.simulate(&truth, &mut data_rng)?;
            let approx = FisherKppModel::scratch(
                l.ni,
                l.p_out,
                l.scratch_first,
                l.scratch_last,
                l.delta,
                l.obs_times(),
                cfg.solver.pde_tol,
            );
            Ok(Setup {
                problem: AbcProblem::new(prior(cfg, 3, vec![])?, data, Discrepancy::Frobenius),
                exact: Box::new(exact),
                approx: Box::new(approx),
                truth,
                names: names(&["lambda", "D", "K"]),
                times: Some(l.obs_times()),
            })
        }
    }
}

pub fn run_method(
    method: Method,
    s: &Setup,
    schedule: &ThresholdSchedule,
    particles: usize,
    alpha: f64,
    seed: u64,
) -> Result<SamplerReport> {
    let (exact, approx) = (s.exact.as_ref(), s.approx.as_ref());
    match method {
        Method::Smc => smc_abc(exact, &s.problem, schedule, particles, seed),
        Method::PcSmc => pc_smc_abc(exact, approx, &s.problem, schedule, particles, seed),
        Method::MmSmc => mm_smc_abc(
            exact,
            approx,
            &s.problem,
            schedule,
            particles,
            MmConfig::new(alpha)?,
            seed,
        ),
        Method::Rejection => abc_rejection(exact, &s.problem, schedule.last(), particles, seed),
    }
}

#[derive(Serialize)]
struct ReportDocument<'a> {
    experiment: ExperimentKind,
    seed: u64,
    parameters: &'a [String],
    truth: &'a [f64],
    report: &'a SamplerReport,
}

pub struct Outcome {
    pub setup: Setup,
    pub report: SamplerReport,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Runs the configured inference experiment and writes the observed data,
/// one population CSV per level, the final population and `report.json`
/// under `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome> {
    let target = match cfg.experiment {
        ExperimentKind::OuInfer | ExperimentKind::AlleeInfer | ExperimentKind::ScratchInfer => {
            target_of(cfg)
        }
        other => {
            return Err(Error::Config(format!("{other:?} is not an inference experiment")));
        }
    };
    let s = setup(cfg, target)?;
    let schedule = cfg.schedule.build()?;
    let report = run_method(cfg.method, &s, &schedule, cfg.particles, cfg.alpha, cfg.seed)?;

    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join("config.toml"), cfg.to_toml()?)?;
    s.problem
        .data
        .write_csv(create(&cfg.out.join("data.csv"))?, s.times.as_deref())?;
    for pop in &report.populations {
        let path = cfg.out.join(format!("population_level{}.csv", pop.level));
        pop.write_csv(create(&path)?, &s.names)?;
    }
    report
        .final_population()
        .write_csv(create(&cfg.out.join("population_final.csv"))?, &s.names)?;
    let doc = ReportDocument {
        experiment: cfg.experiment,
        seed: cfg.seed,
        parameters: &s.names,
        truth: &s.truth,
        report: &report,
    };
    let json = serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(cfg.out.join("report.json"), json)?;
    Ok(Outcome { setup: s, report })
}

/// Single realization, ensemble average and continuum solution of a
/// forwards run.
#[derive(Debug, Clone)]
pub struct Forwards {
    pub single: DataSet,
    pub mean: DataSet,
    pub continuum: DataSet,
}

impl Forwards {
    /// max |ensemble mean − continuum|.
    pub fn sup_gap(&self) -> f64 {
        self.mean
            .values()
            .iter()
            .zip(self.continuum.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn ensemble_mean(runs: &[DataSet]) -> Result<DataSet> {
    let (rows, cols) = runs[0].shape();
    let mut acc = vec![0.0; rows * cols];
    for r in runs {
        for (a, v) in acc.iter_mut().zip(r.values()) {
            *a += v / runs.len() as f64;
        }
    }
    match runs[0] {
        DataSet::Series(_) => Ok(DataSet::Series(acc)),
        DataSet::Matrix { .. } => DataSet::matrix(rows, cols, acc),
    }
}

/// Forwards simulation of the lattice model with its continuum limit, or of
/// the OU process with its analytic solution. For OU the "mean" and
/// "continuum" entries are (mean, variance) of the terminal values.
pub fn forwards(cfg: &ExperimentConfig, target: Target) -> Result<Forwards> {
    cfg.validate()?;
    let l = &cfg.lattice;
    match target {
        Target::Allee => {
            let crowding = match l.crowding {
                CrowdingKind::Logistic => CrowdingFunction::Logistic { k: l.k },
                CrowdingKind::WeakAllee => CrowdingFunction::WeakAllee { k: l.k, a: l.a },
            };
            let params = StepParams {
                pm: l.pm,
                pp: l.lambda * l.tau,
                crowding,
                placement: l.placement,
            };
            let runs = realizations(cfg, |rng| {
                let mut st = init_lattice(l.ni, l.nj, &InitSpec::Uniform { p: l.init_p }, l.delta, l.tau, rng)?;
                simulate_growth(&mut st, &params, &l.obs_steps(), rng)
            })?;
            let (lambda, k, a) = (l.lambda, l.k, l.a);
            let sol = match l.crowding {
                CrowdingKind::Logistic => {
                    rkf45_solve(|_, c| logistic_rhs(c, lambda, k), l.init_p, &l.obs_times(), cfg.solver.ode_tol)?
                }
                CrowdingKind::WeakAllee => rkf45_solve(
                    |_, c| weak_allee_rhs(c, lambda, k, a),
                    l.init_p,
                    &l.obs_times(),
                    cfg.solver.ode_tol,
                )?,
            };
            Ok(Forwards {
                mean: ensemble_mean(&runs)?,
                single: runs.into_iter().next().expect("ensemble is non-empty"),
                continuum: DataSet::Series(sol),
            })
        }
        Target::Scratch => {
            let model = lattice_model(cfg, target);
            let truth = [l.lambda, l.d, l.k];
            let params = model.step_params(&truth)?;
            let runs = realizations(cfg, |rng| model.run(&params, rng))?;
            let pde = FisherKppModel::scratch(
                l.ni,
                l.p_out,
                l.scratch_first,
                l.scratch_last,
                l.delta,
                l.obs_times(),
                cfg.solver.pde_tol,
            );
            Ok(Forwards {
                mean: ensemble_mean(&runs)?,
                single: runs.into_iter().next().expect("ensemble is non-empty"),
                continuum: pde.solve(&truth)?,
            })
        }
        Target::Ou => {
            let p = ou_base(cfg);
            let single = ou_euler_maruyama(&p, &mut stream(cfg.seed, &[tag::DATA]))?;
            let x = single.values();
            let m = x.iter().sum::<f64>() / x.len() as f64;
            let v = x.iter().map(|y| (y - m) * (y - m)).sum::<f64>() / (x.len() as f64 - 1.0).max(1.0);
            let (mean, var) = ou_transient_params(&p);
            Ok(Forwards {
                single,
                mean: DataSet::Series(vec![m, v]),
                continuum: DataSet::Series(vec![mean, var]),
            })
        }
        Target::Toy => Err(Error::Config("the toy model has no forwards simulation".into())),
    }
}

fn realizations<F>(cfg: &ExperimentConfig, run: F) -> Result<Vec<DataSet>>
where
    F: Fn(&mut smcabc::rng::SimRng) -> Result<DataSet> + Sync,
{
    (0..cfg.lattice.ensemble as u64)
        .into_par_iter()
        .map(|e| run(&mut stream(cfg.seed, &[tag::DATA, e])))
        .collect()
}

/// Runs [`forwards`] for `cfg.target` and writes `single.csv`,
/// `ensemble_mean.csv` and `continuum.csv` under `cfg.out`.
pub fn simulate_forwards(cfg: &ExperimentConfig) -> Result<Forwards> {
    let target = target_of(cfg);
    let out = forwards(cfg, target)?;
    fs::create_dir_all(&cfg.out)?;
    let times = match target {
        Target::Allee | Target::Scratch => Some(cfg.lattice.obs_times()),
        _ => None,
    };
    out.single.write_csv(create(&cfg.out.join("single.csv"))?, times.as_deref())?;
    out.mean.write_csv(create(&cfg.out.join("ensemble_mean.csv"))?, times.as_deref())?;
    let continuum_times = if target == Target::Ou { None } else { times.as_deref() };
    out.continuum
        .write_csv(create(&cfg.out.join("continuum.csv"))?, continuum_times)?;
    Ok(out)
}
