//! Experiment configuration: a flat TOML document with one table per model.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use smcabc::models::lattice::PlacementRule;
use smcabc::models::ou::OuSimulator;
use smcabc::{Error, Result, ThresholdSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    OuInfer,
    AlleeInfer,
    ScratchInfer,
    ForwardsSim,
    AlphaBench,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Smc,
    PcSmc,
    MmSmc,
    Rejection,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Smc => "smc",
            Method::PcSmc => "pc-smc",
            Method::MmSmc => "mm-smc",
            Method::Rejection => "rejection",
        }
    }
}

/// Which model a forwards run or an α-bench targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    /// Identity model on the unit square with a shifted approximation.
    Toy,
    Ou,
    Allee,
    Scratch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Desk,
    Paper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    /// Threshold of the prior level; ε_r = ε_{r-1}/2 for r = 1..=levels.
    pub eps0: f64,
    pub levels: usize,
    /// Explicit thresholds; overrides `eps0`/`levels` when non-empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epsilons: Vec<f64>,
}

impl ScheduleSpec {
    pub fn halving(eps0: f64, levels: usize) -> Self {
        Self {
            eps0,
            levels,
            epsilons: Vec::new(),
        }
    }

    pub fn build(&self) -> Result<ThresholdSchedule> {
        if self.epsilons.is_empty() {
            ThresholdSchedule::halving(self.eps0, self.levels)
        } else {
            ThresholdSchedule::new(self.epsilons.clone())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuSection {
    pub mu: f64,
    pub gamma: f64,
    /// Generative D = σ²/2.
    pub d: f64,
    pub x0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub n: usize,
    /// Infer θ = (μ, D) instead of θ = D.
    pub infer_mu: bool,
    /// How the observed data is generated.
    pub data: OuSimulator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrowdingKind {
    Logistic,
    WeakAllee,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub ni: usize,
    pub nj: usize,
    pub delta: f64,
    pub tau: f64,
    /// Generative proliferation rate; Pp = λτ.
    pub lambda: f64,
    /// Motility probability for growth runs.
    pub pm: f64,
    /// Generative diffusivity for scratch runs; Pm = 4Dτ/δ².
    pub d: f64,
    pub k: f64,
    pub a: f64,
    /// Crowding of growth forwards runs; growth inference always uses the
    /// weak Allee form.
    pub crowding: CrowdingKind,
    /// Initial occupancy of growth runs.
    pub init_p: f64,
    /// Initial occupancy outside the scratch.
    pub p_out: f64,
    pub scratch_first: usize,
    pub scratch_last: usize,
    /// Observations at k·obs_interval steps of τ, k = 1..=obs_count.
    pub obs_interval: u64,
    pub obs_count: usize,
    /// Realizations averaged by forwards runs.
    pub ensemble: usize,
    pub placement: PlacementRule,
}

impl LatticeSection {
    pub fn obs_steps(&self) -> Vec<u64> {
        (1..=self.obs_count as u64).map(|k| k * self.obs_interval).collect()
    }

    pub fn obs_times(&self) -> Vec<f64> {
        self.obs_steps().iter().map(|&k| k as f64 * self.tau).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub ode_tol: f64,
    pub pde_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    pub target: Target,
    pub alpha0: f64,
    pub count: usize,
    pub reps: usize,
    pub order: usize,
    pub reference_particles: usize,
    /// Population CSV to use as the reference instead of running SMC-ABC.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<PathBuf>,
    /// Shift of the toy approximate model.
    pub toy_bias: f64,
}

impl BenchSection {
    pub fn alphas(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.alpha0 / 2f64.powi(k as i32)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub method: Method,
    /// Model for forwards runs.
    pub target: Target,
    pub particles: usize,
    pub alpha: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub schedule: ScheduleSpec,
    pub prior: PriorSpec,
    pub ou: OuSection,
    pub lattice: LatticeSection,
    pub solver: SolverSection,
    pub bench: BenchSection,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.particles < 2 {
            return fail(format!("particles = {} (need at least 2)", self.particles));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return fail(format!("alpha = {} outside (0, 1]", self.alpha));
        }
        if self.prior.lower.len() != self.prior.upper.len() {
            return fail("prior bounds differ in length".into());
        }
        self.schedule.build()?;
        let l = &self.lattice;
        if l.ni == 0 || l.nj == 0 || l.obs_interval == 0 || l.ensemble == 0 {
            return fail("lattice dimensions, obs_interval and ensemble must be positive".into());
        }
        if l.scratch_first > l.scratch_last || l.scratch_last >= l.ni {
            return fail(format!(
                "scratch columns {}..={} invalid for ni = {}",
                l.scratch_first, l.scratch_last, l.ni
            ));
        }
        if self.bench.count == 0 || self.bench.reps == 0 || self.bench.reference_particles < 2 {
            return fail("bench count, reps and reference_particles must be positive".into());
        }
        if !(self.solver.ode_tol > 0.0 && self.solver.pde_tol > 0.0) {
            return fail("solver tolerances must be positive".into());
        }
        Ok(())
    }

    /// Forwards-run preset for `target`, sharing the lattice and observation
    /// settings of that target's inference preset.
    pub fn forwards_preset(target: Target, preset: Preset) -> Self {
        let kind = match target {
            Target::Scratch => ExperimentKind::ScratchInfer,
            Target::Ou => ExperimentKind::OuInfer,
            _ => ExperimentKind::AlleeInfer,
        };
        Self {
            experiment: ExperimentKind::ForwardsSim,
            target,
            ..Self::preset(kind, preset)
        }
    }

    /// Default configuration of an experiment at the given scale.
    pub fn preset(kind: ExperimentKind, preset: Preset) -> Self {
        let paper = preset == Preset::Paper;
        let mut cfg = Self {
            experiment: kind,
            method: Method::Smc,
            target: Target::Allee,
            particles: if paper { 1000 } else { 500 },
            alpha: 0.1,
            seed: 1,
            out: PathBuf::from("out"),
            schedule: ScheduleSpec::halving(6.4, 4),
            prior: PriorSpec {
                lower: vec![0.0],
                upper: vec![50.0],
            },
            ou: OuSection {
                mu: 1.0,
                gamma: 2.0,
                d: 10.0,
                x0: 10.0,
                t_end: 1.0,
                dt: 0.01,
                n: 1000,
                infer_mu: false,
                data: OuSimulator::Transient,
            },
            lattice: LatticeSection {
                ni: if paper { 80 } else { 20 },
                nj: if paper { 68 } else { 17 },
                delta: 1.0,
                tau: 1.0,
                lambda: 1e-3,
                pm: 0.0,
                d: 0.25,
                k: 5.0 / 6.0,
                a: 0.1,
                crowding: CrowdingKind::WeakAllee,
                init_p: 0.25,
                p_out: 1.0 / 3.0,
                scratch_first: if paper { 31 } else { 8 },
                scratch_last: if paper { 50 } else { 12 },
                obs_interval: 1000,
                obs_count: 10,
                ensemble: 20,
                placement: PlacementRule::default(),
            },
            solver: SolverSection {
                ode_tol: 1e-6,
                pde_tol: 1e-4,
            },
            bench: BenchSection {
                target: Target::Toy,
                alpha0: 0.8,
                count: 6,
                reps: if paper { 10 } else { 5 },
                order: 6,
                reference_particles: if paper { 1000 } else { 500 },
                reference: None,
                toy_bias: 0.05,
            },
        };
        match kind {
            ExperimentKind::OuInfer => {
                cfg.particles = 1000;
            }
            ExperimentKind::AlleeInfer | ExperimentKind::ForwardsSim => {
                cfg.prior = PriorSpec {
                    lower: vec![0.0, 0.0, 0.0],
                    upper: vec![0.005, 1.0, 1.0],
                };
                cfg.schedule = if paper {
                    ScheduleSpec::halving(4.0, 5)
                } else {
                    ScheduleSpec::halving(2.0, 4)
                };
            }
            ExperimentKind::ScratchInfer => {
                cfg.target = Target::Scratch;
                cfg.method = Method::MmSmc;
                cfg.prior = PriorSpec {
                    lower: vec![0.0, 0.0, 0.0],
                    upper: vec![0.008, 1.0, 1.0],
                };
                cfg.lattice.obs_interval = 300;
                if !paper {
                    cfg.lattice.obs_count = 5;
                }
                cfg.schedule = if paper {
                    ScheduleSpec::halving(64.0, 5)
                } else {
                    ScheduleSpec::halving(16.0, 4)
                };
            }
            ExperimentKind::AlphaBench => {
                cfg.method = Method::MmSmc;
                cfg.target = Target::Toy;
                cfg.prior = PriorSpec {
                    lower: vec![0.0, 0.0],
                    upper: vec![1.0, 1.0],
                };
                cfg.schedule = ScheduleSpec::halving(0.4, 3);
            }
        }
        cfg
    }
}
