use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use smcabc_cli::{
    run_experiment, simulate_forwards, write_bench, ExperimentConfig, ExperimentKind, Method,
    Preset, Target,
};

#[derive(Parser)]
#[command(name = "smcabc", version, about = "SMC-ABC experiments with approximate-model acceleration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Forwards runs of a model and its continuum limit.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        target: Option<TargetArg>,
    },
    /// Posterior inference with one of the samplers.
    Infer {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        experiment: Option<TargetArg>,
        #[arg(long, value_enum)]
        method: Option<Method>,
    },
    /// Cost and moment error of MM-SMC-ABC over a halving sequence of α.
    BenchAlpha {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        target: Option<TargetArg>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "desk")]
    preset: Preset,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    Toy,
    Ou,
    Allee,
    Scratch,
}

impl From<TargetArg> for Target {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Toy => Target::Toy,
            TargetArg::Ou => Target::Ou,
            TargetArg::Allee => Target::Allee,
            TargetArg::Scratch => Target::Scratch,
        }
    }
}

fn load(common: &Common, kind: ExperimentKind) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
        None => ExperimentConfig::preset(kind, common.preset),
    };
    apply_overrides(common, &mut cfg);
    Ok(cfg)
}

fn apply_overrides(common: &Common, cfg: &mut ExperimentConfig) {
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate { common, target } => {
            let mut cfg = match (&common.config, target) {
                (None, Some(t)) => {
                    let mut cfg = ExperimentConfig::forwards_preset(t.into(), common.preset);
                    apply_overrides(&common, &mut cfg);
                    cfg
                }
                _ => load(&common, ExperimentKind::ForwardsSim)?,
            };
            cfg.experiment = ExperimentKind::ForwardsSim;
            if let Some(t) = target {
                cfg.target = t.into();
            }
            let f = simulate_forwards(&cfg)?;
            println!("wrote {}; sup |ensemble - continuum| = {:.4}", cfg.out.display(), f.sup_gap());
        }
        Command::Infer {
            common,
            experiment,
            method,
        } => {
            let kind = match experiment.map(Target::from) {
                Some(Target::Ou) => Some(ExperimentKind::OuInfer),
                Some(Target::Allee) => Some(ExperimentKind::AlleeInfer),
                Some(Target::Scratch) => Some(ExperimentKind::ScratchInfer),
                Some(Target::Toy) => anyhow::bail!("the toy model is only used by bench-alpha"),
                None => None,
            };
            let mut cfg = load(&common, kind.unwrap_or(ExperimentKind::OuInfer))?;
            if let Some(kind) = kind {
                if common.config.is_some() && cfg.experiment != kind {
                    anyhow::bail!("--experiment conflicts with the config's experiment {:?}", cfg.experiment);
                }
            }
            if let Some(m) = method {
                cfg.method = m;
            }
            let o = run_experiment(&cfg)?;
            let r = &o.report;
            println!(
                "{}: {} particles, final eps {}, exact sims {}, approx sims {}, {:.2}s",
                r.method,
                r.particles,
                r.epsilons.last().copied().unwrap_or(f64::NAN),
                r.exact_sim_count,
                r.approx_sim_count,
                r.wall_time
            );
            for (k, name) in o.setup.names.iter().enumerate() {
                println!(
                    "  {name}: mean {:.6e} sd {:.6e} (truth {:.6e})",
                    r.posterior_mean[k], r.posterior_std[k], o.setup.truth[k]
                );
            }
        }
        Command::BenchAlpha { common, target } => {
            let mut cfg = load(&common, ExperimentKind::AlphaBench)?;
            if let Some(t) = target {
                cfg.bench.target = t.into();
            }
            let b = write_bench(&cfg)?;
            println!("alpha,mean_error,se_error,mean_cost");
            for s in &b.summary {
                println!("{},{:.6e},{:.6e},{:.4}", s.alpha, s.mean_error, s.se_error, s.mean_cost);
            }
        }
    }
    Ok(())
}
