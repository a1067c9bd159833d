//! Cost/accuracy trade-off of MM-SMC-ABC over a halving sequence of α.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use smcabc::moment::moment_error;
use smcabc::rng::{child_seed, stream};
use smcabc::{smc_abc, Error, MmConfig, Result};
use smcabc::mm_smc_abc;

use crate::config::ExperimentConfig;
use crate::run::setup;

const REFERENCE: u64 = 7;
const BENCH: u64 = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub alpha: f64,
    pub rep: usize,
    pub cost_seconds: f64,
    pub error: f64,
    pub exact_sims: u64,
    pub approx_sims: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSummary {
    pub alpha: f64,
    pub mean_error: f64,
    pub se_error: f64,
    pub mean_cost: f64,
    pub se_cost: f64,
    pub mean_exact_sims: f64,
}

#[derive(Debug, Clone)]
pub struct BenchOutput {
    pub records: Vec<BenchRecord>,
    pub summary: Vec<BenchSummary>,
}

/// Reads the parameter columns of a population CSV (all but the last,
/// which holds the weight).
pub fn read_population(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::Io(e.to_string()))?;
        let vals = row
            .iter()
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        if vals.len() < 2 {
            return Err(Error::Io(format!("{}: expected parameter and weight columns", path.display())));
        }
        out.push(vals[..vals.len() - 1].to_vec());
    }
    if out.is_empty() {
        return Err(Error::Io(format!("{}: empty reference population", path.display())));
    }
    Ok(out)
}

fn mean_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (m, 0.0);
    }
    let var = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// One MM-SMC-ABC run per α and repetition, scored by the moment error
/// against a reference SMC-ABC population.
pub fn bench_alpha(cfg: &ExperimentConfig) -> Result<BenchOutput> {
    let b = &cfg.bench;
    let s = setup(cfg, b.target)?;
    let schedule = cfg.schedule.build()?;
    let reference = match &b.reference {
        Some(path) => read_population(path)?,
        None => {
            let seed = child_seed(&mut stream(cfg.seed, &[REFERENCE]));
            smc_abc(s.exact.as_ref(), &s.problem, &schedule, b.reference_particles, seed)?
                .final_population()
                .particles()
                .to_vec()
        }
    };
    let mut records = Vec::new();
    let mut summary = Vec::new();
    for (k, &alpha) in b.alphas().iter().enumerate() {
        let mm = MmConfig::new(alpha)?;
        let mut rows = Vec::with_capacity(b.reps);
        for rep in 0..b.reps {
            let seed = child_seed(&mut stream(cfg.seed, &[BENCH, k as u64, rep as u64]));
            let r = mm_smc_abc(
                s.exact.as_ref(),
                s.approx.as_ref(),
                &s.problem,
                &schedule,
                cfg.particles,
                mm,
                seed,
            )?;
            rows.push(BenchRecord {
                alpha,
                rep,
                cost_seconds: r.wall_time,
                error: moment_error(&reference, r.final_population().particles(), b.order)?,
                exact_sims: r.exact_sim_count,
                approx_sims: r.approx_sim_count,
            });
        }
        let (mean_error, se_error) = mean_se(&rows.iter().map(|r| r.error).collect::<Vec<_>>());
        let (mean_cost, se_cost) = mean_se(&rows.iter().map(|r| r.cost_seconds).collect::<Vec<_>>());
        let (mean_exact_sims, _) = mean_se(&rows.iter().map(|r| r.exact_sims as f64).collect::<Vec<_>>());
        summary.push(BenchSummary {
            alpha,
            mean_error,
            se_error,
            mean_cost,
            se_cost,
            mean_exact_sims,
        });
        records.extend(rows);
    }
    Ok(BenchOutput { records, summary })
}

/// Runs [`bench_alpha`] and writes `bench.csv` and `bench_summary.csv`.
pub fn write_bench(cfg: &ExperimentConfig) -> Result<BenchOutput> {
    let out = bench_alpha(cfg)?;
    fs::create_dir_all(&cfg.out)?;
    let mut f = BufWriter::new(File::create(cfg.out.join("bench.csv"))?);
    writeln!(f, "alpha,rep,cost_seconds,error,exact_sims,approx_sims")?;
    for r in &out.records {
        writeln!(
            f,
            "{},{},{},{},{},{}",
            r.alpha, r.rep, r.cost_seconds, r.error, r.exact_sims, r.approx_sims
        )?;
    }
    let mut f = BufWriter::new(File::create(cfg.out.join("bench_summary.csv"))?);
    writeln!(f, "alpha,mean_error,se_error,mean_cost,se_cost,mean_exact_sims")?;
    for r in &out.summary {
        writeln!(
            f,
            "{},{},{},{},{},{}",
            r.alpha, r.mean_error, r.se_error, r.mean_cost, r.se_cost, r.mean_exact_sims
        )?;
    }
    f.flush()?;
    Ok(out)
}
