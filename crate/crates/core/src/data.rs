//! Observed/simulated data summaries and the discrepancy metrics on them.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A data summary: either a sequence (temporal) or a row-major matrix
/// (one row per spatial location, one column per observation time).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DataSet {
    Series(Vec<f64>),
    Matrix {
        rows: usize,
        cols: usize,
        values: Vec<f64>,
    },
}

impl DataSet {
    pub fn matrix(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows * cols != values.len() {
            return Err(Error::ShapeMismatch {
                lhs: (rows, cols),
                rhs: (values.len(), 1),
            });
        }
        Ok(DataSet::Matrix { rows, cols, values })
    }

    pub fn values(&self) -> &[f64] {
        match self {
            DataSet::Series(v) => v,
            DataSet::Matrix { values, .. } => values,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            DataSet::Series(v) => (v.len(), 1),
            DataSet::Matrix { rows, cols, .. } => (*rows, *cols),
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        match self {
            DataSet::Series(v) => v[row],
            DataSet::Matrix { cols, values, .. } => values[row * cols + col],
        }
    }

    /// Writes the summary as CSV. Series get a `time,value` table when
    /// `times` is given; matrices are written one row per location with one
    /// column per observation time.
    pub fn write_csv<W: Write>(&self, mut out: W, times: Option<&[f64]>) -> Result<()> {
        match self {
            DataSet::Series(v) => {
                match times {
                    Some(t) if t.len() == v.len() => {
                        writeln!(out, "time,value")?;
                        for (t, x) in t.iter().zip(v) {
                            writeln!(out, "{t},{x}")?;
                        }
                    }
                    _ => {
                        writeln!(out, "index,value")?;
                        for (i, x) in v.iter().enumerate() {
                            writeln!(out, "{i},{x}")?;
                        }
                    }
                }
            }
            DataSet::Matrix { rows, cols, values } => {
                let header: Vec<String> = match times {
                    Some(t) if t.len() == *cols => t.iter().map(|t| format!("t{t}")).collect(),
                    _ => (0..*cols).map(|k| format!("t{k}")).collect(),
                };
                writeln!(out, "row,{}", header.join(","))?;
                for r in 0..*rows {
                    let row: Vec<String> = values[r * cols..(r + 1) * cols]
                        .iter()
                        .map(|x| x.to_string())
                        .collect();
                    writeln!(out, "{r},{}", row.join(","))?;
                }
            }
        }
        Ok(())
    }
}

/// Euclidean distance between two equal-length sequences.
pub fn euclidean_discrepancy(obs: &[f64], sim: &[f64]) -> Result<f64> {
    if obs.len() != sim.len() {
        return Err(Error::DimensionMismatch {
            expected: obs.len(),
            got: sim.len(),
        });
    }
    Ok(obs
        .iter()
        .zip(sim)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Frobenius norm of the entrywise difference of two equal-shape matrices.
pub fn frobenius_discrepancy(obs: &DataSet, sim: &DataSet) -> Result<f64> {
    if obs.shape() != sim.shape() {
        return Err(Error::ShapeMismatch {
            lhs: obs.shape(),
            rhs: sim.shape(),
        });
    }
    let (rows, cols) = obs.shape();
    let mut sum = 0.0;
    for k in 0..cols {
        for i in 0..rows {
            let d = obs.get(i, k) - sim.get(i, k);
            sum += d * d;
        }
    }
    Ok(sum.sqrt())
}

/// The discrepancy metric ρ used by a sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Discrepancy {
    Euclidean,
    Frobenius,
}

impl Discrepancy {
    pub fn distance(&self, obs: &DataSet, sim: &DataSet) -> Result<f64> {
        match self {
            Discrepancy::Euclidean => euclidean_discrepancy(obs.values(), sim.values()),
            Discrepancy::Frobenius => frobenius_discrepancy(obs, sim),
        }
    }
}
