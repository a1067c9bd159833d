//! Weighted particle populations, threshold schedules and resampling.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weighted particle set representing one ABC posterior level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPopulation {
    dim: usize,
    particles: Vec<Vec<f64>>,
    weights: Vec<f64>,
    pub level: usize,
    pub epsilon: f64,
}

impl WeightedPopulation {
    pub fn new(
        particles: Vec<Vec<f64>>,
        weights: Vec<f64>,
        level: usize,
        epsilon: f64,
    ) -> Result<Self> {
        if particles.len() < 2 {
            return Err(Error::DegeneratePopulation(format!(
                "{} particles; at least 2 required",
                particles.len()
            )));
        }
        if particles.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: particles.len(),
                got: weights.len(),
            });
        }
        let dim = particles[0].len();
        for p in &particles {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::Numeric(format!("non-finite particle {p:?}")));
            }
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::DegeneratePopulation(
                "weights must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            dim,
            particles,
            weights,
            level,
            epsilon,
        })
    }

    /// Population with uniform weights 1/M.
    pub fn uniform(particles: Vec<Vec<f64>>, level: usize, epsilon: f64) -> Result<Self> {
        let m = particles.len().max(1);
        Self::new(particles, vec![1.0 / m as f64; m], level, epsilon)
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn particles(&self) -> &[Vec<f64>] {
        &self.particles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_particles(self) -> Vec<Vec<f64>> {
        self.particles
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Rescales weights to sum to one.
    pub fn normalize(&mut self) -> Result<()> {
        let total = self.total_weight();
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::DegeneratePopulation(format!(
                "total weight {total} at level {}",
                self.level
            )));
        }
        for w in &mut self.weights {
            *w /= total;
        }
        Ok(())
    }

    /// Weighted mean of each component.
    pub fn mean(&self) -> Vec<f64> {
        let total = self.total_weight();
        let mut mean = vec![0.0; self.dim];
        for (p, w) in self.particles.iter().zip(&self.weights) {
            for (m, x) in mean.iter_mut().zip(p) {
                *m += w * x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= total);
        mean
    }

    /// Weighted standard deviation of each component.
    pub fn std_dev(&self) -> Vec<f64> {
        let total = self.total_weight();
        let mean = self.mean();
        let mut var = vec![0.0; self.dim];
        for (p, w) in self.particles.iter().zip(&self.weights) {
            for k in 0..self.dim {
                var[k] += w * (p[k] - mean[k]).powi(2);
            }
        }
        var.iter().map(|v| (v / total).sqrt()).collect()
    }

    /// Kish effective sample size.
    pub fn ess(&self) -> f64 {
        let total = self.total_weight();
        let sq: f64 = self.weights.iter().map(|w| (w / total).powi(2)).sum();
        1.0 / sq
    }

    /// One component of every particle.
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.particles.iter().map(|p| p[k]).collect()
    }

    /// Writes one row per particle: parameter components, then the weight.
    pub fn write_csv<W: Write>(&self, mut out: W, names: &[String]) -> Result<()> {
        let header: Vec<String> = (0..self.dim)
            .map(|k| names.get(k).cloned().unwrap_or_else(|| format!("theta{k}")))
            .chain(std::iter::once("weight".to_string()))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for (p, w) in self.particles.iter().zip(&self.weights) {
            let row: Vec<String> = p
                .iter()
                .chain(std::iter::once(w))
                .map(|x| format!("{x:e}"))
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Categorical distribution over indices, sampled by inverting the CDF.
#[derive(Debug, Clone)]
pub struct Categorical {
    cdf: Vec<f64>,
}

impl Categorical {
    pub fn new(weights: &[f64]) -> Result<Self> {
        let mut acc = 0.0;
        let mut cdf = Vec::with_capacity(weights.len());
        for &w in weights {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::DegeneratePopulation(format!("invalid weight {w}")));
            }
            acc += w;
            cdf.push(acc);
        }
        if acc <= 0.0 {
            return Err(Error::DegeneratePopulation("all weights are zero".into()));
        }
        cdf.iter_mut().for_each(|c| *c /= acc);
        Ok(Self { cdf })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        // First index whose cumulative mass exceeds u; zero-weight entries share
        // their predecessor's CDF value and are never selected.
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx.min(self.cdf.len() - 1)
    }
}

/// Draws M particles with replacement proportional to weight; output weights
/// are all 1/M.
pub fn multinomial_resample<R: Rng + ?Sized>(
    pop: &WeightedPopulation,
    rng: &mut R,
) -> Result<WeightedPopulation> {
    resample_to(pop, pop.len(), rng)
}

/// Multinomial resampling to an arbitrary output size.
pub fn resample_to<R: Rng + ?Sized>(
    pop: &WeightedPopulation,
    size: usize,
    rng: &mut R,
) -> Result<WeightedPopulation> {
    let cat = Categorical::new(pop.weights()).map_err(|_| {
        Error::DegeneratePopulation(format!("all weights zero at level {}", pop.level))
    })?;
    let particles = (0..size)
        .map(|_| pop.particles[cat.sample(rng)].clone())
        .collect();
    WeightedPopulation::uniform(particles, pop.level, pop.epsilon)
}

/// Strictly decreasing sequence of positive ABC thresholds ε_1 > … > ε_R.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSchedule(Vec<f64>);

impl ThresholdSchedule {
    pub fn new(epsilons: Vec<f64>) -> Result<Self> {
        if epsilons.is_empty() {
            return Err(Error::InvalidSchedule("empty schedule".into()));
        }
        if epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::InvalidSchedule(format!(
                "thresholds must be positive and finite: {epsilons:?}"
            )));
        }
        if epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidSchedule(format!(
                "thresholds must be strictly decreasing: {epsilons:?}"
            )));
        }
        Ok(Self(epsilons))
    }

    /// ε_r = ε_{r-1}/2 for r = 1..=levels, starting from `eps0` (which is not
    /// itself a level).
    pub fn halving(eps0: f64, levels: usize) -> Result<Self> {
        Self::new(
            (1..=levels)
                .map(|r| eps0 / 2f64.powi(r as i32))
                .collect(),
        )
    }

    pub fn epsilons(&self) -> &[f64] {
        &self.0
    }

    pub fn levels(&self) -> usize {
        self.0.len()
    }

    pub fn last(&self) -> f64 {
        *self.0.last().expect("schedule is non-empty")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn pop(weights: Vec<f64>) -> WeightedPopulation {
        let particles = (0..weights.len()).map(|i| vec![i as f64]).collect();
        WeightedPopulation::new(particles, weights, 0, 1.0).unwrap()
    }

    #[test]
    fn point_mass_resamples_to_copies() {
        let p = pop(vec![0.0, 0.0, 1.0, 0.0]);
        let mut rng = stream(1, &[]);
        let r = multinomial_resample(&p, &mut rng).unwrap();
        assert!(r.particles().iter().all(|x| x[0] == 2.0));
        assert!(r.weights().iter().all(|&w| w == 0.25));
    }

    #[test]
    fn zero_weight_particle_never_drawn() {
        let p = pop(vec![0.5, 0.5, 0.0]);
        let mut rng = stream(2, &[]);
        for _ in 0..10_000 {
            let r = multinomial_resample(&p, &mut rng).unwrap();
            assert!(r.particles().iter().all(|x| x[0] != 2.0));
        }
    }

    #[test]
    fn uniform_weights_give_binomial_counts() {
        let m = 1000;
        let p = pop(vec![1.0; m]);
        let mut rng = stream(3, &[]);
        let r = multinomial_resample(&p, &mut rng).unwrap();
        let mut counts = vec![0usize; m];
        for x in r.particles() {
            counts[x[0] as usize] += 1;
        }
        // Each count ~ Binomial(1000, 1/1000): mean 1, sd ~ 1.
        let sd = (m as f64 * (1.0 / m as f64) * (1.0 - 1.0 / m as f64)).sqrt();
        assert!(counts.iter().all(|&c| (c as f64 - 1.0).abs() <= 1.0 + 4.0 * sd + 4.0));
        let mean = counts.iter().sum::<usize>() as f64 / m as f64;
        assert_eq!(mean, 1.0);
        let var = counts.iter().map(|&c| (c as f64 - 1.0).powi(2)).sum::<f64>() / m as f64;
        assert!((var - 1.0).abs() < 4.0 * (2.0 / m as f64).sqrt() * 1.5, "var {var}");
    }

    #[test]
    fn all_zero_weights_error() {
        let p = pop(vec![0.0, 0.0]);
        let mut rng = stream(4, &[]);
        assert!(matches!(
            multinomial_resample(&p, &mut rng),
            Err(Error::DegeneratePopulation(_))
        ));
    }

    #[test]
    fn resample_preserves_support() {
        let mut rng = stream(5, &[]);
        let particles: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64, -(i as f64)]).collect();
        let weights: Vec<f64> = (0..50).map(|i| ((i * 7) % 5) as f64).collect();
        let p = WeightedPopulation::new(particles.clone(), weights.clone(), 0, 1.0).unwrap();
        let r = multinomial_resample(&p, &mut rng).unwrap();
        for x in r.particles() {
            let i = particles.iter().position(|q| q == x).expect("in support");
            assert!(weights[i] > 0.0);
        }
        assert!(r.weights().iter().all(|&w| w == 1.0 / 50.0));
    }

    #[test]
    fn halving_schedule_matches_ou_example() {
        let s = ThresholdSchedule::halving(6.4, 4).unwrap();
        assert_eq!(s.levels(), 4);
        assert!((s.last() - 0.4).abs() < 1e-15);
        assert!(ThresholdSchedule::new(vec![1.0, 1.0]).is_err());
        assert!(ThresholdSchedule::new(vec![1.0, -0.5]).is_err());
    }

    #[test]
    fn population_rejects_single_particle() {
        assert!(WeightedPopulation::uniform(vec![vec![1.0]], 0, 1.0).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let p = pop(vec![1.0, 3.0]);
        let mut buf = Vec::new();
        p.write_csv(&mut buf, &["D".to_string()]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "D,weight");
        assert_eq!(lines.len(), 3);
    }
}
