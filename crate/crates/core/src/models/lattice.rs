//! Hexagonal-lattice exclusion random walk with crowding-regulated
//! proliferation and death.

use std::io::Write;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::data::DataSet;
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::samplers::{CostClass, Model};

const EMPTY: u32 = u32::MAX;

/// In-bounds neighbours of (i, j), in the parity-dependent order
/// (i−1,j−1),(i,j−1),(i+1,j−1),(i+1,j),(i,j+1),(i−1,j) for even i and
/// (i−1,j),(i,j−1),(i+1,j),(i+1,j+1),(i,j+1),(i−1,j+1) for odd i.
pub fn neighbors(ni: usize, nj: usize, site: (usize, usize)) -> Result<Vec<(usize, usize)>> {
    let (i, j) = site;
    if i >= ni || j >= nj {
        return Err(Error::Config(format!(
            "site ({i}, {j}) outside {ni}x{nj} lattice"
        )));
    }
    const EVEN: [(i64, i64); 6] = [(-1, -1), (0, -1), (1, -1), (1, 0), (0, 1), (-1, 0)];
    const ODD: [(i64, i64); 6] = [(-1, 0), (0, -1), (1, 0), (1, 1), (0, 1), (-1, 1)];
    let offsets = if i % 2 == 0 { &EVEN } else { &ODD };
    Ok(offsets
        .iter()
        .map(|(di, dj)| (i as i64 + di, j as i64 + dj))
        .filter(|&(a, b)| a >= 0 && b >= 0 && (a as usize) < ni && (b as usize) < nj)
        .map(|(a, b)| (a as usize, b as usize))
        .collect())
}

/// Cartesian position of site (i, j) for spacing δ.
pub fn site_coords(i: usize, j: usize, delta: f64) -> (f64, f64) {
    let x = i as f64 * 3f64.sqrt() / 2.0 * delta;
    let y = if i % 2 == 0 {
        j as f64 * delta
    } else {
        (j as f64 + 0.5) * delta
    };
    (x, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CrowdingFunction {
    /// 1 − c/K
    Logistic { k: f64 },
    /// (1 − c/K)((A + c)/K)
    WeakAllee { k: f64, a: f64 },
}

impl CrowdingFunction {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            CrowdingFunction::Logistic { k } => k > 0.0 && k <= 1.0,
            CrowdingFunction::WeakAllee { k, a } => k > 0.0 && k <= 1.0 && a >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid crowding function {self:?}")))
        }
    }

    /// Unclamped closed form; this is the continuum-limit source term shape.
    pub fn raw(&self, c: f64) -> f64 {
        match *self {
            CrowdingFunction::Logistic { k } => 1.0 - c / k,
            CrowdingFunction::WeakAllee { k, a } => (1.0 - c / k) * ((a + c) / k),
        }
    }
}

/// f(c) clamped to [−1, 1], the range the discrete model can realise as an
/// event probability.
pub fn crowding_eval(f: &CrowdingFunction, c: f64) -> f64 {
    f.raw(c).clamp(-1.0, 1.0)
}

/// Where a daughter agent goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlacementRule {
    /// Uniformly among the unoccupied neighbours; aborts only when none are free.
    #[default]
    UnoccupiedNeighbor,
    /// Uniformly among all neighbours; aborts if the chosen site is occupied.
    AnyNeighbor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepParams {
    pub pm: f64,
    pub pp: f64,
    pub crowding: CrowdingFunction,
    #[serde(default)]
    pub placement: PlacementRule,
}

impl StepParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.pm) || !(0.0..=1.0).contains(&self.pp) {
            return Err(Error::Config(format!(
                "probabilities Pm = {}, Pp = {} must lie in [0, 1]",
                self.pm, self.pp
            )));
        }
        self.crowding.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitSpec {
    Uniform { p: f64 },
    /// Columns `first..=last` start empty, the rest are occupied with
    /// probability `p_out`.
    Scratch { p_out: f64, first: usize, last: usize },
}

/// Lattice occupancy with an O(1) uniform agent picker.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    ni: usize,
    nj: usize,
    pub delta: f64,
    pub tau: f64,
    pub steps: u64,
    occupied: Vec<bool>,
    agents: Vec<u32>,
    slot: Vec<u32>,
    nbr: Vec<[u32; 6]>,
    nbr_len: Vec<u8>,
}

impl LatticeState {
    pub fn empty(ni: usize, nj: usize, delta: f64, tau: f64) -> Result<Self> {
        if ni == 0 || nj == 0 || ni * nj >= EMPTY as usize {
            return Err(Error::Config(format!("lattice size {ni}x{nj}")));
        }
        let mut nbr = vec![[0u32; 6]; ni * nj];
        let mut nbr_len = vec![0u8; ni * nj];
        for i in 0..ni {
            for j in 0..nj {
                let s = i * nj + j;
                for (k, (a, b)) in neighbors(ni, nj, (i, j))?.into_iter().enumerate() {
                    nbr[s][k] = (a * nj + b) as u32;
                    nbr_len[s] = k as u8 + 1;
                }
            }
        }
        Ok(Self {
            ni,
            nj,
            delta,
            tau,
            steps: 0,
            occupied: vec![false; ni * nj],
            agents: Vec::new(),
            slot: vec![EMPTY; ni * nj],
            nbr,
            nbr_len,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.ni, self.nj)
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.tau
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn is_occupied(&self, i: usize, j: usize) -> bool {
        self.occupied[i * self.nj + j]
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupied
    }

    pub fn set(&mut self, i: usize, j: usize, on: bool) {
        let s = i * self.nj + j;
        if on && !self.occupied[s] {
            self.add(s);
        } else if !on && self.occupied[s] {
            self.remove(s);
        }
    }

    fn add(&mut self, s: usize) {
        debug_assert!(!self.occupied[s]);
        self.occupied[s] = true;
        self.slot[s] = self.agents.len() as u32;
        self.agents.push(s as u32);
    }

    fn remove(&mut self, s: usize) {
        debug_assert!(self.occupied[s]);
        let k = self.slot[s] as usize;
        self.agents.swap_remove(k);
        if k < self.agents.len() {
            self.slot[self.agents[k] as usize] = k as u32;
        }
        self.slot[s] = EMPTY;
        self.occupied[s] = false;
    }

    fn relocate(&mut self, from: usize, to: usize) {
        debug_assert!(self.occupied[from] && !self.occupied[to]);
        let k = self.slot[from];
        self.agents[k as usize] = to as u32;
        self.slot[to] = k;
        self.slot[from] = EMPTY;
        self.occupied[from] = false;
        self.occupied[to] = true;
    }

    fn neighbours_of(&self, s: usize) -> &[u32] {
        &self.nbr[s][..self.nbr_len[s] as usize]
    }

    fn density_at(&self, s: usize) -> f64 {
        let n = self.neighbours_of(s);
        let occ = n.iter().filter(|&&t| self.occupied[t as usize]).count();
        occ as f64 / n.len() as f64
    }

    /// Fraction of occupied neighbours, over the boundary-truncated set.
    pub fn local_density(&self, i: usize, j: usize) -> Result<f64> {
        if i >= self.ni || j >= self.nj {
            return Err(Error::Config(format!("site ({i}, {j}) out of bounds")));
        }
        Ok(self.density_at(i * self.nj + j))
    }

    /// C̄ = (1/IJ) Σ C.
    pub fn average_occupancy(&self) -> f64 {
        self.agents.len() as f64 / (self.ni * self.nj) as f64
    }

    /// Column averages (1/J) Σ_j C(i, j), one entry per i.
    pub fn column_profile(&self) -> Vec<f64> {
        (0..self.ni)
            .map(|i| {
                let row = &self.occupied[i * self.nj..(i + 1) * self.nj];
                row.iter().filter(|&&o| o).count() as f64 / self.nj as f64
            })
            .collect()
    }

    /// Verifies the live-agent index against the occupancy grid.
    pub fn check_invariants(&self) -> Result<()> {
        let occ = self.occupied.iter().filter(|&&o| o).count();
        if occ != self.agents.len() {
            return Err(Error::Simulation(format!(
                "{occ} occupied sites but {} agents",
                self.agents.len()
            )));
        }
        for (k, &s) in self.agents.iter().enumerate() {
            if !self.occupied[s as usize] || self.slot[s as usize] as usize != k {
                return Err(Error::Simulation(format!("agent index corrupt at site {s}")));
            }
        }
        Ok(())
    }

    /// One line per i holding J 0/1 entries.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for i in 0..self.ni {
            let row: Vec<&str> = self.occupied[i * self.nj..(i + 1) * self.nj]
                .iter()
                .map(|&o| if o { "1" } else { "0" })
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    fn pick_agent(&self, rng: &mut SimRng) -> usize {
        self.agents[rng.random_range(0..self.agents.len())] as usize
    }

    fn motility_sweep(&mut self, pm: f64, rng: &mut SimRng) {
        let n = self.agents.len() as u64;
        if n == 0 || pm <= 0.0 {
            return;
        }
        // Each of the N selections moves only if its Pm coin succeeds; the
        // coin is independent of the agent and target, so draw how many
        // selections pass it first.
        let active = if pm >= 1.0 { n } else { binomial(n, pm, rng) };
        for _ in 0..active {
            let s = self.pick_agent(rng);
            let nb = self.neighbours_of(s);
            let m = nb[rng.random_range(0..nb.len())] as usize;
            if !self.occupied[m] {
                self.relocate(s, m);
            }
        }
    }

    fn proliferation_sweep(&mut self, p: &StepParams, rng: &mut SimRng) {
        let n = self.agents.len() as u64;
        if n == 0 || p.pp <= 0.0 {
            return;
        }
        let active = if p.pp >= 1.0 { n } else { binomial(n, p.pp, rng) };
        let mut free = [0u32; 6];
        for _ in 0..active {
            if self.agents.is_empty() {
                break;
            }
            let s = self.pick_agent(rng);
            let f = crowding_eval(&p.crowding, self.density_at(s));
            if rng.random::<f64>() >= f.abs() {
                continue;
            }
            if f < 0.0 {
                self.remove(s);
                continue;
            }
            let nb = self.neighbours_of(s);
            let target = match p.placement {
                PlacementRule::UnoccupiedNeighbor => {
                    let mut k = 0;
                    for &t in nb {
                        if !self.occupied[t as usize] {
                            free[k] = t;
                            k += 1;
                        }
                    }
                    (k > 0).then(|| free[rng.random_range(0..k)] as usize)
                }
                PlacementRule::AnyNeighbor => {
                    let t = nb[rng.random_range(0..nb.len())] as usize;
                    (!self.occupied[t]).then_some(t)
                }
            };
            if let Some(t) = target {
                self.add(t);
            }
        }
    }
}

fn binomial(n: u64, p: f64, rng: &mut SimRng) -> u64 {
    Binomial::new(n, p)
        .expect("probability validated to lie in [0, 1]")
        .sample(rng)
}

/// Bernoulli initial occupancy per `spec`.
pub fn init_lattice(
    ni: usize,
    nj: usize,
    spec: &InitSpec,
    delta: f64,
    tau: f64,
    rng: &mut SimRng,
) -> Result<LatticeState> {
    let mut st = LatticeState::empty(ni, nj, delta, tau)?;
    let (p_in, p_out, range) = match *spec {
        InitSpec::Uniform { p } => (p, p, None),
        InitSpec::Scratch { p_out, first, last } => {
            if first > last || last >= ni {
                return Err(Error::Config(format!(
                    "scratch columns {first}..={last} invalid for I = {ni}"
                )));
            }
            (0.0, p_out, Some(first..=last))
        }
    };
    for p in [p_in, p_out] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!("occupancy probability {p}")));
        }
    }
    for i in 0..ni {
        let p = match &range {
            Some(r) if r.contains(&i) => p_in,
            _ => p_out,
        };
        for j in 0..nj {
            if rng.random::<f64>() < p {
                st.add(i * nj + j);
            }
        }
    }
    Ok(st)
}

/// One step of duration τ: a motility sweep then a proliferation sweep.
pub fn step(state: &mut LatticeState, params: &StepParams, rng: &mut SimRng) {
    state.motility_sweep(params.pm, rng);
    state.proliferation_sweep(params, rng);
    state.steps += 1;
}

/// Advances to each observation step (counted in steps of τ) and records
/// `observe(state)` there.
fn run_to<T>(
    state: &mut LatticeState,
    params: &StepParams,
    obs_steps: &[u64],
    rng: &mut SimRng,
    mut observe: impl FnMut(&LatticeState) -> T,
) -> Result<Vec<T>> {
    params.validate()?;
    let mut out = Vec::with_capacity(obs_steps.len());
    for &k in obs_steps {
        if k < state.steps {
            return Err(Error::Config(format!(
                "observation step {k} precedes current step {}",
                state.steps
            )));
        }
        while state.steps < k {
            step(state, params, rng);
        }
        out.push(observe(state));
    }
    Ok(out)
}

/// Average occupancy C̄(t) at each observation step.
pub fn simulate_growth(
    state: &mut LatticeState,
    params: &StepParams,
    obs_steps: &[u64],
    rng: &mut SimRng,
) -> Result<DataSet> {
    Ok(DataSet::Series(run_to(state, params, obs_steps, rng, |s| {
        s.average_occupancy()
    })?))
}

/// I × T matrix of column averages at each observation step.
pub fn simulate_profile(
    state: &mut LatticeState,
    params: &StepParams,
    obs_steps: &[u64],
    rng: &mut SimRng,
) -> Result<DataSet> {
    let cols = run_to(state, params, obs_steps, rng, |s| s.column_profile())?;
    let (ni, t) = (state.ni, cols.len());
    let mut values = vec![0.0; ni * t];
    for (k, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            values[i * t + k] = *v;
        }
    }
    DataSet::matrix(ni, t, values)
}

/// Parameterisation of the lattice model's θ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeTheta {
    /// θ = (λ, A, K) with weak Allee crowding and Pm fixed; summary C̄(t).
    Allee,
    /// θ = (λ, D, K) with logistic crowding, Pm = 4Dτ/δ²; summary C̄(x, t).
    Scratch,
}

/// The discrete model as seen by the samplers. Every simulation draws a
/// fresh initial condition from its stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeModel {
    pub ni: usize,
    pub nj: usize,
    pub delta: f64,
    pub tau: f64,
    pub init: InitSpec,
    pub theta: LatticeTheta,
    /// Motility probability when it is not part of θ.
    pub pm: f64,
    pub obs_steps: Vec<u64>,
    #[serde(default)]
    pub placement: PlacementRule,
}

impl LatticeModel {
    pub fn step_params(&self, theta: &[f64]) -> Result<StepParams> {
        if theta.len() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                got: theta.len(),
            });
        }
        let pp = theta[0] * self.tau;
        let (pm, crowding) = match self.theta {
            LatticeTheta::Allee => (
                self.pm,
                CrowdingFunction::WeakAllee {
                    k: theta[2],
                    a: theta[1],
                },
            ),
            LatticeTheta::Scratch => (
                4.0 * theta[1] * self.tau / (self.delta * self.delta),
                CrowdingFunction::Logistic { k: theta[2] },
            ),
        };
        let p = StepParams {
            pm,
            pp,
            crowding,
            placement: self.placement,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn run(&self, params: &StepParams, rng: &mut SimRng) -> Result<DataSet> {
        let mut st = init_lattice(self.ni, self.nj, &self.init, self.delta, self.tau, rng)?;
        match self.theta {
            LatticeTheta::Allee => simulate_growth(&mut st, params, &self.obs_steps, rng),
            LatticeTheta::Scratch => simulate_profile(&mut st, params, &self.obs_steps, rng),
        }
    }
}

impl Model for LatticeModel {
    fn simulate(&self, theta: &[f64], rng: &mut SimRng) -> Result<DataSet> {
        let params = self.step_params(theta)?;
        self.run(&params, rng)
    }

    fn cost_class(&self) -> CostClass {
        CostClass::ExactExpensive
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn logistic(k: f64) -> CrowdingFunction {
        CrowdingFunction::Logistic { k }
    }

    #[test]
    fn interior_even_site_neighbours() {
        let n = neighbors(80, 68, (4, 4)).unwrap();
        assert_eq!(n, vec![(3, 3), (4, 3), (5, 3), (5, 4), (4, 5), (3, 4)]);
        let n = neighbors(80, 68, (5, 4)).unwrap();
        assert_eq!(n, vec![(4, 4), (5, 3), (6, 4), (6, 5), (5, 5), (4, 5)]);
    }

    #[test]
    fn corner_neighbours_are_truncated() {
        assert_eq!(neighbors(80, 68, (0, 0)).unwrap(), vec![(1, 0), (0, 1)]);
        assert!(neighbors(80, 68, (80, 0)).is_err());
    }

    #[test]
    fn neighbours_in_bounds_distinct_and_symmetric() {
        let (ni, nj) = (9, 7);
        for i in 0..ni {
            for j in 0..nj {
                let n = neighbors(ni, nj, (i, j)).unwrap();
                let mut d = n.clone();
                d.sort();
                d.dedup();
                assert_eq!(d.len(), n.len());
                for &(a, b) in &n {
                    assert!(a < ni && b < nj);
                    assert!(neighbors(ni, nj, (a, b)).unwrap().contains(&(i, j)));
                }
            }
        }
    }

    #[test]
    fn neighbours_are_unit_distance_apart() {
        for &(i, j) in &[(4, 4), (5, 4), (2, 3), (7, 1)] {
            let (x, y) = site_coords(i, j, 1.0);
            for (a, b) in neighbors(20, 20, (i, j)).unwrap() {
                let (u, v) = site_coords(a, b, 1.0);
                assert!(((x - u).hypot(y - v) - 1.0).abs() < 1e-12, "{i} {j} {a} {b}");
            }
        }
    }

    #[test]
    fn coordinates() {
        assert_eq!(site_coords(0, 0, 1.0), (0.0, 0.0));
        let (x, y) = site_coords(1, 0, 1.0);
        assert!((x - 3f64.sqrt() / 2.0).abs() < 1e-15 && y == 0.5);
        let (x, y) = site_coords(2, 3, 2.0);
        assert!((x - 2.0 * 3f64.sqrt()).abs() < 1e-14 && y == 6.0);
    }

    #[test]
    fn crowding_values() {
        let k = 5.0 / 6.0;
        assert!(crowding_eval(&logistic(k), k).abs() < 1e-15);
        let allee = CrowdingFunction::WeakAllee { k, a: 0.1 };
        assert!((crowding_eval(&allee, 0.0) - 0.12).abs() < 1e-15);
        assert!((crowding_eval(&logistic(k), 1.0) + 0.2).abs() < 1e-15);
        let tiny = CrowdingFunction::WeakAllee { k: 0.05, a: 0.01 };
        assert_eq!(crowding_eval(&tiny, 1.0), -1.0);
    }

    #[test]
    fn init_full_and_binomial() {
        let st = init_lattice(80, 68, &InitSpec::Uniform { p: 1.0 }, 1.0, 1.0, &mut stream(1, &[])).unwrap();
        assert_eq!(st.agent_count(), 5440);
        let st = init_lattice(80, 68, &InitSpec::Uniform { p: 0.25 }, 1.0, 1.0, &mut stream(2, &[])).unwrap();
        let sd = (5440.0f64 * 0.25 * 0.75).sqrt();
        assert!((st.agent_count() as f64 - 1360.0).abs() < 4.0 * sd);
        st.check_invariants().unwrap();
    }

    #[test]
    fn scratch_init() {
        let spec = InitSpec::Scratch {
            p_out: 1.0 / 3.0,
            first: 31,
            last: 50,
        };
        let st = init_lattice(80, 68, &spec, 1.0, 1.0, &mut stream(3, &[])).unwrap();
        let prof = st.column_profile();
        assert!(prof[31..=50].iter().all(|&c| c == 0.0));
        let sd = (5440.0f64 * 0.75 / 3.0 * 2.0 / 3.0).sqrt();
        assert!((st.agent_count() as f64 - 1360.0).abs() < 4.0 * sd);
        let bad = InitSpec::Scratch {
            p_out: 0.3,
            first: 50,
            last: 31,
        };
        assert!(init_lattice(80, 68, &bad, 1.0, 1.0, &mut stream(3, &[])).is_err());
    }

    #[test]
    fn local_density_cases() {
        let mut st = LatticeState::empty(10, 10, 1.0, 1.0).unwrap();
        assert_eq!(st.local_density(4, 4).unwrap(), 0.0);
        for &(a, b) in &neighbors(10, 10, (4, 4)).unwrap()[..3] {
            st.set(a, b, true);
        }
        assert_eq!(st.local_density(4, 4).unwrap(), 0.5);
        st.set(1, 0, true);
        st.set(0, 1, true);
        assert_eq!(st.local_density(0, 0).unwrap(), 1.0);
    }

    #[test]
    fn no_events_means_no_change() {
        let mut st = init_lattice(20, 17, &InitSpec::Uniform { p: 0.4 }, 1.0, 1.0, &mut stream(4, &[])).unwrap();
        let before = st.occupancy().to_vec();
        let p = StepParams {
            pm: 0.0,
            pp: 0.0,
            crowding: logistic(1.0),
            placement: PlacementRule::default(),
        };
        let mut rng = stream(4, &[1]);
        for _ in 0..100 {
            step(&mut st, &p, &mut rng);
        }
        assert_eq!(st.occupancy(), &before[..]);
    }

    #[test]
    fn full_lattice_at_capacity_is_frozen() {
        let mut st = init_lattice(12, 10, &InitSpec::Uniform { p: 1.0 }, 1.0, 1.0, &mut stream(5, &[])).unwrap();
        let p = StepParams {
            pm: 1.0,
            pp: 1.0,
            crowding: logistic(1.0),
            placement: PlacementRule::default(),
        };
        let mut rng = stream(5, &[1]);
        for _ in 0..50 {
            step(&mut st, &p, &mut rng);
        }
        assert_eq!(st.agent_count(), 120);
    }

    #[test]
    fn motility_conserves_agents() {
        let mut st = init_lattice(20, 17, &InitSpec::Uniform { p: 0.3 }, 1.0, 1.0, &mut stream(6, &[])).unwrap();
        let n0 = st.agent_count();
        let p = StepParams {
            pm: 0.7,
            pp: 0.0,
            crowding: logistic(0.5),
            placement: PlacementRule::default(),
        };
        let mut rng = stream(6, &[1]);
        for _ in 0..10_000 {
            step(&mut st, &p, &mut rng);
        }
        assert_eq!(st.agent_count(), n0);
        st.check_invariants().unwrap();
    }

    #[test]
    fn logistic_growth_below_capacity_never_loses_agents() {
        let mut st = init_lattice(20, 17, &InitSpec::Uniform { p: 0.1 }, 1.0, 1.0, &mut stream(7, &[])).unwrap();
        let p = StepParams {
            pm: 0.0,
            pp: 0.05,
            crowding: logistic(1.0),
            placement: PlacementRule::AnyNeighbor,
        };
        let mut rng = stream(7, &[1]);
        let mut prev = st.agent_count();
        for _ in 0..500 {
            step(&mut st, &p, &mut rng);
            assert!(st.agent_count() >= prev);
            prev = st.agent_count();
        }
    }

    #[test]
    fn death_branch_reduces_overcrowded_population() {
        let mut st = init_lattice(20, 17, &InitSpec::Uniform { p: 1.0 }, 1.0, 1.0, &mut stream(8, &[])).unwrap();
        let p = StepParams {
            pm: 0.0,
            pp: 0.5,
            crowding: logistic(0.5),
            placement: PlacementRule::default(),
        };
        let mut rng = stream(8, &[1]);
        for _ in 0..20 {
            step(&mut st, &p, &mut rng);
        }
        assert!(st.agent_count() < 340);
        st.check_invariants().unwrap();
    }

    #[test]
    fn growth_and_profile_shapes() {
        let model = LatticeModel {
            ni: 20,
            nj: 17,
            delta: 1.0,
            tau: 1.0,
            init: InitSpec::Uniform { p: 1.0 },
            theta: LatticeTheta::Allee,
            pm: 0.0,
            obs_steps: vec![10, 20, 30],
            placement: PlacementRule::default(),
        };
        let g = model.simulate(&[0.0, 0.1, 0.9], &mut stream(9, &[])).unwrap();
        assert_eq!(g, DataSet::Series(vec![1.0; 3]));
        let scratch = LatticeModel {
            theta: LatticeTheta::Scratch,
            ..model
        };
        let m = scratch.simulate(&[0.0, 0.0, 0.9], &mut stream(9, &[])).unwrap();
        assert_eq!(m.shape(), (20, 3));
        assert!(m.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn same_seed_same_run() {
        let model = LatticeModel {
            ni: 20,
            nj: 17,
            delta: 1.0,
            tau: 1.0,
            init: InitSpec::Uniform { p: 0.25 },
            theta: LatticeTheta::Scratch,
            pm: 0.0,
            obs_steps: vec![100, 200],
            placement: PlacementRule::default(),
        };
        let a = model.simulate(&[0.01, 0.2, 0.8], &mut stream(10, &[])).unwrap();
        let b = model.simulate(&[0.01, 0.2, 0.8], &mut stream(10, &[])).unwrap();
        assert_eq!(a, b);
    }
}
