//! Discrete-event simulation of a kernel model.
//!
//! On every state entry all clocks of the state are sampled afresh and the
//! earliest one selects the next state. Exponential clocks of a state are
//! merged into one exponential draw plus a categorical choice of the winner,
//! which has the same joint law as sampling them one by one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::kernel::{KernelModel, Target, Variant};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    /// Merge exponential clocks of a state into one draw.
    pub merge_exponential: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            merge_exponential: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEstimate {
    pub estimate: f64,
    /// Half-width of the 95% confidence interval.
    pub half_width: f64,
    /// Regeneration cycles or replications used.
    pub count: usize,
    pub seed: u64,
}

impl SimEstimate {
    pub fn lower(&self) -> f64 {
        self.estimate - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.estimate + self.half_width
    }

    pub fn covers(&self, value: f64) -> bool {
        self.lower() <= value && value <= self.upper()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AvailabilityRun {
    pub availability: SimEstimate,
    /// Down-time fraction, estimated directly.
    pub unavailability: SimEstimate,
    /// Time-in-state fractions with regenerative confidence intervals.
    pub state_fractions: Vec<SimEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub state: usize,
    pub entry_time: f64,
    pub sojourn: f64,
}

/// Empirical exits from one state.
#[derive(Debug, Clone, PartialEq)]
pub struct DepartureStats {
    /// Number of exits through each edge of the state's race.
    pub edge_counts: Vec<u64>,
    pub mean_sojourn: f64,
    pub sojourn_std_error: f64,
}

enum Winner {
    Exp,
    Det,
    Edge(usize),
}

#[derive(Debug, Clone)]
struct CompiledRace {
    targets: Vec<Target>,
    dists: Vec<Distribution>,
    exp_total: f64,
    exp_edges: Vec<usize>,
    exp_cum: Vec<f64>,
    continuous: Vec<usize>,
    det_min: f64,
    det_ties: Vec<usize>,
}

impl CompiledRace {
    fn new(km: &KernelModel, state: usize) -> Self {
        let race = km.race(state);
        let targets: Vec<Target> = race.edges.iter().map(|e| e.target).collect();
        let dists: Vec<Distribution> = race.edges.iter().map(|e| e.clock.dist).collect();
        let mut exp_total = 0.0;
        let mut exp_edges = Vec::new();
        let mut exp_cum = Vec::new();
        let mut continuous = Vec::new();
        let mut det_min = f64::INFINITY;
        let mut det_ties = Vec::new();
        for (k, d) in dists.iter().enumerate() {
            if let Some(r) = d.exp_rate() {
                exp_total += r;
                exp_edges.push(k);
                exp_cum.push(exp_total);
            } else if let Some(a) = d.atom() {
                if a < det_min {
                    det_min = a;
                    det_ties.clear();
                }
                if a == det_min {
                    det_ties.push(k);
                }
            } else {
                continuous.push(k);
            }
        }
        CompiledRace {
            targets,
            dists,
            exp_total,
            exp_edges,
            exp_cum,
            continuous,
            det_min,
            det_ties,
        }
    }

    /// Sojourn duration and winning edge.
    #[inline]
    fn step<R: Rng>(&self, rng: &mut R, merge: bool) -> (f64, usize) {
        if !merge {
            return self.step_individual(rng);
        }
        let mut best = self.det_min;
        let mut winner = Winner::Det;
        if self.exp_total > 0.0 {
            let t = rng.sample::<f64, _>(Exp1) / self.exp_total;
            if t < best {
                best = t;
                winner = Winner::Exp;
            }
        }
        for &k in &self.continuous {
            if let Some(x) = self.dists[k].sample_below(best, rng) {
                best = x;
                winner = Winner::Edge(k);
            }
        }
        let edge = match winner {
            Winner::Edge(k) => k,
            Winner::Det => self.pick_tie(&self.det_ties, rng),
            Winner::Exp => {
                if self.exp_edges.len() == 1 {
                    self.exp_edges[0]
                } else {
                    let u = rng.random::<f64>() * self.exp_total;
                    let pos = self.exp_cum.iter().position(|&c| u < c).unwrap_or(self.exp_cum.len() - 1);
                    self.exp_edges[pos]
                }
            }
        };
        (best, edge)
    }

    fn step_individual<R: Rng>(&self, rng: &mut R) -> (f64, usize) {
        let mut best = f64::INFINITY;
        let mut ties: Vec<usize> = Vec::new();
        for (k, d) in self.dists.iter().enumerate() {
            let x = d.sample(rng);
            if x < best {
                best = x;
                ties.clear();
            }
            if x == best {
                ties.push(k);
            }
        }
        let edge = self.pick_tie(&ties, rng);
        (best, edge)
    }

    fn pick_tie<R: Rng>(&self, ties: &[usize], rng: &mut R) -> usize {
        if ties.len() == 1 {
            ties[0]
        } else {
            ties[rng.random_range(0..ties.len())]
        }
    }
}

struct Simulator {
    races: Vec<CompiledRace>,
    labels: Vec<String>,
    up: Vec<bool>,
    merge: bool,
}

impl Simulator {
    /// Fails if a state reachable from `start` has no clocks.
    fn new(km: &KernelModel, start: usize, opts: &SimOptions) -> Result<Self> {
        let n = km.num_states();
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(s) = stack.pop() {
            if km.race(s).is_empty() {
                return Err(Error::Structural(format!("{} has no clocks", km.label(s))));
            }
            for e in &km.race(s).edges {
                if let Target::State(t) = e.target {
                    if !seen[t] {
                        seen[t] = true;
                        stack.push(t);
                    }
                }
            }
        }
        Ok(Simulator {
            races: (0..n).map(|s| CompiledRace::new(km, s)).collect(),
            labels: (0..n).map(|s| km.label(s).to_string()).collect(),
            up: (0..n).map(|s| km.is_up(s)).collect(),
            merge: opts.merge_exponential,
        })
    }

    #[inline]
    fn step<R: Rng>(&self, state: usize, rng: &mut R) -> (f64, Target, usize) {
        let race = &self.races[state];
        let (t, edge) = race.step(rng, self.merge);
        (t, race.targets[edge], edge)
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn mean_ci(values: &[f64], seed: u64) -> SimEstimate {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    SimEstimate {
        estimate: mean,
        half_width: Z95 * (var / k).sqrt(),
        count: values.len(),
        seed,
    }
}

/// Regenerative ratio estimate `Σ Y / Σ T` with its 95% interval.
fn ratio_ci(y: &[f64], t: &[f64], seed: u64) -> SimEstimate {
    let k = y.len() as f64;
    let sum_t: f64 = t.iter().sum();
    let r = y.iter().sum::<f64>() / sum_t;
    let s2 = y
        .iter()
        .zip(t)
        .map(|(yi, ti)| (yi - r * ti).powi(2))
        .sum::<f64>()
        / (k - 1.0);
    SimEstimate {
        estimate: r,
        half_width: Z95 * s2.sqrt() / ((sum_t / k) * k.sqrt()),
        count: y.len(),
        seed,
    }
}

/// Steady-state availability from `cycles` regeneration cycles between
/// entries to state 0. Cycle `k` uses stream `k` of the seeded generator.
pub fn simulate_availability(
    km: &KernelModel,
    cycles: usize,
    seed: u64,
    opts: &SimOptions,
) -> Result<AvailabilityRun> {
    if km.variant != Variant::Full {
        return Err(Error::Domain("availability simulation needs the full kernel".into()));
    }
    if cycles < 100 {
        return Err(Error::Domain(format!("need at least 100 cycles, got {cycles}")));
    }
    let sim = Simulator::new(km, 0, opts)?;
    let n = km.num_states();
    let per_cycle = (0..cycles)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, k as u64);
            let mut times = vec![0.0; n];
            let mut state = 0;
            loop {
                let (t, target, _) = sim.step(state, &mut rng);
                times[state] += t;
                match target {
                    Target::State(0) => break,
                    Target::State(s) => state = s,
                    Target::Absorb => {
                        return Err(Error::Structural(format!("{} absorbs", sim.labels[state])))
                    }
                }
            }
            Ok(times)
        })
        .collect::<Result<Vec<_>>>()?;
    let total: Vec<f64> = per_cycle.iter().map(|c| c.iter().sum()).collect();
    let down: Vec<f64> = per_cycle
        .iter()
        .map(|c| c.iter().zip(&sim.up).filter(|(_, &u)| !u).map(|(t, _)| t).sum())
        .collect();
    let unavailability = ratio_ci(&down, &total, seed);
    let availability = SimEstimate {
        estimate: 1.0 - unavailability.estimate,
        ..unavailability
    };
    let state_fractions = (0..n)
        .map(|s| {
            let y: Vec<f64> = per_cycle.iter().map(|c| c[s]).collect();
            ratio_ci(&y, &total, seed)
        })
        .collect();
    Ok(AvailabilityRun {
        availability,
        unavailability,
        state_fractions,
    })
}

/// Mean time to absorption from state 0 over independent replications.
/// Replication `k` uses stream `k` of the seeded generator.
pub fn simulate_mttf(km: &KernelModel, replications: usize, seed: u64, opts: &SimOptions) -> Result<SimEstimate> {
    if km.variant != Variant::Absorbing {
        return Err(Error::Domain("MTTF simulation needs the absorbing kernel".into()));
    }
    if replications < 100 {
        return Err(Error::Domain(format!(
            "need at least 100 replications, got {replications}"
        )));
    }
    let sim = Simulator::new(km, 0, opts)?;
    let times = (0..replications)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, k as u64);
            let mut clock = 0.0;
            let mut state = 0;
            loop {
                let (t, target, _) = sim.step(state, &mut rng);
                clock += t;
                match target {
                    Target::Absorb => return clock,
                    Target::State(s) => state = s,
                }
            }
        })
        .collect::<Vec<f64>>();
    Ok(mean_ci(&times, seed))
}

/// Exits from `state`, each with fresh clocks: counts per edge and the
/// mean sojourn time.
pub fn sample_departures(
    km: &KernelModel,
    state: usize,
    exits: usize,
    seed: u64,
    opts: &SimOptions,
) -> Result<DepartureStats> {
    if exits < 2 {
        return Err(Error::Domain("need at least two exits".into()));
    }
    let sim = Simulator::new(km, state, opts)?;
    let mut rng = rng_for(seed, 0);
    let mut edge_counts = vec![0u64; km.race(state).edges.len()];
    let mut sojourns = Vec::with_capacity(exits);
    for _ in 0..exits {
        let (t, _, edge) = sim.step(state, &mut rng);
        edge_counts[edge] += 1;
        sojourns.push(t);
    }
    let ci = mean_ci(&sojourns, seed);
    Ok(DepartureStats {
        edge_counts,
        mean_sojourn: ci.estimate,
        sojourn_std_error: ci.half_width / Z95,
    })
}

/// Sequential path from state 0 over `cycles` regeneration cycles (or until absorption).
pub fn trace(km: &KernelModel, cycles: usize, seed: u64, opts: &SimOptions) -> Result<Vec<TraceRow>> {
    let sim = Simulator::new(km, 0, opts)?;
    let mut rng = rng_for(seed, 0);
    let mut rows = Vec::new();
    let mut now = 0.0;
    let mut state = 0;
    let mut done = 0;
    while done < cycles {
        let (t, target, _) = sim.step(state, &mut rng);
        rows.push(TraceRow {
            state,
            entry_time: now,
            sojourn: t,
        });
        now += t;
        match target {
            Target::State(s) => {
                if s == 0 {
                    done += 1;
                }
                state = s;
            }
            Target::Absorb => break,
        }
    }
    Ok(rows)
}

pub fn trace_csv(km: &KernelModel, rows: &[TraceRow]) -> String {
    let mut out = String::from("state,entry_time,sojourn\n");
    for r in rows {
        out.push_str(&format!("{},{:.14e},{:.14e}\n", km.label(r.state), r.entry_time, r.sojourn));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{Clock, Edge, Provenance, Race};

    fn single(dist: Distribution) -> KernelModel {
        let race = Race {
            edges: vec![Edge {
                clock: Clock::new("T", dist, "x"),
                target: Target::Absorb,
                provenance: Provenance::Explicit,
            }],
        };
        KernelModel::from_races(Variant::Absorbing, vec!["S0".into()], vec![true], vec![race]).unwrap()
    }

    #[test]
    fn deterministic_exit_has_zero_variance() {
        let km = single(Distribution::deterministic(5.0).unwrap());
        let est = simulate_mttf(&km, 200, 7, &SimOptions::default()).unwrap();
        assert_eq!(est.estimate, 5.0);
        assert_eq!(est.half_width, 0.0);
    }

    #[test]
    fn reproducible_from_seed() {
        let km = single(Distribution::hypoexponential(1.0, 3.0).unwrap());
        let a = simulate_mttf(&km, 500, 11, &SimOptions::default()).unwrap();
        let b = simulate_mttf(&km, 500, 11, &SimOptions::default()).unwrap();
        let c = simulate_mttf(&km, 500, 12, &SimOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.estimate, c.estimate);
    }

    #[test]
    fn deterministic_ties_split_evenly() {
        let d = Distribution::deterministic(1.0).unwrap();
        let edge = |t| Edge {
            clock: Clock::new("T", d, "x"),
            target: t,
            provenance: Provenance::Explicit,
        };
        let races = vec![
            Race { edges: vec![edge(Target::State(1)), edge(Target::Absorb)] },
            Race { edges: vec![edge(Target::State(0))] },
        ];
        let km = KernelModel::from_races(Variant::Absorbing, vec!["a".into(), "b".into()], vec![true, true], races)
            .unwrap();
        let stats = sample_departures(&km, 0, 20_000, 3, &SimOptions::default()).unwrap();
        let frac = stats.edge_counts[0] as f64 / 20_000.0;
        assert!((frac - 0.5).abs() < 0.02, "{frac}");
        assert_eq!(stats.mean_sojourn, 1.0);
    }

    #[test]
    fn wrong_variant_and_small_counts_rejected() {
        let km = single(Distribution::exponential(1.0).unwrap());
        assert!(simulate_availability(&km, 1000, 1, &SimOptions::default()).is_err());
        assert!(simulate_mttf(&km, 10, 1, &SimOptions::default()).is_err());
    }
}
