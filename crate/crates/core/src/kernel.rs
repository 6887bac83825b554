//! Semi-Markov kernel as a set of clock races.
//!
//! Every state owns a race: a set of independent clocks started on entry.
//! The first clock to expire selects the next state, so the kernel entry of
//! edge `a -> b` with trigger `T` is
//!
//! ```text
//! K_ab(t) = ∫_0^t  Π_{c ≠ T} (1 - F_c(τ)) dF_T(τ)
//! ```
//!
//! and the mean sojourn time in `a` is `∫_0^∞ Π_c (1 - F_c(τ)) dτ`.
//! Deterministic triggers are evaluated at their atom; deterministic
//! competitors cut the integration domain at theirs.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureSettings};
use crate::statespace::{StateKind, StateSpace};
use crate::topology::{ParameterSet, Topology};

/// Tolerance on `Σ_b P[a][b] + absorption(a) = 1`.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Full availability model with recovery back to the perfect state.
    Full,
    /// Reliability model: leaving the up-set absorbs.
    Absorbing,
}

/// Whether a transition is stated explicitly by the reliability kernel
/// equations or reconstructed from the competing-clock rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Explicit,
    Reconstructed,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Provenance::Explicit => "explicit",
            Provenance::Reconstructed => "reconstructed",
        })
    }
}

/// A named holding-time clock and the parameter entries it depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct Clock {
    pub symbol: String,
    pub dist: Distribution,
    pub sources: Vec<String>,
}

impl Clock {
    pub fn new(symbol: impl Into<String>, dist: Distribution, source: impl Into<String>) -> Self {
        Clock {
            symbol: symbol.into(),
            dist,
            sources: vec![source.into()],
        }
    }
}

/// Minimum of several exponential aging clocks, realized as one exponential
/// with the summed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateClock {
    pub name: String,
    /// (parameter entry, rate) of each constituent.
    pub constituents: Vec<(String, f64)>,
}

impl AggregateClock {
    pub fn new(name: impl Into<String>) -> Self {
        AggregateClock {
            name: name.into(),
            constituents: Vec::new(),
        }
    }

    pub fn total_rate(&self) -> f64 {
        self.constituents.iter().map(|(_, r)| r).sum()
    }

    /// `None` when there are no constituents; such a clock never fires.
    pub fn into_clock(self) -> Option<Clock> {
        if self.constituents.is_empty() {
            return None;
        }
        let rate = self.total_rate();
        Some(Clock {
            symbol: self.name,
            dist: Distribution::Exponential { rate },
            sources: self.constituents.into_iter().map(|(s, _)| s).collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    State(usize),
    Absorb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub clock: Clock,
    pub target: Target,
    pub provenance: Provenance,
}

/// The clocks active in one state. All outgoing transitions of the state
/// share this clock set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Race {
    pub edges: Vec<Edge>,
}

/// View of one kernel entry: trigger, competitors and target.
#[derive(Debug, Clone)]
pub struct TransitionSpec<'a> {
    pub source: usize,
    pub target: usize,
    pub trigger: &'a Clock,
    pub competitors: Vec<&'a Clock>,
    pub provenance: Provenance,
}

/// One-step transition probabilities plus the per-row absorption probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Tpm {
    pub p: DMatrix<f64>,
    pub absorption: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct KernelModel {
    pub variant: Variant,
    labels: Vec<String>,
    up: Vec<bool>,
    /// Index of each model state in the full state space.
    full_index: Vec<usize>,
    races: Vec<Race>,
}

impl Race {
    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn clocks(&self) -> impl Iterator<Item = &Clock> {
        self.edges.iter().map(|e| &e.clock)
    }

    fn dists(&self) -> Vec<Distribution> {
        self.edges.iter().map(|e| e.clock.dist).collect()
    }

    fn competitors_of(&self, k: usize) -> Vec<Distribution> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .map(|(_, e)| e.clock.dist)
            .collect()
    }

    /// K(t) for edge `k`; `t` may be infinite.
    pub fn edge_probability(&self, k: usize, t: f64, quad: &QuadratureSettings) -> Result<f64> {
        win_probability(&self.edges[k].clock.dist, &self.competitors_of(k), t, quad)
    }

    /// `∫ τ dK(τ)` for edge `k`.
    pub fn edge_first_moment(&self, k: usize, quad: &QuadratureSettings) -> Result<f64> {
        win_first_moment(&self.edges[k].clock.dist, &self.competitors_of(k), quad)
    }

    pub fn mean_sojourn(&self, quad: &QuadratureSettings) -> Result<f64> {
        sojourn_mean(&self.dists(), quad)
    }
}

/// Time beyond which the product of the clocks' survival functions is at most `eps`.
fn horizon(clocks: &[Distribution], eps: f64) -> f64 {
    let exp_total: f64 = clocks.iter().filter_map(|d| d.exp_rate()).sum();
    let mut h = if exp_total > 0.0 {
        -eps.ln() / exp_total
    } else {
        f64::INFINITY
    };
    for d in clocks.iter().filter(|d| !d.is_exponential()) {
        h = h.min(d.tail_time(eps));
    }
    h
}

fn survival_product(competitors: &[Distribution], tau: f64) -> f64 {
    let mut s = 1.0;
    for c in competitors {
        s *= c.survival_at(tau);
        if s == 0.0 {
            break;
        }
    }
    s
}

/// Probability that `trigger` fires first, no later than `t`.
pub fn win_probability(
    trigger: &Distribution,
    competitors: &[Distribution],
    t: f64,
    quad: &QuadratureSettings,
) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    if quad.fast_path && trigger.is_exponential() && competitors.iter().all(|c| c.is_exponential()) {
        let beta = trigger.exp_rate().unwrap_or_default();
        let total = beta + competitors.iter().filter_map(|c| c.exp_rate()).sum::<f64>();
        let reached = if t.is_infinite() {
            1.0
        } else {
            -(-total * t).exp_m1()
        };
        return Ok(beta / total * reached);
    }
    if let Some(d) = trigger.atom() {
        if d > t {
            return Ok(0.0);
        }
        return Ok(atom_win(d, competitors));
    }
    let mut all = competitors.to_vec();
    all.push(*trigger);
    let upper = t.min(horizon(&all, quad.truncation));
    let r = integrate(
        |tau| trigger.pdf_at(tau) * survival_product(competitors, tau),
        0.0,
        upper,
        quad.rel_tol,
        quad.max_subdivisions,
    )?;
    Ok(r.value)
}

/// Survival of all competitors at the atom `d` of a deterministic trigger.
/// Deterministic competitors sharing the same atom split the win evenly.
fn atom_win(d: f64, competitors: &[Distribution]) -> f64 {
    let mut p = 1.0;
    let mut ties = 0usize;
    for c in competitors {
        match c.atom() {
            Some(a) if a < d => return 0.0,
            Some(a) if a == d => ties += 1,
            Some(_) => {}
            None => p *= c.survival_at(d),
        }
    }
    p / (1 + ties) as f64
}

fn win_first_moment(
    trigger: &Distribution,
    competitors: &[Distribution],
    quad: &QuadratureSettings,
) -> Result<f64> {
    if let Some(d) = trigger.atom() {
        return Ok(d * atom_win(d, competitors));
    }
    let mut all = competitors.to_vec();
    all.push(*trigger);
    let upper = horizon(&all, quad.truncation);
    Ok(integrate(
        |tau| tau * trigger.pdf_at(tau) * survival_product(competitors, tau),
        0.0,
        upper,
        quad.rel_tol,
        quad.max_subdivisions,
    )?
    .value)
}

/// Mean time until the first of `clocks` fires.
pub fn sojourn_mean(clocks: &[Distribution], quad: &QuadratureSettings) -> Result<f64> {
    if clocks.is_empty() {
        return Err(Error::Structural(
            "sojourn time of a state without clocks diverges".into(),
        ));
    }
    if quad.fast_path && clocks.iter().all(|c| c.is_exponential()) {
        return Ok(1.0 / clocks.iter().filter_map(|c| c.exp_rate()).sum::<f64>());
    }
    let upper = horizon(clocks, quad.truncation);
    if !upper.is_finite() {
        return Err(Error::Structural("sojourn time integral diverges".into()));
    }
    Ok(integrate(
        |tau| survival_product(clocks, tau),
        0.0,
        upper,
        quad.rel_tol,
        quad.max_subdivisions,
    )?
    .value)
}

fn aging_rate(d: &Distribution) -> f64 {
    d.exp_rate()
        .expect("aging clocks are exponential after validation")
}

struct Builder<'a> {
    topo: &'a Topology,
    params: &'a ParameterSet,
}

/// Aging sums over SF and/or VM index sets.
fn add_aging(agg: &mut AggregateClock, params: &ParameterSet, idx: &[usize], sf: bool, vm: bool) {
    for &k in idx {
        if sf {
            agg.constituents
                .push((format!("sf.{}.aging", k + 1), aging_rate(&params.sf[k].aging)));
        }
        if vm {
            agg.constituents
                .push((format!("vm.{}.aging", k + 1), aging_rate(&params.vm[k].aging)));
        }
    }
}

fn add_vmm_aging(agg: &mut AggregateClock, params: &ParameterSet, idx: &[usize]) {
    for &j in idx {
        agg.constituents
            .push((format!("vmm.{}.aging", j + 1), aging_rate(&params.vmm[j].aging)));
    }
}

impl Builder<'_> {
    fn same_host_peers(&self, i: usize) -> Vec<usize> {
        let u = self.topo.host_of(i);
        self.topo
            .host_components(u)
            .into_iter()
            .filter(|&k| k != i)
            .collect()
    }

    fn sf_aging(&self, i: usize) -> Clock {
        Clock::new(format!("T_as{}", i + 1), self.params.sf[i].aging, format!("sf.{}.aging", i + 1))
    }

    fn vm_aging(&self, i: usize) -> Clock {
        Clock::new(format!("T_av{}", i + 1), self.params.vm[i].aging, format!("vm.{}.aging", i + 1))
    }

    fn vmm_aging(&self, j: usize) -> Clock {
        Clock::new(format!("T_am{}", j + 1), self.params.vmm[j].aging, format!("vmm.{}.aging", j + 1))
    }

    /// Clocks of the perfect state: every component's aging clock.
    fn perfect(&self) -> Vec<(Clock, StateKind)> {
        let m = self.topo.num_sfs();
        let n = self.topo.num_hosts();
        let mut out = Vec::with_capacity(2 * m + n);
        out.extend((0..m).map(|i| (self.sf_aging(i), StateKind::SfUnstable(i))));
        out.extend((0..m).map(|i| (self.vm_aging(i), StateKind::VmUnstable(i))));
        out.extend((0..n).map(|j| (self.vmm_aging(j), StateKind::VmmUnstable(j))));
        out
    }

    /// Clocks of an unstable state. The first entry is the return to the
    /// perfect state (failover or migration).
    fn unstable(&self, kind: StateKind) -> Vec<(Clock, StateKind)> {
        let p = self.params;
        let topo = self.topo;
        let mut out: Vec<(Option<Clock>, StateKind)> = Vec::new();
        match kind {
            StateKind::SfUnstable(i) => {
                let u = topo.host_of(i);
                let peers = self.same_host_peers(i);
                let others = topo.other_host_components(u);
                let (i1, u1) = (i + 1, u + 1);
                let agg = |name: String, idx: &[usize], sf: bool, vm: bool| {
                    let mut a = AggregateClock::new(name);
                    add_aging(&mut a, p, idx, sf, vm);
                    a.into_clock()
                };
                let mut dmh = AggregateClock::new(format!("T_dmh{u1}"));
                add_vmm_aging(&mut dmh, p, &topo.other_vmms(u));
                out.push((
                    Some(Clock::new(format!("T_rs{i1}"), p.sf[i].failover, format!("sf.{i1}.failover"))),
                    StateKind::Perfect,
                ));
                out.push((
                    Some(Clock::new(format!("T_fs{i1}"), p.sf[i].failure, format!("sf.{i1}.failure"))),
                    StateKind::Failed,
                ));
                out.push((agg(format!("T_ds{i1}"), &peers, true, false), StateKind::SfHostRestart(u)));
                out.push((agg(format!("T_dsh{u1}"), &others, true, false), StateKind::SfSystemRestart));
                out.push((Some(self.vm_aging(i)), StateKind::VmPortionRestart(i)));
                out.push((agg(format!("T_dv{i1}"), &peers, false, true), StateKind::VmHostRestart(u)));
                out.push((agg(format!("T_dvh{u1}"), &others, false, true), StateKind::VmSystemRestart));
                out.push((Some(self.vmm_aging(u)), StateKind::VmmHostReboot(u)));
                out.push((dmh.into_clock(), StateKind::VmmSystemReboot));
            }
            StateKind::VmUnstable(i) => {
                let u = topo.host_of(i);
                let peers = self.same_host_peers(i);
                let others = topo.other_host_components(u);
                let (i1, u1) = (i + 1, u + 1);
                let mut dsv = AggregateClock::new(format!("T_dsv{i1}"));
                add_aging(&mut dsv, p, &peers, true, true);
                let mut dsvh = AggregateClock::new(format!("T_dsvh{u1}"));
                add_aging(&mut dsvh, p, &others, true, true);
                let mut dmh = AggregateClock::new(format!("T_dmh{u1}"));
                add_vmm_aging(&mut dmh, p, &topo.other_vmms(u));
                out.push((
                    Some(Clock::new(format!("T_rv{i1}"), p.vm[i].failover, format!("vm.{i1}.failover"))),
                    StateKind::Perfect,
                ));
                out.push((
                    Some(Clock::new(format!("T_fv{i1}"), p.vm[i].failure, format!("vm.{i1}.failure"))),
                    StateKind::Failed,
                ));
                out.push((Some(self.sf_aging(i)), StateKind::VmPortionRestart(i)));
                out.push((dsv.into_clock(), StateKind::VmHostRestart(u)));
                out.push((dsvh.into_clock(), StateKind::VmSystemRestart));
                out.push((Some(self.vmm_aging(u)), StateKind::VmmHostReboot(u)));
                out.push((dmh.into_clock(), StateKind::VmmSystemReboot));
            }
            StateKind::VmmUnstable(j) => {
                let j1 = j + 1;
                let mut asvh = AggregateClock::new(format!("T_asvh{j1}"));
                add_aging(&mut asvh, p, &topo.host_components(j), true, true);
                let mut dch = AggregateClock::new(format!("T_dch{j1}"));
                add_aging(&mut dch, p, &topo.other_host_components(j), true, true);
                add_vmm_aging(&mut dch, p, &topo.other_vmms(j));
                out.push((
                    Some(Clock::new(format!("T_rm{j1}"), p.vmm[j].migration, format!("vmm.{j1}.migration"))),
                    StateKind::Perfect,
                ));
                out.push((
                    Some(Clock::new(format!("T_fm{j1}"), p.vmm[j].failure, format!("vmm.{j1}.failure"))),
                    StateKind::Failed,
                ));
                out.push((asvh.into_clock(), StateKind::VmmHostReboot(j)));
                out.push((dch.into_clock(), StateKind::VmmSystemReboot));
            }
            other => unreachable!("{other:?} is not an unstable state"),
        }
        out.into_iter()
            .filter_map(|(c, k)| c.map(|c| (c, k)))
            .collect()
    }

    /// Clocks of a recovery or failed state. The first entry is the return
    /// to the perfect state; the rest are escalations.
    fn recovery(&self, kind: StateKind, escalation: bool) -> Vec<(Clock, StateKind)> {
        let p = self.params;
        let topo = self.topo;
        let m = topo.num_sfs();
        let n = topo.num_hosts();
        let all_vms: Vec<usize> = (0..m).collect();
        let all_vmms: Vec<usize> = (0..n).collect();
        let aav = || {
            let mut a = AggregateClock::new("T_aav");
            add_aging(&mut a, p, &all_vms, false, true);
            a.into_clock()
        };
        let aam = || {
            let mut a = AggregateClock::new("T_aam");
            add_vmm_aging(&mut a, p, &all_vmms);
            a.into_clock()
        };
        let (ret, esc): (Clock, Vec<(Option<Clock>, StateKind)>) = match kind {
            StateKind::Failed => (Clock::new("T_R", p.system.repair, "system.repair"), vec![]),
            StateKind::SfSystemRestart => (
                Clock::new("T_RS", p.system.restart_all_sfs, "system.restart_all_sfs"),
                vec![
                    (aav(), StateKind::VmSystemRestart),
                    (aam(), StateKind::VmmSystemReboot),
                ],
            ),
            StateKind::VmSystemRestart => (
                Clock::new("T_RV", p.system.restart_all_sfs_vms, "system.restart_all_sfs_vms"),
                vec![(aam(), StateKind::VmmSystemReboot)],
            ),
            StateKind::VmmSystemReboot => (
                Clock::new("T_RM", p.system.reboot_all_vmms, "system.reboot_all_vmms"),
                vec![],
            ),
            StateKind::VmPortionRestart(i) => (
                Clock::new(format!("T_re{}", i + 1), p.vm[i].restart, format!("vm.{}.restart", i + 1)),
                vec![],
            ),
            StateKind::SfHostRestart(j) => {
                let mut avh = AggregateClock::new(format!("T_avh{}", j + 1));
                add_aging(&mut avh, p, &topo.host_components(j), false, true);
                (
                    Clock::new(
                        format!("T_ras{}", j + 1),
                        p.host[j].restart_sfs,
                        format!("host.{}.restart_sfs", j + 1),
                    ),
                    vec![
                        (avh.into_clock(), StateKind::VmHostRestart(j)),
                        (Some(self.vmm_aging(j)), StateKind::VmmHostReboot(j)),
                    ],
                )
            }
            StateKind::VmHostRestart(j) => (
                Clock::new(
                    format!("T_rav{}", j + 1),
                    p.host[j].restart_sfs_vms,
                    format!("host.{}.restart_sfs_vms", j + 1),
                ),
                vec![(Some(self.vmm_aging(j)), StateKind::VmmHostReboot(j))],
            ),
            StateKind::VmmHostReboot(j) => (
                Clock::new(format!("T_ram{}", j + 1), p.host[j].reboot, format!("host.{}.reboot", j + 1)),
                vec![],
            ),
            other => unreachable!("{other:?} is not a recovery state"),
        };
        let mut out = vec![(ret, StateKind::Perfect)];
        if escalation {
            out.extend(esc.into_iter().filter_map(|(c, k)| c.map(|c| (c, k))));
        }
        out
    }
}

/// Full availability kernel. `escalation` adds the aging-during-recovery edges.
pub fn build_full_kernel(
    ss: &StateSpace,
    topo: &Topology,
    params: &ParameterSet,
    escalation: bool,
) -> Result<KernelModel> {
    params.validate(topo)?;
    let b = Builder { topo, params };
    let mut races = Vec::with_capacity(ss.len());
    for s in ss.states() {
        let (clocks, first_explicit_only) = match s.kind {
            StateKind::Perfect => (b.perfect(), false),
            StateKind::SfUnstable(_) | StateKind::VmUnstable(_) | StateKind::VmmUnstable(_) => {
                (b.unstable(s.kind), true)
            }
            _ => (b.recovery(s.kind, escalation), false),
        };
        let all_explicit = s.kind == StateKind::Perfect;
        let edges = clocks
            .into_iter()
            .enumerate()
            .map(|(k, (clock, target))| {
                let explicit = all_explicit || (first_explicit_only && k == 0);
                Ok(Edge {
                    clock,
                    target: Target::State(ss.index_of(target)?),
                    provenance: if explicit {
                        Provenance::Explicit
                    } else {
                        Provenance::Reconstructed
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        races.push(Race { edges });
    }
    Ok(KernelModel {
        variant: Variant::Full,
        labels: (0..ss.len()).map(|i| ss.label(i)).collect(),
        up: ss.states().iter().map(|s| s.is_up()).collect(),
        full_index: (0..ss.len()).collect(),
        races,
    })
}

/// Reliability kernel over the perfect and unstable states (`1 + 2m + n`
/// states, perfect first). Any clock other than failover/migration leaves
/// the up-set and absorbs.
pub fn build_absorbing_kernel(
    ss: &StateSpace,
    topo: &Topology,
    params: &ParameterSet,
) -> Result<KernelModel> {
    params.validate(topo)?;
    let b = Builder { topo, params };
    let full_index = ss.up_state_indices();
    let compact = |full: usize| full_index.iter().position(|&f| f == full);
    let mut races = Vec::with_capacity(full_index.len());
    for &fi in &full_index {
        let kind = ss.state(fi).kind;
        let clocks = if kind == StateKind::Perfect {
            b.perfect()
        } else {
            b.unstable(kind)
        };
        let edges = clocks
            .into_iter()
            .map(|(clock, target)| {
                let full_target = ss.index_of(target)?;
                let target = match compact(full_target) {
                    Some(c) if kind == StateKind::Perfect || target == StateKind::Perfect => {
                        Target::State(c)
                    }
                    _ => Target::Absorb,
                };
                Ok(Edge {
                    clock,
                    target,
                    provenance: Provenance::Explicit,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        races.push(Race { edges });
    }
    Ok(KernelModel {
        variant: Variant::Absorbing,
        labels: full_index.iter().map(|&i| ss.label(i)).collect(),
        up: vec![true; full_index.len()],
        full_index,
        races,
    })
}

impl KernelModel {
    /// A kernel assembled directly from races, for custom models and tests.
    pub fn from_races(variant: Variant, labels: Vec<String>, up: Vec<bool>, races: Vec<Race>) -> Result<Self> {
        let len = races.len();
        if labels.len() != len || up.len() != len {
            return Err(Error::Domain("labels, up flags and races must have equal length".into()));
        }
        for (s, r) in races.iter().enumerate() {
            for e in &r.edges {
                if let Target::State(t) = e.target {
                    if t >= len {
                        return Err(Error::Domain(format!("state {s} targets missing state {t}")));
                    }
                }
            }
        }
        Ok(KernelModel {
            variant,
            labels,
            up,
            full_index: (0..len).collect(),
            races,
        })
    }

    pub fn num_states(&self) -> usize {
        self.races.len()
    }

    pub fn race(&self, state: usize) -> &Race {
        &self.races[state]
    }

    pub fn races(&self) -> &[Race] {
        &self.races
    }

    pub fn label(&self, state: usize) -> &str {
        &self.labels[state]
    }

    pub fn is_up(&self, state: usize) -> bool {
        self.up[state]
    }

    /// Index of a model state in the full state space.
    pub fn full_index(&self, state: usize) -> usize {
        self.full_index[state]
    }

    /// Every kernel entry with a state target.
    pub fn transitions(&self) -> Vec<TransitionSpec<'_>> {
        let mut out = Vec::new();
        for (source, race) in self.races.iter().enumerate() {
            for (k, e) in race.edges.iter().enumerate() {
                if let Target::State(target) = e.target {
                    out.push(TransitionSpec {
                        source,
                        target,
                        trigger: &e.clock,
                        competitors: race
                            .edges
                            .iter()
                            .enumerate()
                            .filter(|(j, _)| *j != k)
                            .map(|(_, c)| &c.clock)
                            .collect(),
                        provenance: e.provenance,
                    });
                }
            }
        }
        out
    }

    /// `P = lim_{t→∞} K(t)` with the absorption probability of each row.
    pub fn one_step_tpm(&self, quad: &QuadratureSettings) -> Result<Tpm> {
        let n = self.num_states();
        let mut p = DMatrix::zeros(n, n);
        let mut absorption = vec![0.0; n];
        for (s, race) in self.races.iter().enumerate() {
            if race.is_empty() {
                continue;
            }
            let mut probs = Vec::with_capacity(race.edges.len());
            for k in 0..race.edges.len() {
                probs.push(race.edge_probability(k, f64::INFINITY, quad).map_err(|e| {
                    annotate(e, &format!("{} via {}", self.labels[s], race.edges[k].clock.symbol))
                })?);
            }
            let row: f64 = probs.iter().sum();
            if (row - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Consistency(format!(
                    "row {} sums to {row:.15} (|1 - sum| > {ROW_SUM_TOL:e})",
                    self.labels[s]
                )));
            }
            // A dominant entry is taken as the complement of the small ones:
            // its absolute error then matches theirs, and the row sums to one.
            let (big, &pmax) = probs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("race has edges");
            if pmax > 0.5 {
                let rest: f64 = probs.iter().enumerate().filter(|(k, _)| *k != big).map(|(_, x)| x).sum();
                probs[big] = (1.0 - rest).max(0.0);
            }
            for (k, prob) in probs.into_iter().enumerate() {
                match race.edges[k].target {
                    Target::State(t) => p[(s, t)] += prob,
                    Target::Absorb => absorption[s] += prob,
                }
            }
        }
        Ok(Tpm { p, absorption })
    }

    pub fn mean_sojourn(&self, state: usize, quad: &QuadratureSettings) -> Result<f64> {
        self.races[state]
            .mean_sojourn(quad)
            .map_err(|e| annotate(e, &self.labels[state]))
    }

    /// Mean sojourn times of every state (`NaN` for states without clocks).
    pub fn sojourn_vector(&self, quad: &QuadratureSettings) -> Result<Vec<f64>> {
        (0..self.num_states())
            .map(|s| {
                if self.races[s].is_empty() {
                    Ok(f64::NAN)
                } else {
                    self.mean_sojourn(s, quad)
                }
            })
            .collect()
    }

    /// Parameter entries that any clock of this kernel depends on.
    pub fn parameter_sources(&self) -> BTreeSet<String> {
        self.races
            .iter()
            .flat_map(|r| r.clocks())
            .flat_map(|c| c.sources.iter().cloned())
            .collect()
    }

    /// Plain-text audit of every edge: source, target, trigger, competitors, provenance.
    pub fn audit_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "source\ttarget\ttrigger\tcompetitors\tprovenance");
        for (s, race) in self.races.iter().enumerate() {
            for (k, e) in race.edges.iter().enumerate() {
                let target = match e.target {
                    Target::State(t) => self.labels[t].clone(),
                    Target::Absorb => "ABSORB".into(),
                };
                let comps: Vec<&str> = race
                    .edges
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != k)
                    .map(|(_, c)| c.clock.symbol.as_str())
                    .collect();
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}",
                    self.labels[s],
                    target,
                    e.clock.symbol,
                    comps.join(","),
                    e.provenance
                );
            }
        }
        out
    }
}

fn annotate(e: Error, context: &str) -> Error {
    match e {
        Error::Quadrature {
            context: c,
            achieved,
            requested,
        } => Error::Quadrature {
            context: format!("{context}: {c}"),
            achieved,
            requested,
        },
        Error::Structural(msg) => Error::Structural(format!("{context}: {msg}")),
        other => other,
    }
}
