//! Continuous-time Markov chain reference solver for all-exponential models.
//!
//! The generator is assembled component by component from the recovery
//! rules (which component ages, and where it sits relative to the unstable
//! one), without the aggregate clocks of the kernel, so it serves as an
//! independent check of the semi-Markov pipeline.

use nalgebra::{DMatrix, DVector};

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::statespace::{StateKind, StateSpace};
use crate::topology::{ParameterSet, Topology};

#[derive(Debug, Clone)]
pub struct CtmcModel {
    pub labels: Vec<String>,
    pub up: Vec<bool>,
    /// Infinitesimal generator; rows sum to zero.
    pub q: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct CtmcSteadyState {
    pub pi: Vec<f64>,
    pub availability: f64,
    pub unavailability: f64,
}

fn rate(d: &Distribution) -> Result<f64> {
    d.exp_rate()
        .ok_or_else(|| Error::Domain("oracle requires exponential parameters".into()))
}

/// Which component ages.
#[derive(Clone, Copy)]
enum Comp {
    Sf(usize),
    Vm(usize),
    Vmm(usize),
}

impl CtmcModel {
    pub fn build(topo: &Topology, params: &ParameterSet, escalation: bool) -> Result<Self> {
        params.validate(topo)?;
        if !params.all_exponential() {
            return Err(Error::Domain("oracle requires exponential parameters".into()));
        }
        let ss = StateSpace::build(topo);
        let size = ss.len();
        let m = topo.num_sfs();
        let n = topo.num_hosts();
        let mut q = DMatrix::zeros(size, size);

        let mut comps = Vec::new();
        comps.extend((0..m).map(Comp::Sf));
        comps.extend((0..m).map(Comp::Vm));
        comps.extend((0..n).map(Comp::Vmm));
        let aging = |c: Comp| -> Result<f64> {
            match c {
                Comp::Sf(k) => rate(&params.sf[k].aging),
                Comp::Vm(k) => rate(&params.vm[k].aging),
                Comp::Vmm(j) => rate(&params.vmm[j].aging),
            }
        };
        let host = |c: Comp| match c {
            Comp::Sf(k) | Comp::Vm(k) => topo.host_of(k),
            Comp::Vmm(j) => j,
        };

        for s in ss.states() {
            let mut out: Vec<(StateKind, f64)> = Vec::new();
            match s.kind {
                StateKind::Perfect => {
                    for &c in &comps {
                        let target = match c {
                            Comp::Sf(k) => StateKind::SfUnstable(k),
                            Comp::Vm(k) => StateKind::VmUnstable(k),
                            Comp::Vmm(j) => StateKind::VmmUnstable(j),
                        };
                        out.push((target, aging(c)?));
                    }
                }
                StateKind::SfUnstable(i) => {
                    let u = topo.host_of(i);
                    out.push((StateKind::Perfect, rate(&params.sf[i].failover)?));
                    out.push((StateKind::Failed, rate(&params.sf[i].failure)?));
                    for &c in &comps {
                        let target = match c {
                            Comp::Sf(k) if k == i => continue,
                            Comp::Sf(_) if host(c) == u => StateKind::SfHostRestart(u),
                            Comp::Sf(_) => StateKind::SfSystemRestart,
                            Comp::Vm(k) if k == i => StateKind::VmPortionRestart(i),
                            Comp::Vm(_) if host(c) == u => StateKind::VmHostRestart(u),
                            Comp::Vm(_) => StateKind::VmSystemRestart,
                            Comp::Vmm(j) if j == u => StateKind::VmmHostReboot(u),
                            Comp::Vmm(_) => StateKind::VmmSystemReboot,
                        };
                        out.push((target, aging(c)?));
                    }
                }
                StateKind::VmUnstable(i) => {
                    let u = topo.host_of(i);
                    out.push((StateKind::Perfect, rate(&params.vm[i].failover)?));
                    out.push((StateKind::Failed, rate(&params.vm[i].failure)?));
                    for &c in &comps {
                        let target = match c {
                            Comp::Vm(k) if k == i => continue,
                            Comp::Sf(k) if k == i => StateKind::VmPortionRestart(i),
                            Comp::Sf(_) | Comp::Vm(_) if host(c) == u => StateKind::VmHostRestart(u),
                            Comp::Sf(_) | Comp::Vm(_) => StateKind::VmSystemRestart,
                            Comp::Vmm(j) if j == u => StateKind::VmmHostReboot(u),
                            Comp::Vmm(_) => StateKind::VmmSystemReboot,
                        };
                        out.push((target, aging(c)?));
                    }
                }
                StateKind::VmmUnstable(j) => {
                    out.push((StateKind::Perfect, rate(&params.vmm[j].migration)?));
                    out.push((StateKind::Failed, rate(&params.vmm[j].failure)?));
                    for &c in &comps {
                        let target = match c {
                            Comp::Vmm(k) if k == j => continue,
                            Comp::Vmm(_) => StateKind::VmmSystemReboot,
                            _ if host(c) == j => StateKind::VmmHostReboot(j),
                            _ => StateKind::VmmSystemReboot,
                        };
                        out.push((target, aging(c)?));
                    }
                }
                StateKind::Failed => out.push((StateKind::Perfect, rate(&params.system.repair)?)),
                StateKind::SfSystemRestart => {
                    out.push((StateKind::Perfect, rate(&params.system.restart_all_sfs)?));
                    if escalation {
                        for &c in &comps {
                            match c {
                                Comp::Vm(_) => out.push((StateKind::VmSystemRestart, aging(c)?)),
                                Comp::Vmm(_) => out.push((StateKind::VmmSystemReboot, aging(c)?)),
                                Comp::Sf(_) => {}
                            }
                        }
                    }
                }
                StateKind::VmSystemRestart => {
                    out.push((StateKind::Perfect, rate(&params.system.restart_all_sfs_vms)?));
                    if escalation {
                        for &c in &comps {
                            if let Comp::Vmm(_) = c {
                                out.push((StateKind::VmmSystemReboot, aging(c)?));
                            }
                        }
                    }
                }
                StateKind::VmmSystemReboot => {
                    out.push((StateKind::Perfect, rate(&params.system.reboot_all_vmms)?))
                }
                StateKind::VmPortionRestart(i) => {
                    out.push((StateKind::Perfect, rate(&params.vm[i].restart)?))
                }
                StateKind::SfHostRestart(j) => {
                    out.push((StateKind::Perfect, rate(&params.host[j].restart_sfs)?));
                    if escalation {
                        for &c in &comps {
                            match c {
                                Comp::Vm(_) if host(c) == j => {
                                    out.push((StateKind::VmHostRestart(j), aging(c)?))
                                }
                                Comp::Vmm(k) if k == j => out.push((StateKind::VmmHostReboot(j), aging(c)?)),
                                _ => {}
                            }
                        }
                    }
                }
                StateKind::VmHostRestart(j) => {
                    out.push((StateKind::Perfect, rate(&params.host[j].restart_sfs_vms)?));
                    if escalation {
                        out.push((StateKind::VmmHostReboot(j), aging(Comp::Vmm(j))?));
                    }
                }
                StateKind::VmmHostReboot(j) => {
                    out.push((StateKind::Perfect, rate(&params.host[j].reboot)?))
                }
            }
            for (target, r) in out {
                let t = ss.index_of(target)?;
                q[(s.index, t)] += r;
                q[(s.index, s.index)] -= r;
            }
        }
        Ok(CtmcModel {
            labels: (0..size).map(|i| ss.label(i)).collect(),
            up: ss.states().iter().map(|s| s.is_up()).collect(),
            q,
        })
    }

    /// Steady state from the balance equations. With `π_0` fixed to one,
    /// the remaining reachable states solve `π_R (-Q_RR) = Q_0R`.
    pub fn steady_state(&self) -> Result<CtmcSteadyState> {
        let size = self.q.nrows();
        let mut reachable = vec![false; size];
        reachable[0] = true;
        let mut stack = vec![0];
        while let Some(s) = stack.pop() {
            for t in 0..size {
                if t != s && self.q[(s, t)] > 0.0 && !reachable[t] {
                    reachable[t] = true;
                    stack.push(t);
                }
            }
        }
        let rest: Vec<usize> = (1..size).filter(|&i| reachable[i]).collect();
        let k = rest.len();
        // transpose of -Q_RR so that the unknown is a column vector
        let a = DMatrix::from_fn(k, k, |r, c| -self.q[(rest[c], rest[r])]);
        let b = DVector::from_fn(k, |r, _| self.q[(0, rest[r])]);
        let x = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Structural("generator balance equations are singular".into()))?;
        let mut pi = vec![0.0; size];
        pi[0] = 1.0;
        for (r, &i) in rest.iter().enumerate() {
            pi[i] = x[r];
        }
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|p| *p /= total);
        let availability = pi.iter().zip(&self.up).filter(|(_, &u)| u).map(|(p, _)| p).sum();
        let unavailability = pi.iter().zip(&self.up).filter(|(_, &u)| !u).map(|(p, _)| p).sum();
        Ok(CtmcSteadyState {
            pi,
            availability,
            unavailability,
        })
    }

    /// Mean time from the perfect state until the first down state, from
    /// the fundamental matrix: `(-Q_TT) τ = 1` over the up states.
    pub fn mttf(&self) -> Result<f64> {
        let up: Vec<usize> = (0..self.q.nrows()).filter(|&i| self.up[i]).collect();
        let k = up.len();
        let a = DMatrix::from_fn(k, k, |r, c| -self.q[(up[r], up[c])]);
        let tau = a
            .lu()
            .solve(&DVector::from_element(k, 1.0))
            .ok_or_else(|| Error::Structural("transient generator is singular".into()))?;
        Ok(tau[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Family;
    use crate::topology::ParamGroup;

    #[test]
    fn rejects_non_exponential() {
        let topo = Topology::balanced(1, 1).unwrap();
        let params = ParameterSet::defaults(&topo);
        let err = CtmcModel::build(&topo, &params, true).unwrap_err();
        assert!(err.to_string().contains("oracle requires exponential parameters"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn generator_rows_sum_to_zero() {
        let topo = Topology::balanced(3, 2).unwrap();
        let mut params = ParameterSet::defaults(&topo);
        params.swap_family(ParamGroup::Failure, Family::Exponential).unwrap();
        let model = CtmcModel::build(&topo, &params, true).unwrap();
        for r in 0..model.q.nrows() {
            let scale = model.q[(r, r)].abs();
            assert!(model.q.row(r).sum().abs() <= 1e-12 * scale);
        }
        let ss = model.steady_state().unwrap();
        assert!((ss.pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(model.mttf().unwrap() > 0.0);
    }

    #[test]
    fn two_state_repairable() {
                let topo = Topology::balanced(1, 1).unwrap();
        let mut params = ParameterSet::defaults(&topo);
        params.swap_family(ParamGroup::Failure, Family::Exponential).unwrap();
        let model = CtmcModel::build(&topo, &params, false).unwrap();
        let tau = model.mttf().unwrap();
        // hand-derived mean absorption time of the 4-state star
        let a: Vec<f64> = [&params.sf[0].aging, &params.vm[0].aging, &params.vmm[0].aging]
            .iter()
            .map(|d| d.exp_rate().unwrap())
            .collect();
        let total: f64 = a.iter().sum();
        let b = [
            params.sf[0].failover.exp_rate().unwrap(),
            params.vm[0].failover.exp_rate().unwrap(),
            params.vmm[0].migration.exp_rate().unwrap(),
        ];
        let out = [
            b[0] + params.sf[0].failure.exp_rate().unwrap() + a[1] + a[2],
            b[1] + params.vm[0].failure.exp_rate().unwrap() + a[0] + a[2],
            b[2] + params.vmm[0].failure.exp_rate().unwrap() + a[0] + a[1],
        ];
        let ret: f64 = (0..3).map(|k| a[k] / total * b[k] / out[k]).sum();
        let visits0 = 1.0 / (1.0 - ret);
        let expected = visits0 * (1.0 / total + (0..3).map(|k| a[k] / total / out[k]).sum::<f64>());
        assert!(((tau - expected) / expected).abs() < 1e-10, "{tau} vs {expected}");
    }
}
