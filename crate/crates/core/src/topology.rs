//! System shape and timing parameters.
//!
//! Component indices are zero-based in the API. Labels, parameter paths and
//! configuration files use one-based indices (`sf.1` is SF index 0).

use crate::distributions::{Distribution, Family};
use crate::error::{Error, Result};

/// Placement of `m` SF/VM pairs on `n` hosts. SF `i` always runs on VM `i`,
/// and VMM `j` is the hypervisor of host `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    host_of: Vec<usize>,
    num_hosts: usize,
}

/// A single SF, VM or VMM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComponentRef {
    Sf(usize),
    Vm(usize),
    Vmm(usize),
}

/// Peer groupings of one component, relative to the host it runs on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSets {
    /// Host of the component.
    pub host: usize,
    /// SF/VM indices on the same host, excluding the component itself.
    pub same_host_peers: Vec<usize>,
    /// SF indices on every other host.
    pub other_host_sfs: Vec<usize>,
    /// VM indices on every other host.
    pub other_host_vms: Vec<usize>,
    /// VMM indices other than the component's host.
    pub other_vmms: Vec<usize>,
}

impl Topology {
    /// `host_of[i]` is the (zero-based) host of VM `i`.
    pub fn new(host_of: Vec<usize>, num_hosts: usize) -> Result<Self> {
        let m = host_of.len();
        if m == 0 {
            return Err(Error::Domain("at least one SF/VM is required".into()));
        }
        if num_hosts == 0 || num_hosts > m {
            return Err(Error::Domain(format!(
                "number of hosts must be in 1..={m}, got {num_hosts}"
            )));
        }
        let mut used = vec![false; num_hosts];
        for (vm, &h) in host_of.iter().enumerate() {
            if h >= num_hosts {
                return Err(Error::Domain(format!(
                    "VM {} assigned to host {} but only {num_hosts} hosts exist",
                    vm + 1,
                    h + 1
                )));
            }
            used[h] = true;
        }
        if let Some(idle) = used.iter().position(|u| !u) {
            return Err(Error::Domain(format!("host {} runs no VM", idle + 1)));
        }
        Ok(Topology { host_of, num_hosts })
    }

    /// Contiguous, as-even-as-possible placement: VM `i` goes to host `i * n / m`.
    pub fn balanced(num_sfs: usize, num_hosts: usize) -> Result<Self> {
        if num_sfs == 0 {
            return Err(Error::Domain("at least one SF/VM is required".into()));
        }
        Self::new((0..num_sfs).map(|i| i * num_hosts / num_sfs).collect(), num_hosts)
    }

    pub fn num_sfs(&self) -> usize {
        self.host_of.len()
    }

    pub fn num_hosts(&self) -> usize {
        self.num_hosts
    }

    pub fn host_of(&self, vm: usize) -> usize {
        self.host_of[vm]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.host_of
    }

    /// SF/VM indices placed on `host`.
    pub fn host_components(&self, host: usize) -> Vec<usize> {
        (0..self.num_sfs())
            .filter(|&i| self.host_of[i] == host)
            .collect()
    }

    /// SF/VM indices on hosts other than `host`.
    pub fn other_host_components(&self, host: usize) -> Vec<usize> {
        (0..self.num_sfs())
            .filter(|&i| self.host_of[i] != host)
            .collect()
    }

    pub fn other_vmms(&self, host: usize) -> Vec<usize> {
        (0..self.num_hosts).filter(|&j| j != host).collect()
    }

    pub fn index_sets(&self, component: ComponentRef) -> Result<IndexSets> {
        let (host, own) = match component {
            ComponentRef::Sf(i) | ComponentRef::Vm(i) => {
                if i >= self.num_sfs() {
                    return Err(Error::Domain(format!(
                        "component index {} out of range 1..={}",
                        i + 1,
                        self.num_sfs()
                    )));
                }
                (self.host_of[i], Some(i))
            }
            ComponentRef::Vmm(j) => {
                if j >= self.num_hosts {
                    return Err(Error::Domain(format!(
                        "VMM index {} out of range 1..={}",
                        j + 1,
                        self.num_hosts
                    )));
                }
                (j, None)
            }
        };
        let same_host_peers = self
            .host_components(host)
            .into_iter()
            .filter(|&k| Some(k) != own)
            .collect();
        let others = self.other_host_components(host);
        Ok(IndexSets {
            host,
            same_host_peers,
            other_host_sfs: others.clone(),
            other_host_vms: others,
            other_vmms: self.other_vmms(host),
        })
    }
}

/// Timing laws of one SF.
#[derive(Debug, Clone, PartialEq)]
pub struct SfParams {
    pub aging: Distribution,
    pub failover: Distribution,
    pub failure: Distribution,
}

/// Timing laws of one VM.
#[derive(Debug, Clone, PartialEq)]
pub struct VmParams {
    pub aging: Distribution,
    pub failover: Distribution,
    pub failure: Distribution,
    /// Restart of the VM together with its SF.
    pub restart: Distribution,
}

/// Timing laws of one VMM.
#[derive(Debug, Clone, PartialEq)]
pub struct VmmParams {
    pub aging: Distribution,
    pub migration: Distribution,
    pub failure: Distribution,
}

/// Host-wide recovery actions.
#[derive(Debug, Clone, PartialEq)]
pub struct HostParams {
    pub restart_sfs: Distribution,
    pub restart_sfs_vms: Distribution,
    pub reboot: Distribution,
}

/// System-wide recovery actions.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub restart_all_sfs: Distribution,
    pub restart_all_sfs_vms: Distribution,
    pub reboot_all_vmms: Distribution,
    pub repair: Distribution,
}

/// Every holding-time law the model uses. Times are in hours.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    pub sf: Vec<SfParams>,
    pub vm: Vec<VmParams>,
    pub vmm: Vec<VmmParams>,
    pub host: Vec<HostParams>,
    pub system: SystemParams,
}

/// Role of a scalar parameter, used to group sensitivity results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamKind {
    /// Aging rates.
    Aging,
    /// Failover and migration rates.
    Failover,
    /// Hypoexponential failure phase rates.
    FailurePhase,
    /// Exponential or deterministic failure rates.
    Failure,
    /// VM and host restart/reboot rates.
    Restart,
    /// System-wide restart/reboot rates.
    SystemRestart,
    /// Repair rate after failure.
    Repair,
}

/// Parameter groups addressable by `--swap-family`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamGroup {
    Aging,
    Failure,
    Recovery,
}

impl std::str::FromStr for ParamGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aging" => Ok(ParamGroup::Aging),
            "failure" => Ok(ParamGroup::Failure),
            "recovery" => Ok(ParamGroup::Recovery),
            other => Err(Error::Domain(format!(
                "unknown parameter group `{other}` (expected aging, failure or recovery)"
            ))),
        }
    }
}

const SF_FIELDS: [&str; 3] = ["aging", "failover", "failure"];
const VM_FIELDS: [&str; 4] = ["aging", "failover", "failure", "restart"];
const VMM_FIELDS: [&str; 3] = ["aging", "migration", "failure"];
const HOST_FIELDS: [&str; 3] = ["restart_sfs", "restart_sfs_vms", "reboot"];
const SYSTEM_FIELDS: [&str; 4] = [
    "restart_all_sfs",
    "restart_all_sfs_vms",
    "reboot_all_vmms",
    "repair",
];

fn entry_group(entry: &str) -> Option<ParamGroup> {
    let field = entry.rsplit('.').next()?;
    match field {
        "aging" => Some(ParamGroup::Aging),
        "failure" => Some(ParamGroup::Failure),
        "failover" | "migration" | "restart" | "restart_sfs" | "restart_sfs_vms" | "reboot"
        | "restart_all_sfs" | "restart_all_sfs_vms" | "reboot_all_vmms" | "repair" => {
            Some(ParamGroup::Recovery)
        }
        _ => None,
    }
}

fn entry_kind(entry: &str, family: Family) -> ParamKind {
    let field = entry.rsplit('.').next().unwrap_or_default();
    match field {
        "aging" => ParamKind::Aging,
        "failover" | "migration" => ParamKind::Failover,
        "failure" if family == Family::Hypoexponential => ParamKind::FailurePhase,
        "failure" => ParamKind::Failure,
        "repair" => ParamKind::Repair,
        "restart_all_sfs" | "restart_all_sfs_vms" | "reboot_all_vmms" => ParamKind::SystemRestart,
        _ => ParamKind::Restart,
    }
}

/// Table of default means in (value, hours-per-unit) form; see [`ParameterSet::defaults`].
pub(crate) mod midpoints {
    pub const DAY: f64 = 24.0;
    pub const MINUTE: f64 = 1.0 / 60.0;
    pub const SECOND: f64 = 1.0 / 3600.0;

    pub const SF_AGING: (f64, f64) = (10.0, DAY);
    pub const VM_AGING: (f64, f64) = (16.0, DAY);
    pub const VMM_AGING: (f64, f64) = (22.5, DAY);
    // total failure means; split into two equal phases
    pub const SF_FAILURE: (f64, f64) = (7.0, DAY);
    pub const VM_FAILURE: (f64, f64) = (16.0, DAY);
    pub const VMM_FAILURE: (f64, f64) = (31.0, DAY);
    pub const SF_FAILOVER: (f64, f64) = (9.5, SECOND);
    pub const VM_FAILOVER: (f64, f64) = (16.0, SECOND);
    pub const VM_MIGRATION: (f64, f64) = (30.5, SECOND);
    pub const VM_RESTART: (f64, f64) = (12.0, SECOND);
    pub const HOST_RESTART_SFS: (f64, f64) = (30.5, SECOND);
    pub const HOST_RESTART_SFS_VMS: (f64, f64) = (45.5, SECOND);
    pub const HOST_REBOOT: (f64, f64) = (1.05, MINUTE);
    pub const SYSTEM_RESTART_SFS: (f64, f64) = (1.05, MINUTE);
    pub const SYSTEM_RESTART_SFS_VMS: (f64, f64) = (2.05, MINUTE);
    pub const SYSTEM_REBOOT_VMMS: (f64, f64) = (3.05, MINUTE);
    pub const REPAIR: (f64, f64) = (0.9, 1.0);
}

fn exp_mean((value, unit): (f64, f64)) -> Distribution {
    Distribution::Exponential {
        rate: 1.0 / (value * unit),
    }
}

fn hypo_total_mean((value, unit): (f64, f64)) -> Distribution {
    let rate = 1.0 / (0.5 * value * unit);
    Distribution::Hypoexponential {
        rate1: rate,
        rate2: rate,
    }
}

impl ParameterSet {
    /// Midpoints of the reference parameter ranges.
    ///
    /// Aging and recovery times are exponential; failure times are
    /// hypoexponential with two equal phases.
    pub fn defaults(topo: &Topology) -> Self {
        use midpoints::*;
        let m = topo.num_sfs();
        let n = topo.num_hosts();
        ParameterSet {
            sf: (0..m)
                .map(|_| SfParams {
                    aging: exp_mean(SF_AGING),
                    failover: exp_mean(SF_FAILOVER),
                    failure: hypo_total_mean(SF_FAILURE),
                })
                .collect(),
            vm: (0..m)
                .map(|_| VmParams {
                    aging: exp_mean(VM_AGING),
                    failover: exp_mean(VM_FAILOVER),
                    failure: hypo_total_mean(VM_FAILURE),
                    restart: exp_mean(VM_RESTART),
                })
                .collect(),
            vmm: (0..n)
                .map(|_| VmmParams {
                    aging: exp_mean(VMM_AGING),
                    migration: exp_mean(VM_MIGRATION),
                    failure: hypo_total_mean(VMM_FAILURE),
                })
                .collect(),
            host: (0..n)
                .map(|_| HostParams {
                    restart_sfs: exp_mean(HOST_RESTART_SFS),
                    restart_sfs_vms: exp_mean(HOST_RESTART_SFS_VMS),
                    reboot: exp_mean(HOST_REBOOT),
                })
                .collect(),
            system: SystemParams {
                restart_all_sfs: exp_mean(SYSTEM_RESTART_SFS),
                restart_all_sfs_vms: exp_mean(SYSTEM_RESTART_SFS_VMS),
                reboot_all_vmms: exp_mean(SYSTEM_REBOOT_VMMS),
                repair: exp_mean(REPAIR),
            },
        }
    }

    /// Checks sizes against the topology and that all aging clocks are exponential.
    pub fn validate(&self, topo: &Topology) -> Result<()> {
        let m = topo.num_sfs();
        let n = topo.num_hosts();
        for (name, len, want) in [
            ("sf", self.sf.len(), m),
            ("vm", self.vm.len(), m),
            ("vmm", self.vmm.len(), n),
            ("host", self.host.len(), n),
        ] {
            if len != want {
                return Err(Error::config(
                    format!("parameters.{name}"),
                    format!("expected {want} entries, found {len}"),
                ));
            }
        }
        for (path, d) in self.entries() {
            match d {
                Distribution::Exponential { rate } if !(rate.is_finite() && *rate > 0.0) => {
                    return Err(Error::config(format!("parameters.{path}"), "rate must be > 0"))
                }
                Distribution::Hypoexponential { rate1, rate2 }
                    if !(rate1.is_finite() && rate2.is_finite() && *rate1 > 0.0 && *rate2 > 0.0) =>
                {
                    return Err(Error::config(format!("parameters.{path}"), "rates must be > 0"))
                }
                Distribution::Deterministic { value } if !(value.is_finite() && *value > 0.0) => {
                    return Err(Error::config(format!("parameters.{path}"), "value must be > 0"))
                }
                _ => {}
            }
            if path.ends_with(".aging") && !d.is_exponential() {
                return Err(Error::config(
                    format!("parameters.{path}"),
                    "aging times must be exponentially distributed",
                ));
            }
        }
        Ok(())
    }

    /// Every distribution with its entry path (`sf.1.aging`, `system.repair`, ...).
    pub fn entries(&self) -> Vec<(String, &Distribution)> {
        let mut out = Vec::new();
        for (i, p) in self.sf.iter().enumerate() {
            for (f, d) in SF_FIELDS.iter().zip([&p.aging, &p.failover, &p.failure]) {
                out.push((format!("sf.{}.{f}", i + 1), d));
            }
        }
        for (i, p) in self.vm.iter().enumerate() {
            for (f, d) in VM_FIELDS
                .iter()
                .zip([&p.aging, &p.failover, &p.failure, &p.restart])
            {
                out.push((format!("vm.{}.{f}", i + 1), d));
            }
        }
        for (j, p) in self.vmm.iter().enumerate() {
            for (f, d) in VMM_FIELDS.iter().zip([&p.aging, &p.migration, &p.failure]) {
                out.push((format!("vmm.{}.{f}", j + 1), d));
            }
        }
        for (j, p) in self.host.iter().enumerate() {
            for (f, d) in HOST_FIELDS
                .iter()
                .zip([&p.restart_sfs, &p.restart_sfs_vms, &p.reboot])
            {
                out.push((format!("host.{}.{f}", j + 1), d));
            }
        }
        let s = &self.system;
        for (f, d) in SYSTEM_FIELDS.iter().zip([
            &s.restart_all_sfs,
            &s.restart_all_sfs_vms,
            &s.reboot_all_vmms,
            &s.repair,
        ]) {
            out.push((format!("system.{f}"), d));
        }
        out
    }

    /// The distribution stored at an entry path.
    pub fn entry(&self, path: &str) -> Option<&Distribution> {
        let (group, index, field) = split_entry(path)?;
        match group {
            "sf" => {
                let p = self.sf.get(index?)?;
                match field {
                    "aging" => Some(&p.aging),
                    "failover" => Some(&p.failover),
                    "failure" => Some(&p.failure),
                    _ => None,
                }
            }
            "vm" => {
                let p = self.vm.get(index?)?;
                match field {
                    "aging" => Some(&p.aging),
                    "failover" => Some(&p.failover),
                    "failure" => Some(&p.failure),
                    "restart" => Some(&p.restart),
                    _ => None,
                }
            }
            "vmm" => {
                let p = self.vmm.get(index?)?;
                match field {
                    "aging" => Some(&p.aging),
                    "migration" => Some(&p.migration),
                    "failure" => Some(&p.failure),
                    _ => None,
                }
            }
            "host" => {
                let p = self.host.get(index?)?;
                match field {
                    "restart_sfs" => Some(&p.restart_sfs),
                    "restart_sfs_vms" => Some(&p.restart_sfs_vms),
                    "reboot" => Some(&p.reboot),
                    _ => None,
                }
            }
            "system" if index.is_none() => match field {
                "restart_all_sfs" => Some(&self.system.restart_all_sfs),
                "restart_all_sfs_vms" => Some(&self.system.restart_all_sfs_vms),
                "reboot_all_vmms" => Some(&self.system.reboot_all_vmms),
                "repair" => Some(&self.system.repair),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn entry_mut(&mut self, path: &str) -> Option<&mut Distribution> {
        let (group, index, field) = split_entry(path)?;
        match group {
            "sf" => {
                let p = self.sf.get_mut(index?)?;
                match field {
                    "aging" => Some(&mut p.aging),
                    "failover" => Some(&mut p.failover),
                    "failure" => Some(&mut p.failure),
                    _ => None,
                }
            }
            "vm" => {
                let p = self.vm.get_mut(index?)?;
                match field {
                    "aging" => Some(&mut p.aging),
                    "failover" => Some(&mut p.failover),
                    "failure" => Some(&mut p.failure),
                    "restart" => Some(&mut p.restart),
                    _ => None,
                }
            }
            "vmm" => {
                let p = self.vmm.get_mut(index?)?;
                match field {
                    "aging" => Some(&mut p.aging),
                    "migration" => Some(&mut p.migration),
                    "failure" => Some(&mut p.failure),
                    _ => None,
                }
            }
            "host" => {
                let p = self.host.get_mut(index?)?;
                match field {
                    "restart_sfs" => Some(&mut p.restart_sfs),
                    "restart_sfs_vms" => Some(&mut p.restart_sfs_vms),
                    "reboot" => Some(&mut p.reboot),
                    _ => None,
                }
            }
            "system" if index.is_none() => match field {
                "restart_all_sfs" => Some(&mut self.system.restart_all_sfs),
                "restart_all_sfs_vms" => Some(&mut self.system.restart_all_sfs_vms),
                "reboot_all_vmms" => Some(&mut self.system.reboot_all_vmms),
                "repair" => Some(&mut self.system.repair),
                _ => None,
            },
            _ => None,
        }
    }

    /// Scalar parameter paths for the current families: `<entry>.rate` for
    /// exponential and deterministic laws, `<entry>.phase1`/`.phase2` for
    /// hypoexponential ones.
    pub fn scalar_paths(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (entry, d) in self.entries() {
            match d.family() {
                Family::Hypoexponential => {
                    out.push(format!("{entry}.phase1"));
                    out.push(format!("{entry}.phase2"));
                }
                _ => out.push(format!("{entry}.rate")),
            }
        }
        out
    }

    /// Reads a scalar parameter. A deterministic law's rate is `1 / value`.
    /// A `*` index reads the common value of every component and fails if
    /// the components differ.
    pub fn get_scalar(&self, path: &str) -> Result<f64> {
        let parts: Vec<&str> = path.split('.').collect();
        if parts.len() == 4 && parts[1] == "*" {
            let count = match parts[0] {
                "sf" => self.sf.len(),
                "vm" => self.vm.len(),
                "vmm" => self.vmm.len(),
                "host" => self.host.len(),
                _ => return Err(unknown_path(path)),
            };
            let values = (1..=count)
                .map(|i| self.get_scalar(&format!("{}.{i}.{}.{}", parts[0], parts[2], parts[3])))
                .collect::<Result<Vec<f64>>>()?;
            if values.iter().any(|v| *v != values[0]) {
                return Err(Error::Domain(format!("`{path}` differs between components")));
            }
            return Ok(values[0]);
        }
        let (entry, leaf) = split_scalar(path)?;
        let d = self.entry(entry).ok_or_else(|| unknown_path(path))?;
        match (leaf, *d) {
            ("rate", Distribution::Exponential { rate }) => Ok(rate),
            ("rate", Distribution::Deterministic { value }) => Ok(1.0 / value),
            ("phase1", Distribution::Hypoexponential { rate1, .. }) => Ok(rate1),
            ("phase2", Distribution::Hypoexponential { rate2, .. }) => Ok(rate2),
            ("mean", d) => Ok(d.mean()),
            _ => Err(leaf_mismatch(path, d)),
        }
    }

    /// Sets a scalar parameter. A `*` in the index position addresses every
    /// component of that kind (`vm.*.failover.rate`).
    pub fn set_scalar(&mut self, path: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Domain(format!(
                "parameter `{path}` must be finite and > 0, got {value}"
            )));
        }
        let parts: Vec<&str> = path.split('.').collect();
        if parts.len() == 4 && parts[1] == "*" {
            let count = match parts[0] {
                "sf" => self.sf.len(),
                "vm" => self.vm.len(),
                "vmm" => self.vmm.len(),
                "host" => self.host.len(),
                _ => return Err(unknown_path(path)),
            };
            for i in 1..=count {
                self.set_scalar(&format!("{}.{i}.{}.{}", parts[0], parts[2], parts[3]), value)?;
            }
            return Ok(());
        }
        let (entry, leaf) = split_scalar(path)?;
        let d = self.entry_mut(entry).ok_or_else(|| unknown_path(path))?;
        match (leaf, &mut *d) {
            ("rate", Distribution::Exponential { rate }) => *rate = value,
            ("rate", Distribution::Deterministic { value: v }) => *v = 1.0 / value,
            ("phase1", Distribution::Hypoexponential { rate1, .. }) => *rate1 = value,
            ("phase2", Distribution::Hypoexponential { rate2, .. }) => *rate2 = value,
            ("mean", d) => {
                let current = d.mean();
                *d = scale_time(*d, value / current);
            }
            _ => return Err(leaf_mismatch(path, d)),
        }
        Ok(())
    }

    /// Role of a scalar path.
    pub fn kind_of(&self, path: &str) -> Result<ParamKind> {
        let (entry, _) = split_scalar(path)?;
        let d = self.entry(entry).ok_or_else(|| unknown_path(path))?;
        Ok(entry_kind(entry, d.family()))
    }

    /// Replaces every law in `group` by the mean-matched law of `family`.
    pub fn swap_family(&mut self, group: ParamGroup, family: Family) -> Result<()> {
        if group == ParamGroup::Aging && family != Family::Exponential {
            return Err(Error::Domain(
                "aging times must stay exponentially distributed".into(),
            ));
        }
        let paths: Vec<String> = self
            .entries()
            .into_iter()
            .filter(|(p, _)| entry_group(p) == Some(group))
            .map(|(p, _)| p)
            .collect();
        for p in paths {
            let d = self.entry_mut(&p).expect("path from entries()");
            *d = d.mean_matched_swap(family);
        }
        Ok(())
    }

    /// Multiplies every time in the model by `factor` (rates divide by it).
    pub fn rescale_time(&self, factor: f64) -> ParameterSet {
        let mut out = self.clone();
        let paths: Vec<String> = self.entries().into_iter().map(|(p, _)| p).collect();
        for p in paths {
            let d = out.entry_mut(&p).expect("path from entries()");
            *d = scale_time(*d, factor);
        }
        out
    }

    /// True when every law is exponential.
    pub fn all_exponential(&self) -> bool {
        self.entries().iter().all(|(_, d)| d.is_exponential())
    }
}

fn scale_time(d: Distribution, factor: f64) -> Distribution {
    match d {
        Distribution::Exponential { rate } => Distribution::Exponential {
            rate: rate / factor,
        },
        Distribution::Hypoexponential { rate1, rate2 } => Distribution::Hypoexponential {
            rate1: rate1 / factor,
            rate2: rate2 / factor,
        },
        Distribution::Deterministic { value } => Distribution::Deterministic {
            value: value * factor,
        },
    }
}

fn split_entry(path: &str) -> Option<(&str, Option<usize>, &str)> {
    let parts: Vec<&str> = path.split('.').collect();
    match parts.as_slice() {
        [group, idx, field] => {
            let i: usize = idx.parse().ok()?;
            (i >= 1).then_some((*group, Some(i - 1), *field))
        }
        [group, field] => Some((*group, None, *field)),
        _ => None,
    }
}

fn split_scalar(path: &str) -> Result<(&str, &str)> {
    path.rsplit_once('.').ok_or_else(|| unknown_path(path))
}

fn unknown_path(path: &str) -> Error {
    Error::Domain(format!("unknown parameter path `{path}`"))
}

fn leaf_mismatch(path: &str, d: &Distribution) -> Error {
    Error::Domain(format!(
        "parameter `{path}` does not match a {} law (use .rate for exponential/deterministic, .phase1/.phase2 for hypoexponential)",
        d.family()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig3() -> Topology {
        Topology::new(vec![0, 0, 1, 1], 2).unwrap()
    }

    #[test]
    fn index_sets_four_by_two() {
        let t = fig3();
        let s = t.index_sets(ComponentRef::Sf(0)).unwrap();
        assert_eq!(s.host, 0);
        assert_eq!(s.same_host_peers, vec![1]);
        assert_eq!(s.other_host_sfs, vec![2, 3]);
        assert_eq!(s.other_vmms, vec![1]);
    }

    #[test]
    fn index_sets_degenerate() {
        let t = Topology::new(vec![0], 1).unwrap();
        let s = t.index_sets(ComponentRef::Sf(0)).unwrap();
        assert!(s.same_host_peers.is_empty());
        assert!(s.other_host_sfs.is_empty());
        assert!(s.other_vmms.is_empty());
    }

    #[test]
    fn index_sets_one_vm_per_host() {
        let t = Topology::new(vec![0, 1], 2).unwrap();
        let s = t.index_sets(ComponentRef::Vm(1)).unwrap();
        assert_eq!(s.host, 1);
        assert!(s.same_host_peers.is_empty());
        assert_eq!(s.other_host_vms, vec![0]);
    }

    #[test]
    fn index_sets_partition_components() {
        let t = Topology::new(vec![0, 1, 0, 2, 1, 1], 3).unwrap();
        for i in 0..6 {
            let s = t.index_sets(ComponentRef::Sf(i)).unwrap();
            let mut all: Vec<usize> = s.same_host_peers.clone();
            all.extend(&s.other_host_sfs);
            all.push(i);
            all.sort();
            assert_eq!(all, (0..6).collect::<Vec<_>>());
        }
    }

    #[test]
    fn invalid_indices_and_topologies() {
        let t = fig3();
        assert!(t.index_sets(ComponentRef::Sf(4)).is_err());
        assert!(t.index_sets(ComponentRef::Vmm(2)).is_err());
        assert!(Topology::new(vec![0, 0], 2).is_err()); // host 2 idle
        assert!(Topology::new(vec![0, 3], 2).is_err());
        assert!(Topology::new(vec![], 1).is_err());
        assert!(Topology::balanced(2, 3).is_err());
    }

    #[test]
    fn balanced_layout() {
        assert_eq!(Topology::balanced(4, 2).unwrap().assignment(), &[0, 0, 1, 1]);
        assert_eq!(Topology::balanced(5, 2).unwrap().assignment(), &[0, 0, 0, 1, 1]);
        assert_eq!(Topology::balanced(4, 3).unwrap().assignment(), &[0, 0, 1, 2]);
    }

    #[test]
    fn default_midpoints() {
        let p = ParameterSet::defaults(&fig3());
        assert!((p.sf[0].aging.mean() - 240.0).abs() < 1e-12);
        assert!((p.system.repair.mean() - 0.9).abs() < 1e-15);
        match p.sf[0].failure {
            Distribution::Hypoexponential { rate1, rate2 } => {
                assert_eq!(rate1, rate2);
                assert!((1.0 / rate1 - 84.0).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!((p.sf[0].failure.mean() - 168.0).abs() < 1e-12);
        assert!((p.vmm[1].migration.mean() - 30.5 / 3600.0).abs() < 1e-15);
        assert!((p.system.reboot_all_vmms.mean() - 3.05 / 60.0).abs() < 1e-15);
        p.validate(&fig3()).unwrap();
    }

    #[test]
    fn scalar_paths_get_and_set() {
        let mut p = ParameterSet::defaults(&fig3());
        assert_eq!(p.get_scalar("sf.1.aging.rate").unwrap(), 1.0 / 240.0);
        p.set_scalar("vm.*.failover.rate", 500.0).unwrap();
        assert!(p.vm.iter().all(|v| v.failover.exp_rate() == Some(500.0)));
        p.set_scalar("sf.2.failure.phase1", 0.5).unwrap();
        assert_eq!(p.get_scalar("sf.2.failure.phase1").unwrap(), 0.5);
        assert!(p.get_scalar("sf.2.failure.rate").is_err());
        assert!(p.get_scalar("sf.9.aging.rate").is_err());
        assert!(p.set_scalar("system.repair.rate", -1.0).is_err());
        assert_eq!(p.scalar_paths().len(), 4 * 4 + 4 * 5 + 2 * 4 + 2 * 3 + 4);
    }

    #[test]
    fn kinds() {
        let p = ParameterSet::defaults(&fig3());
        assert_eq!(p.kind_of("sf.1.aging.rate").unwrap(), ParamKind::Aging);
        assert_eq!(p.kind_of("vmm.2.migration.rate").unwrap(), ParamKind::Failover);
        assert_eq!(p.kind_of("vm.3.failure.phase2").unwrap(), ParamKind::FailurePhase);
        assert_eq!(p.kind_of("host.1.reboot.rate").unwrap(), ParamKind::Restart);
        assert_eq!(
            p.kind_of("system.restart_all_sfs.rate").unwrap(),
            ParamKind::SystemRestart
        );
        assert_eq!(p.kind_of("system.repair.rate").unwrap(), ParamKind::Repair);
    }

    #[test]
    fn swap_groups_preserve_means() {
        let base = ParameterSet::defaults(&fig3());
        let mut p = base.clone();
        p.swap_family(ParamGroup::Failure, Family::Exponential).unwrap();
        assert!(p.sf[0].failure.is_exponential());
        assert!((p.sf[0].failure.mean() - base.sf[0].failure.mean()).abs() < 1e-12);
        p.swap_family(ParamGroup::Recovery, Family::Deterministic).unwrap();
        assert_eq!(p.system.repair.family(), Family::Deterministic);
        assert_eq!(p.vm[0].failover.family(), Family::Deterministic);
        assert!(p.vm[0].aging.is_exponential());
        assert!(p.swap_family(ParamGroup::Aging, Family::Deterministic).is_err());
    }

    #[test]
    fn validation_rejects_non_exponential_aging() {
        let t = fig3();
        let mut p = ParameterSet::defaults(&t);
        p.sf[2].aging = Distribution::deterministic(10.0).unwrap();
        let err = p.validate(&t).unwrap_err();
        assert!(err.to_string().contains("parameters.sf.3.aging"), "{err}");
    }
}
