//! JSON configuration documents.
//!
//! Every time-valued entry names its unit (`s`, `min`, `h`, `d`); values
//! are converted to hours on load. Indexed sections (`sf`, `vm`, `vmm`,
//! `host`) are keyed by one-based index; a `"*"` key supplies defaults for
//! every index.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distributions::{Distribution, Family};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureSettings;
use crate::solver::SolverOptions;
use crate::topology::{
    midpoints, HostParams, ParameterSet, SfParams, SystemParams, Topology, VmParams, VmmParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "s")]
    Second,
    #[serde(rename = "min")]
    Minute,
    #[serde(rename = "h")]
    Hour,
    #[serde(rename = "d")]
    Day,
}

impl Unit {
    pub fn hours(self) -> f64 {
        match self {
            Unit::Second => midpoints::SECOND,
            Unit::Minute => midpoints::MINUTE,
            Unit::Hour => 1.0,
            Unit::Day => midpoints::DAY,
        }
    }
}

/// One distribution entry. Rates are per `unit`, means and values in `unit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistSpec {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub unit: Unit,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SfSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aging: Option<DistSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failover: Option<DistSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<DistSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VmSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aging: Option<DistSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failover: Option<DistSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<DistSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restart: Option<DistSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VmmSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aging: Option<DistSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub migration: Option<DistSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<DistSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HostSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restart_sfs: Option<DistSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restart_sfs_vms: Option<DistSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reboot: Option<DistSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restart_all_sfs: Option<DistSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restart_all_sfs_vms: Option<DistSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reboot_all_vmms: Option<DistSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repair: Option<DistSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametersSpec {
    #[serde(default)]
    pub sf: BTreeMap<String, SfSpec>,
    #[serde(default)]
    pub vm: BTreeMap<String, VmSpec>,
    #[serde(default)]
    pub vmm: BTreeMap<String, VmmSpec>,
    #[serde(default)]
    pub host: BTreeMap<String, HostSpec>,
    #[serde(default)]
    pub system: SystemSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    pub num_sfs: usize,
    pub num_hosts: usize,
    /// One-based host of each VM; balanced when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vm_host_assignment: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_rel_tol")]
    pub quad_rel_tol: f64,
    #[serde(default = "default_truncation")]
    pub truncation_quantile: f64,
    #[serde(default = "default_true")]
    pub escalation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    #[serde(default = "default_count")]
    pub cycles: usize,
    #[serde(default = "default_count")]
    pub replications: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_rel_tol() -> f64 {
    QuadratureSettings::default().rel_tol
}
fn default_truncation() -> f64 {
    QuadratureSettings::default().truncation
}
fn default_true() -> bool {
    true
}
fn default_count() -> usize {
    10_000
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            quad_rel_tol: default_rel_tol(),
            truncation_quantile: default_truncation(),
            escalation: true,
        }
    }
}

impl Default for SimulationSpec {
    fn default() -> Self {
        SimulationSpec {
            cycles: default_count(),
            replications: default_count(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub topology: TopologySpec,
    pub parameters: ParametersSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub simulation: SimulationSpec,
}

/// A validated configuration in internal units.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub topology: Topology,
    pub params: ParameterSet,
    pub solver: SolverOptions,
    pub simulation: SimulationSpec,
}

fn field(path: &str, name: &str, x: Option<f64>) -> Result<f64> {
    let x = x.ok_or_else(|| Error::config(path, format!("missing `{name}`")))?;
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::config(format!("{path}.{name}"), format!("must be finite and > 0, got {x}")))
    }
}

impl DistSpec {
    pub fn to_distribution(&self, path: &str) -> Result<Distribution> {
        let u = self.unit.hours();
        let given: Vec<&str> = [
            ("rate", self.rate),
            ("mean", self.mean),
            ("rate1", self.rate1),
            ("rate2", self.rate2),
            ("mean1", self.mean1),
            ("mean2", self.mean2),
            ("value", self.value),
        ]
        .iter()
        .filter(|(_, v)| v.is_some())
        .map(|(k, _)| *k)
        .collect();
        let only = |allowed: &[&[&str]]| -> Result<()> {
            if allowed.iter().any(|set| {
                set.len() == given.len() && set.iter().all(|k| given.contains(k))
            }) {
                Ok(())
            } else {
                let forms: Vec<String> = allowed.iter().map(|s| s.join(" + ")).collect();
                Err(Error::config(
                    path,
                    format!(
                        "{} needs exactly one of: {} (got: {})",
                        self.family,
                        forms.join(" | "),
                        if given.is_empty() { "nothing".into() } else { given.join(", ") }
                    ),
                ))
            }
        };
        match self.family {
            Family::Exponential => {
                only(&[&["rate"], &["mean"]])?;
                let rate = match self.rate {
                    Some(_) => field(path, "rate", self.rate)? / u,
                    None => 1.0 / (field(path, "mean", self.mean)? * u),
                };
                Ok(Distribution::Exponential { rate })
            }
            Family::Hypoexponential => {
                only(&[&["rate1", "rate2"], &["mean1", "mean2"], &["mean"]])?;
                let (rate1, rate2) = if self.rate1.is_some() {
                    (field(path, "rate1", self.rate1)? / u, field(path, "rate2", self.rate2)? / u)
                } else if self.mean1.is_some() {
                    (
                        1.0 / (field(path, "mean1", self.mean1)? * u),
                        1.0 / (field(path, "mean2", self.mean2)? * u),
                    )
                } else {
                    // total mean split into two equal phases
                    let r = 1.0 / (0.5 * (field(path, "mean", self.mean)? * u));
                    (r, r)
                };
                Ok(Distribution::Hypoexponential { rate1, rate2 })
            }
            Family::Deterministic => {
                only(&[&["value"], &["mean"]])?;
                let v = match self.value {
                    Some(_) => field(path, "value", self.value)?,
                    None => field(path, "mean", self.mean)?,
                };
                Ok(Distribution::Deterministic { value: v * u })
            }
        }
    }

    /// Exact hour-based representation of a distribution.
    pub fn from_distribution(d: &Distribution) -> Self {
        let mut s = DistSpec {
            family: d.family(),
            rate: None,
            mean: None,
            rate1: None,
            rate2: None,
            mean1: None,
            mean2: None,
            value: None,
            unit: Unit::Hour,
        };
        match *d {
            Distribution::Exponential { rate } => s.rate = Some(rate),
            Distribution::Hypoexponential { rate1, rate2 } => {
                s.rate1 = Some(rate1);
                s.rate2 = Some(rate2);
            }
            Distribution::Deterministic { value } => s.value = Some(value),
        }
        s
    }

    fn mean_in(family: Family, (value, unit_hours): (f64, f64)) -> Self {
        let unit = [Unit::Second, Unit::Minute, Unit::Hour, Unit::Day]
            .into_iter()
            .find(|u| u.hours() == unit_hours)
            .expect("midpoint units are s, min, h or d");
        DistSpec {
            family,
            rate: None,
            mean: Some(value),
            rate1: None,
            rate2: None,
            mean1: None,
            mean2: None,
            value: None,
            unit,
        }
    }
}

/// Looks up index `i` (one-based) of an indexed section, falling back to `"*"`.
fn indexed<T>(map: &BTreeMap<String, T>, i: usize) -> (Option<&T>, Option<&T>) {
    (map.get(&i.to_string()), map.get("*"))
}

fn check_keys<T>(map: &BTreeMap<String, T>, section: &str, count: usize) -> Result<()> {
    for k in map.keys() {
        if k == "*" {
            continue;
        }
        match k.parse::<usize>() {
            Ok(i) if (1..=count).contains(&i) => {}
            _ => {
                return Err(Error::config(
                    format!("parameters.{section}.{k}"),
                    format!("index must be in 1..={count} or `*`"),
                ))
            }
        }
    }
    Ok(())
}

fn resolve(
    specific: Option<&Option<DistSpec>>,
    fallback: Option<&Option<DistSpec>>,
    path: &str,
) -> Result<Distribution> {
    let spec = specific
        .and_then(|s| s.as_ref())
        .or_else(|| fallback.and_then(|s| s.as_ref()))
        .ok_or_else(|| Error::config(path, "missing distribution"))?;
    spec.to_distribution(path)
}

macro_rules! pick {
    ($sp:expr, $fb:expr, $field:ident, $path:expr) => {
        resolve(
            $sp.map(|s| &s.$field),
            $fb.map(|s| &s.$field),
            &format!("{}.{}", $path, stringify!($field)),
        )
    };
}

impl ConfigDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::config(if path == "." { "<root>".into() } else { path }, inner.to_string())
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config documents always serialize")
    }

    pub fn to_model(&self) -> Result<Model> {
        let t = &self.topology;
        let topology = match &t.vm_host_assignment {
            Some(a) => {
                if a.contains(&0) {
                    return Err(Error::config("topology.vm_host_assignment", "hosts are numbered from 1"));
                }
                if a.len() != t.num_sfs {
                    return Err(Error::config(
                        "topology.vm_host_assignment",
                        format!("expected {} entries, found {}", t.num_sfs, a.len()),
                    ));
                }
                Topology::new(a.iter().map(|h| h - 1).collect(), t.num_hosts)
            }
            None => Topology::balanced(t.num_sfs, t.num_hosts),
        }
        .map_err(|e| Error::config("topology", e.to_string()))?;
        let (m, n) = (t.num_sfs, t.num_hosts);
        let p = &self.parameters;
        check_keys(&p.sf, "sf", m)?;
        check_keys(&p.vm, "vm", m)?;
        check_keys(&p.vmm, "vmm", n)?;
        check_keys(&p.host, "host", n)?;
        let mut params = ParameterSet {
            sf: Vec::with_capacity(m),
            vm: Vec::with_capacity(m),
            vmm: Vec::with_capacity(n),
            host: Vec::with_capacity(n),
            system: SystemParams {
                restart_all_sfs: pick!(Some(&p.system), None::<&SystemSpec>, restart_all_sfs, "parameters.system")?,
                restart_all_sfs_vms: pick!(Some(&p.system), None::<&SystemSpec>, restart_all_sfs_vms, "parameters.system")?,
                reboot_all_vmms: pick!(Some(&p.system), None::<&SystemSpec>, reboot_all_vmms, "parameters.system")?,
                repair: pick!(Some(&p.system), None::<&SystemSpec>, repair, "parameters.system")?,
            },
        };
        for i in 1..=m {
            let (sp, fb) = indexed(&p.sf, i);
            let path = format!("parameters.sf.{i}");
            params.sf.push(SfParams {
                aging: pick!(sp, fb, aging, path)?,
                failover: pick!(sp, fb, failover, path)?,
                failure: pick!(sp, fb, failure, path)?,
            });
            let (sp, fb) = indexed(&p.vm, i);
            let path = format!("parameters.vm.{i}");
            params.vm.push(VmParams {
                aging: pick!(sp, fb, aging, path)?,
                failover: pick!(sp, fb, failover, path)?,
                failure: pick!(sp, fb, failure, path)?,
                restart: pick!(sp, fb, restart, path)?,
            });
        }
        for j in 1..=n {
            let (sp, fb) = indexed(&p.vmm, j);
            let path = format!("parameters.vmm.{j}");
            params.vmm.push(VmmParams {
                aging: pick!(sp, fb, aging, path)?,
                migration: pick!(sp, fb, migration, path)?,
                failure: pick!(sp, fb, failure, path)?,
            });
            let (sp, fb) = indexed(&p.host, j);
            let path = format!("parameters.host.{j}");
            params.host.push(HostParams {
                restart_sfs: pick!(sp, fb, restart_sfs, path)?,
                restart_sfs_vms: pick!(sp, fb, restart_sfs_vms, path)?,
                reboot: pick!(sp, fb, reboot, path)?,
            });
        }
        params.validate(&topology)?;

        let s = &self.solver;
        if !(s.quad_rel_tol > 0.0 && s.quad_rel_tol < 1.0) {
            return Err(Error::config("solver.quad_rel_tol", "must be in (0, 1)"));
        }
        if !(s.truncation_quantile > 0.0 && s.truncation_quantile < 1.0) {
            return Err(Error::config("solver.truncation_quantile", "must be in (0, 1)"));
        }
        if self.simulation.cycles < 100 {
            return Err(Error::config("simulation.cycles", "must be at least 100"));
        }
        if self.simulation.replications < 100 {
            return Err(Error::config("simulation.replications", "must be at least 100"));
        }
        Ok(Model {
            topology,
            params,
            solver: SolverOptions {
                quad: QuadratureSettings {
                    rel_tol: s.quad_rel_tol,
                    truncation: s.truncation_quantile,
                    ..QuadratureSettings::default()
                },
                escalation: s.escalation,
            },
            simulation: self.simulation.clone(),
        })
    }

    /// Exact document for a model: every entry listed per index, in hours.
    pub fn from_model(model: &Model) -> Self {
        let topo = &model.topology;
        let p = &model.params;
        let d = |x: &Distribution| Some(DistSpec::from_distribution(x));
        let key = |i: usize| (i + 1).to_string();
        ConfigDocument {
            topology: TopologySpec {
                num_sfs: topo.num_sfs(),
                num_hosts: topo.num_hosts(),
                vm_host_assignment: Some(topo.assignment().iter().map(|h| h + 1).collect()),
            },
            parameters: ParametersSpec {
                sf: p.sf.iter().enumerate().map(|(i, s)| {
                    (key(i), SfSpec { aging: d(&s.aging), failover: d(&s.failover), failure: d(&s.failure) })
                }).collect(),
                vm: p.vm.iter().enumerate().map(|(i, s)| {
                    (key(i), VmSpec {
                        aging: d(&s.aging),
                        failover: d(&s.failover),
                        failure: d(&s.failure),
                        restart: d(&s.restart),
                    })
                }).collect(),
                vmm: p.vmm.iter().enumerate().map(|(i, s)| {
                    (key(i), VmmSpec { aging: d(&s.aging), migration: d(&s.migration), failure: d(&s.failure) })
                }).collect(),
                host: p.host.iter().enumerate().map(|(i, s)| {
                    (key(i), HostSpec {
                        restart_sfs: d(&s.restart_sfs),
                        restart_sfs_vms: d(&s.restart_sfs_vms),
                        reboot: d(&s.reboot),
                    })
                }).collect(),
                system: SystemSpec {
                    restart_all_sfs: d(&p.system.restart_all_sfs),
                    restart_all_sfs_vms: d(&p.system.restart_all_sfs_vms),
                    reboot_all_vmms: d(&p.system.reboot_all_vmms),
                    repair: d(&p.system.repair),
                },
            },
            solver: SolverSpec {
                quad_rel_tol: model.solver.quad.rel_tol,
                truncation_quantile: model.solver.quad.truncation,
                escalation: model.solver.escalation,
            },
            simulation: model.simulation.clone(),
        }
    }
}

fn star<T>(v: T) -> BTreeMap<String, T> {
    BTreeMap::from([("*".to_string(), v)])
}

/// Readable default document using `"*"` entries and natural units.
pub fn default_document(num_sfs: usize, num_hosts: usize) -> ConfigDocument {
    use midpoints::*;
    let e = |x| Some(DistSpec::mean_in(Family::Exponential, x));
    let h = |x| Some(DistSpec::mean_in(Family::Hypoexponential, x));
    ConfigDocument {
        topology: TopologySpec {
            num_sfs,
            num_hosts,
            vm_host_assignment: None,
        },
        parameters: ParametersSpec {
            sf: star(SfSpec { aging: e(SF_AGING), failover: e(SF_FAILOVER), failure: h(SF_FAILURE) }),
            vm: star(VmSpec {
                aging: e(VM_AGING),
                failover: e(VM_FAILOVER),
                failure: h(VM_FAILURE),
                restart: e(VM_RESTART),
            }),
            vmm: star(VmmSpec { aging: e(VMM_AGING), migration: e(VM_MIGRATION), failure: h(VMM_FAILURE) }),
            host: star(HostSpec {
                restart_sfs: e(HOST_RESTART_SFS),
                restart_sfs_vms: e(HOST_RESTART_SFS_VMS),
                reboot: e(HOST_REBOOT),
            }),
            system: SystemSpec {
                restart_all_sfs: e(SYSTEM_RESTART_SFS),
                restart_all_sfs_vms: e(SYSTEM_RESTART_SFS_VMS),
                reboot_all_vmms: e(SYSTEM_REBOOT_VMMS),
                repair: e(REPAIR),
            },
        },
        solver: SolverSpec::default(),
        simulation: SimulationSpec::default(),
    }
}

pub fn load_str(text: &str) -> Result<Model> {
    ConfigDocument::from_json(text)?.to_model()
}

pub fn load(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(path.display().to_string(), format!("cannot read: {e}")))?;
    load_str(&text)
}

/// Exact JSON for a model; loading it gives back the same model.
pub fn dump(model: &Model) -> String {
    ConfigDocument::from_model(model).to_json()
}
