//! Scaled sensitivities `SS = (∂γ/∂σ)(σ/γ)` by central differences.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{build_absorbing_kernel, build_full_kernel};
use crate::solver::{evaluate, evaluate_mttf, SolverOptions};
use crate::statespace::StateSpace;
use crate::topology::{ParameterSet, Topology};

pub const DEFAULT_REL_STEP: f64 = 1e-4;
/// Relative agreement required between the step and half-step derivatives.
pub const RICHARDSON_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Availability,
    Mttf,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Availability => "availability",
            Metric::Mttf => "mttf",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "availability" | "a" => Ok(Metric::Availability),
            "mttf" => Ok(Metric::Mttf),
            _ => Err(Error::Domain(format!(
                "unknown metric '{s}' (expected availability or mttf)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flag {
    Ok,
    /// The parameter does not enter the metric's model; the value is exactly zero.
    StructuralZero,
    /// Step and half-step derivatives disagree by more than the Richardson tolerance.
    LowConfidence,
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flag::Ok => "ok",
            Flag::StructuralZero => "structural_zero",
            Flag::LowConfidence => "low_confidence",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sensitivity {
    pub parameter: String,
    pub metric: Metric,
    pub value: f64,
    /// Raw derivative `∂γ/∂σ`.
    pub derivative: f64,
    /// Absolute step used.
    pub step: f64,
    pub flag: Flag,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SensitivityReport {
    pub entries: Vec<Sensitivity>,
}

/// Result of a scalar scaled-sensitivity computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledDerivative {
    pub value: f64,
    pub derivative: f64,
    pub step: f64,
    pub low_confidence: bool,
}

fn central<F: Fn(f64) -> Result<f64>>(f: &F, sigma: f64, h: f64) -> Result<f64> {
    Ok((f(sigma + h)? - f(sigma - h)?) / (2.0 * h))
}

/// Derivative of `f` at `sigma` with the half-step cross-check.
fn checked_derivative<F: Fn(f64) -> Result<f64>>(f: &F, sigma: f64, rel_step: f64) -> Result<(f64, f64, bool)> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!("parameter value must be > 0, got {sigma}")));
    }
    if !(rel_step > 0.0 && rel_step < 1.0) {
        return Err(Error::Domain(format!("relative step must be in (0, 1), got {rel_step}")));
    }
    let h = sigma * rel_step;
    let d1 = central(f, sigma, h)?;
    let d2 = central(f, sigma, h / 2.0)?;
    let scale = d1.abs().max(d2.abs());
    let low = scale > 0.0 && (d1 - d2).abs() > RICHARDSON_TOL * scale;
    Ok((d1, h, low))
}

/// `SS = f'(σ) σ / f(σ)` for an arbitrary metric function.
pub fn scaled_sensitivity<F: Fn(f64) -> Result<f64>>(f: F, sigma: f64, rel_step: f64) -> Result<ScaledDerivative> {
    let gamma = f(sigma)?;
    if gamma == 0.0 {
        return Err(Error::Domain("metric is zero at the base point".into()));
    }
    let (d, step, low_confidence) = checked_derivative(&f, sigma, rel_step)?;
    Ok(ScaledDerivative {
        value: d * sigma / gamma,
        derivative: d,
        step,
        low_confidence,
    })
}

/// Parameter entry of a scalar path, e.g. `sf.1.failure` for `sf.1.failure.phase1`.
fn entry_of(path: &str) -> &str {
    path.rsplit_once('.').map(|(e, _)| e).unwrap_or(path)
}

fn entry_matches(pattern: &str, entry: &str) -> bool {
    let p: Vec<&str> = pattern.split('.').collect();
    let e: Vec<&str> = entry.split('.').collect();
    p.len() == e.len() && p.iter().zip(&e).all(|(a, b)| *a == "*" || a == b)
}

/// Evaluates the pipeline quantity that is differenced for `metric`:
/// unavailability for availability (to avoid cancellation near one), MTTF otherwise.
fn differenced(topo: &Topology, params: &ParameterSet, opts: &SolverOptions, metric: Metric) -> Result<f64> {
    match metric {
        Metric::Availability => Ok(evaluate(topo, params, opts)?.unavailability),
        Metric::Mttf => Ok(evaluate_mttf(topo, params, opts)?.mttf),
    }
}

struct Context<'a> {
    topo: &'a Topology,
    params: &'a ParameterSet,
    opts: &'a SolverOptions,
    full_sources: std::collections::BTreeSet<String>,
    absorbing_sources: std::collections::BTreeSet<String>,
    availability: f64,
    mttf: f64,
}

impl<'a> Context<'a> {
    fn new(topo: &'a Topology, params: &'a ParameterSet, opts: &'a SolverOptions) -> Result<Self> {
        let ss = StateSpace::build(topo);
        let full = build_full_kernel(&ss, topo, params, opts.escalation)?;
        let absorbing = build_absorbing_kernel(&ss, topo, params)?;
        Ok(Context {
            topo,
            params,
            opts,
            full_sources: full.parameter_sources(),
            absorbing_sources: absorbing.parameter_sources(),
            availability: evaluate(topo, params, opts)?.availability,
            mttf: evaluate_mttf(topo, params, opts)?.mttf,
        })
    }

    fn sensitivity(&self, path: &str, metric: Metric, rel_step: f64) -> Result<Sensitivity> {
        let sigma = self.params.get_scalar(path)?;
        let sources = match metric {
            Metric::Availability => &self.full_sources,
            Metric::Mttf => &self.absorbing_sources,
        };
        let entry = entry_of(path);
        if !sources.iter().any(|s| entry_matches(entry, s)) {
            return Ok(Sensitivity {
                parameter: path.to_string(),
                metric,
                value: 0.0,
                derivative: 0.0,
                step: 0.0,
                flag: Flag::StructuralZero,
            });
        }
        let f = |x: f64| {
            let mut p = self.params.clone();
            p.set_scalar(path, x)?;
            differenced(self.topo, &p, self.opts, metric)
        };
        let (d, step, low) = checked_derivative(&f, sigma, rel_step)?;
        let (value, derivative) = match metric {
            // dA/dσ = -dU/dσ
            Metric::Availability => (-d * sigma / self.availability, -d),
            Metric::Mttf => (d * sigma / self.mttf, d),
        };
        Ok(Sensitivity {
            parameter: path.to_string(),
            metric,
            value,
            derivative,
            step,
            flag: if low { Flag::LowConfidence } else { Flag::Ok },
        })
    }
}

/// Scaled sensitivity of one metric with respect to one scalar parameter path.
pub fn parameter_sensitivity(
    topo: &Topology,
    params: &ParameterSet,
    opts: &SolverOptions,
    path: &str,
    metric: Metric,
    rel_step: f64,
) -> Result<Sensitivity> {
    params.get_scalar(path)?;
    Context::new(topo, params, opts)?.sensitivity(path, metric, rel_step)
}

/// Every scalar parameter against both metrics, sorted by `|SS|` descending.
pub fn full_report(topo: &Topology, params: &ParameterSet, opts: &SolverOptions) -> Result<SensitivityReport> {
    let ctx = Context::new(topo, params, opts)?;
    let jobs: Vec<(String, Metric)> = params
        .scalar_paths()
        .into_iter()
        .flat_map(|p| [(p.clone(), Metric::Availability), (p, Metric::Mttf)])
        .collect();
    let mut entries = jobs
        .par_iter()
        .map(|(p, m)| ctx.sensitivity(p, *m, DEFAULT_REL_STEP))
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by(|a, b| b.value.abs().total_cmp(&a.value.abs()));
    Ok(SensitivityReport { entries })
}

impl SensitivityReport {
    pub fn for_metric(&self, metric: Metric) -> impl Iterator<Item = &Sensitivity> {
        self.entries.iter().filter(move |e| e.metric == metric)
    }

    pub fn find(&self, parameter: &str, metric: Metric) -> Option<&Sensitivity> {
        self.entries
            .iter()
            .find(|e| e.parameter == parameter && e.metric == metric)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("parameter,metric,scaled_sensitivity,flag\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{:.14e},{}\n", e.parameter, e.metric, e.value, e.flag));
        }
        out
    }
}
