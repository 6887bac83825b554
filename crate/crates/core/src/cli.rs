//! Command-line front end. `run` parses arguments, executes one subcommand
//! and returns the exit code together with what would go to stdout/stderr.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::config::{self, Model};
use crate::ctmc::CtmcModel;
use crate::distributions::Family;
use crate::error::{Error, Result};
use crate::kernel::{build_absorbing_kernel, build_full_kernel};
use crate::plot::{line_chart, Panel};
use crate::report;
use crate::sensitivity::{full_report, parameter_sensitivity, Metric, SensitivityReport, DEFAULT_REL_STEP};
use crate::simulator::{simulate_availability, simulate_mttf, trace, trace_csv, SimOptions};
use crate::solver::{evaluate, evaluate_mttf};
use crate::statespace::StateSpace;
use crate::topology::{ParamGroup, ParameterSet, Topology};

#[derive(Debug, Parser)]
#[command(name = "smpdep", version, about = "Availability and MTTF of VM-based service function chains with software aging and rejuvenation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Oracle {
    Ctmc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Availability,
    Mttf,
    Both,
}

impl MetricArg {
    fn metrics(self) -> Vec<Metric> {
        match self {
            MetricArg::Availability => vec![Metric::Availability],
            MetricArg::Mttf => vec![Metric::Mttf],
            MetricArg::Both => vec![Metric::Availability, Metric::Mttf],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelVariant {
    Full,
    Absorbing,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Steady-state availability with per-state probabilities and sojourn times.
    Availability {
        config: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Mean time to failure with expected visits and sojourn times.
    Mttf {
        config: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Compare against an independent solver (all-exponential models only).
        #[arg(long, value_enum)]
        oracle: Option<Oracle>,
    },
    /// Scaled sensitivities as CSV sorted by magnitude.
    Sensitivity {
        config: PathBuf,
        /// Scalar parameter path, e.g. sf.1.aging.rate or vm.*.failover.rate.
        #[arg(long, conflicts_with = "all", required_unless_present = "all")]
        param: Option<String>,
        /// Every scalar parameter against both metrics.
        #[arg(long)]
        all: bool,
        #[arg(long, value_enum, default_value = "both")]
        metric: MetricArg,
        #[arg(long, default_value_t = DEFAULT_REL_STEP)]
        rel_step: f64,
    },
    /// Monte-Carlo estimates with confidence intervals next to the analytic values.
    Simulate {
        config: PathBuf,
        /// Drawn from the operating system when omitted, and printed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        cycles: Option<usize>,
        #[arg(long)]
        replications: Option<usize>,
        /// Write a per-state trace of the first regeneration cycles as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        trace_cycles: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Metrics over a grid of parameter values, as CSV.
    Sweep {
        config: PathBuf,
        /// Swept path: a scalar parameter, topology.num_sfs or topology.num_hosts.
        #[arg(long, requires = "values", conflicts_with = "param_grid")]
        param: Option<String>,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        /// Cartesian grid, e.g. `vm.*.failover.rate=100,200;topology.num_sfs=4,5`.
        #[arg(long)]
        param_grid: Option<String>,
        #[arg(long, value_enum, default_value = "both")]
        metric: MetricArg,
        /// Mean-preserving family swap, e.g. failure=exponential (repeatable).
        #[arg(long = "swap-family")]
        swap_family: Vec<String>,
        /// Also write an SVG line chart.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Print a default configuration document.
    Init {
        #[arg(long, default_value_t = 4)]
        num_sfs: usize,
        #[arg(long, default_value_t = 2)]
        num_hosts: usize,
    },
    /// Print a configuration in exact normalized form (hours, one entry per index).
    Dump { config: PathBuf },
    /// Print every kernel edge with its trigger, competitors and provenance.
    Kernel {
        config: PathBuf,
        #[arg(long, value_enum, default_value = "full")]
        variant: KernelVariant,
    },
}

/// Exit code plus captured output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let mut stderr = String::new();
    match execute(cli.command, &mut stderr) {
        Ok(stdout) => Outcome { code: 0, stdout, stderr },
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            Outcome {
                code: e.exit_code(),
                stdout: String::new(),
                stderr,
            }
        }
    }
}

/// Honors `SMPDEP_THREADS` by sizing the global thread pool once.
pub fn configure_threads() {
    if let Some(n) = std::env::var("SMPDEP_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn execute(command: Command, stderr: &mut String) -> Result<String> {
    match command {
        Command::Availability { config, format } => {
            let model = config::load(&config)?;
            let sol = evaluate(&model.topology, &model.params, &model.solver)?;
            Ok(match format {
                Format::Text => report::availability_text(&sol),
                Format::Csv => report::availability_csv(&sol),
                Format::Json => report::availability_json(&sol) + "\n",
            })
        }
        Command::Mttf { config, format, oracle } => {
            let model = config::load(&config)?;
            if oracle.is_some() {
                return mttf_oracle(&model);
            }
            let sol = evaluate_mttf(&model.topology, &model.params, &model.solver)?;
            Ok(match format {
                Format::Text => report::mttf_text(&sol),
                Format::Csv => report::mttf_csv(&sol),
                Format::Json => report::mttf_json(&sol) + "\n",
            })
        }
        Command::Sensitivity { config, param, all, metric, rel_step } => {
            let model = config::load(&config)?;
            let report = if all {
                let mut r = full_report(&model.topology, &model.params, &model.solver)?;
                let keep = metric.metrics();
                r.entries.retain(|e| keep.contains(&e.metric));
                r
            } else {
                let path = param.expect("clap enforces --param or --all");
                if let Err(e) = model.params.get_scalar(&path) {
                    return Err(Error::Domain(format!(
                        "{}\nvalid parameter paths:\n  {}",
                        inner(&e),
                        model.params.scalar_paths().join("\n  ")
                    )));
                }
                let mut entries = metric
                    .metrics()
                    .into_iter()
                    .map(|m| parameter_sensitivity(&model.topology, &model.params, &model.solver, &path, m, rel_step))
                    .collect::<Result<Vec<_>>>()?;
                entries.sort_by(|a, b| b.value.abs().total_cmp(&a.value.abs()));
                SensitivityReport { entries }
            };
            Ok(report.to_csv())
        }
        Command::Simulate { config, seed, cycles, replications, trace: trace_path, trace_cycles, format } => {
            let model = config::load(&config)?;
            let seed = match seed.or(model.simulation.seed) {
                Some(s) => s,
                None => {
                    let s = rand::random::<u64>();
                    let _ = writeln!(stderr, "seed drawn from entropy: {s}");
                    s
                }
            };
            simulate(&model, seed, cycles, replications, trace_path, trace_cycles, format)
        }
        Command::Sweep { config, param, values, param_grid, metric, swap_family, plot } => {
            let mut model = config::load(&config)?;
            for spec in &swap_family {
                let (group, family) = spec.split_once('=').ok_or_else(|| {
                    Error::Domain(format!("--swap-family expects group=family, got `{spec}`"))
                })?;
                let group: ParamGroup = group.parse()?;
                let family: Family = family.parse()?;
                model.params.swap_family(group, family)?;
            }
            let axes = match (param, param_grid) {
                (Some(p), _) => vec![(p, values)],
                (None, Some(g)) => parse_grid(&g)?,
                (None, None) => Vec::new(),
            };
            sweep(&model, &axes, metric, plot)
        }
        Command::Init { num_sfs, num_hosts } => {
            Topology::balanced(num_sfs, num_hosts)?;
            Ok(config::default_document(num_sfs, num_hosts).to_json() + "\n")
        }
        Command::Dump { config } => Ok(config::dump(&config::load(&config)?) + "\n"),
        Command::Kernel { config, variant } => {
            let model = config::load(&config)?;
            let ss = StateSpace::build(&model.topology);
            let km = match variant {
                KernelVariant::Full => build_full_kernel(&ss, &model.topology, &model.params, model.solver.escalation)?,
                KernelVariant::Absorbing => build_absorbing_kernel(&ss, &model.topology, &model.params)?,
            };
            Ok(km.audit_table())
        }
    }
}

fn inner(e: &Error) -> String {
    match e {
        Error::Domain(m) => m.clone(),
        other => other.to_string(),
    }
}

fn mttf_oracle(model: &Model) -> Result<String> {
    let oracle = CtmcModel::build(&model.topology, &model.params, model.solver.escalation)?;
    let sol = evaluate_mttf(&model.topology, &model.params, &model.solver)?;
    let smp_a = evaluate(&model.topology, &model.params, &model.solver)?;
    let ctmc_mttf = oracle.mttf()?;
    let ctmc_ss = oracle.steady_state()?;
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    Ok(format!(
        "metric,smp,ctmc,relative_difference\nmttf,{},{},{:.3e}\navailability,{},{},{:.3e}\nunavailability,{},{},{:.3e}\n",
        report::num(sol.mttf),
        report::num(ctmc_mttf),
        rel(sol.mttf, ctmc_mttf),
        report::num(smp_a.availability),
        report::num(ctmc_ss.availability),
        rel(smp_a.availability, ctmc_ss.availability),
        report::num(smp_a.unavailability),
        report::num(ctmc_ss.unavailability),
        rel(smp_a.unavailability, ctmc_ss.unavailability),
    ))
}

fn simulate(
    model: &Model,
    seed: u64,
    cycles: Option<usize>,
    replications: Option<usize>,
    trace_path: Option<PathBuf>,
    trace_cycles: usize,
    format: Format,
) -> Result<String> {
    let cycles = cycles.unwrap_or(model.simulation.cycles);
    let replications = replications.unwrap_or(model.simulation.replications);
    let ss = StateSpace::build(&model.topology);
    let full = build_full_kernel(&ss, &model.topology, &model.params, model.solver.escalation)?;
    let absorbing = build_absorbing_kernel(&ss, &model.topology, &model.params)?;
    let opts = SimOptions::default();
    let analytic_a = evaluate(&model.topology, &model.params, &model.solver)?.availability;
    let analytic_m = evaluate_mttf(&model.topology, &model.params, &model.solver)?.mttf;
    let a = simulate_availability(&full, cycles, seed, &opts)?.availability;
    let m = simulate_mttf(&absorbing, replications, seed, &opts)?;
    if let Some(path) = trace_path {
        let rows = trace(&full, trace_cycles, seed, &opts)?;
        std::fs::write(&path, trace_csv(&full, &rows))
            .map_err(|e| Error::config(path.display().to_string(), format!("cannot write trace: {e}")))?;
    }
    let verdict = |c: bool| if c { "covered" } else { "not-covered" };
    let rows = [("availability", a, analytic_a), ("mttf", m, analytic_m)];
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str("metric,estimate,half_width,lower,upper,analytic,count,seed,verdict\n");
            for (name, e, x) in rows {
                let _ = writeln!(
                    out,
                    "{name},{},{},{},{},{},{},{},{}",
                    report::num(e.estimate),
                    report::num(e.half_width),
                    report::num(e.lower()),
                    report::num(e.upper()),
                    report::num(x),
                    e.count,
                    e.seed,
                    verdict(e.covers(x))
                );
            }
        }
        Format::Json => {
            let items: Vec<_> = rows
                .iter()
                .map(|(name, e, x)| {
                    serde_json::json!({
                        "metric": name, "estimate": e.estimate, "half_width": e.half_width,
                        "analytic": x, "count": e.count, "seed": e.seed, "covered": e.covers(*x),
                    })
                })
                .collect();
            out = serde_json::to_string_pretty(&items).expect("json values serialize") + "\n";
        }
        Format::Text => {
            let _ = writeln!(out, "seed {seed}");
            for (name, e, x) in rows {
                let _ = writeln!(
                    out,
                    "{name:<12} sim {:.12e} ± {:.6e} (95% CI [{:.12e}, {:.12e}], n={})  ana {:.12e}  {}",
                    e.estimate,
                    e.half_width,
                    e.lower(),
                    e.upper(),
                    e.count,
                    x,
                    verdict(e.covers(x))
                );
            }
        }
    }
    Ok(out)
}

fn parse_grid(spec: &str) -> Result<Vec<(String, Vec<f64>)>> {
    spec.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|axis| {
            let (p, vs) = axis
                .split_once('=')
                .ok_or_else(|| Error::Domain(format!("grid axis `{axis}` must look like path=v1,v2")))?;
            let values = vs
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Domain(format!("bad value `{v}` in `{axis}`"))))
                .collect::<Result<Vec<_>>>()?;
            Ok((p.trim().to_string(), values))
        })
        .collect()
}

/// Copies the laws of component 1 to every component of a new topology.
fn resize(params: &ParameterSet, topo: &Topology) -> ParameterSet {
    let m = topo.num_sfs();
    let n = topo.num_hosts();
    ParameterSet {
        sf: vec![params.sf[0].clone(); m],
        vm: vec![params.vm[0].clone(); m],
        vmm: vec![params.vmm[0].clone(); n],
        host: vec![params.host[0].clone(); n],
        system: params.system.clone(),
    }
}

fn apply(model: &Model, point: &[(String, f64)]) -> Result<(Topology, ParameterSet)> {
    let mut m = model.topology.num_sfs();
    let mut n = model.topology.num_hosts();
    let mut resized = false;
    for (p, v) in point {
        let count = || {
            if v.fract() != 0.0 {
                Err(Error::Domain(format!("{p} needs integer values, got {v}")))
            } else {
                Ok(*v as usize)
            }
        };
        match p.as_str() {
            "topology.num_sfs" => {
                m = count()?;
                resized = true;
            }
            "topology.num_hosts" => {
                n = count()?;
                resized = true;
            }
            _ => {}
        }
    }
    let (topo, mut params) = if resized {
        let topo = Topology::balanced(m, n)?;
        let params = resize(&model.params, &topo);
        (topo, params)
    } else {
        (model.topology.clone(), model.params.clone())
    };
    for (p, v) in point {
        if !p.starts_with("topology.") {
            params.set_scalar(p, *v)?;
        }
    }
    Ok((topo, params))
}

fn sweep(model: &Model, axes: &[(String, Vec<f64>)], metric: MetricArg, plot: Option<PathBuf>) -> Result<String> {
    for (p, vs) in axes {
        if vs.is_empty() {
            return Err(Error::Domain(format!("no values given for `{p}`")));
        }
        if let Some(v) = vs.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Domain(format!("sweep values must be > 0, got {v} for `{p}`")));
        }
        if !p.starts_with("topology.") {
            model.params.get_scalar(p).map_err(|e| {
                Error::Domain(format!(
                    "{}\nvalid parameter paths:\n  topology.num_sfs\n  topology.num_hosts\n  {}",
                    inner(&e),
                    model.params.scalar_paths().join("\n  ")
                ))
            })?;
        } else if p != "topology.num_sfs" && p != "topology.num_hosts" {
            return Err(Error::Domain(format!("unknown topology axis `{p}`")));
        }
    }
    let mut points: Vec<Vec<(String, f64)>> = vec![Vec::new()];
    for (p, vs) in axes {
        points = points
            .into_iter()
            .flat_map(|pt| {
                vs.iter().map(move |v| {
                    let mut q = pt.clone();
                    q.push((p.clone(), *v));
                    q
                })
            })
            .collect();
    }
    let metrics = metric.metrics();
    let results = points
        .par_iter()
        .map(|pt| {
            let (topo, params) = apply(model, pt)?;
            let a = if metrics.contains(&Metric::Availability) {
                Some(evaluate(&topo, &params, &model.solver)?.availability)
            } else {
                None
            };
            let m = if metrics.contains(&Metric::Mttf) {
                Some(evaluate_mttf(&topo, &params, &model.solver)?.mttf)
            } else {
                None
            };
            Ok((a, m))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut header: Vec<String> = match axes.len() {
        0 => vec!["value".into()],
        1 => vec!["value".into()],
        _ => axes.iter().map(|(p, _)| p.clone()).collect(),
    };
    header.extend(metrics.iter().map(|m| m.to_string()));
    let mut out = header.join(",") + "\n";
    for (pt, (a, m)) in points.iter().zip(&results) {
        let mut row: Vec<String> = if pt.is_empty() {
            vec!["base".into()]
        } else {
            pt.iter().map(|(_, v)| format!("{v}")).collect()
        };
        row.extend(a.map(report::num));
        row.extend(m.map(report::num));
        out.push_str(&(row.join(",") + "\n"));
    }
    if let Some(path) = plot {
        if axes.len() != 1 {
            return Err(Error::Domain("--plot needs exactly one swept parameter".into()));
        }
        let xs: Vec<f64> = points.iter().map(|pt| pt[0].1).collect();
        let mut panels = Vec::new();
        if metrics.contains(&Metric::Availability) {
            panels.push(Panel {
                title: "Steady-state availability".into(),
                y_label: "availability".into(),
                points: xs.iter().zip(&results).map(|(x, r)| (*x, r.0.unwrap_or(f64::NAN))).collect(),
            });
        }
        if metrics.contains(&Metric::Mttf) {
            panels.push(Panel {
                title: "Mean time to failure".into(),
                y_label: "MTTF (hours)".into(),
                points: xs.iter().zip(&results).map(|(x, r)| (*x, r.1.unwrap_or(f64::NAN))).collect(),
            });
        }
        std::fs::write(&path, line_chart(&axes[0].0, &panels))
            .map_err(|e| Error::config(path.display().to_string(), format!("cannot write plot: {e}")))?;
    }
    Ok(out)
}
