//! Scaled sensitivities of availability and MTTF, one row per parameter type.

use smpdep::sensitivity::{full_report, Flag, Metric};
use smpdep::solver::SolverOptions;
use smpdep::topology::{ParameterSet, Topology};

fn main() -> smpdep::Result<()> {
    let topo = Topology::balanced(4, 2)?;
    let params = ParameterSet::defaults(&topo);
    let report = full_report(&topo, &params, &SolverOptions::default())?;

    // Component 1 stands for its symmetric peers.
    println!("{:<32} {:>14} {:>14}", "parameter", "availability", "mttf");
    let mut seen = Vec::new();
    for e in &report.entries {
        let p = &e.parameter;
        if !(p.contains(".1.") || p.starts_with("system.")) || seen.contains(p) {
            continue;
        }
        seen.push(p.clone());
        let a = report.find(p, Metric::Availability).unwrap();
        let m = report.find(p, Metric::Mttf).unwrap();
        let mttf = if m.flag == Flag::StructuralZero { "-".to_string() } else { format!("{:.4e}", m.value) };
        println!("{p:<32} {:>14.4e} {mttf:>14}", a.value);
    }
    Ok(())
}
