//! Mean-preserving family swaps: failure times matter, recovery shapes barely do.

use smpdep::solver::{evaluate, evaluate_mttf, SolverOptions};
use smpdep::topology::{ParamGroup, ParameterSet, Topology};
use smpdep::Family;

fn main() -> smpdep::Result<()> {
    let topo = Topology::balanced(4, 2)?;
    let opts = SolverOptions::default();
    let base = ParameterSet::defaults(&topo);
    let cases = [
        ("defaults", None),
        ("failure -> exponential", Some((ParamGroup::Failure, Family::Exponential))),
        ("failure -> deterministic", Some((ParamGroup::Failure, Family::Deterministic))),
        ("recovery -> deterministic", Some((ParamGroup::Recovery, Family::Deterministic))),
        ("recovery -> hypoexponential", Some((ParamGroup::Recovery, Family::Hypoexponential))),
    ];
    let a0 = evaluate(&topo, &base, &opts)?.unavailability;
    let m0 = evaluate_mttf(&topo, &base, &opts)?.mttf;
    println!("{:<30} {:>14} {:>10} {:>14} {:>10}", "case", "unavailability", "change", "mttf (h)", "change");
    for (name, swap) in cases {
        let mut p = base.clone();
        if let Some((group, family)) = swap {
            p.swap_family(group, family)?;
        }
        let u = evaluate(&topo, &p, &opts)?.unavailability;
        let m = evaluate_mttf(&topo, &p, &opts)?.mttf;
        println!("{name:<30} {u:>14.6e} {:>9.3}% {m:>14.1} {:>9.3}%", 100.0 * (u - a0) / a0, 100.0 * (m - m0) / m0);
    }
    Ok(())
}
