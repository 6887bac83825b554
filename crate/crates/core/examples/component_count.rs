//! More SFs or more hosts means more things that age.

use smpdep::solver::{evaluate, evaluate_mttf, SolverOptions};
use smpdep::topology::{ParameterSet, Topology};

fn main() -> smpdep::Result<()> {
    let opts = SolverOptions::default();
    println!("{:>2} {:>2} {:>7} {:>18} {:>14}", "m", "n", "states", "availability", "mttf (h)");
    for (m, n) in [(2, 1), (2, 2), (4, 2), (5, 2), (6, 2), (4, 3), (4, 4), (8, 4)] {
        let topo = Topology::balanced(m, n)?;
        let params = ParameterSet::defaults(&topo);
        let sol = evaluate(&topo, &params, &opts)?;
        let mttf = evaluate_mttf(&topo, &params, &opts)?.mttf;
        println!("{m:>2} {n:>2} {:>7} {:>18.15} {mttf:>14.1}", sol.pi.len(), sol.availability);
    }
    Ok(())
}
