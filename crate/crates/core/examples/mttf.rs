//! Mean time to failure with expected visits per state.

use smpdep::solver::{evaluate_mttf, SolverOptions};
use smpdep::topology::{ParameterSet, Topology};

fn main() -> smpdep::Result<()> {
    let topo = Topology::balanced(4, 2)?;
    let params = ParameterSet::defaults(&topo);
    let sol = evaluate_mttf(&topo, &params, &SolverOptions::default())?;

    println!("MTTF {:.6e} h ({:.1} days)", sol.mttf, sol.mttf / 24.0);
    println!("linear solve agrees to {:.2e}", sol.closed_form_gap);
    for (i, label) in sol.labels.iter().enumerate() {
        println!("{label:<22} visits {:>12.6}  h {:>10.3} h", sol.visits_closed_form[i], sol.h[i]);
    }
    Ok(())
}
