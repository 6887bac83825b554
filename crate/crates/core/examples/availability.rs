//! Steady-state availability of the default four-SF, two-host chain.

use smpdep::solver::{evaluate, SolverOptions};
use smpdep::topology::{ParameterSet, Topology};

fn main() -> smpdep::Result<()> {
    let topo = Topology::balanced(4, 2)?;
    let params = ParameterSet::defaults(&topo);
    let sol = evaluate(&topo, &params, &SolverOptions::default())?;

    println!("availability   {:.15}", sol.availability);
    println!("unavailability {:.6e}", sol.unavailability);
    println!("downtime       {:.3} min/year", sol.unavailability * 365.0 * 24.0 * 60.0);
    println!();
    let mut ranked: Vec<usize> = (0..sol.pi.len()).collect();
    ranked.sort_by(|&a, &b| sol.pi[b].total_cmp(&sol.pi[a]));
    for &s in ranked.iter().take(8) {
        println!("{:<28} pi {:.6e}  h {:.4e} h", sol.labels[s], sol.pi[s], sol.h[s]);
    }
    Ok(())
}
