//! Prints each kernel entry of a small model with its trigger clock,
//! competing clocks and whether the edge is stated or reconstructed.

use smpdep::kernel::{build_absorbing_kernel, build_full_kernel};
use smpdep::quadrature::QuadratureSettings;
use smpdep::statespace::StateSpace;
use smpdep::topology::{ParameterSet, Topology};

fn main() -> smpdep::Result<()> {
    let topo = Topology::balanced(2, 1)?;
    let params = ParameterSet::defaults(&topo);
    let ss = StateSpace::build(&topo);
    let km = build_full_kernel(&ss, &topo, &params, true)?;
    print!("{}", km.audit_table());

    let tpm = km.one_step_tpm(&QuadratureSettings::default())?;
    println!();
    for s in 0..km.num_states() {
        let row: Vec<String> = (0..km.num_states())
            .filter(|&t| tpm.p[(s, t)] > 0.0)
            .map(|t| format!("{}:{:.3e}", km.label(t).split('=').next().unwrap_or_default(), tpm.p[(s, t)]))
            .collect();
        println!("{:<24} {}", km.label(s), row.join(" "));
    }

    let abs = build_absorbing_kernel(&ss, &topo, &params)?;
    println!("\nabsorbing model keeps {} of {} states", abs.num_states(), km.num_states());
    Ok(())
}
