//! Cross-checks the semi-Markov solution against a directly built CTMC
//! once every holding time is exponential.

use smpdep::ctmc::CtmcModel;
use smpdep::solver::{evaluate, evaluate_mttf, SolverOptions};
use smpdep::topology::{ParamGroup, ParameterSet, Topology};
use smpdep::Family;

fn main() -> smpdep::Result<()> {
    let opts = SolverOptions::default();
    println!("{:>2} {:>2} {:>12} {:>12}", "m", "n", "dA/U", "dMTTF/MTTF");
    for (m, n) in [(1, 1), (2, 1), (2, 2), (4, 2)] {
        let topo = Topology::balanced(m, n)?;
        let mut params = ParameterSet::defaults(&topo);
        params.swap_family(ParamGroup::Failure, Family::Exponential)?;

        let ctmc = CtmcModel::build(&topo, &params, opts.escalation)?;
        let smp = evaluate(&topo, &params, &opts)?;
        let u = ctmc.steady_state()?.unavailability;
        let mttf = ctmc.mttf()?;
        let smp_mttf = evaluate_mttf(&topo, &params, &opts)?.mttf;
        println!(
            "{m:>2} {n:>2} {:>12.3e} {:>12.3e}",
            ((smp.unavailability - u) / u).abs(),
            ((smp_mttf - mttf) / mttf).abs()
        );
    }
    Ok(())
}
