//! Monte-Carlo estimates next to the analytic values.

use smpdep::kernel::{build_absorbing_kernel, build_full_kernel};
use smpdep::simulator::{simulate_availability, simulate_mttf, SimOptions};
use smpdep::solver::{evaluate, evaluate_mttf, SolverOptions};
use smpdep::statespace::StateSpace;
use smpdep::topology::{ParameterSet, Topology};

fn main() -> smpdep::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2024);
    let topo = Topology::balanced(4, 2)?;
    let params = ParameterSet::defaults(&topo);
    let ss = StateSpace::build(&topo);
    let opts = SimOptions::default();
    let solver = SolverOptions::default();

    let full = build_full_kernel(&ss, &topo, &params, solver.escalation)?;
    let run = simulate_availability(&full, 10_000, seed, &opts)?;
    let a = evaluate(&topo, &params, &solver)?.availability;
    let est = run.availability;
    println!("availability sim {:.10} ± {:.2e}  analytic {a:.10}  covered {}", est.estimate, est.half_width, est.covers(a));

    let absorbing = build_absorbing_kernel(&ss, &topo, &params)?;
    let est = simulate_mttf(&absorbing, 2_000, seed, &opts)?;
    let m = evaluate_mttf(&topo, &params, &solver)?.mttf;
    println!("mttf         sim {:.1} ± {:.1} h  analytic {m:.1} h  covered {}", est.estimate, est.half_width, est.covers(m));
    Ok(())
}
