//! Availability and MTTF against the VM failover rate, written as CSV and SVG.

use smpdep::plot::{line_chart, Panel};
use smpdep::solver::{evaluate, evaluate_mttf, SolverOptions};
use smpdep::topology::{ParameterSet, Topology};

fn main() -> smpdep::Result<()> {
    let topo = Topology::balanced(4, 2)?;
    let base = ParameterSet::defaults(&topo);
    let opts = SolverOptions::default();
    let path = "vm.*.failover.rate";

    let mut rows = Vec::new();
    println!("{path},availability,mttf");
    for k in 0..=10 {
        let rate = 10.0 * 1.5f64.powi(k);
        let mut p = base.clone();
        p.set_scalar(path, rate)?;
        let a = evaluate(&topo, &p, &opts)?.availability;
        let m = evaluate_mttf(&topo, &p, &opts)?.mttf;
        println!("{rate},{a:.15},{m:.6}");
        rows.push((rate, a, m));
    }

    let svg = line_chart(
        "VM failover rate (1/h)",
        &[
            Panel { title: "Availability".into(), y_label: "A".into(), points: rows.iter().map(|r| (r.0, r.1)).collect() },
            Panel { title: "MTTF".into(), y_label: "hours".into(), points: rows.iter().map(|r| (r.0, r.2)).collect() },
        ],
    );
    let out = std::env::temp_dir().join("failover_sweep.svg");
    std::fs::write(&out, svg).expect("temp dir is writable");
    eprintln!("chart written to {}", out.display());
    Ok(())
}
