//! Builds a model from a JSON document with mixed units, an explicit
//! VM placement and a deterministic repair time.

use serde_json::json;
use smpdep::config;
use smpdep::solver::{evaluate, evaluate_mttf};

fn main() -> smpdep::Result<()> {
    let mut doc: serde_json::Value = serde_json::from_str(&config::default_document(3, 2).to_json()).expect("valid json");
    doc["topology"]["vm_host_assignment"] = json!([1, 2, 2]);
    doc["parameters"]["system"]["repair"] = json!({ "family": "deterministic", "value": 240, "unit": "min" });
    doc["parameters"]["vm"]["2"] = json!({
        "aging": { "family": "exponential", "mean": 20, "unit": "d" },
        "failover": { "family": "exponential", "rate": 60, "unit": "h" },
        "failure": { "family": "hypoexponential", "mean1": 10, "mean2": 30, "unit": "d" },
        "restart": { "family": "exponential", "mean": 45, "unit": "s" }
    });
    let text = doc.to_string();
    let model = config::load_str(&text)?;
    println!("system.repair = {:?}", model.params.system.repair);
    println!("vm.2.failure  = {:?}", model.params.vm[1].failure);

    let sol = evaluate(&model.topology, &model.params, &model.solver)?;
    let mttf = evaluate_mttf(&model.topology, &model.params, &model.solver)?.mttf;
    println!("availability {:.12}  mttf {mttf:.1} h", sol.availability);

    match config::load_str(&text.replacen("\"aging\"", "\"agng\"", 1)) {
        Err(e) => println!("typo rejected: {e}"),
        Ok(_) => unreachable!("unknown keys are rejected"),
    }
    Ok(())
}
