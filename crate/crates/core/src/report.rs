//! Text, CSV and JSON renderings of solver results.

use serde_json::json;

use crate::solver::{AbsorbingSolution, SmpSolution};

/// Formats a float for CSV with 15 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.14e}")
}

fn split_label(label: &str) -> (&str, &str) {
    label.split_once('=').unwrap_or((label, label))
}

pub fn availability_text(sol: &SmpSolution) -> String {
    let mut out = format!(
        "availability   {:.15}\nunavailability {:.10e}\n\n{:<6} {:<22} {:>22} {:>22} {}\n",
        sol.availability, sol.unavailability, "state", "label", "pi", "h (hours)", "up"
    );
    for i in 0..sol.pi.len() {
        let (s, l) = split_label(&sol.labels[i]);
        out.push_str(&format!(
            "{:<6} {:<22} {:>22.14e} {:>22.14e} {}\n",
            s, l, sol.pi[i], sol.h[i], sol.up[i]
        ));
    }
    out
}

pub fn availability_csv(sol: &SmpSolution) -> String {
    let mut out = String::from("state,label,pi,h,up\n");
    for i in 0..sol.pi.len() {
        let (s, l) = split_label(&sol.labels[i]);
        out.push_str(&format!("{s},{l},{},{},{}\n", num(sol.pi[i]), num(sol.h[i]), sol.up[i]));
    }
    out
}

pub fn availability_json(sol: &SmpSolution) -> String {
    let states: Vec<_> = (0..sol.pi.len())
        .map(|i| {
            json!({
                "label": sol.labels[i],
                "v": sol.v[i],
                "pi": sol.pi[i],
                "h": if sol.h[i].is_finite() { json!(sol.h[i]) } else { json!(null) },
                "up": sol.up[i],
            })
        })
        .collect();
    serde_json::to_string_pretty(&json!({
        "availability": sol.availability,
        "unavailability": sol.unavailability,
        "states": states,
    }))
    .expect("json values serialize")
}

pub fn mttf_text(sol: &AbsorbingSolution) -> String {
    let mut out = format!(
        "mttf   {:.12e} hours ({:.6} days)\nclosed-form vs linear-solve visit gap {:.3e}\n\n{:<6} {:<22} {:>22} {:>22}\n",
        sol.mttf,
        sol.mttf / 24.0,
        sol.closed_form_gap,
        "state",
        "label",
        "visits",
        "h (hours)"
    );
    for i in 0..sol.h.len() {
        let (s, l) = split_label(&sol.labels[i]);
        out.push_str(&format!(
            "{:<6} {:<22} {:>22.14e} {:>22.14e}\n",
            s, l, sol.visits_closed_form[i], sol.h[i]
        ));
    }
    out
}

pub fn mttf_csv(sol: &AbsorbingSolution) -> String {
    let mut out = String::from("state,label,visits,h\n");
    for i in 0..sol.h.len() {
        let (s, l) = split_label(&sol.labels[i]);
        out.push_str(&format!("{s},{l},{},{}\n", num(sol.visits_closed_form[i]), num(sol.h[i])));
    }
    out
}

pub fn mttf_json(sol: &AbsorbingSolution) -> String {
    let states: Vec<_> = (0..sol.h.len())
        .map(|i| {
            json!({
                "label": sol.labels[i],
                "visits": sol.visits_closed_form[i],
                "visits_linear_solve": sol.visits[i],
                "h": sol.h[i],
                "absorption": sol.tpm.absorption[i],
            })
        })
        .collect();
    serde_json::to_string_pretty(&json!({
        "mttf_hours": sol.mttf,
        "mttf_linear_solve_hours": sol.mttf_linear,
        "closed_form_gap": sol.closed_form_gap,
        "states": states,
    }))
    .expect("json values serialize")
}
