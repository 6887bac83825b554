//! Steady-state availability and mean time to failure of a kernel model.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::{build_absorbing_kernel, build_full_kernel, KernelModel, Tpm};
use crate::quadrature::QuadratureSettings;
use crate::statespace::StateSpace;
use crate::topology::{ParameterSet, Topology};

/// Maximum `‖vP - v‖∞` accepted for a stationary vector.
pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub quad: QuadratureSettings,
    /// Aging of further components during a recovery escalates the recovery.
    pub escalation: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            quad: QuadratureSettings::default(),
            escalation: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SmpSolution {
    pub labels: Vec<String>,
    pub up: Vec<bool>,
    pub tpm: DMatrix<f64>,
    /// Embedded-chain stationary vector (zero on states unreachable from the perfect state).
    pub v: Vec<f64>,
    /// Mean sojourn times in hours.
    pub h: Vec<f64>,
    /// Time-weighted steady-state probabilities.
    pub pi: Vec<f64>,
    pub availability: f64,
    /// `Σ π` over down states, computed directly rather than as `1 - A`.
    pub unavailability: f64,
}

#[derive(Debug, Clone)]
pub struct AbsorbingSolution {
    pub labels: Vec<String>,
    pub tpm: Tpm,
    /// Expected visits from the linear solve `V (I - P') = e_0`.
    pub visits: Vec<f64>,
    /// Expected visits from the star-structure closed form.
    pub visits_closed_form: Vec<f64>,
    pub h: Vec<f64>,
    /// `Σ V h` with the closed-form visits.
    pub mttf: f64,
    /// `Σ V h` with the linear-solve visits.
    pub mttf_linear: f64,
    /// Largest relative difference between the two visit vectors.
    pub closed_form_gap: f64,
}

fn reach(p: &DMatrix<f64>, start: usize, forward: bool, within: &[bool]) -> Vec<bool> {
    let n = p.nrows();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(s) = queue.pop_front() {
        for t in 0..n {
            let w = if forward { p[(s, t)] } else { p[(t, s)] };
            if w > 0.0 && within[t] && !seen[t] {
                seen[t] = true;
                queue.push_back(t);
            }
        }
    }
    seen
}

/// Stationary vector of an irreducible stochastic matrix by the
/// Grassmann–Taksar–Heyman elimination, which is free of subtractions.
pub fn edtmc_stationary(p: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = p.nrows();
    if n == 0 || p.ncols() != n {
        return Err(Error::Domain("transition matrix must be square and non-empty".into()));
    }
    let all = vec![true; n];
    let fwd = reach(p, 0, true, &all);
    let bwd = reach(p, 0, false, &all);
    let bad: Vec<String> = (0..n)
        .filter(|&i| !(fwd[i] && bwd[i]))
        .map(|i| format!("S{i}"))
        .collect();
    if !bad.is_empty() {
        return Err(Error::Structural(format!(
            "embedded chain is reducible; not communicating with S0: {}",
            bad.join(", ")
        )));
    }
    let mut a = p.clone();
    for k in (1..n).rev() {
        let s: f64 = (0..k).map(|j| a[(k, j)]).sum();
        if s <= 0.0 {
            return Err(Error::Structural(format!("state S{k} cannot reach lower states")));
        }
        for i in 0..k {
            a[(i, k)] /= s;
        }
        for i in 0..k {
            let aik = a[(i, k)];
            if aik == 0.0 {
                continue;
            }
            for j in 0..k {
                a[(i, j)] += aik * a[(k, j)];
            }
        }
    }
    let mut x = vec![0.0; n];
    x[0] = 1.0;
    for k in 1..n {
        x[k] = (0..k).map(|i| x[i] * a[(i, k)]).sum();
    }
    let total: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= total);

    let xv = DVector::from_vec(x.clone());
    let residual = (p.transpose() * &xv - &xv).amax();
    if residual > STATIONARY_RESIDUAL_TOL {
        return Err(Error::Consistency(format!(
            "stationary residual {residual:.3e} exceeds {STATIONARY_RESIDUAL_TOL:e}"
        )));
    }
    Ok(x)
}

/// `π_i = v_i h_i / Σ_j v_j h_j`; states with `v_i = 0` get `π_i = 0`.
pub fn steady_state(v: &[f64], h: &[f64]) -> Result<Vec<f64>> {
    if v.len() != h.len() {
        return Err(Error::Domain("v and h lengths differ".into()));
    }
    let w: Vec<f64> = v
        .iter()
        .zip(h)
        .map(|(&vi, &hi)| if vi == 0.0 { 0.0 } else { vi * hi })
        .collect();
    let total: f64 = w.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Consistency(format!("mean cycle length is {total}")));
    }
    Ok(w.into_iter().map(|x| x / total).collect())
}

pub fn availability(pi: &[f64], up: &[bool]) -> f64 {
    pi.iter().zip(up).filter(|(_, &u)| u).map(|(p, _)| p).sum()
}

/// Expected visits before absorption, from `V (I - P') = e_start`.
pub fn expected_visits(p: &DMatrix<f64>, start: usize) -> Result<Vec<f64>> {
    let n = p.nrows();
    let a = (DMatrix::identity(n, n) - p).transpose();
    let mut e = DVector::zeros(n);
    e[start] = 1.0;
    let sol = a
        .lu()
        .solve(&e)
        .ok_or_else(|| Error::Structural("I - P' is singular; some state never absorbs".into()))?;
    Ok(sol.iter().copied().collect())
}

/// Closed-form visits for a star-shaped absorbing chain: state 0 feeds
/// states `1..`, each of which returns to 0 or absorbs.
///
/// `V_0 = 1 / (q_0 + Σ_i p_{0i} q_i)` with `q` the absorption
/// probabilities, and `V_i = p_{0i} V_0`.
pub fn star_visits(tpm: &Tpm) -> Result<Vec<f64>> {
    let p = &tpm.p;
    let n = p.nrows();
    for i in 1..n {
        for j in 0..n {
            if j != 0 && p[(i, j)] != 0.0 {
                return Err(Error::Structural(format!(
                    "state S{i} moves to S{j}; closed form needs a star"
                )));
            }
        }
    }
    if p[(0, 0)] != 0.0 {
        return Err(Error::Structural("closed form needs P'[0][0] = 0".into()));
    }
    let denom = tpm.absorption[0] + (1..n).map(|i| p[(0, i)] * tpm.absorption[i]).sum::<f64>();
    if denom <= 0.0 {
        return Err(Error::Structural("absorption from the perfect state is impossible".into()));
    }
    let v0 = 1.0 / denom;
    let mut v = vec![v0];
    v.extend((1..n).map(|i| p[(0, i)] * v0));
    Ok(v)
}

pub fn mttf(visits: &[f64], h: &[f64]) -> f64 {
    visits.iter().zip(h).map(|(v, h)| v * h).sum()
}

/// Steady state of a recurrent kernel model, restricted to the class
/// reachable from state 0.
pub fn solve_steady_state(km: &KernelModel, quad: &QuadratureSettings) -> Result<SmpSolution> {
    let n = km.num_states();
    let tpm = km.one_step_tpm(quad)?;
    let p = tpm.p;
    if let Some(s) = tpm.absorption.iter().position(|&a| a > 0.0) {
        return Err(Error::Structural(format!("{} absorbs in a recurrent model", km.label(s))));
    }
    let all = vec![true; n];
    let reachable = reach(&p, 0, true, &all);
    let back = reach(&p, 0, false, &reachable);
    let stuck: Vec<&str> = (0..n)
        .filter(|&i| reachable[i] && !back[i])
        .map(|i| km.label(i))
        .collect();
    if !stuck.is_empty() {
        return Err(Error::Structural(format!(
            "states reachable from {} never return: {}",
            km.label(0),
            stuck.join(", ")
        )));
    }
    let idx: Vec<usize> = (0..n).filter(|&i| reachable[i]).collect();
    let sub = DMatrix::from_fn(idx.len(), idx.len(), |r, c| p[(idx[r], idx[c])]);
    let v_sub = edtmc_stationary(&sub)?;
    let mut v = vec![0.0; n];
    for (k, &i) in idx.iter().enumerate() {
        v[i] = v_sub[k];
    }
    let mut h = vec![f64::NAN; n];
    for &i in &idx {
        h[i] = km.mean_sojourn(i, quad)?;
    }
    for i in (0..n).filter(|i| !reachable[*i] && !km.race(*i).is_empty()) {
        h[i] = km.mean_sojourn(i, quad)?;
    }
    let pi = steady_state(&v, &h)?;
    let up: Vec<bool> = (0..n).map(|i| km.is_up(i)).collect();
    let availability = availability(&pi, &up);
    let unavailability = pi.iter().zip(&up).filter(|(_, &u)| !u).map(|(p, _)| p).sum();
    Ok(SmpSolution {
        labels: (0..n).map(|i| km.label(i).to_string()).collect(),
        up,
        tpm: p,
        v,
        h,
        pi,
        availability,
        unavailability,
    })
}

/// Mean time to absorption of an absorbing kernel model started in state 0.
pub fn solve_absorbing(km: &KernelModel, quad: &QuadratureSettings) -> Result<AbsorbingSolution> {
    let tpm = km.one_step_tpm(quad)?;
    let h = km.sojourn_vector(quad)?;
    if let Some(s) = h.iter().position(|x| x.is_nan()) {
        return Err(Error::Structural(format!("{} has no clocks", km.label(s))));
    }
    let visits = expected_visits(&tpm.p, 0)?;
    let visits_closed_form = star_visits(&tpm)?;
    let closed_form_gap = visits
        .iter()
        .zip(&visits_closed_form)
        .map(|(a, b)| if *b == 0.0 { a.abs() } else { ((a - b) / b).abs() })
        .fold(0.0, f64::max);
    Ok(AbsorbingSolution {
        labels: (0..km.num_states()).map(|i| km.label(i).to_string()).collect(),
        mttf: mttf(&visits_closed_form, &h),
        mttf_linear: mttf(&visits, &h),
        tpm,
        visits,
        visits_closed_form,
        h,
        closed_form_gap,
    })
}

/// Builds the full kernel and solves for steady-state availability.
pub fn evaluate(topo: &Topology, params: &ParameterSet, opts: &SolverOptions) -> Result<SmpSolution> {
    let ss = StateSpace::build(topo);
    let km = build_full_kernel(&ss, topo, params, opts.escalation)?;
    solve_steady_state(&km, &opts.quad)
}

/// Builds the absorbing kernel and solves for the mean time to failure.
pub fn evaluate_mttf(
    topo: &Topology,
    params: &ParameterSet,
    opts: &SolverOptions,
) -> Result<AbsorbingSolution> {
    let ss = StateSpace::build(topo);
    let km = build_absorbing_kernel(&ss, topo, params)?;
    solve_absorbing(&km, &opts.quad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gth_two_state() {
        let p = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(edtmc_stationary(&p).unwrap(), vec![0.5, 0.5]);
        let q = DMatrix::from_row_slice(3, 3, &[0.5, 0.25, 0.25, 0.5, 0.0, 0.5, 0.25, 0.25, 0.5]);
        let v = edtmc_stationary(&q).unwrap();
        assert!((v[0] - 0.4).abs() < 1e-15 && (v[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn reducible_chain_names_states() {
        let p = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let err = edtmc_stationary(&p).unwrap_err().to_string();
        assert!(err.contains("S2"), "{err}");
    }

    #[test]
    fn steady_state_weights_by_sojourn() {
        let pi = steady_state(&[0.5, 0.5], &[3.0, 1.0]).unwrap();
        assert_eq!(pi, vec![0.75, 0.25]);
        assert_eq!(availability(&pi, &[true, false]), 0.75);
    }

    #[test]
    fn star_closed_form_matches_linear_solve() {
        let p = DMatrix::from_row_slice(3, 3, &[0.0, 0.6, 0.4, 0.9, 0.0, 0.0, 0.7, 0.0, 0.0]);
        let tpm = Tpm { p: p.clone(), absorption: vec![0.0, 0.1, 0.3] };
        let lin = expected_visits(&p, 0).unwrap();
        let cf = star_visits(&tpm).unwrap();
        for (a, b) in lin.iter().zip(&cf) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((cf[0] - 1.0 / (0.6 * 0.1 + 0.4 * 0.3)).abs() < 1e-12);
    }

    #[test]
    fn default_model_solves() {
        let topo = Topology::balanced(4, 2).unwrap();
        let params = ParameterSet::defaults(&topo);
        let sol = evaluate(&topo, &params, &SolverOptions::default()).unwrap();
        assert!((sol.pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(sol.availability > 0.999 && sol.availability < 1.0);
        assert!((sol.availability + sol.unavailability - 1.0).abs() < 1e-12);
        let ab = evaluate_mttf(&topo, &params, &SolverOptions::default()).unwrap();
        assert!(ab.mttf > 0.0);
        assert!(ab.closed_form_gap < 1e-6, "{}", ab.closed_form_gap);
    }

    #[test]
    fn single_pair_skips_unreachable_states() {
        let topo = Topology::balanced(1, 1).unwrap();
        let params = ParameterSet::defaults(&topo);
        let sol = evaluate(&topo, &params, &SolverOptions::default()).unwrap();
        // with one SF the system-wide SF restart is never entered
        assert_eq!(sol.v[2], 0.0);
        assert_eq!(sol.pi[2], 0.0);
        assert!(sol.availability < 1.0);
    }
}
