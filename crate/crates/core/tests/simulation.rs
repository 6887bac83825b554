//! Monte-Carlo checks of the analytic pipeline.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use smpdep::distributions::{Distribution, Family};
use smpdep::kernel::{build_absorbing_kernel, build_full_kernel, KernelModel};
use smpdep::quadrature::QuadratureSettings;
use smpdep::simulator::{sample_departures, simulate_availability, simulate_mttf, trace, SimOptions, Z95};
use smpdep::solver::{solve_steady_state, SolverOptions};
use smpdep::statespace::StateSpace;
use smpdep::topology::{ParamGroup, ParameterSet, Topology};

/// Model whose failures and recoveries are on the aging timescale, so every
/// state is visited often.
fn compressed(m: usize, n: usize) -> (Topology, ParameterSet) {
    let topo = Topology::balanced(m, n).unwrap();
    let mut params = ParameterSet::defaults(&topo);
    let paths: Vec<String> = params.entries().into_iter().map(|(p, _)| p).collect();
    for p in paths {
        let d = params.entry_mut(&p).unwrap();
        if p.ends_with(".failure") {
            *d = Distribution::erlang2_phase_mean(200.0).unwrap();
        } else if !p.ends_with(".aging") {
            *d = Distribution::exponential_mean(d.mean() * 100.0).unwrap();
        }
    }
    (topo, params)
}

fn full(topo: &Topology, params: &ParameterSet) -> KernelModel {
    build_full_kernel(&StateSpace::build(topo), topo, params, true).unwrap()
}

fn ks_distance(d: &Distribution, samples: &mut [f64]) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut worst: f64 = 0.0;
    let mut i = 0;
    while i < samples.len() {
        let x = samples[i];
        let mut j = i;
        while j < samples.len() && samples[j] == x {
            j += 1;
        }
        let below = d.cdf(f64::from_bits(x.to_bits() - 1)).unwrap();
        let at = d.cdf(x).unwrap();
        worst = worst.max((i as f64 / n - below).abs()).max((j as f64 / n - at).abs());
        i = j;
    }
    worst
}

#[test]
fn samples_follow_their_cdf() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for d in [
        Distribution::exponential(0.3).unwrap(),
        Distribution::hypoexponential(0.5, 2.0).unwrap(),
        Distribution::erlang2_phase_mean(4.0).unwrap(),
        Distribution::deterministic(2.5).unwrap(),
    ] {
        let mut xs: Vec<f64> = (0..100_000).map(|_| d.sample(&mut rng)).collect();
        let ks = ks_distance(&d, &mut xs);
        assert!(ks <= 0.01, "{d:?}: KS {ks}");
    }
}

#[test]
fn sojourn_means_within_three_standard_errors() {
    for (topo, params) in [compressed(1, 1), compressed(2, 1)] {
        let km = full(&topo, &params);
        let quad = QuadratureSettings::default();
        for s in 0..km.num_states() {
            if km.race(s).is_empty() {
                continue;
            }
            let stats = sample_departures(&km, s, 100_000, 40 + s as u64, &SimOptions::default()).unwrap();
            let mean = km.mean_sojourn(s, &quad).unwrap();
            let tol = 3.0 * stats.sojourn_std_error;
            assert!((stats.mean_sojourn - mean).abs() <= tol, "{}: {} vs {mean} (3 se {tol})", km.label(s), stats.mean_sojourn);
        }
    }
}

#[test]
fn time_fractions_match_steady_state() {
    let (topo, params) = compressed(2, 1);
    let km = full(&topo, &params);
    let sol = solve_steady_state(&km, &QuadratureSettings::default()).unwrap();
    let run = simulate_availability(&km, 200_000, 3, &SimOptions::default()).unwrap();
    for (s, est) in run.state_fractions.iter().enumerate() {
        let se = est.half_width / Z95;
        assert!(
            (est.estimate - sol.pi[s]).abs() <= 4.0 * se + 1e-12,
            "{}: simulated {} vs pi {} (se {se})",
            km.label(s),
            est.estimate,
            sol.pi[s]
        );
    }
    assert!((run.availability.estimate - sol.availability).abs() <= 4.0 * run.availability.half_width / Z95);
}

#[test]
fn embedded_chain_visit_frequencies() {
    let (topo, params) = compressed(2, 1);
    let km = full(&topo, &params);
    let sol = solve_steady_state(&km, &QuadratureSettings::default()).unwrap();
    let cycles = 100_000;
    let rows = trace(&km, cycles, 11, &SimOptions::default()).unwrap();
    // Per-cycle visit counts give a regenerative ratio estimator with a valid standard error.
    let n = km.num_states();
    let mut per_cycle: Vec<Vec<f64>> = Vec::with_capacity(cycles);
    for row in &rows {
        if row.state == 0 {
            per_cycle.push(vec![0.0; n]);
        }
        per_cycle.last_mut().unwrap()[row.state] += 1.0;
    }
    let c = per_cycle.len() as f64;
    let totals: Vec<f64> = per_cycle.iter().map(|v| v.iter().sum()).collect();
    let mean_total = totals.iter().sum::<f64>() / c;
    for s in 0..n {
        let ys: Vec<f64> = per_cycle.iter().map(|v| v[s]).collect();
        let ratio = ys.iter().sum::<f64>() / totals.iter().sum::<f64>();
        let var = ys.iter().zip(&totals).map(|(y, t)| (y - ratio * t).powi(2)).sum::<f64>() / (c - 1.0);
        // Binomial floor for states too rare to be seen in every run.
        let floor = (sol.v[s] * (1.0 - sol.v[s]) / (mean_total * c)).sqrt();
        let se = (var.sqrt() / (mean_total * c.sqrt())).max(floor);
        assert!((ratio - sol.v[s]).abs() <= 4.0 * se + 1e-12, "{}: {ratio} vs v {} (se {se})", km.label(s), sol.v[s]);
    }
}

#[test]
fn simulations_are_reproducible_from_seed() {
    let topo = Topology::balanced(4, 2).unwrap();
    let mut params = ParameterSet::defaults(&topo);
    params.swap_family(ParamGroup::Recovery, Family::Deterministic).unwrap();
    let ss = StateSpace::build(&topo);
    let km = full(&topo, &params);
    let abs = build_absorbing_kernel(&ss, &topo, &params).unwrap();
    let opts = SimOptions::default();
    let a = simulate_availability(&km, 2_000, 99, &opts).unwrap();
    let b = simulate_availability(&km, 2_000, 99, &opts).unwrap();
    assert_eq!(a, b);
    let c = simulate_mttf(&abs, 500, 99, &opts).unwrap();
    let d = simulate_mttf(&abs, 500, 99, &opts).unwrap();
    assert_eq!(c.estimate.to_bits(), d.estimate.to_bits());
    assert_eq!(c.half_width.to_bits(), d.half_width.to_bits());
    assert_ne!(simulate_mttf(&abs, 500, 100, &opts).unwrap().estimate, c.estimate);
}

#[test]
fn unmerged_clocks_give_the_same_law() {
    let (topo, params) = compressed(1, 1);
    let km = full(&topo, &params);
    let quad = QuadratureSettings::default();
    let opts = SimOptions { merge_exponential: false };
    let s = 0;
    let stats = sample_departures(&km, s, 100_000, 5, &opts).unwrap();
    let mean = km.mean_sojourn(s, &quad).unwrap();
    assert!((stats.mean_sojourn - mean).abs() <= 3.0 * stats.sojourn_std_error);
}

#[test]
fn mttf_estimate_covers_analytic_value_on_small_model() {
    let (topo, params) = compressed(2, 1);
    let ss = StateSpace::build(&topo);
    let abs = build_absorbing_kernel(&ss, &topo, &params).unwrap();
    let analytic = smpdep::solver::evaluate_mttf(&topo, &params, &SolverOptions::default()).unwrap().mttf;
    let est = simulate_mttf(&abs, 20_000, 8, &SimOptions::default()).unwrap();
    assert!((est.estimate - analytic).abs() <= 4.0 * est.half_width / Z95, "{est:?} vs {analytic}");
}
