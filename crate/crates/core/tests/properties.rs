//! Property tests over the analytic pipeline.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use smpdep::config;
use smpdep::distributions::{Distribution, Family};
use smpdep::kernel::{build_absorbing_kernel, build_full_kernel, Target};
use smpdep::quadrature::{integrate, QuadratureSettings};
use smpdep::sensitivity::{full_report, parameter_sensitivity, Metric, DEFAULT_REL_STEP};
use smpdep::solver::{evaluate, evaluate_mttf, SolverOptions};
use smpdep::statespace::{StateKind, StateSpace};
use smpdep::topology::{ComponentRef, ParamGroup, ParamKind, ParameterSet, Topology};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn shape() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=6).prop_flat_map(|m| (Just(m), 1usize..=m.min(3)))
}

fn distribution() -> impl Strategy<Value = Distribution> {
    prop_oneof![
        (1e-3f64..1e3).prop_map(|r| Distribution::exponential(r).unwrap()),
        (1e-3f64..1e3, 1e-3f64..1e3).prop_map(|(a, b)| Distribution::hypoexponential(a, b).unwrap()),
        (1e-3f64..1e3).prop_map(|r| Distribution::erlang2_phase_mean(1.0 / r).unwrap()),
        (1e-3f64..1e3).prop_map(|v| Distribution::deterministic(v).unwrap()),
    ]
}

/// Multiplies every scalar parameter of `params` by a factor drawn cyclically from `factors`.
fn perturbed(params: &ParameterSet, factors: &[f64], keep: impl Fn(ParamKind) -> bool) -> ParameterSet {
    let mut out = params.clone();
    for (k, p) in params.scalar_paths().iter().enumerate() {
        if keep(params.kind_of(p).unwrap()) {
            let v = params.get_scalar(p).unwrap();
            out.set_scalar(p, v * factors[k % factors.len()]).unwrap();
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn cdf_is_bounded_and_monotone(d in distribution(), ts in proptest::collection::vec(0.0f64..1e4, 2..40)) {
        let mut ts = ts;
        ts.sort_by(f64::total_cmp);
        let values: Vec<f64> = ts.iter().map(|t| d.cdf(*t).unwrap()).collect();
        for v in &values {
            prop_assert!((0.0..=1.0).contains(v));
        }
        for w in values.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn survival_integrates_to_mean(d in distribution()) {
        let mean = d.mean();
        let end = 80.0 * mean;
        let s = |t: f64| d.survival(t).unwrap();
        let total = match d.atom() {
            Some(v) => integrate(s, 0.0, v, 1e-12, 4000).unwrap().value + integrate(s, v, end, 1e-12, 4000).unwrap().value,
            None => integrate(s, 0.0, end, 1e-12, 4000).unwrap().value,
        };
        prop_assert!(rel(total, mean) <= 1e-8, "{d:?}: {total} vs {mean}");
    }

    #[test]
    fn index_sets_partition_components((m, n) in shape()) {
        let topo = Topology::balanced(m, n).unwrap();
        for i in 0..m {
            let sets = topo.index_sets(ComponentRef::Sf(i)).unwrap();
            let mut all: Vec<usize> = sets.same_host_peers.iter().chain(&sets.other_host_sfs).copied().collect();
            all.push(i);
            all.sort_unstable();
            prop_assert_eq!(all, (0..m).collect::<Vec<_>>());
            prop_assert_eq!(&sets.other_host_sfs, &sets.other_host_vms);
        }
        for j in 0..n {
            let sets = topo.index_sets(ComponentRef::Vmm(j)).unwrap();
            let mut vmms = sets.other_vmms.clone();
            vmms.push(j);
            vmms.sort_unstable();
            prop_assert_eq!(vmms, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn state_index_is_a_bijection((m, n) in shape()) {
        let topo = Topology::balanced(m, n).unwrap();
        let ss = StateSpace::build(&topo);
        for (i, s) in ss.states().iter().enumerate() {
            prop_assert_eq!(ss.index_of(s.kind).unwrap(), i);
        }
        prop_assert_eq!(ss.len() - ss.up_state_indices().len(), 4 + m + 3 * n);
    }

    #[test]
    fn config_round_trip_is_identity((m, n) in shape(), factors in proptest::collection::vec(0.25f64..4.0, 1..8)) {
        let topo = Topology::balanced(m, n).unwrap();
        let mut model = config::load_str(&config::default_document(m, n).to_json()).unwrap();
        model.params = perturbed(&ParameterSet::defaults(&topo), &factors, |_| true);
        let text = config::dump(&model);
        let again = config::load_str(&text).unwrap();
        prop_assert_eq!(&again.params, &model.params);
        prop_assert_eq!(config::dump(&again), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn kernel_rows_are_stochastic((m, n) in shape(), factors in proptest::collection::vec(0.2f64..5.0, 1..6), swap in 0usize..3) {
        let topo = Topology::balanced(m, n).unwrap();
        let mut params = perturbed(&ParameterSet::defaults(&topo), &factors, |_| true);
        match swap {
            1 => params.swap_family(ParamGroup::Recovery, Family::Deterministic).unwrap(),
            2 => params.swap_family(ParamGroup::Failure, Family::Exponential).unwrap(),
            _ => {}
        }
        let ss = StateSpace::build(&topo);
        let quad = QuadratureSettings::default();
        for km in [build_full_kernel(&ss, &topo, &params, true).unwrap(), build_absorbing_kernel(&ss, &topo, &params).unwrap()] {
            let tpm = km.one_step_tpm(&quad).unwrap();
            for r in 0..km.num_states() {
                let total = tpm.p.row(r).sum() + tpm.absorption[r];
                prop_assert!((total - 1.0).abs() <= 1e-9, "{}: {total}", km.label(r));
            }
        }
    }

    #[test]
    fn fast_path_matches_quadrature((m, n) in shape(), factors in proptest::collection::vec(0.2f64..5.0, 1..6)) {
        let topo = Topology::balanced(m, n).unwrap();
        let mut params = perturbed(&ParameterSet::defaults(&topo), &factors, |_| true);
        params.swap_family(ParamGroup::Failure, Family::Exponential).unwrap();
        let km = build_full_kernel(&StateSpace::build(&topo), &topo, &params, true).unwrap();
        let quad = QuadratureSettings::default();
        let fast = km.one_step_tpm(&quad).unwrap();
        let slow = km.one_step_tpm(&quad.quadrature_only()).unwrap();
        prop_assert!((fast.p - slow.p).amax() <= 1e-9);
    }

    #[test]
    fn solution_invariants((m, n) in shape(), factors in proptest::collection::vec(0.2f64..5.0, 1..6)) {
        let topo = Topology::balanced(m, n).unwrap();
        let params = perturbed(&ParameterSet::defaults(&topo), &factors, |_| true);
        let opts = SolverOptions::default();
        let sol = evaluate(&topo, &params, &opts).unwrap();
        prop_assert!((sol.v.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!((sol.pi.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(sol.pi.iter().all(|p| *p >= 0.0));
        prop_assert!((0.0..=1.0).contains(&sol.availability));
        let abs = evaluate_mttf(&topo, &params, &opts).unwrap();
        prop_assert!(abs.visits_closed_form.iter().all(|v| *v >= 0.0));
        prop_assert!(abs.visits_closed_form[0] >= 1.0);
        prop_assert!(abs.mttf > 0.0);
    }

    #[test]
    fn mttf_ignores_restart_and_repair_laws(factors in proptest::collection::vec(0.01f64..100.0, 1..10), det in any::<bool>()) {
        let (topo, base) = (Topology::balanced(4, 2).unwrap(), ParameterSet::defaults(&Topology::balanced(4, 2).unwrap()));
        let restart_like = |k| matches!(k, ParamKind::Restart | ParamKind::SystemRestart | ParamKind::Repair);
        let mut changed = perturbed(&base, &factors, restart_like);
        if det {
            for (path, _) in base.entries() {
                let kind = base.kind_of(&format!("{path}.rate")).ok();
                if kind.is_some_and(restart_like) {
                    let d = changed.entry_mut(&path).unwrap();
                    *d = d.mean_matched_swap(Family::Deterministic);
                }
            }
        }
        prop_assert_ne!(&changed, &base);
        let opts = SolverOptions::default();
        let a = evaluate_mttf(&topo, &base, &opts).unwrap().mttf;
        let b = evaluate_mttf(&topo, &changed, &opts).unwrap().mttf;
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn first_moment_identity_on_random_states() {
    use rand::seq::IndexedRandom;
    let topo = Topology::balanced(4, 2).unwrap();
    let mut params = ParameterSet::defaults(&topo);
    params.swap_family(ParamGroup::Recovery, Family::Deterministic).unwrap();
    let km = build_full_kernel(&StateSpace::build(&topo), &topo, &params, true).unwrap();
    let quad = QuadratureSettings::default();
    let states: Vec<usize> = (0..km.num_states()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for &s in states.choose_multiple(&mut rng, 5) {
        let race = km.race(s);
        let moments: f64 = (0..race.edges.len()).map(|k| race.edge_first_moment(k, &quad).unwrap()).sum();
        let mean = km.mean_sojourn(s, &quad).unwrap();
        assert!(rel(moments, mean) <= 1e-6, "{}: {moments} vs {mean}", km.label(s));
    }
}

#[test]
fn instant_recovery_gives_full_availability() {
    let topo = Topology::balanced(4, 2).unwrap();
    let mut params = ParameterSet::defaults(&topo);
    for p in params.scalar_paths() {
        let kind = params.kind_of(&p).unwrap();
        if matches!(kind, ParamKind::Restart | ParamKind::SystemRestart | ParamKind::Repair | ParamKind::Failover) {
            let v = params.get_scalar(&p).unwrap();
            params.set_scalar(&p, v * 1e9).unwrap();
        }
    }
    let opts = SolverOptions { escalation: false, ..SolverOptions::default() };
    let base = evaluate(&topo, &ParameterSet::defaults(&topo), &opts).unwrap();
    let fast = evaluate(&topo, &params, &opts).unwrap();
    assert!(fast.unavailability < base.unavailability * 1e-6, "{} vs {}", fast.unavailability, base.unavailability);
    assert!(1.0 - fast.availability < 1e-12);
}

#[test]
fn availability_monotone_in_aging_and_recovery_rates() {
    let topo = Topology::balanced(4, 2).unwrap();
    let params = ParameterSet::defaults(&topo);
    let opts = SolverOptions::default();
    let base = evaluate(&topo, &params, &opts).unwrap();
    for p in params.scalar_paths() {
        let kind = params.kind_of(&p).unwrap();
        let mut q = params.clone();
        q.set_scalar(&p, params.get_scalar(&p).unwrap() * 1.05).unwrap();
        let up = evaluate(&topo, &q, &opts).unwrap();
        match kind {
            ParamKind::Aging => assert!(up.availability <= base.availability && up.unavailability >= base.unavailability, "{p}"),
            ParamKind::Restart | ParamKind::SystemRestart | ParamKind::Repair | ParamKind::Failover => {
                assert!(up.availability >= base.availability && up.unavailability <= base.unavailability, "{p}")
            }
            _ => {}
        }
    }
}

#[test]
fn aging_dominates_failover_for_mttf() {
    let topo = Topology::balanced(4, 2).unwrap();
    let params = ParameterSet::defaults(&topo);
    let report = full_report(&topo, &params, &SolverOptions::default()).unwrap();
    let of_kind = |kind: ParamKind| {
        report
            .for_metric(Metric::Mttf)
            .filter(|e| params.kind_of(&e.parameter).unwrap() == kind)
            .map(|e| e.value.abs())
            .collect::<Vec<_>>()
    };
    let aging_min = of_kind(ParamKind::Aging).into_iter().fold(f64::INFINITY, f64::min);
    let failover_max = of_kind(ParamKind::Failover).into_iter().fold(0.0, f64::max);
    assert!(aging_min > failover_max, "{aging_min} vs {failover_max}");
}

#[test]
fn scaled_sensitivity_is_unit_free() {
    let topo = Topology::balanced(2, 1).unwrap();
    let params = ParameterSet::defaults(&topo);
    let minutes = params.rescale_time(60.0);
    let opts = SolverOptions::default();
    for path in ["sf.1.aging.rate", "vm.2.failover.rate", "vmm.1.failure.phase1", "host.1.reboot.rate", "system.repair.rate"] {
        for metric in [Metric::Availability, Metric::Mttf] {
            let a = parameter_sensitivity(&topo, &params, &opts, path, metric, DEFAULT_REL_STEP).unwrap().value;
            let b = parameter_sensitivity(&topo, &minutes, &opts, path, metric, DEFAULT_REL_STEP).unwrap().value;
            // Noise floor of a central difference through 1e-10 quadrature is about 1e-6 in SS.
            assert!((a - b).abs() <= 1e-9 + 1e-6 * a.abs(), "{path} {metric}: {a} vs {b}");
        }
    }
    let h = evaluate_mttf(&topo, &params, &opts).unwrap().mttf;
    let m = evaluate_mttf(&topo, &minutes, &opts).unwrap().mttf;
    assert!(rel(m, 60.0 * h) <= 1e-12);
}

#[test]
fn absorbing_kernel_keeps_only_returns_to_perfect() {
    let topo = Topology::balanced(4, 2).unwrap();
    let params = ParameterSet::defaults(&topo);
    let ss = StateSpace::build(&topo);
    let km = build_absorbing_kernel(&ss, &topo, &params).unwrap();
    assert_eq!(km.num_states(), 1 + 2 * 4 + 2);
    for s in 1..km.num_states() {
        for e in &km.race(s).edges {
            assert!(matches!(e.target, Target::State(0) | Target::Absorb));
        }
    }
    assert_eq!(ss.index_of(StateKind::Perfect).unwrap(), 0);
}
