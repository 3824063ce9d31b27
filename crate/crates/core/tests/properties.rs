mod common;

use proptest::prelude::*;

use hoispeed::classify::{classify_trajectory, ClassifyConfig, Outcome, OutcomeKind};
use hoispeed::dynamics::{
    glvm_rhs, modifier_equilibrium, rhs, simple_hoi_rhs, simulate, simulate_frozen, IntegratorConfig, SystemState,
};
use hoispeed::equilibria::{closed_form_equilibrium, solve_steady_state, steady_state_residual, EquilibriumPoint};
use hoispeed::netmodel::{build_canonical, AlphaMagnitudes, HoiKind, SystemSpec, Topology};
use hoispeed::sweep::{oscillation_probability, sweep_beta_omega, Cell, InnerGrid, OutcomeGrid, SweepOptions};

fn topology() -> impl Strategy<Value = Topology> {
    prop::sample::select(Topology::ALL.to_vec())
}

fn kind() -> impl Strategy<Value = HoiKind> {
    prop::sample::select(HoiKind::ALL.to_vec())
}

fn spec_strategy() -> impl Strategy<Value = SystemSpec> {
    (topology(), kind(), 0.1..3.0f64, 0.1..3.0f64, 0.1..3.0f64, -20.0..20.0f64).prop_map(
        |(t, k, ab, ac, bc, beta)| build_canonical(t, k, AlphaMagnitudes { ab, ac, bc }).unwrap().with_beta(beta),
    )
}

fn state() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..3.0f64, 3)
}

fn short_run(omega: f64, horizon: f64) -> IntegratorConfig {
    IntegratorConfig {
        horizon: Some(horizon),
        ..IntegratorConfig::with_omega(omega)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn relabel_three_times_is_identity(spec in spec_strategy()) {
        prop_assert_eq!(spec.cyclic_relabel(1).cyclic_relabel(1).cyclic_relabel(1), spec.clone());
        prop_assert_eq!(spec.cyclic_relabel(3), spec.clone());
        prop_assert_eq!(spec.cyclic_relabel(-1).cyclic_relabel(1), spec);
    }

    #[test]
    fn relabel_preserves_validity(spec in spec_strategy(), shift in -4i64..5) {
        prop_assert!(spec.cyclic_relabel(shift).validate().is_empty());
    }

    #[test]
    fn glvm_equals_rhs_at_frozen_modifier(spec in spec_strategy(), n in state(), m in -3.0..3.0f64) {
        let full = rhs(&spec, &SystemState { n: n.clone(), m: vec![m], t: 0.0 }, 1.0).unwrap();
        let frozen = glvm_rhs(&spec, &n, &[m]).unwrap();
        prop_assert_eq!(&full.0, &frozen);
    }

    #[test]
    fn instantaneous_model_is_rhs_at_modifier_equilibrium(spec in spec_strategy(), n in state()) {
        let h = spec.hois[0];
        let m = modifier_equilibrium(h.beta, n[h.modifier]);
        let full = rhs(&spec, &SystemState { n: n.clone(), m: vec![m], t: 0.0 }, 1.0).unwrap();
        let simple = simple_hoi_rhs(&spec, &n).unwrap();
        for (a, b) in full.0.iter().zip(&simple) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{} vs {}", a, b);
        }
    }

    #[test]
    fn extinct_species_stay_extinct(spec in spec_strategy(), dead in 0usize..3, omega in 0.1..10.0f64) {
        let mut init = SystemState::standard(&spec);
        init.n[dead] = 0.0;
        let traj = simulate(&spec, &short_run(omega, 30.0), &init).unwrap();
        prop_assert!(traj.species_series(dead).all(|v| v == 0.0));
        prop_assert_eq!(traj.final_state.n[dead], 0.0);
    }

    #[test]
    fn zero_strength_matches_frozen_integration(t in topology(), k in kind(), alpha in 0.2..3.0f64, omega in 0.1..10.0f64) {
        let spec = build_canonical(t, k, AlphaMagnitudes::identical(alpha)).unwrap();
        let config = short_run(omega, 40.0);
        let a = simulate(&spec, &config, &SystemState::standard(&spec)).unwrap();
        let b = simulate_frozen(&spec, &config, &[1.0; 3], &[1.0]).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for i in 0..3 {
            let left: Vec<u64> = a.species_series(i).map(f64::to_bits).collect();
            let right: Vec<u64> = b.species_series(i).map(f64::to_bits).collect();
            prop_assert_eq!(left, right);
        }
        prop_assert!(a.modifier_series(0).all(|m| m == 1.0));
    }

    #[test]
    fn relabelled_trajectory_is_a_permutation(spec in spec_strategy(), omega in 0.1..10.0f64) {
        let config = short_run(omega, 20.0);
        let moved = spec.cyclic_relabel(1);
        let a = simulate(&spec, &config, &SystemState::standard(&spec)).unwrap();
        let b = simulate(&moved, &config, &SystemState::standard(&moved)).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for i in 0..3 {
            for (x, y) in a.species_series(i).zip(b.species_series((i + 1) % 3)) {
                prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()), "{} vs {}", x, y);
            }
        }
    }

    #[test]
    fn abundances_never_negative(spec in spec_strategy(), omega in 0.01..100.0f64) {
        let traj = simulate(&spec, &short_run(omega, 30.0), &SystemState::standard(&spec)).unwrap();
        for i in 0..3 {
            prop_assert!(traj.species_series(i).all(|v| v >= 0.0));
        }
    }

    #[test]
    fn closed_form_points_are_rest_points(beta in -80.0..1.9f64) {
        let point = closed_form_equilibrium(HoiKind::AsymAffectedFirst, beta).unwrap();
        let spec = build_canonical(Topology::Intransitive, HoiKind::AsymAffectedFirst, AlphaMagnitudes::identical(1.0))
            .unwrap()
            .with_beta(beta);
        let r = steady_state_residual(&spec, 1.0, &point).unwrap();
        prop_assert!(r.iter().all(|v| v.abs() < 1e-10), "{:?}", r);
    }

    #[test]
    fn xi_is_a_fraction(kinds in prop::collection::vec(0u8..5, 1..40)) {
        let spec = common::intransitive_sym(2.0);
        let cells = kinds
            .iter()
            .map(|&k| Cell {
                beta: 0.0,
                omega: 1.0,
                outcome: match k {
                    0 => Err("failed".to_string()),
                    _ => Ok(Outcome {
                        kind: [OutcomeKind::FixedPoint, OutcomeKind::LimitCycle, OutcomeKind::Unbounded, OutcomeKind::AllExtinct][k as usize - 1],
                        survivors: 3,
                        metrics: None,
                        final_n: vec![1.0; 3],
                        final_m: vec![1.0],
                    }),
                },
            })
            .collect::<Vec<_>>();
        let inner = InnerGrid::with_counts(HoiKind::Symmetric, kinds.len(), 1);
        let grid = OutcomeGrid { beta_axis: inner.beta, omega_axis: inner.omega, cells, spec };
        let xi = oscillation_probability(&grid);
        prop_assert!((0.0..=1.0).contains(&xi));
        let expected = kinds.iter().filter(|&&k| k == 2).count() as f64 / kinds.len() as f64;
        prop_assert_eq!(xi, expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn newton_recovers_closed_forms(beta in -80.0..1.9f64, flip in any::<bool>()) {
        let (kind, beta) = if flip {
            (HoiKind::AsymAffectedSecond, -beta)
        } else {
            (HoiKind::AsymAffectedFirst, beta)
        };
        let spec = build_canonical(Topology::Intransitive, kind, AlphaMagnitudes::identical(1.0)).unwrap().with_beta(beta);
        let exact = closed_form_equilibrium(kind, beta).unwrap();
        let sol = solve_steady_state(&spec, 1.0, &EquilibriumPoint::unit_guess(&spec), 1e-12).unwrap();
        let err = sol.point.to_vector().iter().zip(exact.to_vector()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-8, "beta {} err {}", beta, err);
    }
}

#[test]
fn fast_modifier_tracks_its_equilibrium() {
    let spec = common::intransitive_sym(2.0).with_beta(-3.0);
    let config = short_run(100.0, 200.0);
    let traj = simulate(&spec, &config, &SystemState::standard(&spec)).unwrap();
    let mut checked = 0;
    for s in traj.samples().filter(|s| s.t >= 10.0) {
        let target = modifier_equilibrium(-3.0, s.n[2]);
        assert!((s.m[0] - target).abs() < 0.1, "t = {}: m = {}, target {}", s.t, s.m[0], target);
        checked += 1;
    }
    assert!(checked > 100);
}

#[test]
fn sweep_is_worker_count_independent() {
    let spec = common::intransitive_sym(2.0);
    let inner = InnerGrid::with_counts(HoiKind::Symmetric, 4, 3);
    let base = IntegratorConfig {
        horizon: Some(200.0),
        ..IntegratorConfig::default()
    };
    let one = sweep_beta_omega(&spec, &inner, &base, &SweepOptions::with_workers(1)).unwrap();
    let four = sweep_beta_omega(&spec, &inner, &base, &SweepOptions::with_workers(4)).unwrap();
    assert_eq!(one, four);
    assert_eq!(one.cells.len(), 12);
}

#[test]
fn step_halving_keeps_reference_classifications() {
    let spec = common::intransitive_sym(2.0);
    let base = IntegratorConfig::default();
    for (omega, beta) in common::FIG3_POINTS {
        let full = common::run_point(&spec, omega, beta, &base);
        let half = common::run_point(&spec, omega, beta, &base.with_half_step());
        assert_eq!(full.kind, half.kind, "({omega}, {beta})");
        assert_eq!(full.survivors, half.survivors, "({omega}, {beta})");
    }
}

#[test]
fn classification_needs_no_randomness() {
    let spec = common::intransitive_sym(2.0).with_beta(-3.0);
    let config = short_run(1.0, 300.0);
    let a = simulate(&spec, &config, &SystemState::standard(&spec)).unwrap();
    let b = simulate(&spec, &config, &SystemState::standard(&spec)).unwrap();
    let ca = classify_trajectory(&a, &ClassifyConfig::default()).unwrap();
    let cb = classify_trajectory(&b, &ClassifyConfig::default()).unwrap();
    assert_eq!(ca, cb);
}
