//! Property tests over random parameters.

use patro::bayes::bayes_prior_regret;
use patro::regret::{improvement_rate, monte_carlo_regret, prior_expected_regret};
use patro::snr::finite_difference_partial;
use patro::solver::{rollout_residual, solve_dual, SolverConfig};
use patro::{
    build_belief_system, BuiltinModel, DemandKind, Expectations, ExperimentDesign, NewsvendorSnr, NoiseModel,
    PricingSnr, PriorBelief, QuadratureSpec, ServiceCapacitySnr, SnrModel,
};
use proptest::prelude::*;

fn expectations(v0: f64, sigma: f64, gamma: f64, n: usize) -> Expectations<f64> {
    let b = build_belief_system(
        PriorBelief { m0: 0.0, v0 },
        ExperimentDesign { n, gamma },
        NoiseModel { sigma_eps: sigma, b: 0.0 },
    )
    .unwrap();
    Expectations::new(b, QuadratureSpec::default()).unwrap()
}

fn model(kind: usize, sigma: f64, n: usize) -> BuiltinModel<f64> {
    match kind {
        0 => BuiltinModel::Newsvendor(NewsvendorSnr::new(10.0, 3.0, 25.0, 10.0, sigma, n).unwrap()),
        1 => BuiltinModel::Service(ServiceCapacitySnr::new(2.0, 0.5, 1.0, sigma, n).unwrap()),
        2 => BuiltinModel::Pricing(PricingSnr::new(2.0, 1.0, sigma, DemandKind::LogLinear, n).unwrap()),
        _ => BuiltinModel::Pricing(PricingSnr::new(2.0, 1.0, sigma, DemandKind::Linear, n).unwrap()),
    }
}

fn orders() -> impl Strategy<Value = (u32, u32)> {
    (0u32..=3).prop_flat_map(|i| (Just(i), 0u32..=3 - i))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn analytic_partials_match_finite_differences(
        kind in 0usize..4,
        sigma in 0.5f64..2.0,
        x in -2.0f64..2.0,
        t in -2.0f64..2.0,
        (i, j) in orders(),
    ) {
        let m = model(kind, sigma, 7);
        let analytic = m.partial(i, j, x, t).unwrap();
        let numeric = finite_difference_partial(|a, b| m.value(a, b), i, j, x, t).unwrap();
        let scale = 1.0f64.max(analytic.abs()).max(m.value(x, t).abs());
        prop_assert!((analytic - numeric).abs() <= 1e-5 * scale, "{} ({i},{j}) at ({x},{t}): {analytic} vs {numeric}", m.name());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn belief_variances_split_the_prior(v0 in 0.05f64..20.0, sigma in 0.1f64..5.0, gamma in 0.1f64..10.0, n in 2usize..5000) {
        let b = *expectations(v0, sigma, gamma, n).belief();
        prop_assert!(b.v_tilde > 0.0 && b.v_tilde < v0);
        prop_assert!((b.v_m + b.v_tilde - v0).abs() <= 1e-12 * v0);
        let more = expectations(v0, sigma, gamma, n + 1).belief().v_tilde;
        prop_assert!(more < b.v_tilde);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn regret_components_are_nonnegative_and_add_up(
        kind in 0usize..4,
        v0 in 0.3f64..4.0,
        sigma in 0.5f64..2.0,
        n in 5usize..200,
        dr in -1.0f64..1.0,
        d_o in -1.0f64..1.0,
    ) {
        let ex = expectations(v0, sigma, 1.0, n);
        let m = model(kind, sigma, n);
        let r = prior_expected_regret(&m, &ex, dr, d_o).unwrap();
        let tol = 1e-10 * n as f64;
        prop_assert!(r.type_one >= -tol && r.type_two >= -tol && r.operational >= -tol, "{r:?}");
        prop_assert!((r.total - r.type_one - r.type_two - r.operational).abs() <= tol);
    }

    #[test]
    fn dual_pair_is_a_local_minimum(kind in 0usize..3, v0 in 0.3f64..4.0, sigma in 0.5f64..2.0, n in 5usize..200) {
        let ex = expectations(v0, sigma, 1.0, n);
        let m = model(kind, sigma, n);
        let p = solve_dual(&m, &ex, &SolverConfig::default()).unwrap();
        prop_assert!(p.converged);
        let at = prior_expected_regret(&m, &ex, p.delta_r, p.delta_o).unwrap().total;
        let h = 1e-3 * ex.belief().v_tilde.sqrt();
        for (a, b) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
            let near = prior_expected_regret(&m, &ex, p.delta_r + a, p.delta_o + b).unwrap().total;
            prop_assert!(near >= at - 1e-12 * n as f64, "{} at {:?}: {near} < {at}", m.name(), (a, b));
        }
        let rate = improvement_rate(&m, &ex, p.delta_r, p.delta_o).unwrap();
        prop_assert!((0.0..100.0).contains(&rate));
    }

    #[test]
    fn rollout_condition_has_one_root_near_the_solution(kind in 0usize..3, v0 in 0.3f64..4.0, sigma in 0.5f64..2.0, n in 5usize..200) {
        let ex = expectations(v0, sigma, 1.0, n);
        let m = model(kind, sigma, n);
        let p = solve_dual(&m, &ex, &SolverConfig::default()).unwrap();
        let half = 5.0 * ex.belief().v_tilde.sqrt();
        let values: Vec<f64> = (0..=100)
            .map(|k| p.delta_r - half + 2.0 * half * k as f64 / 100.0)
            .map(|r| rollout_residual(&m, &ex, r, p.delta_o).unwrap())
            .collect();
        let changes = values.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
        prop_assert_eq!(changes, 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn bayes_rule_is_never_worse(kind in 0usize..4, v0 in 0.3f64..4.0, sigma in 0.5f64..2.0, n in 5usize..100) {
        let ex = expectations(v0, sigma, 1.0, n);
        let m = model(kind, sigma, n);
        let p = solve_dual(&m, &ex, &SolverConfig::default()).unwrap();
        let bayes = bayes_prior_regret(&m, &ex).unwrap().regret.total;
        let patro = prior_expected_regret(&m, &ex, p.delta_r, p.delta_o).unwrap().total;
        prop_assert!(bayes <= patro + 1e-9 * n as f64, "{}: bayes {bayes} patro {patro}", m.name());
    }
}

#[test]
fn monte_carlo_is_reproducible_per_seed() {
    let ex = expectations(1.0, 1.0, 1.0, 10);
    let m = model(0, 1.0, 10);
    let a = monte_carlo_regret(&m, &ex, -0.1, -0.1, 100_000, 3).unwrap();
    let b = monte_carlo_regret(&m, &ex, -0.1, -0.1, 100_000, 3).unwrap();
    let c = monte_carlo_regret(&m, &ex, -0.1, -0.1, 100_000, 4).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.0.total, c.0.total);
    let q = prior_expected_regret(&m, &ex, -0.1, -0.1).unwrap();
    assert!((a.0.total - q.total).abs() < 4.0 * a.1.total);
}

#[test]
fn single_precision_solver_agrees_with_double() {
    let b32 = build_belief_system(
        PriorBelief { m0: 0.0f32, v0: 1.0 },
        ExperimentDesign { n: 10, gamma: 1.0 },
        NoiseModel { sigma_eps: 1.0, b: 0.0 },
    )
    .unwrap();
    let ex32 = Expectations::new(b32, QuadratureSpec::default()).unwrap();
    let m32 = ServiceCapacitySnr::new(2.0f32, 0.5, 1.0, 1.0, 10).unwrap();
    let cfg = SolverConfig { root_tol: 1e-4, alt_tol: 1e-5, ..SolverConfig::default() };
    let p32 = solve_dual(&m32, &ex32, &cfg).unwrap();
    let v = ex32.belief().v_tilde;
    assert!((p32.delta_r - v / 2.0).abs() < 1e-4, "{p32:?}");
    assert!((p32.delta_o - v / 2.0).abs() < 1e-4, "{p32:?}");
}
