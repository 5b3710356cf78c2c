//! Cross-module properties on generated instances.

use std::sync::Arc;

use osp_lab::geometry::FeasibleSet;
use osp_lab::harness::{run_single, AlgorithmSpec, RunOptions};
use osp_lab::knapsack::{check_accounting, KnapsackInstance, KnapsackSampler, KnapsackState, Sec8Sampler};
use osp_lab::linalg::{dot, sub, Matrix};
use osp_lab::matrix_games::solve_matrix_game_2x2;
use osp_lab::payoffs::{
    make_bilinear, neg_entropy, regularize, DiagQuad, Norm, Payoff, PayoffFunction, PayoffSum, Regularizer,
    StructuredPayoff, Terms,
};
use osp_lab::scenarios::{ScenarioKind, ScenarioSpec};
use osp_lab::solver::{hindsight_value, solve_saddle, Geometry, SolverConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn strongly_convex_concave(seed: u64, d: usize) -> PayoffFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Terms::zeros(d, d);
    t.bilinear = Some(Matrix::from_vec(d, d, (0..d * d).map(|_| rng.gen_range(-1.0..1.0)).collect()));
    let coeffs = |rng: &mut ChaCha8Rng| {
        DiagQuad::new(
            (0..d).map(|_| rng.gen_range(0.2..2.0)).collect(),
            (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect(),
            0.0,
        )
        .unwrap()
    };
    t.quad_x = coeffs(&mut rng);
    t.quad_y = coeffs(&mut rng);
    Arc::new(StructuredPayoff {
        label: "random quadratic",
        terms: t,
        lipschitz: 100.0,
        strong_h: 0.4,
        norm: Norm::L2,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn saddle_solutions_satisfy_kkt(seed in 0u64..10_000, d in 1usize..4, rounds in 1usize..4) {
        let set = FeasibleSet::cube(d, -2.0, 2.0).unwrap();
        let mut sum = PayoffSum::new(d, d);
        for k in 0..rounds {
            sum.push(&strongly_convex_concave(seed * 7 + k as u64, d)).unwrap();
        }
        let cfg = SolverConfig::default();
        let sol = solve_saddle(&sum, &set, &set, &cfg).unwrap();
        prop_assert!(sol.gap <= cfg.tol_gap, "gap {}", sol.gap);
        let tol_kkt = 10.0 * cfg.tol_gap * set.diameter();
        let gx = sum.grad_x(&sol.x_star, &sol.y_star);
        let gy = sum.grad_y(&sol.x_star, &sol.y_star);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let x = set.sample(&mut rng);
            let y = set.sample(&mut rng);
            prop_assert!(dot(&gx, &sub(&x, &sol.x_star)) >= -tol_kkt);
            prop_assert!(dot(&gy, &sub(&y, &sol.y_star)) <= tol_kkt);
        }
    }

    #[test]
    fn null_action_is_neutral(seed in 0u64..10_000, steps in 1usize..20) {
        let inst = KnapsackInstance::sec8(50, (200.0, 4.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = KnapsackState::new(2);
        for _ in 0..steps {
            let draw = Sec8Sampler.sample(&mut rng);
            state.step(&inst, &draw, &[rng.gen_range(0.0..20.0)]).unwrap();
        }
        let before = state.clone();
        for _ in 0..5 {
            let draw = Sec8Sampler.sample(&mut rng);
            let out = state.step(&inst, &draw, &inst.null_action).unwrap();
            prop_assert_eq!(out.reward, 0.0);
            prop_assert!(out.consumption.iter().all(|c| *c == 0.0));
        }
        prop_assert_eq!(&state.cumulative_consumption, &before.cumulative_consumption);
        prop_assert_eq!(state.cumulative_reward, before.cumulative_reward);
        prop_assert_eq!(state.violated, before.violated);
    }

    #[test]
    fn random_knapsack_traces_keep_accounting(seed in 0u64..10_000, level in 0.0f64..20.0) {
        let horizon = 60;
        let inst = KnapsackInstance::sec8(horizon, (200.0, 4.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = KnapsackState::new(2);
        let (mut rewards, mut collected, mut cons, mut viol) = (vec![], vec![], vec![], vec![]);
        for _ in 0..horizon {
            let x = (level + rng.gen_range(-2.0..2.0)).clamp(0.0, 20.0);
            let draw = Sec8Sampler.sample(&mut rng);
            let out = state.step(&inst, &draw, &[x]).unwrap();
            rewards.push(out.reward);
            collected.push(out.reward_collected);
            cons.push(out.consumption);
            viol.push(state.violated);
        }
        let check = check_accounting(&inst, &rewards, &collected, &cons, &viol);
        prop_assert!(check.indicator_exact);
        prop_assert!(check.monotone);
        prop_assert!(check.corrected_lower_bound_holds(), "{:?}", check);
        prop_assert!((check.realized - state.cumulative_reward).abs() < 1e-9);
    }

    #[test]
    fn entropy_regularizer_is_nonnegative_and_lipschitz(
        w in proptest::collection::vec(0.0f64..1.0, 2..8),
        theta_frac in 0.01f64..0.99,
    ) {
        let d = w.len();
        let s: f64 = w.iter().sum::<f64>().max(1e-12);
        let p: Vec<f64> = w.iter().map(|v| v / s).collect();
        prop_assert!(neg_entropy(&p) >= -1e-12);
        let theta = theta_frac / d as f64;
        let q = FeasibleSet::restricted_simplex(d, theta).unwrap().project(&p).unwrap();
        let r = Regularizer::entropy(d, theta);
        let g = r.grad(&q);
        prop_assert!(g.iter().all(|v| v.abs() <= r.lipschitz + 1e-9));
    }
}

#[test]
fn closed_form_2x2_matches_entropic_solver() {
    let s = FeasibleSet::simplex(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let w = 1e-7;
    let cfg = SolverConfig::default()
        .with_tol(1e-9)
        .with_geometry(Geometry::Entropic);
    for _ in 0..500 {
        let m = Matrix::from_vec(2, 2, (0..4).map(|_| rng.gen_range(-1.0..=1.0)).collect());
        let closed = solve_matrix_game_2x2(&m).value;
        let base = make_bilinear(m, Norm::L1).unwrap();
        let f = regularize(base, Regularizer::entropy(2, 0.0), Regularizer::entropy(2, 0.0), w).unwrap();
        let sol = solve_saddle(f.as_ref(), &s, &s, &cfg).unwrap();
        // Entropy on the 2-simplex lies in [0, ln 2].
        assert!((sol.value - closed).abs() <= 1e-5 + 2.0 * w * 2f64.ln(), "{} vs {closed}", sol.value);
    }
}

#[test]
fn restricted_simplex_changes_hindsight_value_by_at_most_the_lemma_slack() {
    let (d, horizon) = (4, 40);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let history: Vec<PayoffFunction> = (0..horizon)
        .map(|_| {
            let m = Matrix::from_vec(d, d, (0..d * d).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect());
            make_bilinear(m, Norm::L1).unwrap()
        })
        .collect();
    let cfg = SolverConfig::default().with_tol(1e-6 * horizon as f64).with_max_iters(200_000);
    let full = FeasibleSet::simplex(d).unwrap();
    let g = history[0].lipschitz();
    for theta in [0.01, 0.05] {
        let restricted = FeasibleSet::restricted_simplex(d, theta).unwrap();
        let a = hindsight_value(&history, &full, &full, &cfg).unwrap();
        let b = hindsight_value(&history, &restricted, &restricted, &cfg).unwrap();
        let slack = g * horizon as f64 * 2.0 * theta * (d - 1) as f64 + 2.0 * cfg.tol_gap;
        assert!((a - b).abs() <= slack, "theta {theta}: {a} vs {b}, slack {slack}");
    }
}

#[test]
fn identical_runs_produce_identical_traces() {
    let spec = ScenarioSpec::new(ScenarioKind::IidQuadratic { h: 1.0, radius: 1.0 }, 300, 12).unwrap();
    let alg = AlgorithmSpec::default_for("sp-ftl").unwrap();
    let a = run_single(&spec, &alg, &RunOptions::default()).unwrap();
    let b = run_single(&spec, &alg, &RunOptions::default()).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.report, b.report);
}

#[test]
fn every_algorithm_has_a_linear_regret_on_the_impossibility_scenarios() {
    for id in ["sp-ftl", "sp-rftl", "ogda", "omg-rftl", "bandit-omg-rftl"] {
        let alg = AlgorithmSpec::default_for(id).unwrap();
        let worst_per_t = |t: usize| {
            [ScenarioKind::Theorem6Scenario1, ScenarioKind::Theorem6Scenario2]
                .into_iter()
                .map(|k| {
                    let r = run_single(&ScenarioSpec::new(k, t, 0).unwrap(), &alg, &RunOptions::default()).unwrap();
                    let rep = r.report;
                    rep.sp_regret.max(rep.ind_regret_x).max(rep.ind_regret_y) / t as f64
                })
                .fold(0.0f64, f64::max)
        };
        let (a, b) = (worst_per_t(2000), worst_per_t(4000));
        assert!(a >= 0.05 && b >= 0.05, "{id}: {a} {b}");
        assert!((a / b).max(b / a) < 1.5, "{id}: {a} {b}");
    }
}

#[test]
fn hindsight_saddle_satisfies_saddle_inequalities() {
    let spec = ScenarioSpec::new(ScenarioKind::Sec8Instance2, 200, 0).unwrap();
    let r = run_single(&spec, &AlgorithmSpec::default_for("ogda").unwrap(), &RunOptions::default()).unwrap();
    let mut stream = spec.stream().unwrap();
    let mut sum = PayoffSum::new(1, 1);
    while let Some(round) = stream.next_round().unwrap() {
        sum.push(&round.payoff).unwrap();
    }
    let (xs, ys) = spec.sets().unwrap();
    let (x_star, y_star) = &r.report.hindsight_saddle;
    let v = sum.value(x_star, y_star);
    assert!((v - r.report.hindsight_value).abs() <= 1e-6);
    let slack = r.report.hindsight_gap + 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let x = xs.sample(&mut rng);
        let y = ys.sample(&mut rng);
        assert!(sum.value(x_star, &y) <= v + slack);
        assert!(v <= sum.value(&x, y_star) + slack);
    }
    let raw: f64 = r.trace.records.iter().map(|rec| rec.payoff_value).sum();
    assert!(((raw - r.report.hindsight_value).abs() - r.report.sp_regret).abs() < 1e-9);
}
