//! Brute-force oracles: each recomputes a derived value by an independent
//! method (grids, enumeration, closed forms, Monte-Carlo) and compares.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::geometry::FeasibleSet;
use crate::knapsack::{benchmark_grid_1d, benchmark_r_star, KnapsackInstance, Sec8Sampler};
use crate::linalg::Matrix;
use crate::matrix_games::{one_point_estimate, solve_matrix_game_2x2, OnePointEstimate};
use crate::payoffs::{make_bilinear, make_quadratic_bilinear, Norm};
use crate::solver::{grid_saddle_value_1d, solve_saddle, Geometry, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> OracleResult {
    OracleResult { name, passed, detail }
}

/// Signature of a one-point estimator under test.
pub type Estimator = fn(f64, usize, usize, &[f64], &[f64]) -> Result<OnePointEstimate>;

/// Every oracle with the library's own estimator.
pub fn run_all() -> Vec<OracleResult> {
    vec![
        matrix_2x2_closed_form(),
        matrix_2x2_grid(),
        simplex_projection_grid(),
        restricted_projection_closed_form(),
        quadratic_saddle_grid(),
        estimator_enumeration(one_point_estimate),
        knapsack_expectations_monte_carlo(1_000_000),
        knapsack_benchmark_grid(),
        individual_regret_example(),
    ]
}

fn test_matrices() -> Vec<Matrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut out = vec![
        Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]),
        Matrix::from_rows(&[vec![1.0, -1.0], vec![1.0, -1.0]]),
        Matrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0]]),
        Matrix::from_rows(&[vec![0.3, -0.8], vec![-0.5, 0.9]]),
    ];
    for _ in 0..6 {
        out.push(Matrix::from_vec(2, 2, (0..4).map(|_| rng.gen_range(-1.0..=1.0)).collect()));
    }
    out
}

/// Closed-form 2x2 values against the Euclidean iterative solver, to 1e-5.
pub fn matrix_2x2_closed_form() -> OracleResult {
    let s = FeasibleSet::simplex(2).expect("d = 2");
    let cfg = SolverConfig::default()
        .with_tol(1e-9)
        .with_geometry(Geometry::Euclidean);
    let mut worst: f64 = 0.0;
    for m in test_matrices() {
        let closed = solve_matrix_game_2x2(&m).value;
        let f = make_bilinear(m, Norm::L2).expect("entries in range");
        match solve_saddle(f.as_ref(), &s, &s, &cfg) {
            Ok(sol) => worst = worst.max((sol.value - closed).abs()),
            Err(e) => return outcome("matrix_2x2_closed_form_vs_solver", false, e.to_string()),
        }
    }
    outcome(
        "matrix_2x2_closed_form_vs_solver",
        worst <= 1e-5,
        format!("max |closed - solver| = {worst:.3e}"),
    )
}

/// Closed-form 2x2 values against a 1e-3 grid over mixed strategies.
pub fn matrix_2x2_grid() -> OracleResult {
    let n = 1000;
    let mut worst: f64 = 0.0;
    for m in test_matrices() {
        let closed = solve_matrix_game_2x2(&m).value;
        // max over y of a bilinear form is attained at a vertex.
        let mut best = f64::INFINITY;
        for i in 0..=n {
            let a = i as f64 / n as f64;
            let x = [a, 1.0 - a];
            let c0 = x[0] * m.get(0, 0) + x[1] * m.get(1, 0);
            let c1 = x[0] * m.get(0, 1) + x[1] * m.get(1, 1);
            best = best.min(c0.max(c1));
        }
        worst = worst.max((best - closed).abs());
    }
    // A grid step of 1e-3 moves the value by at most 2e-3 for entries in [-1, 1].
    outcome(
        "matrix_2x2_closed_form_vs_grid",
        worst <= 2e-3,
        format!("max |closed - grid| = {worst:.3e}"),
    )
}

/// Simplex projection against a coarse-to-fine grid over the 2-simplex.
pub fn simplex_projection_grid() -> OracleResult {
    let s = FeasibleSet::simplex(3).expect("d = 3");
    let mut worst: f64 = 0.0;
    for z in [[0.9, 0.6, 0.1], [2.0, -1.0, 0.3], [0.2, 0.2, 0.2], [-0.5, 0.1, 0.05]] {
        let p = s.project(&z).expect("dims");
        let dist = |a: f64, b: f64| {
            let c = 1.0 - a - b;
            (a - z[0]).powi(2) + (b - z[1]).powi(2) + (c - z[2]).powi(2)
        };
        let mut best = (0.0, 0.0, f64::INFINITY);
        let (mut a0, mut a1, mut b0, mut b1): (f64, f64, f64, f64) = (0.0, 1.0, 0.0, 1.0);
        for h in [1e-2f64, 1e-4] {
            let na = ((a1 - a0) / h).round() as usize;
            let nb = ((b1 - b0) / h).round() as usize;
            for i in 0..=na {
                let a = a0 + i as f64 * h;
                for j in 0..=nb {
                    let b = b0 + j as f64 * h;
                    if a + b > 1.0 + 1e-12 {
                        break;
                    }
                    let d = dist(a, b);
                    if d < best.2 {
                        best = (a, b, d);
                    }
                }
            }
            a0 = (best.0 - 2e-2).max(0.0);
            a1 = (best.0 + 2e-2).min(1.0);
            b0 = (best.1 - 2e-2).max(0.0);
            b1 = (best.1 + 2e-2).min(1.0);
        }
        let grid = [best.0, best.1, 1.0 - best.0 - best.1];
        let err = p.iter().zip(&grid).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
        worst = worst.max(err);
    }
    outcome(
        "simplex_projection_vs_grid",
        worst <= 2e-4,
        format!("max l_inf error = {worst:.3e}"),
    )
}

/// Projection of a unit vector onto the restricted simplex:
/// `[1 - theta (d-1), theta, ..., theta]` at l1 distance `2 theta (d-1)`.
pub fn restricted_projection_closed_form() -> OracleResult {
    let mut worst: f64 = 0.0;
    for (d, theta) in [(2usize, 0.1), (3, 0.05), (5, 0.2), (8, 0.01)] {
        let set = FeasibleSet::restricted_simplex(d, theta).expect("valid");
        let mut e1 = vec![0.0; d];
        e1[0] = 1.0;
        let p = set.project(&e1).expect("dims");
        let mut expect = vec![theta; d];
        expect[0] = 1.0 - theta * (d - 1) as f64;
        let err = p.iter().zip(&expect).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
        let l1 = crate::linalg::dist1(&p, &e1);
        worst = worst.max(err).max((l1 - 2.0 * theta * (d - 1) as f64).abs());
    }
    outcome(
        "restricted_projection_closed_form",
        worst <= 1e-12,
        format!("max error = {worst:.3e}"),
    )
}

/// Quadratic-bilinear saddle points against the three-phase grid.
pub fn quadratic_saddle_grid() -> OracleResult {
    let b = FeasibleSet::cube(1, -10.0, 10.0).expect("interval");
    let mut worst: f64 = 0.0;
    for (p, q) in [(2.0, -1.0), (-1.0, -2.0), (-1.0, 3.0)] {
        let f = make_quadratic_bilinear(1.0, 1.0, p, q, (-10.0, 10.0), (-10.0, 10.0)).expect("valid");
        let sol = match solve_saddle(f.as_ref(), &b, &b, &SolverConfig::default()) {
            Ok(s) => s,
            Err(e) => return outcome("quadratic_saddle_vs_grid", false, e.to_string()),
        };
        let (v, x, y) = grid_saddle_value_1d(f.as_ref(), &b, &b).expect("interval");
        worst = worst
            .max((sol.value - v).abs())
            .max((sol.x_star[0] - x).abs())
            .max((sol.y_star[0] - y).abs());
    }
    outcome(
        "quadratic_saddle_vs_grid",
        worst <= 1e-5,
        format!("max deviation = {worst:.3e}"),
    )
}

/// Exact enumeration of `sum_ij x_i y_j A_hat(i, j)` against `A` on 100 random
/// cases, to 1e-12.
pub fn estimator_enumeration(estimator: Estimator) -> OracleResult {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let d1 = rng.gen_range(1..=6);
        let d2 = rng.gen_range(1..=6);
        let a = Matrix::from_vec(d1, d2, (0..d1 * d2).map(|_| rng.gen_range(-1.0..=1.0)).collect());
        let x = FeasibleSet::restricted_simplex(d1, 0.01 / d1 as f64).expect("valid").sample(&mut rng);
        let y = FeasibleSet::restricted_simplex(d2, 0.01 / d2 as f64).expect("valid").sample(&mut rng);
        let mut expected = Matrix::zeros(d1, d2);
        for i in 0..d1 {
            for j in 0..d2 {
                let est = match estimator(a.get(i, j), i, j, &x, &y) {
                    Ok(e) => e.to_dense(),
                    Err(e) => return outcome("one_point_estimator_enumeration", false, e.to_string()),
                };
                if est.rows() != d1 || est.cols() != d2 {
                    return outcome(
                        "one_point_estimator_enumeration",
                        false,
                        "estimate has the wrong shape".into(),
                    );
                }
                expected.add_scaled(&est, x[i] * y[j]);
            }
        }
        for i in 0..d1 {
            for j in 0..d2 {
                worst = worst.max((expected.get(i, j) - a.get(i, j)).abs());
            }
        }
    }
    outcome(
        "one_point_estimator_enumeration",
        worst <= 1e-12,
        format!("max |E[A_hat] - A| = {worst:.3e}"),
    )
}

/// Analytic expected reward and consumptions against `samples` Monte-Carlo
/// draws at `x in {1, 3.33, 5}`, within 3 standard errors.
pub fn knapsack_expectations_monte_carlo(samples: usize) -> OracleResult {
    let sampler = Sec8Sampler;
    let analytic = crate::knapsack::KnapsackSampler::expectation(&sampler).expect("closed form");
    let xs = [1.0, 3.33, 5.0];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    // Per x: sums and squared sums of r, c1, c2.
    let mut s = [[0.0f64; 6]; 3];
    for _ in 0..samples {
        let d = crate::knapsack::KnapsackSampler::sample(&sampler, &mut rng);
        for (k, x) in xs.iter().enumerate() {
            let vals = [d.reward_at(&[*x]), d.consumption[0].value(&[*x]), d.consumption[1].value(&[*x])];
            for (m, v) in vals.iter().enumerate() {
                s[k][2 * m] += v;
                s[k][2 * m + 1] += v * v;
            }
        }
    }
    let n = samples as f64;
    let mut worst_z: f64 = 0.0;
    let mut detail = String::new();
    for (k, x) in xs.iter().enumerate() {
        let exact = [
            analytic.reward_at(&[*x]),
            analytic.consumption[0].value(&[*x]),
            analytic.consumption[1].value(&[*x]),
        ];
        for (m, e) in exact.iter().enumerate() {
            let mean = s[k][2 * m] / n;
            let var = (s[k][2 * m + 1] / n - mean * mean).max(0.0) * n / (n - 1.0);
            let se = (var / n).sqrt();
            let z = if se > 0.0 {
                (mean - e).abs() / se
            } else if (mean - e).abs() <= 1e-9 * (1.0 + e.abs()) {
                // Deterministic component: only summation round-off remains.
                0.0
            } else {
                f64::INFINITY
            };
            worst_z = worst_z.max(z);
            if m == 1 {
                detail.push_str(&format!("E[c1]({x}) = {e:.6} vs {mean:.6} (se {se:.2e}); "));
            }
        }
    }
    detail.push_str(&format!("max z = {worst_z:.2}"));
    outcome("knapsack_expectations_vs_monte_carlo", worst_z <= 3.0, detail)
}

/// Benchmark `r* = 200 T / 9` from the saddle solver and the grid, to 1e-5 relative.
pub fn knapsack_benchmark_grid() -> OracleResult {
    let mut worst: f64 = 0.0;
    for t in [100usize, 10_000] {
        let inst = match KnapsackInstance::sec8(t, (200.0, 4.0)) {
            Ok(i) => i,
            Err(e) => return outcome("knapsack_benchmark_vs_grid", false, e.to_string()),
        };
        let e = inst.expectation(0, 0);
        let exact = 200.0 * t as f64 / 9.0;
        let solved = match benchmark_r_star(&inst, &e) {
            Ok(r) => r.value,
            Err(err) => return outcome("knapsack_benchmark_vs_grid", false, err.to_string()),
        };
        let (grid, _) = benchmark_grid_1d(&inst, &e).expect("interval");
        worst = worst
            .max((solved - exact).abs() / exact)
            .max((grid - exact).abs() / exact);
    }
    outcome(
        "knapsack_benchmark_vs_grid",
        worst <= 1e-5,
        format!("max relative error = {worst:.3e}"),
    )
}

/// One round of `x y` on `[-1, 1]^2` played at `(1, 1)`: regrets `(2, 0)`.
pub fn individual_regret_example() -> OracleResult {
    use crate::metrics::{compute_individual_regrets, RoundRecord, RoundTrace};
    let b = FeasibleSet::cube(1, -1.0, 1.0).expect("interval");
    let f = make_quadratic_bilinear(1.0, 0.0, 0.0, 0.0, (-1.0, 1.0), (-1.0, 1.0)).expect("valid");
    let trace = RoundTrace {
        records: vec![RoundRecord {
            t: 1,
            x: vec![1.0],
            y: vec![1.0],
            payoff_value: 1.0,
            next_value: None,
            solver_gap: None,
            bandit: None,
            knapsack: None,
        }],
    };
    match compute_individual_regrets(&trace, &[f], &b, &b, &SolverConfig::default()) {
        Ok((ix, iy)) => outcome(
            "individual_regret_example",
            (ix - 2.0).abs() < 1e-12 && iy.abs() < 1e-12,
            format!("({ix}, {iy})"),
        ),
        Err(e) => outcome("individual_regret_example", false, e.to_string()),
    }
}
