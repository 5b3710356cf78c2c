//! Online matrix games on (restricted) simplexes: entropic saddle solves,
//! OMG-RFTL, the one-point payoff estimator and Bandit-OMG-RFTL.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::geometry::FeasibleSet;
use crate::linalg::Matrix;
use crate::payoffs::{neg_entropy, neg_entropy_grad, entropy_lipschitz, Terms};
use crate::solver::{argmin_separable, solve_saddle, SaddleSolution, SolverConfig};

/// Log-probabilities `max(ln theta, s_k - mu)` normalized to sum to one.
pub fn bounded_log_softmax(scores: &[f64], theta: f64) -> Vec<f64> {
    let d = scores.len();
    let ln_theta = if theta > 0.0 { theta.ln() } else { f64::NEG_INFINITY };
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]));
    let m = scores[order[0]];
    let mut acc = 0.0;
    let mut mu = m;
    for k in 0..d {
        acc += (scores[order[k]] - m).exp();
        let free_mass = 1.0 - (d - k - 1) as f64 * theta;
        mu = m + acc.ln() - free_mass.ln();
        let next_clamped = k + 1 == d || scores[order[k + 1]] - mu <= ln_theta;
        if next_clamped {
            break;
        }
    }
    scores.iter().map(|s| (s - mu).max(ln_theta)).collect()
}

/// Entropic (KL) projection of `exp(scores)` onto the restricted simplex.
pub fn bounded_softmax(scores: &[f64], theta: f64) -> Vec<f64> {
    bounded_log_softmax(scores, theta)
        .into_iter()
        .map(f64::exp)
        .collect()
}

/// `R(z) = sum z_i ln z_i + ln d`
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntropyRegularizer {
    pub d: usize,
}

impl EntropyRegularizer {
    pub fn value(&self, z: &[f64]) -> f64 {
        neg_entropy(z)
    }

    pub fn grad(&self, z: &[f64]) -> Vec<f64> {
        neg_entropy_grad(z)
    }

    /// Bound on `||grad R||_inf` over the restricted simplex.
    pub fn lipschitz_bound(&self, theta: f64) -> f64 {
        entropy_lipschitz(theta)
    }
}

fn logs_of(z: &[f64]) -> Vec<f64> {
    let d = z.len() as f64;
    let tiny = z.iter().any(|v| *v < 1e-300);
    z.iter()
        .map(|v| if tiny { ((1.0 - 1e-9) * v + 1e-9 / d).ln() } else { v.ln() })
        .collect()
}

/// Mirror prox with entropic steps for `x'My + wx R(x) - wy R(y)` over
/// restricted simplexes. Last iterate when both weights are positive, averaged
/// iterates otherwise.
pub fn entropic_mirror_prox(
    t: &Terms,
    x_set: &FeasibleSet,
    y_set: &FeasibleSet,
    x0: &[f64],
    y0: &[f64],
    cfg: &SolverConfig,
) -> Result<SaddleSolution> {
    let tx = x_set
        .simplex_theta()
        .ok_or_else(|| Error::InvalidParameter("entropic solver needs simplexes".into()))?;
    let ty = y_set
        .simplex_theta()
        .ok_or_else(|| Error::InvalidParameter("entropic solver needs simplexes".into()))?;
    let m = t.bilinear.clone().unwrap_or_else(|| Matrix::zeros(t.dx, t.dy));
    let (wx, wy) = (t.entropy_x.max(0.0), t.entropy_y.max(0.0));
    let strong = wx > 0.0 && wy > 0.0;
    let lip = m.max_abs();
    let respond = |x: &[f64], y: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
        let xb = argmin_separable(x_set, &vec![0.0; t.dx], &m.mul_vec(y), wx)?;
        let neg: Vec<f64> = m.tmul_vec(x).iter().map(|v| -v).collect();
        let yb = argmin_separable(y_set, &vec![0.0; t.dy], &neg, wy)?;
        Ok((xb, yb))
    };
    let gap_at = |x: &[f64], y: &[f64]| -> Result<f64> {
        let (xb, yb) = respond(x, y)?;
        let g = t.value(x, &yb).max(t.value(x, y)) - t.value(&xb, y).min(t.value(x, y));
        if !g.is_finite() {
            return Err(Error::NonFinite("entropic duality gap".into()));
        }
        Ok(g.max(0.0))
    };
    let finish = |x: Vec<f64>, y: Vec<f64>, gap: f64, iterations: usize| SaddleSolution {
        value: t.value(&x, &y),
        x_star: x,
        y_star: y,
        gap,
        iterations,
        converged: gap <= cfg.tol_gap,
    };
    if lip == 0.0 {
        // Decoupled: each player's best response is independent of the other.
        let (xb, yb) = respond(x0, y0)?;
        let gap = gap_at(&xb, &yb)?;
        return Ok(finish(xb, yb, gap, 1));
    }
    let gamma = 1.0 / lip;
    let (cx, cy) = (1.0 + gamma * wx, 1.0 + gamma * wy);
    let mut lx = logs_of(x0);
    let mut ly = logs_of(y0);
    let exp = |l: &[f64]| l.iter().map(|v| v.exp()).collect::<Vec<f64>>();
    let mut best = (gap_at(x0, y0)?, x0.to_vec(), y0.to_vec());
    if best.0 <= cfg.tol_gap {
        return Ok(finish(best.1, best.2, best.0, 0));
    }
    let (mut ax, mut ay) = (vec![0.0; t.dx], vec![0.0; t.dy]);
    let period = 10;
    let mut iters = 0;
    while iters < cfg.max_iters {
        iters += 1;
        let (x, y) = (exp(&lx), exp(&ly));
        let gx = m.mul_vec(&y);
        let gy = m.tmul_vec(&x);
        let sx: Vec<f64> = lx.iter().zip(&gx).map(|(l, g)| (l - gamma * g) / cx).collect();
        let sy: Vec<f64> = ly.iter().zip(&gy).map(|(l, g)| (l + gamma * g) / cy).collect();
        let xh = bounded_softmax(&sx, tx);
        let yh = bounded_softmax(&sy, ty);
        let gxh = m.mul_vec(&yh);
        let gyh = m.tmul_vec(&xh);
        let sx: Vec<f64> = lx.iter().zip(&gxh).map(|(l, g)| (l - gamma * g) / cx).collect();
        let sy: Vec<f64> = ly.iter().zip(&gyh).map(|(l, g)| (l + gamma * g) / cy).collect();
        lx = bounded_log_softmax(&sx, tx);
        ly = bounded_log_softmax(&sy, ty);
        if !lx.iter().chain(&ly).all(|v| v.is_finite() || *v == f64::NEG_INFINITY) {
            return Err(Error::NonFinite("entropic iterate".into()));
        }
        if !strong {
            for (a, v) in ax.iter_mut().zip(&xh) {
                *a += v;
            }
            for (a, v) in ay.iter_mut().zip(&yh) {
                *a += v;
            }
        }
        if iters % period == 0 || iters == cfg.max_iters {
            let (px, py) = if strong {
                (exp(&lx), exp(&ly))
            } else {
                let k = iters as f64;
                (
                    ax.iter().map(|v| v / k).collect(),
                    ay.iter().map(|v| v / k).collect(),
                )
            };
            let gap = gap_at(&px, &py)?;
            if gap < best.0 {
                best = (gap, px, py);
            }
            if best.0 <= cfg.tol_gap {
                break;
            }
        }
    }
    Ok(finish(best.1, best.2, best.0, iters))
}

/// Exact solution of `min_{x in simplex} max_{y in simplex} x'Ay` for 2x2 `A`.
pub fn solve_matrix_game_2x2(a: &Matrix) -> SaddleSolution {
    assert_eq!((a.rows(), a.cols()), (2, 2), "2x2 game expected");
    let (a11, a12, a21, a22) = (a.get(0, 0), a.get(0, 1), a.get(1, 0), a.get(1, 1));
    let unit = |i: usize| if i == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] };
    let solution = |x: Vec<f64>, y: Vec<f64>, value: f64| SaddleSolution {
        x_star: x,
        y_star: y,
        value,
        gap: 0.0,
        iterations: 0,
        converged: true,
    };
    if a11 == a12 && a12 == a21 && a21 == a22 {
        return solution(vec![0.5, 0.5], vec![0.5, 0.5], a11);
    }
    for i in 0..2 {
        for j in 0..2 {
            let v = a.get(i, j);
            // Row player minimizes, column player maximizes.
            let row_max = v >= a.get(i, 1 - j);
            let col_min = v <= a.get(1 - i, j);
            if row_max && col_min {
                return solution(unit(i), unit(j), v);
            }
        }
    }
    let denom = a11 - a12 - a21 + a22;
    let x1 = (a22 - a21) / denom;
    let y1 = (a22 - a12) / denom;
    let value = (a11 * a22 - a12 * a21) / denom;
    solution(vec![x1, 1.0 - x1], vec![y1, 1.0 - y1], value)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmgConfig {
    pub eta: f64,
    pub theta: f64,
    pub solver: SolverConfig,
    /// Set when the default theta had to be clamped into range.
    pub theta_clamped: bool,
}

impl OmgConfig {
    /// `eta = sqrt(T) / G`, `theta = exp(-eta G)`, clamped to
    /// `min(1/d1, 1/d2) / 2` when it would leave the admissible range.
    pub fn theorem_defaults(horizon: usize, g: f64, d1: usize, d2: usize) -> Self {
        let eta = (horizon as f64).sqrt() / g;
        let raw = (-eta * g).exp();
        let cap = (1.0 / d1 as f64).min(1.0 / d2 as f64);
        let (theta, theta_clamped) = if raw > cap { (cap / 2.0, true) } else { (raw, false) };
        Self {
            eta,
            theta,
            solver: SolverConfig::default().with_tol(1e-7),
            theta_clamped,
        }
    }

    pub fn validate(&self, d1: usize, d2: usize) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::InvalidParameter("eta must be positive".into()));
        }
        let cap = (1.0 / d1 as f64).min(1.0 / d2 as f64);
        if !(self.theta > 0.0 && self.theta <= cap) {
            return Err(Error::InvalidParameter(format!(
                "theta = {} outside (0, {cap}]",
                self.theta
            )));
        }
        self.solver.validate()
    }
}

/// OMG-RFTL: plays the saddle of `sum_t x'A_t y + (t/eta)(R(x) - R(y))` over
/// the restricted simplexes.
#[derive(Debug, Clone)]
pub struct OmgRftl {
    cfg: OmgConfig,
    sum: Matrix,
    rounds: usize,
    x_set: FeasibleSet,
    y_set: FeasibleSet,
    x: Vec<f64>,
    y: Vec<f64>,
    last_gap: f64,
}

impl OmgRftl {
    pub fn new(d1: usize, d2: usize, cfg: OmgConfig) -> Result<Self> {
        cfg.validate(d1, d2)?;
        let x_set = FeasibleSet::restricted_simplex(d1, cfg.theta)?;
        let y_set = FeasibleSet::restricted_simplex(d2, cfg.theta)?;
        Ok(Self {
            x: vec![1.0 / d1 as f64; d1],
            y: vec![1.0 / d2 as f64; d2],
            sum: Matrix::zeros(d1, d2),
            rounds: 0,
            x_set,
            y_set,
            cfg,
            last_gap: 0.0,
        })
    }

    pub fn config(&self) -> &OmgConfig {
        &self.cfg
    }

    pub fn current(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.y)
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn last_gap(&self) -> f64 {
        self.last_gap
    }

    pub fn sets(&self) -> (&FeasibleSet, &FeasibleSet) {
        (&self.x_set, &self.y_set)
    }

    /// Observes `A_t` (entries in `[-1, 1]`) and moves to the next distributions.
    pub fn step(&mut self, a: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
        check_dim(self.sum.rows(), a.rows())?;
        check_dim(self.sum.cols(), a.cols())?;
        if let Some(v) = a.data().iter().find(|v| !(v.abs() <= 1.0)) {
            return Err(Error::InvalidParameter(format!("entry {v} outside [-1, 1]")));
        }
        self.sum.add_scaled(a, 1.0);
        self.advance()
    }

    /// Adds a single-entry observation without the range check (estimates may
    /// exceed the payoff range).
    fn absorb_entry(&mut self, i: usize, j: usize, v: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let cur = self.sum.get(i, j);
        self.sum.set(i, j, cur + v);
        self.advance()
    }

    fn advance(&mut self) -> Result<(Vec<f64>, Vec<f64>)> {
        self.rounds += 1;
        let w = self.rounds as f64 / self.cfg.eta;
        let mut terms = Terms::zeros(self.sum.rows(), self.sum.cols());
        terms.bilinear = Some(self.sum.clone());
        terms.entropy_x = w;
        terms.entropy_y = w;
        let mut cfg = self.cfg.solver.clone();
        // The objective scales with the accumulated weight.
        cfg.tol_gap *= w.max(1.0);
        cfg.warm_start = Some((self.x.clone(), self.y.clone()));
        let structured = crate::payoffs::StructuredPayoff {
            label: "omg-running-sum",
            terms,
            lipschitz: 0.0,
            strong_h: w,
            norm: crate::payoffs::Norm::L1,
        };
        let sol = solve_saddle(&structured, &self.x_set, &self.y_set, &cfg)?;
        self.last_gap = sol.gap;
        self.x = sol.x_star;
        self.y = sol.y_star;
        Ok((self.x.clone(), self.y.clone()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnePointEstimate {
    pub i_sampled: usize,
    pub j_sampled: usize,
    pub observed_entry: f64,
    /// The single nonzero entry `A_ij / (x_i y_j)`.
    pub value: f64,
    pub d1: usize,
    pub d2: usize,
}

impl OnePointEstimate {
    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.d1, self.d2);
        m.set(self.i_sampled, self.j_sampled, self.value);
        m
    }
}

/// `A_hat` with the single nonzero `A_ij / (x_i y_j)` at the sampled cell.
pub fn one_point_estimate(observed: f64, i: usize, j: usize, x: &[f64], y: &[f64]) -> Result<OnePointEstimate> {
    if i >= x.len() || j >= y.len() {
        return Err(Error::InvalidParameter(format!("index ({i}, {j}) out of range")));
    }
    if !(x[i] > 0.0 && y[j] > 0.0) {
        return Err(Error::InvalidParameter(
            "sampled cell has zero probability".into(),
        ));
    }
    if !observed.is_finite() {
        return Err(Error::NonFinite("observed entry".into()));
    }
    Ok(OnePointEstimate {
        i_sampled: i,
        j_sampled: j,
        observed_entry: observed,
        value: observed / (x[i] * y[j]),
        d1: x.len(),
        d2: y.len(),
    })
}

/// Inverse CDF: the first (0-based) index whose cumulative mass exceeds `u`.
pub fn inverse_cdf(p: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (k, pk) in p.iter().enumerate() {
        if *pk > 0.0 {
            last_positive = k;
        }
        acc += pk;
        if u < acc {
            return k;
        }
    }
    last_positive
}

/// Draws one index from `p`, advancing the stream by exactly one uniform.
pub fn sample_from_distribution<R: Rng + ?Sized>(p: &[f64], stream: &mut R) -> Result<usize> {
    if p.is_empty() || p.iter().any(|v| !(*v >= -1e-12)) {
        return Err(Error::InvalidParameter("distribution has negative mass".into()));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "distribution sums to {s}, not 1"
        )));
    }
    let u: f64 = stream.gen();
    Ok(inverse_cdf(p, u))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BanditConfig {
    pub eta: f64,
    pub delta: f64,
    pub rng_seed: u64,
    pub solver: SolverConfig,
    pub delta_clamped: bool,
}

impl BanditConfig {
    /// `delta = T^(-1/6)`, `eta = T^(1/6)`; delta clamped to
    /// `min(1/d1, 1/d2) / 2` when it would leave the admissible range.
    pub fn theorem_defaults(horizon: usize, d1: usize, d2: usize, rng_seed: u64) -> Self {
        let t = horizon as f64;
        let raw = t.powf(-1.0 / 6.0);
        let cap = (1.0 / d1 as f64).min(1.0 / d2 as f64);
        let (delta, delta_clamped) = if raw >= cap { (cap / 2.0, true) } else { (raw, false) };
        Self {
            eta: t.powf(1.0 / 6.0),
            delta,
            rng_seed,
            solver: SolverConfig::default().with_tol(1e-7),
            delta_clamped,
        }
    }
}

/// Substream offsets for the two players' sampling.
pub const STREAM_PLAYER_X: u64 = 1;
pub const STREAM_PLAYER_Y: u64 = 2;

/// Bandit-OMG-RFTL: OMG-RFTL over `Delta_delta` fed with one-point estimates.
#[derive(Debug, Clone)]
pub struct BanditOmg {
    inner: OmgRftl,
    rng_x: ChaCha8Rng,
    rng_y: ChaCha8Rng,
    pub last_estimate: Option<OnePointEstimate>,
}

impl BanditOmg {
    pub fn new(d1: usize, d2: usize, cfg: &BanditConfig) -> Result<Self> {
        let cap = (1.0 / d1 as f64).min(1.0 / d2 as f64);
        if !(cfg.delta > 0.0 && cfg.delta < cap) {
            return Err(Error::InvalidParameter(format!(
                "delta = {} outside (0, {cap})",
                cfg.delta
            )));
        }
        let omg = OmgConfig {
            eta: cfg.eta,
            theta: cfg.delta,
            solver: cfg.solver.clone(),
            theta_clamped: cfg.delta_clamped,
        };
        let mut rng_x = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        rng_x.set_stream(STREAM_PLAYER_X);
        let mut rng_y = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        rng_y.set_stream(STREAM_PLAYER_Y);
        Ok(Self {
            inner: OmgRftl::new(d1, d2, omg)?,
            rng_x,
            rng_y,
            last_estimate: None,
        })
    }

    pub fn current(&self) -> (&[f64], &[f64]) {
        self.inner.current()
    }

    pub fn last_gap(&self) -> f64 {
        self.inner.last_gap()
    }

    /// Samples `(i, j)`, queries the environment once, and updates.
    pub fn step<F: FnMut(usize, usize) -> f64>(&mut self, mut env: F) -> Result<(usize, usize)> {
        let (x, y) = (self.inner.x.clone(), self.inner.y.clone());
        let i = sample_from_distribution(&x, &mut self.rng_x)?;
        let j = sample_from_distribution(&y, &mut self.rng_y)?;
        let obs = env(i, j);
        if !obs.is_finite() {
            return Err(Error::NonFinite(format!("environment returned {obs}")));
        }
        let est = one_point_estimate(obs, i, j, &x, &y)?;
        self.inner.absorb_entry(i, j, est.value)?;
        self.last_estimate = Some(est);
        Ok((i, j))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dist2;
    use crate::payoffs::{make_bilinear, regularize, Norm, Regularizer};
    use crate::solver::Geometry;

    fn pennies() -> Matrix {
        Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]])
    }

    #[test]
    fn bounded_softmax_respects_floor_and_mass() {
        let z = bounded_softmax(&[10.0, 0.0, -5.0, -50.0], 0.01);
        assert!((z.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(z.iter().all(|v| *v >= 0.01 - 1e-15));
        assert!((z[3] - 0.01).abs() < 1e-15);
        let plain = bounded_softmax(&[0.0, 0.0], 0.0);
        assert_eq!(plain, vec![0.5, 0.5]);
    }

    #[test]
    fn closed_form_2x2_examples() {
        let s = solve_matrix_game_2x2(&pennies());
        assert_eq!(s.value, 0.0);
        assert_eq!(s.x_star, vec![0.5, 0.5]);
        assert_eq!(s.y_star, vec![0.5, 0.5]);
        let z = solve_matrix_game_2x2(&Matrix::zeros(2, 2));
        assert_eq!((z.value, z.x_star.clone()), (0.0, vec![0.5, 0.5]));
    }

    #[test]
    fn second_scenario_matrix_value_by_grid() {
        // Grid over (alpha, beta) parameterizations of both simplexes.
        let a = Matrix::from_rows(&[vec![1.0, -1.0], vec![1.0, -1.0]]);
        let n = 1000;
        let mut minmax = f64::INFINITY;
        for i in 0..=n {
            let al = i as f64 / n as f64;
            let mut inner = f64::NEG_INFINITY;
            for j in 0..=n {
                let be = j as f64 / n as f64;
                inner = inner.max(a.bilinear(&[al, 1.0 - al], &[be, 1.0 - be]));
            }
            minmax = minmax.min(inner);
        }
        let s = solve_matrix_game_2x2(&a);
        assert!((s.value - minmax).abs() < 1e-12);
        assert_eq!(s.value, 1.0);
    }

    #[test]
    fn entropic_saddle_of_pennies_is_uniform() {
        let f = regularize(
            make_bilinear(pennies(), Norm::L1).unwrap(),
            Regularizer::entropy(2, 0.1),
            Regularizer::entropy(2, 0.1),
            1.0,
        )
        .unwrap();
        let set = FeasibleSet::restricted_simplex(2, 0.1).unwrap();
        let s = solve_saddle(f.as_ref(), &set, &set, &SolverConfig::default()).unwrap();
        assert!(dist2(&s.x_star, &[0.5, 0.5]) < 1e-6);
        assert!(dist2(&s.y_star, &[0.5, 0.5]) < 1e-6);
    }

    #[test]
    fn entropic_and_euclidean_solvers_agree_on_restricted_2x2() {
        let a = Matrix::from_rows(&[vec![0.3, -0.8], vec![-0.2, 0.9]]);
        let f = regularize(
            make_bilinear(a, Norm::L1).unwrap(),
            Regularizer::entropy(2, 0.1),
            Regularizer::entropy(2, 0.1),
            0.5,
        )
        .unwrap();
        let set = FeasibleSet::restricted_simplex(2, 0.1).unwrap();
        let e = solve_saddle(f.as_ref(), &set, &set, &SolverConfig::default()).unwrap();
        let g = solve_saddle(
            f.as_ref(),
            &set,
            &set,
            &SolverConfig::default().with_geometry(Geometry::Euclidean),
        )
        .unwrap();
        assert!(e.converged && g.converged);
        assert!((e.value - g.value).abs() < 1e-7);
        assert!(dist2(&e.x_star, &g.x_star) < 1e-3);
    }

    #[test]
    fn one_point_examples() {
        let e = one_point_estimate(1.0, 0, 0, &[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert_eq!(e.to_dense(), Matrix::from_rows(&[vec![4.0, 0.0], vec![0.0, 0.0]]));
        let d = 0.1;
        let w = one_point_estimate(0.7, 0, 0, &[d, 1.0 - d], &[d, 1.0 - d]).unwrap();
        assert!((w.value - 0.7 / (d * d)).abs() < 1e-12);
        assert!(one_point_estimate(1.0, 0, 0, &[0.0, 1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn estimator_is_unbiased_for_pennies() {
        let x = [0.5, 0.5];
        let mut mean = Matrix::zeros(2, 2);
        let a = pennies();
        for i in 0..2 {
            for j in 0..2 {
                let e = one_point_estimate(a.get(i, j), i, j, &x, &x).unwrap();
                mean.add_scaled(&e.to_dense(), x[i] * x[j]);
            }
        }
        assert_eq!(mean, a);
    }

    #[test]
    fn sampling_examples() {
        assert_eq!(inverse_cdf(&[1.0, 0.0], 0.999), 0);
        assert_eq!(inverse_cdf(&[0.25, 0.75], 0.5), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_from_distribution(&[0.5, 0.6], &mut rng).is_err());
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[sample_from_distribution(&[0.25; 4], &mut rng).unwrap()] += 1;
        }
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * 0.25).abs() <= 3.0 * sigma);
        }
    }

    #[test]
    fn omg_on_pennies_stays_uniform() {
        let cfg = OmgConfig::theorem_defaults(100, 1.0, 2, 2);
        let mut omg = OmgRftl::new(2, 2, cfg).unwrap();
        for _ in 0..20 {
            let (x, y) = omg.step(&pennies()).unwrap();
            assert!(dist2(&x, &[0.5, 0.5]) < 1e-6 && dist2(&y, &[0.5, 0.5]) < 1e-6);
        }
    }

    #[test]
    fn theta_clamp_is_recorded() {
        let c = OmgConfig::theorem_defaults(1, 0.1, 4, 4);
        assert!(c.theta_clamped);
        assert_eq!(c.theta, 0.125);
        let c = OmgConfig::theorem_defaults(1000, 1.0, 4, 4);
        assert!(!c.theta_clamped);
        assert!((c.theta - (-(1000f64).sqrt()).exp()).abs() < 1e-25);
    }

    #[test]
    fn bandit_on_zero_environment_stays_uniform() {
        let cfg = BanditConfig::theorem_defaults(500, 3, 3, 9);
        let mut b = BanditOmg::new(3, 3, &cfg).unwrap();
        for _ in 0..50 {
            b.step(|_, _| 0.0).unwrap();
            let (x, y) = b.current();
            assert!(dist2(x, &[1.0 / 3.0; 3]) < 1e-9 && dist2(y, &[1.0 / 3.0; 3]) < 1e-9);
        }
    }

    #[test]
    fn bandit_iterates_stay_above_delta() {
        let cfg = BanditConfig::theorem_defaults(400, 2, 2, 4);
        let mut b = BanditOmg::new(2, 2, &cfg).unwrap();
        let a = Matrix::from_rows(&[vec![1.0, -1.0], vec![1.0, -1.0]]);
        for _ in 0..400 {
            b.step(|i, j| a.get(i, j)).unwrap();
            let (x, y) = b.current();
            assert!(x.iter().chain(y).all(|v| *v >= cfg.delta - 1e-12));
        }
    }
}
