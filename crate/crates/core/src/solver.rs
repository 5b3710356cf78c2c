//! Saddle-point solvers for `min_{x in X} max_{y in Y} f(x, y)` and duality-gap
//! certification.

use crate::error::{check_dim, Error, Result};
use crate::geometry::{FeasibleSet, MEMBERSHIP_TOL};
use crate::linalg::{all_finite, dist2, dot};
use crate::matrix_games;
use crate::payoffs::{Payoff, PayoffFunction, PayoffSum, Terms};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    /// Extragradient with a fixed step `1 / (2 L)` (backtracked if `L` was underestimated).
    ExtragradientFixed,
    /// Plain projected gradient descent-ascent with steps `gamma_0 / sqrt(k)`.
    GdaDiminishing,
}

/// Which geometry the iterative solver uses on simplex-shaped problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    /// Entropic steps for entropy/bilinear problems on simplexes, Euclidean otherwise.
    Auto,
    Euclidean,
    Entropic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tol_gap: f64,
    pub max_iters: usize,
    pub step_rule: StepRule,
    pub warm_start: Option<(Vec<f64>, Vec<f64>)>,
    pub geometry: Geometry,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_gap: 1e-8,
            max_iters: 100_000,
            step_rule: StepRule::ExtragradientFixed,
            warm_start: None,
            geometry: Geometry::Auto,
        }
    }
}

impl SolverConfig {
    pub fn with_tol(mut self, tol_gap: f64) -> Self {
        self.tol_gap = tol_gap;
        self
    }

    pub fn with_warm_start(mut self, x: Vec<f64>, y: Vec<f64>) -> Self {
        self.warm_start = Some((x, y));
        self
    }

    pub fn with_geometry(mut self, geometry: Geometry) -> Self {
        self.geometry = geometry;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol_gap > 0.0) {
            return Err(Error::InvalidParameter("tol_gap must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleSolution {
    pub x_star: Vec<f64>,
    pub y_star: Vec<f64>,
    pub value: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SaddleSolution {
    /// Fails with [`Error::NonConvergence`] unless the gap target was met.
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NonConvergence {
                iterations: self.iterations,
                gap: self.gap,
            })
        }
    }
}

/// Minimizes `sum_k a_k z_k^2 + b_k z_k + w z_k ln z_k` over `set` exactly.
/// Requires `a >= 0`, `w >= 0`, and (when `w > 0`) a nonnegative set.
pub fn argmin_separable(set: &FeasibleSet, a: &[f64], b: &[f64], w: f64) -> Result<Vec<f64>> {
    check_dim(set.dim(), a.len())?;
    check_dim(set.dim(), b.len())?;
    if a.iter().any(|v| *v < 0.0) || w < 0.0 {
        return Err(Error::InvalidParameter("separable objective is not convex".into()));
    }
    if !all_finite(a) || !all_finite(b) {
        return Err(Error::NonFinite("separable coefficients".into()));
    }
    if let Some(theta) = set.simplex_theta() {
        if set.diameter() == 0.0 {
            return set.project(&vec![0.0; set.dim()]);
        }
        return Ok(argmin_separable_simplex(a, b, w, theta));
    }
    let (lower, upper) = set.bounds().expect("box kind");
    let mut z = Vec::with_capacity(a.len());
    for k in 0..a.len() {
        let (l, u) = (lower[k], upper[k]);
        let v = if w > 0.0 {
            if l < 0.0 {
                return Err(Error::InvalidParameter(
                    "entropy term needs a nonnegative box".into(),
                ));
            }
            let deriv = |v: f64| 2.0 * a[k] * v + b[k] + w * (1.0 + v.ln());
            if u == 0.0 || deriv(u) <= 0.0 {
                u
            } else if l > 0.0 && deriv(l) >= 0.0 {
                l
            } else {
                log_root(a[k], b[k] + w, w).clamp(l, u)
            }
        } else if a[k] > 0.0 {
            (-b[k] / (2.0 * a[k])).clamp(l, u)
        } else if b[k] > 0.0 {
            l
        } else if b[k] < 0.0 {
            u
        } else {
            0.0f64.clamp(l, u)
        };
        z.push(v);
    }
    Ok(z)
}

/// Positive root `z` of `2 a z + w ln z + c = 0` (`w > 0`, `a >= 0`).
fn log_root(a: f64, c: f64, w: f64) -> f64 {
    if a == 0.0 {
        return (-c / w).exp();
    }
    // g(u) = 2a e^u + w u + c is convex increasing; Newton from the right of the
    // root decreases monotonically.
    let mut u = -c / w;
    if c < 0.0 {
        u = u.min((-c / (2.0 * a)).ln());
    }
    for _ in 0..200 {
        let e = u.exp();
        let g = 2.0 * a * e + w * u + c;
        let step = g / (2.0 * a * e + w);
        u -= step;
        if step.abs() <= 1e-15 * (1.0 + u.abs()) {
            break;
        }
    }
    u.exp()
}

fn argmin_separable_simplex(a: &[f64], b: &[f64], w: f64, theta: f64) -> Vec<f64> {
    let d = a.len();
    if w > 0.0 {
        if a.iter().all(|v| *v == 0.0) {
            let scores: Vec<f64> = b.iter().map(|v| -v / w).collect();
            return matrix_games::bounded_softmax(&scores, theta);
        }
        return bisect_simplex(d, theta, |k, lambda| {
            log_root(a[k], b[k] + lambda + w, w).max(theta)
        });
    }
    let linear: Vec<usize> = (0..d).filter(|&k| a[k] == 0.0).collect();
    let quad: Vec<usize> = (0..d).filter(|&k| a[k] > 0.0).collect();
    let z_quad = |k: usize, lambda: f64| (-(b[k] + lambda) / (2.0 * a[k])).max(theta);
    let mut z = vec![theta; d];
    if quad.is_empty() {
        let best = linear
            .iter()
            .copied()
            .min_by(|&i, &j| b[i].total_cmp(&b[j]))
            .expect("nonempty");
        z[best] = 1.0 - (d as f64 - 1.0) * theta;
        return z;
    }
    if !linear.is_empty() {
        let best = linear
            .iter()
            .copied()
            .min_by(|&i, &j| b[i].total_cmp(&b[j]))
            .expect("nonempty");
        let lambda_lin = -b[best];
        let s: f64 = quad.iter().map(|&k| z_quad(k, lambda_lin)).sum::<f64>()
            + linear.len() as f64 * theta;
        if s <= 1.0 {
            for &k in &quad {
                z[k] = z_quad(k, lambda_lin);
            }
            z[best] += 1.0 - s;
            return z;
        }
    }
    // Piecewise-linear water filling over the quadratic coordinates.
    let mass = 1.0 - linear.len() as f64 * theta;
    let mut breaks: Vec<(f64, usize)> = quad
        .iter()
        .map(|&k| (-b[k] - 2.0 * a[k] * theta, k))
        .collect();
    breaks.sort_by(|p, q| q.0.total_cmp(&p.0));
    let n = breaks.len();
    let mut sum_inv = 0.0;
    let mut sum_b = 0.0;
    let mut lambda = breaks[0].0;
    for j in 0..n {
        let k = breaks[j].1;
        sum_inv += 1.0 / (2.0 * a[k]);
        sum_b += b[k] / (2.0 * a[k]);
        let inactive = (n - j - 1) as f64 * theta;
        lambda = -(mass - inactive + sum_b) / sum_inv;
        let next = if j + 1 < n { breaks[j + 1].0 } else { f64::NEG_INFINITY };
        if lambda >= next {
            break;
        }
    }
    for &k in &quad {
        z[k] = z_quad(k, lambda);
    }
    z
}

/// Finds `lambda` with `sum_k z_k(lambda) = 1` for nonincreasing `z_k`.
fn bisect_simplex<F: Fn(usize, f64) -> f64>(d: usize, theta: f64, z: F) -> Vec<f64> {
    let total = |lambda: f64| (0..d).map(|k| z(k, lambda)).sum::<f64>();
    let (mut lo, mut hi) = (-1.0, 1.0);
    while total(lo) < 1.0 {
        lo *= 2.0;
    }
    while total(hi) > 1.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * (1.0 + hi.abs()) {
            break;
        }
    }
    let mut out: Vec<f64> = (0..d).map(|k| z(k, hi)).collect();
    let s: f64 = out.iter().sum();
    let free: Vec<usize> = (0..d).filter(|&k| out[k] > theta).collect();
    if !free.is_empty() {
        let adj = (1.0 - s) / free.len() as f64;
        for k in free {
            out[k] = (out[k] + adj).max(theta);
        }
    }
    out
}

/// Projected gradient with backtracking for `min_{z in set} phi(z)`.
fn projected_gradient<V, G>(set: &FeasibleSet, start: &[f64], value: V, grad: G, tol: f64, max_iters: usize) -> Result<Vec<f64>>
where
    V: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let mut z = start.to_vec();
    let mut fz = value(&z);
    let mut step = 1.0;
    for _ in 0..max_iters {
        let g = grad(&z);
        if !all_finite(&g) {
            return Err(Error::NonFinite("gradient in inner solve".into()));
        }
        let mut accepted = None;
        for _ in 0..60 {
            let cand = set.project(&crate::linalg::axpy(&z, -step, &g))?;
            let diff = crate::linalg::sub(&cand, &z);
            let fc = value(&cand);
            if fc <= fz + dot(&g, &diff) + dot(&diff, &diff) / (2.0 * step) + 1e-15 * fz.abs() {
                accepted = Some((cand, fc, diff));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, fc, diff)) = accepted else {
            break;
        };
        let moved = dot(&diff, &diff).sqrt();
        let decrease = fz - fc;
        z = cand;
        fz = fc;
        // Decrease is a lower bound on progress; the residual moved/step
        // bounds the remaining suboptimality times the diameter.
        if moved == 0.0 || (decrease <= 0.01 * tol && moved / step * set.diameter().max(1.0) <= tol) {
            break;
        }
        step *= 2.0;
    }
    Ok(z)
}

/// `argmin_{x in X} f(x, y)`
pub fn best_response_x(f: &dyn Payoff, x_set: &FeasibleSet, y: &[f64], start: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>> {
    if let Some(t) = f.terms() {
        if let Some(z) = exact_best_response_x(t, x_set, y)? {
            return Ok(z);
        }
    }
    projected_gradient(
        x_set,
        start,
        |x| f.value(x, y),
        |x| f.grad_x(x, y),
        cfg.tol_gap,
        cfg.max_iters.min(20_000),
    )
}

/// `argmax_{y in Y} f(x, y)`
pub fn best_response_y(f: &dyn Payoff, y_set: &FeasibleSet, x: &[f64], start: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>> {
    if let Some(t) = f.terms() {
        if let Some(z) = exact_best_response_y(t, y_set, x)? {
            return Ok(z);
        }
    }
    projected_gradient(
        y_set,
        start,
        |y| -f.value(x, y),
        |y| f.grad_y(x, y).iter().map(|v| -v).collect(),
        cfg.tol_gap,
        cfg.max_iters.min(20_000),
    )
}

fn exact_best_response_x(t: &Terms, x_set: &FeasibleSet, y: &[f64]) -> Result<Option<Vec<f64>>> {
    let (a, b) = t.x_coefficients(y);
    if a.iter().any(|v| *v < 0.0) {
        return Ok(None);
    }
    Ok(Some(argmin_separable(x_set, &a, &b, t.entropy_x)?))
}

fn exact_best_response_y(t: &Terms, y_set: &FeasibleSet, x: &[f64]) -> Result<Option<Vec<f64>>> {
    let (a, b) = t.y_coefficients(x);
    if a.iter().any(|v| *v < 0.0) {
        return Ok(None);
    }
    Ok(Some(argmin_separable(y_set, &a, &b, t.entropy_y)?))
}

fn check_feasible(set: &FeasibleSet, z: &[f64], who: &str) -> Result<()> {
    if !set.contains(z, MEMBERSHIP_TOL)? {
        return Err(Error::Infeasible(format!("{who} = {z:?} outside its set")));
    }
    Ok(())
}

/// Duality gap `max_y' f(x, y') - min_x' f(x', y)`, clamped at 0.
pub fn gap_estimate(f: &dyn Payoff, x_set: &FeasibleSet, y_set: &FeasibleSet, x: &[f64], y: &[f64], inner_cfg: &SolverConfig) -> Result<f64> {
    check_feasible(x_set, x, "x")?;
    check_feasible(y_set, y, "y")?;
    Ok(gap_with_responses(f, x_set, y_set, x, y, inner_cfg)?.0)
}

/// Gap together with the best responses that certify it.
fn gap_with_responses(f: &dyn Payoff, x_set: &FeasibleSet, y_set: &FeasibleSet, x: &[f64], y: &[f64], cfg: &SolverConfig) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let yb = best_response_y(f, y_set, x, y, cfg)?;
    let xb = best_response_x(f, x_set, y, x, cfg)?;
    let upper = f.value(x, &yb).max(f.value(x, y));
    let lower = f.value(&xb, y).min(f.value(x, y));
    let gap = upper - lower;
    if !gap.is_finite() {
        return Err(Error::NonFinite("duality gap".into()));
    }
    Ok((gap.max(0.0), xb, yb))
}

/// Approximate saddle point of `f` over `X x Y`.
pub fn solve_saddle(f: &dyn Payoff, x_set: &FeasibleSet, y_set: &FeasibleSet, cfg: &SolverConfig) -> Result<SaddleSolution> {
    cfg.validate()?;
    let (dx, dy) = f.dims();
    check_dim(x_set.dim(), dx)?;
    check_dim(y_set.dim(), dy)?;
    let (x0, y0) = match &cfg.warm_start {
        Some((x, y)) => {
            check_dim(dx, x.len())?;
            check_dim(dy, y.len())?;
            check_feasible(x_set, x, "warm start x")?;
            check_feasible(y_set, y, "warm start y")?;
            // Snap round-off so iterates are exactly feasible.
            (x_set.project(x)?, y_set.project(y)?)
        }
        None => (x_set.center(), y_set.center()),
    };
    if x_set.diameter() == 0.0 && y_set.diameter() == 0.0 {
        return Ok(SaddleSolution {
            value: f.value(&x0, &y0),
            x_star: x0,
            y_star: y0,
            gap: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    if let Some(t) = f.terms() {
        let simplexes = x_set.simplex_theta().is_some() && y_set.simplex_theta().is_some();
        if simplexes && cfg.geometry != Geometry::Euclidean {
            if t.is_pure_bilinear()
                && dx == 2
                && dy == 2
                && x_set.simplex_theta() == Some(0.0)
                && y_set.simplex_theta() == Some(0.0)
            {
                let m = t.bilinear.clone().unwrap_or_else(|| crate::linalg::Matrix::zeros(2, 2));
                let mut sol = matrix_games::solve_matrix_game_2x2(&m);
                sol.value = f.value(&sol.x_star, &sol.y_star);
                return Ok(sol);
            }
            if t.is_entropic_bilinear() || t.is_pure_bilinear() {
                return matrix_games::entropic_mirror_prox(t, x_set, y_set, &x0, &y0, cfg);
            }
        }
    }
    if cfg.geometry != Geometry::Entropic {
        if let Some(t) = f.terms() {
            if scalar_x_applies(t, x_set, y_set) {
                return scalar_x_saddle(f, t, x_set, y_set, cfg);
            }
        }
    }
    match cfg.step_rule {
        StepRule::ExtragradientFixed => extragradient(f, x_set, y_set, x0, y0, cfg),
        StepRule::GdaDiminishing => gda(f, x_set, y_set, x0, y0, cfg),
    }
}

/// True when `x` is scalar on an interval, `Y` is a box, there is no entropy,
/// `L(., y)` is convex for every `y` and `L(x, .)` is concave.
fn scalar_x_applies(t: &Terms, x_set: &FeasibleSet, y_set: &FeasibleSet) -> bool {
    if t.dx != 1 || t.entropy_x != 0.0 || t.entropy_y != 0.0 {
        return false;
    }
    let (Some(_), Some((yl, yu))) = (x_set.bounds(), y_set.bounds()) else {
        return false;
    };
    if t.quad_y.a.iter().any(|a| *a < 0.0) || yl.len() > 16 {
        return false;
    }
    // The x-curvature is affine in y, so checking the vertices of Y suffices.
    (0..1usize << yl.len()).all(|mask| {
        let v: Vec<f64> = (0..yl.len())
            .map(|i| if mask >> i & 1 == 1 { yu[i] } else { yl[i] })
            .collect();
        t.x_coefficients(&v).0[0] >= 0.0
    })
}

/// Exact path for scalar `x`: minimizes the convex `psi(x) = max_y L(x, y)` by
/// golden-section search, then picks `y` so that `x` is also a best response.
fn scalar_x_saddle(f: &dyn Payoff, t: &Terms, x_set: &FeasibleSet, y_set: &FeasibleSet, cfg: &SolverConfig) -> Result<SaddleSolution> {
    let (xl, xu) = x_set.bounds().expect("checked box");
    let (lo, hi) = (xl[0], xu[0]);
    let respond = |x: f64| -> Result<Vec<f64>> {
        let (a, b) = t.y_coefficients(&[x]);
        argmin_separable(y_set, &a, &b, 0.0)
    };
    let psi = |x: f64| -> Result<f64> { Ok(t.value(&[x], &respond(x)?)) };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (psi(c)?, psi(d)?);
    let mut iterations = 0;
    while b - a > 1e-14 * (1.0 + lo.abs().max(hi.abs())) && iterations < 200 {
        iterations += 1;
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = psi(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = psi(d)?;
        }
    }
    let mut best = (lo, psi(lo)?);
    for x in [a, b, c, d, hi] {
        let v = psi(x)?;
        if v < best.1 {
            best = (x, v);
        }
    }
    let x = vec![best.0];
    let y = balance_dual(t, x_set, y_set, best.0, respond(best.0)?)?;
    let (gap, _, _) = gap_with_responses(f, x_set, y_set, &x, &y, cfg)?;
    Ok(SaddleSolution {
        value: best.1,
        x_star: x,
        y_star: y,
        gap,
        iterations,
        converged: gap <= cfg.tol_gap,
    })
}

/// Adjusts the coordinates of `y` on which `L(x, .)` is flat so that the
/// x-derivative satisfies the optimality condition at `x` (a small
/// one-equation feasibility problem, filled greedily).
fn balance_dual(t: &Terms, x_set: &FeasibleSet, y_set: &FeasibleSet, x: f64, mut y: Vec<f64>) -> Result<Vec<f64>> {
    if t.coupling.is_empty() && t.bilinear.is_none() {
        return Ok(y);
    }
    let (yl, yu) = y_set.bounds().expect("checked box");
    let (xl, xu) = x_set.bounds().expect("checked box");
    let gy = t.grad_y(&[x], &y);
    let scale = 1.0 + gy.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // d/dx L(x, y) = alpha + sum_i beta_i y_i
    let alpha = 2.0 * t.quad_x.a[0] * x + t.quad_x.b[0];
    let beta: Vec<f64> = (0..y.len())
        .map(|i| {
            let mut v = t.bilinear.as_ref().map_or(0.0, |m| m.get(0, i));
            if let Some(c) = t.coupling.get(i) {
                v += 2.0 * c.a[0] * x + c.b[0];
            }
            v
        })
        .collect();
    let free: Vec<usize> = (0..y.len())
        .filter(|&i| t.quad_y.a[i] == 0.0 && gy[i].abs() <= 1e-9 * scale)
        .collect();
    if free.is_empty() {
        return Ok(y);
    }
    let fixed: f64 = alpha
        + (0..y.len())
            .filter(|i| !free.contains(i))
            .map(|i| beta[i] * y[i])
            .sum::<f64>();
    let width = (xu[0] - xl[0]).max(1e-300);
    let interior = x > xl[0] + 1e-12 * width && x < xu[0] - 1e-12 * width;
    let at_lower = !interior && x <= xl[0] + 1e-12 * width;
    // Target interval for sum_{free} beta_i y_i.
    let (tlo, thi) = if interior {
        (-fixed, -fixed)
    } else if at_lower {
        (-fixed, f64::INFINITY)
    } else {
        (f64::NEG_INFINITY, -fixed)
    };
    let mut s: f64 = free.iter().map(|&i| beta[i] * yl[i]).sum();
    for &i in &free {
        y[i] = yl[i];
    }
    let goal = if s < tlo {
        tlo
    } else if s > thi {
        thi
    } else {
        return Ok(y);
    };
    for &i in &free {
        let room = beta[i] * (yu[i] - yl[i]);
        if room == 0.0 || (goal - s) * room < 0.0 {
            continue;
        }
        let frac = ((goal - s) / room).min(1.0);
        y[i] = yl[i] + frac * (yu[i] - yl[i]);
        s += frac * room;
        if (goal - s).abs() <= 1e-15 * (1.0 + goal.abs()) {
            break;
        }
    }
    Ok(y)
}

/// Local Lipschitz estimate of the monotone operator `(grad_x, -grad_y)` by
/// power iteration on finite differences along feasible directions.
fn estimate_operator_lipschitz(f: &dyn Payoff, x_set: &FeasibleSet, y_set: &FeasibleSet, x: &[f64], y: &[f64]) -> f64 {
    let scale = (x_set.diameter() + y_set.diameter()).max(1e-12);
    let eps = 1e-4 * scale;
    let gx0 = f.grad_x(x, y);
    let gy0 = f.grad_y(x, y);
    let (dx, dy) = (x.len(), y.len());
    let mut v: Vec<f64> = (0..dx + dy).map(|i| if i % 2 == 0 { 1.0 } else { -0.7 }).collect();
    let mut best: f64 = 0.0;
    for _ in 0..12 {
        let n = crate::linalg::norm2(&v);
        if n == 0.0 {
            break;
        }
        let xp = x_set.project(&crate::linalg::axpy(x, eps / n, &v[..dx])).expect("dims");
        let yp = y_set.project(&crate::linalg::axpy(y, eps / n, &v[dx..])).expect("dims");
        let step = (dist2(&xp, x).powi(2) + dist2(&yp, y).powi(2)).sqrt();
        if step < 1e-3 * eps {
            break;
        }
        let gx = f.grad_x(&xp, &yp);
        let gy = f.grad_y(&xp, &yp);
        let mut diff: Vec<f64> = gx.iter().zip(&gx0).map(|(a, b)| a - b).collect();
        diff.extend(gy.iter().zip(&gy0).map(|(a, b)| -(a - b)));
        if !all_finite(&diff) {
            break;
        }
        best = best.max(crate::linalg::norm2(&diff) / step);
        v = diff;
    }
    best.max(f.strong_h()).max(1e-12)
}

fn operator(f: &dyn Payoff, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let gx = f.grad_x(x, y);
    let gy = f.grad_y(x, y);
    if !all_finite(&gx) || !all_finite(&gy) {
        return Err(Error::NonFinite(format!("gradient at x = {x:?}, y = {y:?}")));
    }
    Ok((gx, gy))
}

struct Tracker {
    best: Option<(f64, Vec<f64>, Vec<f64>)>,
}

impl Tracker {
    fn offer(&mut self, gap: f64, x: &[f64], y: &[f64]) {
        if self.best.as_ref().is_none_or(|b| gap < b.0) {
            self.best = Some((gap, x.to_vec(), y.to_vec()));
        }
    }

    fn finish(self, f: &dyn Payoff, iterations: usize, tol: f64) -> SaddleSolution {
        let (gap, x, y) = self.best.expect("at least one gap evaluation");
        SaddleSolution {
            value: f.value(&x, &y),
            x_star: x,
            y_star: y,
            gap,
            iterations,
            converged: gap <= tol,
        }
    }
}

fn gap_check_period(f: &dyn Payoff) -> usize {
    if f.terms().is_some() {
        5
    } else {
        50
    }
}

fn extragradient(f: &dyn Payoff, x_set: &FeasibleSet, y_set: &FeasibleSet, mut x: Vec<f64>, mut y: Vec<f64>, cfg: &SolverConfig) -> Result<SaddleSolution> {
    let strong = f.strong_h() > 0.0;
    let mut gamma = 1.0 / (2.0 * estimate_operator_lipschitz(f, x_set, y_set, &x, &y));
    let period = gap_check_period(f);
    let mut tracker = Tracker { best: None };
    let (mut ax, mut ay, mut wsum) = (vec![0.0; x.len()], vec![0.0; y.len()], 0.0);
    let mut iters = 0;
    let gap0 = gap_with_responses(f, x_set, y_set, &x, &y, cfg)?.0;
    tracker.offer(gap0, &x, &y);
    if gap0 <= cfg.tol_gap {
        return Ok(tracker.finish(f, 0, cfg.tol_gap));
    }
    while iters < cfg.max_iters {
        iters += 1;
        let (gx, gy) = operator(f, &x, &y)?;
        let (xh, yh, gxh, gyh) = loop {
            let xh = x_set.project(&crate::linalg::axpy(&x, -gamma, &gx))?;
            let yh = y_set.project(&crate::linalg::axpy(&y, gamma, &gy))?;
            let (gxh, gyh) = operator(f, &xh, &yh)?;
            let moved = (dist2(&xh, &x).powi(2) + dist2(&yh, &y).powi(2)).sqrt();
            let change = (dist2(&gxh, &gx).powi(2) + dist2(&gyh, &gy).powi(2)).sqrt();
            if gamma * change <= 0.9 * moved || moved == 0.0 || gamma < 1e-300 {
                break (xh, yh, gxh, gyh);
            }
            gamma *= 0.5;
        };
        x = x_set.project(&crate::linalg::axpy(&x, -gamma, &gxh))?;
        y = y_set.project(&crate::linalg::axpy(&y, gamma, &gyh))?;
        if !strong {
            wsum += gamma;
            for (a, v) in ax.iter_mut().zip(&xh) {
                *a += gamma * v;
            }
            for (a, v) in ay.iter_mut().zip(&yh) {
                *a += gamma * v;
            }
        }
        if iters % period == 0 || iters == cfg.max_iters {
            if strong {
                // Last-iterate mode also asks for a small fixed-point residual,
                // measured relative to the operator scale 1 / (2 gamma).
                let (gx, gy) = operator(f, &x, &y)?;
                let xp = x_set.project(&crate::linalg::axpy(&x, -gamma, &gx))?;
                let yp = y_set.project(&crate::linalg::axpy(&y, gamma, &gy))?;
                let residual = (dist2(&xp, &x).powi(2) + dist2(&yp, &y).powi(2)).sqrt() / gamma;
                if residual > cfg.tol_gap * (0.5 / gamma).max(1.0) && iters < cfg.max_iters {
                    continue;
                }
            }
            let (cx, cy) = if strong {
                (x.clone(), y.clone())
            } else {
                (
                    x_set.project(&crate::linalg::scale(&ax, 1.0 / wsum))?,
                    y_set.project(&crate::linalg::scale(&ay, 1.0 / wsum))?,
                )
            };
            let gap = gap_with_responses(f, x_set, y_set, &cx, &cy, cfg)?.0;
            tracker.offer(gap, &cx, &cy);
            if gap <= cfg.tol_gap {
                break;
            }
        }
    }
    Ok(tracker.finish(f, iters, cfg.tol_gap))
}

fn gda(f: &dyn Payoff, x_set: &FeasibleSet, y_set: &FeasibleSet, mut x: Vec<f64>, mut y: Vec<f64>, cfg: &SolverConfig) -> Result<SaddleSolution> {
    let gamma0 = 1.0 / (2.0 * estimate_operator_lipschitz(f, x_set, y_set, &x, &y));
    let period = gap_check_period(f);
    let mut tracker = Tracker { best: None };
    let (mut ax, mut ay, mut wsum) = (vec![0.0; x.len()], vec![0.0; y.len()], 0.0);
    let mut iters = 0;
    while iters < cfg.max_iters {
        iters += 1;
        let gamma = gamma0 / (iters as f64).sqrt();
        let (gx, gy) = operator(f, &x, &y)?;
        x = x_set.project(&crate::linalg::axpy(&x, -gamma, &gx))?;
        y = y_set.project(&crate::linalg::axpy(&y, gamma, &gy))?;
        wsum += gamma;
        for (a, v) in ax.iter_mut().zip(&x) {
            *a += gamma * v;
        }
        for (a, v) in ay.iter_mut().zip(&y) {
            *a += gamma * v;
        }
        if iters % period == 0 || iters == cfg.max_iters {
            let cx = x_set.project(&crate::linalg::scale(&ax, 1.0 / wsum))?;
            let cy = y_set.project(&crate::linalg::scale(&ay, 1.0 / wsum))?;
            let gap = gap_with_responses(f, x_set, y_set, &cx, &cy, cfg)?.0;
            tracker.offer(gap, &cx, &cy);
            let gap_last = gap_with_responses(f, x_set, y_set, &x, &y, cfg)?.0;
            tracker.offer(gap_last, &x, &y);
            if gap.min(gap_last) <= cfg.tol_gap {
                break;
            }
        }
    }
    Ok(tracker.finish(f, iters, cfg.tol_gap))
}

/// `min_x max_y sum_t L_t(x, y)` via [`solve_saddle`] on the folded sum.
pub fn hindsight_value(history: &[PayoffFunction], x_set: &FeasibleSet, y_set: &FeasibleSet, cfg: &SolverConfig) -> Result<f64> {
    let first = history
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty history".into()))?;
    let (dx, dy) = first.dims();
    let sum = PayoffSum::from_payoffs(dx, dy, history)?;
    Ok(solve_saddle(&sum, x_set, y_set, cfg)?.value)
}

/// Three-phase grid refinement (spacings 1e-2, 1e-4, 1e-6) of
/// `min_x max_y f` on one-dimensional intervals. Returns `(value, x, y)`.
pub fn grid_saddle_value_1d(f: &dyn Payoff, x_set: &FeasibleSet, y_set: &FeasibleSet) -> Result<(f64, f64, f64)> {
    let (xl, xu) = interval(x_set)?;
    let (yl, yu) = interval(y_set)?;
    let inner = |x: f64| refine_1d(yl, yu, |y| -f.value(&[x], &[y]));
    let (xs, _) = refine_1d(xl, xu, |x| {
        let (y, _) = inner(x);
        f.value(&[x], &[y])
    });
    let (ys, _) = inner(xs);
    Ok((f.value(&[xs], &[ys]), xs, ys))
}

fn interval(set: &FeasibleSet) -> Result<(f64, f64)> {
    match set.bounds() {
        Some((l, u)) if l.len() == 1 => Ok((l[0], u[0])),
        _ => Err(Error::InvalidParameter("grid oracle needs a 1-D interval".into())),
    }
}

/// Minimizes a unimodal `phi` over `[lo, hi]` on successively finer grids.
pub fn refine_1d<F: Fn(f64) -> f64>(lo: f64, hi: f64, phi: F) -> (f64, f64) {
    let mut best = (lo, phi(lo));
    let (mut a, mut b) = (lo, hi);
    for h in [1e-2, 1e-4, 1e-6] {
        let n = ((b - a) / h).ceil() as usize;
        for i in 0..=n {
            let v = (a + i as f64 * h).min(b);
            let fv = phi(v);
            if fv < best.1 {
                best = (v, fv);
            }
        }
        a = (best.0 - h).max(lo);
        b = (best.0 + h).min(hi);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payoffs::{make_bilinear, make_quadratic_bilinear, Norm};
    use crate::linalg::Matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn box10() -> FeasibleSet {
        FeasibleSet::boxed(vec![-10.0], vec![10.0]).unwrap()
    }

    #[test]
    fn decoupled_quadratic_saddle_at_origin() {
        let f = make_quadratic_bilinear(0.0, 1.0, 0.0, 0.0, (-10.0, 10.0), (-10.0, 10.0)).unwrap();
        let s = solve_saddle(f.as_ref(), &box10(), &box10(), &SolverConfig::default()).unwrap();
        assert!(s.x_star[0].abs() < 1e-6 && s.y_star[0].abs() < 1e-6);
        assert!(s.value.abs() < 1e-10);
        assert!(s.gap <= 1e-8);
    }

    #[test]
    fn coupled_quadratic_saddle_matches_stationarity() {
        // y + (x - 2) = 0 and x - (y + 1) = 0 give (1.5, 0.5) with value -0.25.
        let f = make_quadratic_bilinear(1.0, 1.0, 2.0, -1.0, (-10.0, 10.0), (-10.0, 10.0)).unwrap();
        let s = solve_saddle(f.as_ref(), &box10(), &box10(), &SolverConfig::default()).unwrap();
        assert!(s.converged);
        assert!((s.x_star[0] - 1.5).abs() < 1e-4);
        assert!((s.y_star[0] - 0.5).abs() < 1e-4);
        assert!((s.value + 0.25).abs() < 1e-8);
        let (gv, gx, gy) = grid_saddle_value_1d(f.as_ref(), &box10(), &box10()).unwrap();
        assert!((gv + 0.25).abs() < 1e-8 && (gx - 1.5).abs() < 1e-5 && (gy - 0.5).abs() < 1e-5);
    }

    #[test]
    fn kkt_conditions_hold_at_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let set = FeasibleSet::cube(1, -1.0, 1.0).unwrap();
        for _ in 0..20 {
            let a = rng.gen_range(-3.0..3.0);
            let p = rng.gen_range(-3.0..3.0);
            let q = rng.gen_range(-3.0..3.0);
            let f = make_quadratic_bilinear(a, 0.5, p, q, (-1.0, 1.0), (-1.0, 1.0)).unwrap();
            let cfg = SolverConfig::default();
            let s = solve_saddle(f.as_ref(), &set, &set, &cfg).unwrap();
            assert!(s.gap <= cfg.tol_gap);
            let tol_kkt = 10.0 * cfg.tol_gap * set.diameter();
            let gx = f.grad_x(&s.x_star, &s.y_star);
            let gy = f.grad_y(&s.x_star, &s.y_star);
            for _ in 0..100 {
                let u = set.sample(&mut rng);
                let v = set.sample(&mut rng);
                assert!(gx[0] * (u[0] - s.x_star[0]) >= -tol_kkt);
                assert!(gy[0] * (v[0] - s.y_star[0]) <= tol_kkt);
            }
        }
    }

    #[test]
    fn gap_of_matching_pennies_at_pure_strategies() {
        let f = make_bilinear(Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]), Norm::L1).unwrap();
        let s2 = FeasibleSet::simplex(2).unwrap();
        let g = gap_estimate(f.as_ref(), &s2, &s2, &[1.0, 0.0], &[1.0, 0.0], &SolverConfig::default()).unwrap();
        assert!((g - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gap_on_singletons_is_zero() {
        let f = make_bilinear(Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]), Norm::L1).unwrap();
        let p = FeasibleSet::restricted_simplex(2, 0.5).unwrap();
        let g = gap_estimate(f.as_ref(), &p, &p, &[0.5, 0.5], &[0.5, 0.5], &SolverConfig::default()).unwrap();
        assert_eq!(g, 0.0);
        let s = solve_saddle(f.as_ref(), &p, &p, &SolverConfig::default()).unwrap();
        assert_eq!(s.gap, 0.0);
    }

    #[test]
    fn infeasible_warm_start_is_rejected() {
        let f = make_quadratic_bilinear(1.0, 1.0, 0.0, 0.0, (-1.0, 1.0), (-1.0, 1.0)).unwrap();
        let b = FeasibleSet::cube(1, -1.0, 1.0).unwrap();
        let cfg = SolverConfig::default().with_warm_start(vec![2.0], vec![0.0]);
        assert!(matches!(
            solve_saddle(f.as_ref(), &b, &b, &cfg),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn warm_start_does_not_increase_iterations() {
        let f = make_quadratic_bilinear(1.0, 1.0, 2.0, -1.0, (-10.0, 10.0), (-10.0, 10.0)).unwrap();
        let cold = solve_saddle(f.as_ref(), &box10(), &box10(), &SolverConfig::default()).unwrap();
        let warm_cfg = SolverConfig::default().with_warm_start(cold.x_star.clone(), cold.y_star.clone());
        let warm = solve_saddle(f.as_ref(), &box10(), &box10(), &warm_cfg).unwrap();
        assert!(warm.iterations <= cold.iterations);
        let again_cfg = SolverConfig::default().with_warm_start(warm.x_star.clone(), warm.y_star.clone());
        let again = solve_saddle(f.as_ref(), &box10(), &box10(), &again_cfg).unwrap();
        assert!(again.iterations <= warm.iterations);
    }

    #[test]
    fn separable_minimizer_on_restricted_simplex_matches_projection() {
        // a = 1/2, b = -z gives the Euclidean projection of z.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let d = rng.gen_range(2..7);
            let theta = rng.gen_range(0.0..1.0) / d as f64;
            let set = FeasibleSet::restricted_simplex(d, theta).unwrap();
            let z: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let b: Vec<f64> = z.iter().map(|v| -v).collect();
            let got = argmin_separable(&set, &vec![0.5; d], &b, 0.0).unwrap();
            let want = set.project(&z).unwrap();
            assert!(dist2(&got, &want) < 1e-12, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn separable_minimizer_with_entropy_satisfies_kkt() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let d = rng.gen_range(2..6);
            let theta = rng.gen_range(0.0..0.5) / d as f64;
            let set = FeasibleSet::restricted_simplex(d, theta).unwrap();
            let a: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..2.0)).collect();
            let b: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let w = rng.gen_range(0.1..2.0);
            let z = argmin_separable(&set, &a, &b, w).unwrap();
            assert!(set.contains(&z, 1e-9).unwrap());
            let obj = |z: &[f64]| -> f64 {
                (0..d).map(|k| a[k] * z[k] * z[k] + b[k] * z[k] + w * z[k] * z[k].ln()).sum()
            };
            for _ in 0..200 {
                let p = set.sample(&mut rng);
                assert!(obj(&z) <= obj(&p) + 1e-9);
            }
        }
    }
}
