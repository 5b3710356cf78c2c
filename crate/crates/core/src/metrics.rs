//! Round traces and regret metrics: saddle-point regret against the
//! hindsight min-max value and the two individual regrets.

use crate::error::{check_dim, Error, Result};
use crate::geometry::{FeasibleSet, MEMBERSHIP_TOL};
use crate::payoffs::{Norm, Payoff, PayoffFunction, PayoffSum, Terms};
use crate::solver::{best_response_x, best_response_y, solve_saddle, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct BanditObservation {
    pub i: usize,
    pub j: usize,
    pub entry: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackObservation {
    /// `r_t(x_t)`, whether or not it was collected.
    pub reward: f64,
    pub collected: f64,
    pub consumption: Vec<f64>,
    pub cumulative_consumption: Vec<f64>,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub t: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `L_t(x_t, y_t)`
    pub payoff_value: f64,
    /// `L_t(x_{t+1}, y_{t+1})`, the payoff evaluated at the next iterate.
    pub next_value: Option<f64>,
    /// Duality gap reported by the inner solver for the next iterate.
    pub solver_gap: Option<f64>,
    pub bandit: Option<BanditObservation>,
    pub knapsack: Option<KnapsackObservation>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoundTrace {
    pub records: Vec<RoundRecord>,
}

impl RoundTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, r: RoundRecord) {
        self.records.push(r);
    }

    pub fn cumulative_payoff(&self) -> f64 {
        self.records.iter().map(|r| r.payoff_value).sum()
    }

    /// Every recorded action lies in its set.
    pub fn check_feasible(&self, x_set: &FeasibleSet, y_set: &FeasibleSet) -> Result<bool> {
        for r in &self.records {
            if !x_set.contains(&r.x, MEMBERSHIP_TOL)? || !y_set.contains(&r.y, MEMBERSHIP_TOL)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `sum_t |x_t - x_{t+1}|` and the same for `y`, in the given norm, over
    /// consecutive recorded actions.
    pub fn movement(&self, norm: Norm) -> (f64, f64) {
        let d = |a: &[f64], b: &[f64]| -> f64 {
            let diff = crate::linalg::sub(a, b);
            match norm {
                Norm::L1 => crate::linalg::norm1(&diff),
                Norm::L2 => crate::linalg::norm2(&diff),
            }
        };
        self.records.windows(2).fold((0.0, 0.0), |(mx, my), w| {
            (mx + d(&w[0].x, &w[1].x), my + d(&w[0].y, &w[1].y))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport {
    pub rounds: usize,
    pub cumulative_payoff: f64,
    pub hindsight_value: f64,
    /// Certified duality gap of the hindsight solve.
    pub hindsight_gap: f64,
    pub hindsight_saddle: (Vec<f64>, Vec<f64>),
    pub sp_regret: f64,
    pub ind_regret_x: f64,
    pub ind_regret_y: f64,
}

/// One row of the cumulative series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub t: usize,
    pub cum_payoff: f64,
    pub cum_sp_regret: f64,
    pub cum_ind_x: f64,
    pub cum_ind_y: f64,
}

/// Running separable quadratic `sum a z^2 + b z + c` (no entropy).
#[derive(Debug, Clone)]
struct SeparableSum {
    a: Vec<f64>,
    b: Vec<f64>,
    c: f64,
}

impl SeparableSum {
    fn new(d: usize) -> Self {
        Self {
            a: vec![0.0; d],
            b: vec![0.0; d],
            c: 0.0,
        }
    }

    fn add(&mut self, a: &[f64], b: &[f64], c: f64) {
        for (s, v) in self.a.iter_mut().zip(a) {
            *s += v;
        }
        for (s, v) in self.b.iter_mut().zip(b) {
            *s += v;
        }
        self.c += c;
    }

    fn value(&self, z: &[f64]) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .zip(z)
            .map(|((a, b), v)| a * v * v + b * v)
            .sum::<f64>()
            + self.c
    }

    fn minimize(&self, set: &FeasibleSet) -> Result<f64> {
        let z = crate::solver::argmin_separable(set, &self.a, &self.b, 0.0)?;
        Ok(self.value(&z))
    }
}

/// `sum_t L_t(., y_t)` (or `L_t(x_t, .)`) for payoffs without closed form.
#[derive(Debug)]
struct OneSided {
    items: Vec<(PayoffFunction, Vec<f64>)>,
    fix_y: bool,
    dim: usize,
    other_dim: usize,
}

impl Payoff for OneSided {
    fn dims(&self) -> (usize, usize) {
        if self.fix_y {
            (self.dim, self.other_dim)
        } else {
            (self.other_dim, self.dim)
        }
    }
    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        self.items
            .iter()
            .map(|(f, fixed)| if self.fix_y { f.value(x, fixed) } else { f.value(fixed, y) })
            .sum()
    }
    fn grad_x(&self, x: &[f64], _y: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        if self.fix_y {
            for (f, fixed) in &self.items {
                for (gi, v) in g.iter_mut().zip(f.grad_x(x, fixed)) {
                    *gi += v;
                }
            }
        }
        g
    }
    fn grad_y(&self, _x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; y.len()];
        if !self.fix_y {
            for (f, fixed) in &self.items {
                for (gi, v) in g.iter_mut().zip(f.grad_y(fixed, y)) {
                    *gi += v;
                }
            }
        }
        g
    }
    fn lipschitz(&self) -> f64 {
        self.items.iter().map(|(f, _)| f.lipschitz()).sum()
    }
    fn strong_h(&self) -> f64 {
        0.0
    }
    fn norm(&self) -> Norm {
        Norm::L2
    }
}

fn closed_form(f: &dyn Payoff) -> Option<&Terms> {
    f.terms().filter(|t| t.entropy_x == 0.0 && t.entropy_y == 0.0)
}

/// Streaming regret bookkeeping: folds each round into the hindsight sum and
/// the two one-sided sums, so snapshots cost one solve each.
#[derive(Debug, Clone)]
pub struct RegretAccumulator {
    x_set: FeasibleSet,
    y_set: FeasibleSet,
    sum: PayoffSum,
    ind_x: SeparableSum,
    ind_y: SeparableSum,
    opaque_x: Vec<(PayoffFunction, Vec<f64>)>,
    opaque_y: Vec<(PayoffFunction, Vec<f64>)>,
    cumulative_payoff: f64,
    rounds: usize,
    warm: Option<(Vec<f64>, Vec<f64>)>,
}

impl RegretAccumulator {
    pub fn new(x_set: FeasibleSet, y_set: FeasibleSet) -> Self {
        let (dx, dy) = (x_set.dim(), y_set.dim());
        Self {
            sum: PayoffSum::new(dx, dy),
            ind_x: SeparableSum::new(dx),
            ind_y: SeparableSum::new(dy),
            opaque_x: Vec::new(),
            opaque_y: Vec::new(),
            cumulative_payoff: 0.0,
            rounds: 0,
            warm: None,
            x_set,
            y_set,
        }
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn cumulative_payoff(&self) -> f64 {
        self.cumulative_payoff
    }

    pub fn sum(&self) -> &PayoffSum {
        &self.sum
    }

    /// Records round `t`: the payoff and the actions played against it.
    /// Returns `L_t(x_t, y_t)`.
    pub fn push(&mut self, f: &PayoffFunction, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim(self.x_set.dim(), x.len())?;
        check_dim(self.y_set.dim(), y.len())?;
        let v = f.value(x, y);
        if !v.is_finite() {
            return Err(Error::NonFinite("payoff value".into()));
        }
        self.sum.push(f)?;
        match closed_form(f.as_ref()) {
            Some(t) => {
                let zx = vec![0.0; x.len()];
                let zy = vec![0.0; y.len()];
                let (a, b) = t.x_coefficients(y);
                self.ind_x.add(&a, &b, t.value(&zx, y));
                let (a, b) = t.y_coefficients(x);
                self.ind_y.add(&a, &b, -t.value(x, &zy));
            }
            None => {
                self.opaque_x.push((f.clone(), y.to_vec()));
                self.opaque_y.push((f.clone(), x.to_vec()));
            }
        }
        self.cumulative_payoff += v;
        self.rounds += 1;
        Ok(v)
    }

    /// `min_x sum_t L_t(x, y_t)`
    pub fn best_fixed_x_value(&self, cfg: &SolverConfig) -> Result<f64> {
        let mut v = self.ind_x.minimize(&self.x_set)?;
        if !self.opaque_x.is_empty() {
            let f = OneSided {
                items: self.opaque_x.clone(),
                fix_y: true,
                dim: self.x_set.dim(),
                other_dim: self.y_set.dim(),
            };
            let yc = self.y_set.center();
            let x = best_response_x(&f, &self.x_set, &yc, &self.x_set.center(), cfg)?;
            v += f.value(&x, &yc);
        }
        Ok(v)
    }

    /// `max_y sum_t L_t(x_t, y)`
    pub fn best_fixed_y_value(&self, cfg: &SolverConfig) -> Result<f64> {
        let mut v = -self.ind_y.minimize(&self.y_set)?;
        if !self.opaque_y.is_empty() {
            let f = OneSided {
                items: self.opaque_y.clone(),
                fix_y: false,
                dim: self.y_set.dim(),
                other_dim: self.x_set.dim(),
            };
            let xc = self.x_set.center();
            let y = best_response_y(&f, &self.y_set, &xc, &self.y_set.center(), cfg)?;
            v += f.value(&xc, &y);
        }
        Ok(v)
    }

    /// Solves the hindsight problem for the rounds seen so far, warm-started
    /// from the previous snapshot or from `warm`.
    pub fn snapshot(&mut self, cfg: &SolverConfig, warm: Option<(Vec<f64>, Vec<f64>)>) -> Result<RegretReport> {
        if self.rounds == 0 {
            return Err(Error::InvalidParameter("no rounds recorded".into()));
        }
        let mut solve_cfg = cfg.clone();
        solve_cfg.warm_start = warm.or_else(|| self.warm.clone());
        let sol = solve_saddle(&self.sum, &self.x_set, &self.y_set, &solve_cfg)?;
        self.warm = Some((sol.x_star.clone(), sol.y_star.clone()));
        let min_x = self.best_fixed_x_value(cfg)?;
        let max_y = self.best_fixed_y_value(cfg)?;
        let p = self.cumulative_payoff;
        Ok(RegretReport {
            rounds: self.rounds,
            cumulative_payoff: p,
            hindsight_value: sol.value,
            hindsight_gap: sol.gap,
            hindsight_saddle: (sol.x_star, sol.y_star),
            sp_regret: (p - sol.value).abs(),
            ind_regret_x: p - min_x,
            ind_regret_y: max_y - p,
        })
    }
}

fn accumulate(trace: &RoundTrace, history: &[PayoffFunction], x_set: &FeasibleSet, y_set: &FeasibleSet) -> Result<RegretAccumulator> {
    check_dim(trace.len(), history.len())?;
    let mut acc = RegretAccumulator::new(x_set.clone(), y_set.clone());
    for (r, f) in trace.records.iter().zip(history) {
        acc.push(f, &r.x, &r.y)?;
    }
    Ok(acc)
}

/// `|sum_t L_t(x_t, y_t) - min_x max_y sum_t L_t(x, y)|`
pub fn compute_sp_regret(trace: &RoundTrace, history: &[PayoffFunction], x_set: &FeasibleSet, y_set: &FeasibleSet, cfg: &SolverConfig) -> Result<f64> {
    Ok(accumulate(trace, history, x_set, y_set)?.snapshot(cfg, None)?.sp_regret)
}

/// `(sum L_t(x_t,y_t) - min_x sum L_t(x,y_t), max_y sum L_t(x_t,y) - sum L_t(x_t,y_t))`
pub fn compute_individual_regrets(trace: &RoundTrace, history: &[PayoffFunction], x_set: &FeasibleSet, y_set: &FeasibleSet, cfg: &SolverConfig) -> Result<(f64, f64)> {
    let acc = accumulate(trace, history, x_set, y_set)?;
    let p = acc.cumulative_payoff();
    Ok((p - acc.best_fixed_x_value(cfg)?, acc.best_fixed_y_value(cfg)? - p))
}

/// Full report for a finished trace.
pub fn compute_report(trace: &RoundTrace, history: &[PayoffFunction], x_set: &FeasibleSet, y_set: &FeasibleSet, cfg: &SolverConfig) -> Result<RegretReport> {
    accumulate(trace, history, x_set, y_set)?.snapshot(cfg, None)
}

/// Checkpoint rounds for a series of about `points` entries ending at `horizon`.
pub fn checkpoints(horizon: usize, points: usize) -> Vec<usize> {
    if points == 0 || horizon == 0 {
        return Vec::new();
    }
    if horizon <= points {
        return (1..=horizon).collect();
    }
    let mut out: Vec<usize> = (1..=points)
        .map(|k| ((k as f64) * horizon as f64 / points as f64).round() as usize)
        .filter(|t| *t >= 1)
        .collect();
    out.dedup();
    out
}

/// Sample mean and standard error (sample standard deviation over `sqrt(n)`).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payoffs::make_quadratic_bilinear;
    use std::sync::Arc;

    fn unit_box() -> FeasibleSet {
        FeasibleSet::cube(1, -1.0, 1.0).unwrap()
    }

    fn record(t: usize, x: f64, y: f64, v: f64) -> RoundRecord {
        RoundRecord {
            t,
            x: vec![x],
            y: vec![y],
            payoff_value: v,
            next_value: None,
            solver_gap: None,
            bandit: None,
            knapsack: None,
        }
    }

    #[test]
    fn single_round_bilinear_individual_regrets() {
        let f = make_quadratic_bilinear(1.0, 0.0, 0.0, 0.0, (-1.0, 1.0), (-1.0, 1.0)).unwrap();
        let trace = RoundTrace {
            records: vec![record(1, 1.0, 1.0, 1.0)],
        };
        let (ix, iy) =
            compute_individual_regrets(&trace, &[f], &unit_box(), &unit_box(), &SolverConfig::default()).unwrap();
        assert!((ix - 2.0).abs() < 1e-12);
        assert!(iy.abs() < 1e-12);
    }

    #[test]
    fn constant_play_against_stationary_quadratic() {
        let b = FeasibleSet::cube(1, -10.0, 10.0).unwrap();
        let f = make_quadratic_bilinear(1.0, 1.0, 2.0, -1.0, (-10.0, 10.0), (-10.0, 10.0)).unwrap();
        let t = 20;
        let history = vec![f.clone(); t];
        let trace = RoundTrace {
            records: (1..=t).map(|k| record(k, 0.0, 0.0, f.value(&[0.0], &[0.0]))).collect(),
        };
        let cfg = SolverConfig::default();
        let r = compute_sp_regret(&trace, &history, &b, &b, &cfg).unwrap();
        // L(0,0) = 2 - 1/2 = 1.5 against the saddle value -0.25 per round.
        assert!((r - 1.75 * t as f64).abs() < 1e-6 * t as f64);
    }

    #[test]
    fn saddle_play_has_no_regret() {
        let b = FeasibleSet::cube(1, -10.0, 10.0).unwrap();
        let f = make_quadratic_bilinear(1.0, 1.0, 2.0, -1.0, (-10.0, 10.0), (-10.0, 10.0)).unwrap();
        let t = 30;
        let v = f.value(&[1.5], &[0.5]);
        let trace = RoundTrace {
            records: (1..=t).map(|k| record(k, 1.5, 0.5, v)).collect(),
        };
        let history = vec![f; t];
        let cfg = SolverConfig::default();
        let rep = compute_report(&trace, &history, &b, &b, &cfg).unwrap();
        let slack = t as f64 * cfg.tol_gap;
        assert!(rep.sp_regret <= slack);
        assert!(rep.ind_regret_x <= slack && rep.ind_regret_y <= slack);
    }

    #[test]
    fn uniform_play_on_first_impossibility_scenario() {
        let s = FeasibleSet::simplex(2).unwrap();
        let pennies = crate::scenarios::matching_pennies();
        let zero = crate::linalg::Matrix::zeros(2, 2);
        let mut history = Vec::new();
        let mut trace = RoundTrace::default();
        for t in 1..=10 {
            let m = if t <= 5 { pennies.clone() } else { zero.clone() };
            let f = crate::payoffs::make_bilinear(m, Norm::L2).unwrap();
            let u = vec![0.5, 0.5];
            trace.push(RoundRecord {
                t,
                x: u.clone(),
                y: u.clone(),
                payoff_value: f.value(&u, &u),
                next_value: None,
                solver_gap: None,
                bandit: None,
                knapsack: None,
            });
            history.push(f);
        }
        let r = compute_sp_regret(&trace, &history, &s, &s, &SolverConfig::default()).unwrap();
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn opaque_payoffs_match_closed_form() {
        let f = make_quadratic_bilinear(0.7, 1.0, 0.3, -0.2, (-1.0, 1.0), (-1.0, 1.0)).unwrap();
        let g = f.clone();
        let opaque: PayoffFunction = Arc::new(crate::payoffs::CustomPayoff {
            dims: (1, 1),
            value: Box::new(move |x, y| g.value(x, y)),
            grad_x: {
                let g = f.clone();
                Box::new(move |x, y| g.grad_x(x, y))
            },
            grad_y: {
                let g = f.clone();
                Box::new(move |x, y| g.grad_y(x, y))
            },
            lipschitz: f.lipschitz(),
            strong_h: 1.0,
            norm: Norm::L2,
        });
        let trace = RoundTrace {
            records: vec![record(1, 0.4, -0.9, f.value(&[0.4], &[-0.9]))],
        };
        let cfg = SolverConfig::default();
        let a = compute_individual_regrets(&trace, &[f], &unit_box(), &unit_box(), &cfg).unwrap();
        let b = compute_individual_regrets(&trace, &[opaque], &unit_box(), &unit_box(), &cfg).unwrap();
        assert!((a.0 - b.0).abs() < 1e-6 && (a.1 - b.1).abs() < 1e-6, "{a:?} {b:?}");
    }

    #[test]
    fn checkpoint_grid() {
        assert_eq!(checkpoints(5, 10), vec![1, 2, 3, 4, 5]);
        let c = checkpoints(10_000, 500);
        assert_eq!(c.len(), 500);
        assert_eq!(*c.last().unwrap(), 10_000);
        assert!(c.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn standard_error() {
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
