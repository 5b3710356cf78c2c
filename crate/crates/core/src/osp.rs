//! Online algorithms over general convex compact sets: SP-FTL, SP-RFTL and the
//! OGDA baseline. Each owns its state and exposes the action for the next round.

use crate::error::{check_dim, Error, Result};
use crate::geometry::FeasibleSet;
use crate::linalg::axpy;
use crate::payoffs::{regularize, Payoff, PayoffFunction, PayoffSum, Regularizer};
use crate::solver::{solve_saddle, SolverConfig};

/// Joint online decision maker: plays `(x_t, y_t)`, then observes `L_t`.
pub trait OnlineAlgorithm: Send {
    fn name(&self) -> &'static str;
    /// Action for the upcoming round.
    fn current(&self) -> (&[f64], &[f64]);
    /// Observes the payoff of the round just played and moves on.
    fn observe(&mut self, payoff: &PayoffFunction) -> Result<()>;
    /// Duality gap certified by the last inner solve (0 for projection methods).
    fn last_gap(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpFtlConfig {
    pub solver: SolverConfig,
    /// Reject observations with `strong_h = 0`. Disabled only for sequences
    /// whose running sums still have a unique saddle (e.g. 2x2 matrix games).
    pub require_strong: bool,
}

impl Default for SpFtlConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            require_strong: true,
        }
    }
}

/// Plays the saddle point of the running sum of observed payoffs.
#[derive(Debug, Clone)]
pub struct SpFtl {
    cfg: SpFtlConfig,
    sum: PayoffSum,
    x_set: FeasibleSet,
    y_set: FeasibleSet,
    x: Vec<f64>,
    y: Vec<f64>,
    round: usize,
    last_gap: f64,
    last_iterations: usize,
}

impl SpFtl {
    pub fn new(x_set: FeasibleSet, y_set: FeasibleSet, cfg: SpFtlConfig) -> Result<Self> {
        cfg.solver.validate()?;
        Ok(Self {
            sum: PayoffSum::new(x_set.dim(), y_set.dim()),
            x: x_set.center(),
            y: y_set.center(),
            x_set,
            y_set,
            cfg,
            round: 0,
            last_gap: 0.0,
            last_iterations: 0,
        })
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn running_sum(&self) -> &PayoffSum {
        &self.sum
    }

    pub fn last_iterations(&self) -> usize {
        self.last_iterations
    }

    /// Appends `observed` and moves to the saddle of the running sum.
    pub fn step(&mut self, observed: &PayoffFunction) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.cfg.require_strong && !(observed.strong_h() > 0.0) {
            return Err(Error::InvalidParameter(
                "SP-FTL needs strongly convex-concave payoffs; use SP-RFTL".into(),
            ));
        }
        self.sum.push(observed)?;
        self.round += 1;
        let cfg = self
            .cfg
            .solver
            .clone()
            .with_warm_start(self.x.clone(), self.y.clone());
        let sol = solve_saddle(&self.sum, &self.x_set, &self.y_set, &cfg)?;
        self.last_gap = sol.gap;
        self.last_iterations = sol.iterations;
        self.x = sol.x_star;
        self.y = sol.y_star;
        Ok((self.x.clone(), self.y.clone()))
    }
}

impl OnlineAlgorithm for SpFtl {
    fn name(&self) -> &'static str {
        "sp-ftl"
    }
    fn current(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.y)
    }
    fn observe(&mut self, payoff: &PayoffFunction) -> Result<()> {
        self.step(payoff).map(|_| ())
    }
    fn last_gap(&self) -> f64 {
        self.last_gap
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpRftlConfig {
    pub eta: f64,
    pub reg_x: Regularizer,
    pub reg_y: Regularizer,
    pub solver: SolverConfig,
}

impl SpRftlConfig {
    /// Squared-norm regularizers with `eta = D sqrt(T) / (G sqrt(ln T))`, where
    /// `D` bounds the norm of feasible points of both players.
    pub fn corollary_defaults(x_set: &FeasibleSet, y_set: &FeasibleSet, horizon: usize, g: f64) -> Self {
        let t = (horizon.max(2)) as f64;
        let d = x_set.radius().max(y_set.radius());
        Self {
            eta: d * t.sqrt() / (g * t.ln().sqrt()),
            reg_x: Regularizer::squared_norm(x_set),
            reg_y: Regularizer::squared_norm(y_set),
            solver: SolverConfig::default(),
        }
    }
}

/// SP-FTL on `L_t + (1/eta)(R_x - R_y)`.
#[derive(Debug, Clone)]
pub struct SpRftl {
    inner: SpFtl,
    reg_x: Regularizer,
    reg_y: Regularizer,
    eta: f64,
}

impl SpRftl {
    pub fn new(x_set: FeasibleSet, y_set: FeasibleSet, cfg: SpRftlConfig) -> Result<Self> {
        if !(cfg.eta > 0.0) {
            return Err(Error::InvalidParameter("eta must be positive".into()));
        }
        check_dim(x_set.dim(), cfg.reg_x.dim)?;
        check_dim(y_set.dim(), cfg.reg_y.dim)?;
        let inner = SpFtl::new(
            x_set,
            y_set,
            SpFtlConfig {
                solver: cfg.solver,
                require_strong: true,
            },
        )?;
        Ok(Self {
            inner,
            reg_x: cfg.reg_x,
            reg_y: cfg.reg_y,
            eta: cfg.eta,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn step(&mut self, observed: &PayoffFunction) -> Result<(Vec<f64>, Vec<f64>)> {
        let wrapped = regularize(observed.clone(), self.reg_x, self.reg_y, 1.0 / self.eta)?;
        self.inner.step(&wrapped)
    }
}

impl OnlineAlgorithm for SpRftl {
    fn name(&self) -> &'static str {
        "sp-rftl"
    }
    fn current(&self) -> (&[f64], &[f64]) {
        self.inner.current()
    }
    fn observe(&mut self, payoff: &PayoffFunction) -> Result<()> {
        self.step(payoff).map(|_| ())
    }
    fn last_gap(&self) -> f64 {
        self.inner.last_gap
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// `eta_t = c / t`
    Diminishing(f64),
    /// `eta_t = c / sqrt(t)`
    InvSqrt(f64),
    Constant(f64),
}

impl StepSchedule {
    pub fn at(&self, t: usize) -> f64 {
        let t = t.max(1) as f64;
        match *self {
            StepSchedule::Diminishing(c) => c / t,
            StepSchedule::InvSqrt(c) => c / t.sqrt(),
            StepSchedule::Constant(eta) => eta,
        }
    }

    fn validate(&self) -> Result<()> {
        let v = match *self {
            StepSchedule::Diminishing(c) | StepSchedule::InvSqrt(c) | StepSchedule::Constant(c) => c,
        };
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter("step sizes must be positive".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OgdaConfig {
    pub schedule: StepSchedule,
}

/// Simultaneous projected gradient descent (x) and ascent (y).
#[derive(Debug, Clone)]
pub struct Ogda {
    cfg: OgdaConfig,
    x_set: FeasibleSet,
    y_set: FeasibleSet,
    x: Vec<f64>,
    y: Vec<f64>,
    round: usize,
}

impl Ogda {
    pub fn new(x_set: FeasibleSet, y_set: FeasibleSet, cfg: OgdaConfig) -> Result<Self> {
        cfg.schedule.validate()?;
        Ok(Self {
            x: x_set.center(),
            y: y_set.center(),
            x_set,
            y_set,
            cfg,
            round: 0,
        })
    }

    /// Starts from a given feasible pair instead of the projection of the origin.
    pub fn with_start(mut self, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if !self.x_set.contains(&x, crate::geometry::MEMBERSHIP_TOL)?
            || !self.y_set.contains(&y, crate::geometry::MEMBERSHIP_TOL)?
        {
            return Err(Error::Infeasible("OGDA start outside the sets".into()));
        }
        self.x = x;
        self.y = y;
        Ok(self)
    }

    pub fn step(&mut self, observed: &dyn Payoff) -> Result<(Vec<f64>, Vec<f64>)> {
        self.round += 1;
        let eta = self.cfg.schedule.at(self.round);
        let gx = observed.grad_x(&self.x, &self.y);
        let gy = observed.grad_y(&self.x, &self.y);
        if !crate::linalg::all_finite(&gx) || !crate::linalg::all_finite(&gy) {
            return Err(Error::NonFinite("OGDA gradient".into()));
        }
        self.x = self.x_set.project(&axpy(&self.x, -eta, &gx))?;
        self.y = self.y_set.project(&axpy(&self.y, eta, &gy))?;
        Ok((self.x.clone(), self.y.clone()))
    }
}

impl OnlineAlgorithm for Ogda {
    fn name(&self) -> &'static str {
        "ogda"
    }
    fn current(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.y)
    }
    fn observe(&mut self, payoff: &PayoffFunction) -> Result<()> {
        self.step(payoff.as_ref()).map(|_| ())
    }
}
