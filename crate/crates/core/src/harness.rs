//! Seeded experiment runner: pairs a scenario with an algorithm, plays every
//! round, and reports regrets, per-round diagnostics and resolved parameters.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::FeasibleSet;
use crate::knapsack::{
    benchmark_r_star, check_accounting, knapsack_regret, rftl_bound, theorem7_h, AccountingCheck,
    KnapsackInstance, KnapsackState, PdRftl, PdRftlConfig, SpFtlKnapsack,
};
use crate::matrix_games::{BanditConfig, BanditOmg, OmgConfig, OmgRftl};
use crate::metrics::{
    checkpoints, mean_stderr, BanditObservation, KnapsackObservation, RegretAccumulator,
    RegretReport, RoundRecord, RoundTrace, SeriesPoint,
};
use crate::osp::{
    Ogda, OgdaConfig, OnlineAlgorithm, SpFtl, SpFtlConfig, SpRftl, SpRftlConfig, StepSchedule,
};
use crate::payoffs::PayoffFunction;
use crate::scenarios::ScenarioSpec;
use crate::solver::SolverConfig;

/// Algorithm tag plus optional overrides; `None` means the theorem default.
#[derive(Debug, Clone, PartialEq)]
pub enum AlgorithmSpec {
    SpFtl { require_strong: Option<bool>, tol_gap: f64 },
    SpRftl { eta: Option<f64> },
    Ogda { schedule: Option<StepSchedule> },
    OmgRftl { eta: Option<f64>, theta: Option<f64> },
    BanditOmg { eta: Option<f64>, delta: Option<f64> },
    PdRftl { eta1: Option<f64>, eta2: Option<f64> },
    SpFtlKnapsack { h: Option<f64> },
}

pub const ALGORITHM_IDS: [&str; 7] = [
    "sp-ftl",
    "sp-rftl",
    "ogda",
    "omg-rftl",
    "bandit-omg-rftl",
    "pd-rftl",
    "sp-ftl-knapsack",
];

impl AlgorithmSpec {
    pub fn id(&self) -> &'static str {
        match self {
            Self::SpFtl { .. } => "sp-ftl",
            Self::SpRftl { .. } => "sp-rftl",
            Self::Ogda { .. } => "ogda",
            Self::OmgRftl { .. } => "omg-rftl",
            Self::BanditOmg { .. } => "bandit-omg-rftl",
            Self::PdRftl { .. } => "pd-rftl",
            Self::SpFtlKnapsack { .. } => "sp-ftl-knapsack",
        }
    }

    /// The tag with every parameter at its default.
    pub fn default_for(id: &str) -> Option<Self> {
        Some(match id {
            "sp-ftl" => Self::SpFtl {
                require_strong: None,
                tol_gap: SolverConfig::default().tol_gap,
            },
            "sp-rftl" => Self::SpRftl { eta: None },
            "ogda" => Self::Ogda { schedule: None },
            "omg-rftl" => Self::OmgRftl { eta: None, theta: None },
            "bandit-omg-rftl" => Self::BanditOmg { eta: None, delta: None },
            "pd-rftl" => Self::PdRftl { eta1: None, eta2: None },
            "sp-ftl-knapsack" => Self::SpFtlKnapsack { h: None },
            _ => return None,
        })
    }

    fn check_pairing(&self, spec: &ScenarioSpec) -> Result<()> {
        let kind = &spec.kind;
        let ok = match self {
            Self::OmgRftl { .. } | Self::BanditOmg { .. } => kind.is_matrix_game(),
            Self::PdRftl { .. } | Self::SpFtlKnapsack { .. } => kind.is_knapsack(),
            _ => !kind.is_knapsack(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::IncompatiblePairing(format!(
                "{} cannot run on {}",
                self.id(),
                kind.id()
            )))
        }
    }
}

/// A resolved parameter with the rule that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: f64,
    pub formula: String,
}

fn param(name: &str, value: f64, formula: &str) -> Parameter {
    Parameter {
        name: name.to_string(),
        value,
        formula: formula.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
#[derive(Default)]
pub struct RunOptions {
    /// Approximate number of series rows (0 disables the series).
    pub series_points: usize,
    /// Hindsight gap tolerance per round; `None` picks a per-scenario default.
    pub hindsight_tol_per_round: Option<f64>,
    /// Abort when an algorithm's inner saddle solve ends with a larger gap.
    pub max_round_gap: Option<f64>,
}


/// Knapsack-specific outcome of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackSummary {
    pub r_star: f64,
    pub cumulative_reward: f64,
    pub regret: f64,
    pub reward_ratio: f64,
    pub accounting: AccountingCheck,
    /// `max_y sum L_t(x_t, y) - sum L_t(x_t, y_t)`
    pub dagger: f64,
    /// `sum L_t(x_t, y_t) - min_x max_y sum L_t`
    pub ddagger: f64,
    pub hindsight_value: f64,
    pub theorem8_bound: f64,
    /// `(regret, bound)` of the primal and dual leaders (PD-RFTL only).
    pub component_regrets: Option<[(f64, f64); 2]>,
}

impl KnapsackSummary {
    /// `r* - R <= dagger + ddagger + max(0, r* + hindsight) + 1e-6 T`.
    pub fn decomposition_holds(&self, horizon: usize) -> bool {
        self.decomposition_slack(horizon) >= 0.0
    }

    /// `dagger + ddagger + max(0, r* + hindsight) + 1e-6 T - (r* - R)`; the
    /// decomposition rests on the accounting lower bound, so it can be short
    /// by the crossing round's reward.
    pub fn decomposition_slack(&self, horizon: usize) -> f64 {
        let sampling = (self.r_star + self.hindsight_value).max(0.0);
        self.dagger + self.ddagger + sampling + 1e-6 * horizon as f64 - self.regret
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub scenario: String,
    pub algorithm: String,
    pub horizon: usize,
    pub report: RegretReport,
    pub trace: RoundTrace,
    pub series: Vec<SeriesPoint>,
    /// Knapsack series extras per series row: `(cum_reward, budget fractions, violated)`.
    pub knapsack_series: Vec<(f64, Vec<f64>, bool)>,
    pub parameters: Vec<Parameter>,
    pub knapsack: Option<KnapsackSummary>,
    pub max_solver_gap: f64,
    /// Action pair after the last update, `(x_{T+1}, y_{T+1})`.
    pub final_action: (Vec<f64>, Vec<f64>),
    pub wall_ms: f64,
}

// One agent per run, so the variant sizes don't matter.
#[allow(clippy::large_enum_variant)]
enum Agent {
    Online(Box<dyn OnlineAlgorithm>),
    Omg(OmgRftl),
    Bandit(BanditOmg),
    Pd(PdRftl),
    SpKnapsack(SpFtlKnapsack),
}

impl Agent {
    fn current(&self) -> (Vec<f64>, Vec<f64>) {
        let (x, y) = match self {
            Agent::Online(a) => a.current(),
            Agent::Omg(a) => a.current(),
            Agent::Bandit(a) => a.current(),
            Agent::Pd(a) => a.current(),
            Agent::SpKnapsack(a) => a.current(),
        };
        (x.to_vec(), y.to_vec())
    }

    fn last_gap(&self) -> Option<f64> {
        match self {
            Agent::Online(a) => Some(a.last_gap()),
            Agent::Omg(a) => Some(a.last_gap()),
            Agent::Bandit(a) => Some(a.last_gap()),
            Agent::Pd(_) => None,
            Agent::SpKnapsack(a) => Some(a.last_gap()),
        }
    }
}

fn build_agent(
    spec: &ScenarioSpec,
    alg: &AlgorithmSpec,
    x_set: &FeasibleSet,
    y_set: &FeasibleSet,
    knapsack: Option<&KnapsackInstance>,
) -> Result<(Agent, Vec<Parameter>)> {
    let t = spec.horizon;
    let (d1, d2) = spec.kind.dims();
    let mut params = Vec::new();
    let agent = match alg {
        AlgorithmSpec::SpFtl { require_strong, tol_gap } => {
            let strong = require_strong.unwrap_or(spec.strong_h() > 0.0);
            params.push(param("tol_gap", *tol_gap, "config"));
            params.push(param(
                "require_strong",
                if strong { 1.0 } else { 0.0 },
                "H > 0 of the scenario",
            ));
            let cfg = SpFtlConfig {
                solver: SolverConfig::default().with_tol(*tol_gap),
                require_strong: strong,
            };
            Agent::Online(Box::new(SpFtl::new(x_set.clone(), y_set.clone(), cfg)?))
        }
        AlgorithmSpec::SpRftl { eta } => {
            let g = spec.lipschitz_bound()?;
            let mut cfg = SpRftlConfig::corollary_defaults(x_set, y_set, t, g);
            match eta {
                Some(e) => {
                    cfg.eta = *e;
                    params.push(param("eta", *e, "override"));
                }
                None => params.push(param("eta", cfg.eta, "D sqrt(T) / (G sqrt(ln T))")),
            }
            params.push(param("G", g, "scenario Lipschitz bound"));
            Agent::Online(Box::new(SpRftl::new(x_set.clone(), y_set.clone(), cfg)?))
        }
        AlgorithmSpec::Ogda { schedule } => {
            let schedule = match schedule {
                Some(s) => {
                    params.push(param("ogda_c", schedule_constant(s), "override"));
                    *s
                }
                None if spec.strong_h() > 0.0 => {
                    let c = 1.0 / spec.strong_h();
                    params.push(param("ogda_c", c, "eta_t = 1 / (H t)"));
                    StepSchedule::Diminishing(c)
                }
                None => {
                    let c = x_set.diameter().max(y_set.diameter()) / spec.lipschitz_bound()?;
                    params.push(param("ogda_c", c, "eta_t = (D / G) / sqrt(t)"));
                    StepSchedule::InvSqrt(c)
                }
            };
            Agent::Online(Box::new(Ogda::new(
                x_set.clone(),
                y_set.clone(),
                OgdaConfig { schedule },
            )?))
        }
        AlgorithmSpec::OmgRftl { eta, theta } => {
            // Entries in [-1, 1]: G = 1 in the l1 geometry.
            let mut cfg = OmgConfig::theorem_defaults(t, 1.0, d1, d2);
            if let Some(e) = eta {
                cfg.eta = *e;
            }
            if let Some(th) = theta {
                cfg.theta = *th;
                cfg.theta_clamped = false;
            }
            params.push(param(
                "eta",
                cfg.eta,
                if eta.is_some() { "override" } else { "sqrt(T) / G, G = 1" },
            ));
            params.push(param(
                "theta",
                cfg.theta,
                match (theta.is_some(), cfg.theta_clamped) {
                    (true, _) => "override",
                    (false, true) => "exp(-eta G) clamped to min(1/d) / 2",
                    (false, false) => "exp(-eta G)",
                },
            ));
            Agent::Omg(OmgRftl::new(d1, d2, cfg)?)
        }
        AlgorithmSpec::BanditOmg { eta, delta } => {
            let mut cfg = BanditConfig::theorem_defaults(t, d1, d2, spec.seed);
            if let Some(e) = eta {
                cfg.eta = *e;
            }
            if let Some(d) = delta {
                cfg.delta = *d;
                cfg.delta_clamped = false;
            }
            params.push(param(
                "eta",
                cfg.eta,
                if eta.is_some() { "override" } else { "T^(1/6)" },
            ));
            params.push(param(
                "delta",
                cfg.delta,
                match (delta.is_some(), cfg.delta_clamped) {
                    (true, _) => "override",
                    (false, true) => "T^(-1/6) clamped to min(1/d) / 2",
                    (false, false) => "T^(-1/6)",
                },
            ));
            Agent::Bandit(BanditOmg::new(d1, d2, &cfg)?)
        }
        AlgorithmSpec::PdRftl { eta1, eta2 } => {
            let inst = knapsack.expect("paired with a knapsack scenario");
            let mut cfg = PdRftlConfig::theorem_defaults(inst);
            params.push(param("G", inst.theorem_g(), "max gradient of r_t, c_t over X"));
            match eta1 {
                Some(e) => {
                    cfg.eta1 = *e;
                    params.push(param("eta1", *e, "override"));
                }
                None => params.push(param("eta1", cfg.eta1, "D_X / (G (1 + |y_max|_2) sqrt(T))")),
            }
            match eta2 {
                Some(e) => {
                    cfg.eta2 = *e;
                    params.push(param("eta2", *e, "override"));
                }
                None => params.push(param(
                    "eta2",
                    cfg.eta2,
                    "|y_max|_2 / (|b|_2 / T + sqrt(m G D_X)) / sqrt(T)",
                )),
            }
            Agent::Pd(PdRftl::for_instance(inst, cfg)?)
        }
        AlgorithmSpec::SpFtlKnapsack { h } => {
            let inst = knapsack.expect("paired with a knapsack scenario");
            let hv = h.unwrap_or_else(|| theorem7_h(t));
            params.push(param(
                "H",
                hv,
                if h.is_some() { "override" } else { "T^(-1/6)" },
            ));
            Agent::SpKnapsack(SpFtlKnapsack::new(inst, hv, SolverConfig::default())?)
        }
    };
    if let Some(inst) = knapsack {
        for (i, y) in inst.y_max.iter().enumerate() {
            params.push(param(
                &format!("y_max_{}", i + 1),
                *y,
                "max per-round reward / (b_i / T)",
            ));
        }
    }
    Ok((agent, params))
}

fn schedule_constant(s: &StepSchedule) -> f64 {
    match *s {
        StepSchedule::Diminishing(c) | StepSchedule::InvSqrt(c) | StepSchedule::Constant(c) => c,
    }
}

fn hindsight_config(spec: &ScenarioSpec, opts: &RunOptions, rounds: usize) -> SolverConfig {
    let per_round = opts.hindsight_tol_per_round.unwrap_or(if spec.kind.is_matrix_game() {
        1e-6
    } else {
        1e-8
    });
    SolverConfig::default()
        .with_tol(per_round * rounds.max(1) as f64)
        .with_max_iters(200_000)
}

/// Plays one seeded run.
pub fn run_single(spec: &ScenarioSpec, alg: &AlgorithmSpec, opts: &RunOptions) -> Result<RunResult> {
    spec.validate()?;
    alg.check_pairing(spec)?;
    let start = Instant::now();
    let (x_set, y_set) = spec.sets()?;
    let knapsack = if spec.kind.is_knapsack() {
        Some(spec.knapsack_instance()?)
    } else {
        None
    };
    let (mut agent, parameters) = build_agent(spec, alg, &x_set, &y_set, knapsack.as_ref())?;
    let mut stream = spec.stream()?;
    let mut acc = RegretAccumulator::new(x_set.clone(), y_set.clone());
    let mut trace = RoundTrace::default();
    let marks = checkpoints(spec.horizon, opts.series_points);
    let mut next_mark = 0;
    let mut series = Vec::new();
    let mut knapsack_series = Vec::new();
    let mut kstate = knapsack.as_ref().map(|k| KnapsackState::new(k.m()));
    let mut max_gap: f64 = 0.0;
    // PD-RFTL component bookkeeping: linear losses of the two leaders.
    let mut pd_lin = (0.0, 0.0, vec![0.0; x_set.dim()], vec![0.0; y_set.dim()], 0.0f64, 0.0f64);

    while let Some(round) = stream.next_round()? {
        let t = stream.round();
        let (x, y) = agent.current();
        let payoff: &PayoffFunction = &round.payoff;
        let value = acc.push(payoff, &x, &y)?;
        let mut record = RoundRecord {
            t,
            x: x.clone(),
            y: y.clone(),
            payoff_value: value,
            next_value: None,
            solver_gap: None,
            bandit: None,
            knapsack: None,
        };
        if let (Some(inst), Some(state), Some(draw)) = (&knapsack, &mut kstate, &round.knapsack) {
            let out = state.step(inst, draw, &x)?;
            record.knapsack = Some(KnapsackObservation {
                reward: out.reward,
                collected: out.reward_collected,
                consumption: out.consumption,
                cumulative_consumption: state.cumulative_consumption.clone(),
                violated: state.violated,
            });
        }
        match &mut agent {
            Agent::Online(a) => a.observe(payoff)?,
            Agent::Omg(a) => {
                a.step(round.matrix.as_ref().expect("matrix scenario"))?;
            }
            Agent::Bandit(a) => {
                let m = round.matrix.as_ref().expect("matrix scenario");
                let (i, j) = a.step(|i, j| m.get(i, j))?;
                record.bandit = Some(BanditObservation {
                    i,
                    j,
                    entry: m.get(i, j),
                });
            }
            Agent::Pd(a) => {
                let (gx, gy) = a.step(payoff.as_ref())?;
                pd_lin.0 += crate::linalg::dot(&gx, &x);
                pd_lin.1 += crate::linalg::dot(&gy, &y);
                for (s, g) in pd_lin.2.iter_mut().zip(&gx) {
                    *s += g;
                }
                for (s, g) in pd_lin.3.iter_mut().zip(&gy) {
                    *s += g;
                }
                pd_lin.4 = pd_lin.4.max(crate::linalg::norm2(&gx));
                pd_lin.5 = pd_lin.5.max(crate::linalg::norm2(&gy));
            }
            Agent::SpKnapsack(a) => {
                a.step(payoff)?;
            }
        }
        let (nx, ny) = agent.current();
        record.next_value = Some(payoff.value(&nx, &ny));
        record.solver_gap = agent.last_gap();
        if let Some(g) = record.solver_gap {
            max_gap = max_gap.max(g);
            if let Some(budget) = opts.max_round_gap.filter(|b| g > *b) {
                return Err(Error::GapBudgetExceeded { round: t, gap: g, budget });
            }
        }
        trace.push(record);
        if next_mark < marks.len() && marks[next_mark] == t {
            next_mark += 1;
            let rep = acc.snapshot(&hindsight_config(spec, opts, t), None)?;
            series.push(SeriesPoint {
                t,
                cum_payoff: rep.cumulative_payoff,
                cum_sp_regret: rep.sp_regret,
                cum_ind_x: rep.ind_regret_x,
                cum_ind_y: rep.ind_regret_y,
            });
            if let (Some(inst), Some(state)) = (&knapsack, &kstate) {
                let frac = state
                    .cumulative_consumption
                    .iter()
                    .zip(&inst.budget)
                    .map(|(c, b)| c / b)
                    .collect();
                knapsack_series.push((state.cumulative_reward, frac, state.violated));
            }
        }
    }
    let final_cfg = hindsight_config(spec, opts, spec.horizon);
    let report = if series.last().map(|p| p.t) == Some(spec.horizon) {
        acc.snapshot(&final_cfg, None)?
    } else {
        let warm = agent.current();
        acc.snapshot(&final_cfg, Some(warm))?
    };
    let knapsack_summary = match (&knapsack, &kstate) {
        (Some(inst), Some(state)) => {
            let expected = inst.expectation(1_000_000, spec.seed);
            let r_star = benchmark_r_star(inst, &expected)?.value;
            let obs: Vec<&KnapsackObservation> =
                trace.records.iter().map(|r| r.knapsack.as_ref().expect("knapsack round")).collect();
            let rewards: Vec<f64> = obs.iter().map(|o| o.reward).collect();
            let collected: Vec<f64> = obs.iter().map(|o| o.collected).collect();
            let cons: Vec<Vec<f64>> = obs.iter().map(|o| o.consumption.clone()).collect();
            let viol: Vec<bool> = obs.iter().map(|o| o.violated).collect();
            let accounting = check_accounting(inst, &rewards, &collected, &cons, &viol);
            let max_y = acc.best_fixed_y_value(&final_cfg)?;
            let components = if let Agent::Pd(a) = &agent {
                let reg_x = pd_lin.0 - x_set.min_linear(&pd_lin.2)?;
                let neg: Vec<f64> = pd_lin.3.iter().map(|v| -v).collect();
                let reg_y = -y_set.min_linear(&neg)? - pd_lin.1;
                let t = spec.horizon;
                Some([
                    (reg_x, rftl_bound(a.eta1, pd_lin.4, x_set.diameter(), t)),
                    (reg_y, rftl_bound(a.eta2, pd_lin.5, y_set.diameter(), t)),
                ])
            } else {
                None
            };
            Some(KnapsackSummary {
                r_star,
                cumulative_reward: state.cumulative_reward,
                regret: knapsack_regret(state.cumulative_reward, r_star),
                reward_ratio: state.cumulative_reward / r_star,
                accounting,
                dagger: max_y - report.cumulative_payoff,
                ddagger: report.cumulative_payoff - report.hindsight_value,
                hindsight_value: report.hindsight_value,
                theorem8_bound: inst.theorem8_bound(),
                component_regrets: components,
            })
        }
        _ => None,
    };
    Ok(RunResult {
        seed: spec.seed,
        scenario: spec.kind.id().to_string(),
        algorithm: alg.id().to_string(),
        horizon: spec.horizon,
        report,
        trace,
        series,
        knapsack_series,
        parameters,
        knapsack: knapsack_summary,
        max_solver_gap: max_gap,
        final_action: agent.current(),
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Worker count from `OSP_LAB_THREADS`, else the machine's parallelism.
pub fn worker_count() -> usize {
    std::env::var("OSP_LAB_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// One independent run per seed, fanned out over a worker pool. Results are
/// ordered like `seeds`.
pub fn run_experiment(spec: &ScenarioSpec, alg: &AlgorithmSpec, seeds: &[u64], opts: &RunOptions) -> Result<Vec<RunResult>> {
    spec.validate()?;
    alg.check_pairing(spec)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let mut s = spec.clone();
                s.seed = seed;
                run_single(&s, alg, opts)
            })
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub seed_count: usize,
    pub sp_regret: (f64, f64),
    pub ind_x: (f64, f64),
    pub ind_y: (f64, f64),
    pub hindsight_value: f64,
    /// Knapsack regret and reward ratio, mean and standard error.
    pub knapsack_regret: Option<(f64, f64)>,
    pub reward_ratio: Option<(f64, f64)>,
    pub wall_ms: f64,
}

/// Mean and standard error over runs, folded in seed order.
pub fn aggregate(results: &[RunResult]) -> Aggregate {
    let pick = |f: &dyn Fn(&RunResult) -> f64| -> Vec<f64> { results.iter().map(f).collect() };
    let ks: Vec<&KnapsackSummary> = results.iter().filter_map(|r| r.knapsack.as_ref()).collect();
    let knapsack = |f: &dyn Fn(&KnapsackSummary) -> f64| -> Option<(f64, f64)> {
        if ks.is_empty() {
            None
        } else {
            Some(mean_stderr(&ks.iter().map(|k| f(k)).collect::<Vec<_>>()))
        }
    };
    Aggregate {
        seed_count: results.len(),
        sp_regret: mean_stderr(&pick(&|r| r.report.sp_regret)),
        ind_x: mean_stderr(&pick(&|r| r.report.ind_regret_x)),
        ind_y: mean_stderr(&pick(&|r| r.report.ind_regret_y)),
        hindsight_value: mean_stderr(&pick(&|r| r.report.hindsight_value)).0,
        knapsack_regret: knapsack(&|k| k.regret),
        reward_ratio: knapsack(&|k| k.reward_ratio),
        wall_ms: results.iter().map(|r| r.wall_ms).sum(),
    }
}
