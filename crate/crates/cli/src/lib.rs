//! Command implementations behind the `osp-lab` binary.

pub mod config;
pub mod output;

use std::fs;
use std::path::Path;

use osp_lab::harness::{aggregate, run_experiment, RunOptions, ALGORITHM_IDS};
use osp_lab::oracles;
use osp_lab::scenarios::{ScenarioSpec, SCENARIO_IDS};
use osp_lab::Error;

pub use config::{ConfigError, RunConfig, Seeds};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PAIRING: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

/// Maps a library error onto the process exit code.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::IncompatiblePairing(_) => EXIT_PAIRING,
        Error::NonConvergence { .. } | Error::GapBudgetExceeded { .. } => EXIT_SOLVER,
        _ => EXIT_FAILURE,
    }
}

/// Reads, runs and writes one experiment. `force_svg` acts like `output.svg = true`.
pub fn cmd_run(config_path: &Path, force_svg: bool) -> i32 {
    let text = match fs::read_to_string(config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: cannot read {}: {e}", config_path.display());
            return EXIT_CONFIG;
        }
    };
    let mut cfg = match RunConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
    };
    cfg.emit_svg |= force_svg;
    match execute(&cfg) {
        Ok(line) => {
            println!("{line}");
            EXIT_OK
        }
        Err(RunError::Core(e)) => {
            let code = exit_code_for(&e);
            match &e {
                Error::NonConvergence { iterations, gap } => eprintln!(
                    "solver did not converge: {iterations} iterations, final gap {gap:e}; \
                     raise algorithm.tol_gap or harness.hindsight_tol"
                ),
                Error::GapBudgetExceeded { round, gap, budget } => eprintln!(
                    "solver did not converge within budget: round {round} ended with gap {gap:e} > \
                     harness.max_round_gap = {budget:e}"
                ),
                Error::InvalidParameter(_) => {
                    eprintln!("config error: {e}");
                    return EXIT_CONFIG;
                }
                _ => eprintln!("error: {e}"),
            }
            code
        }
        Err(RunError::Io(e)) => {
            eprintln!("error writing output: {e}");
            EXIT_FAILURE
        }
    }
}

#[derive(Debug)]
pub enum RunError {
    Core(Error),
    Io(std::io::Error),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Core(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

/// Runs `cfg` and writes its files; returns the summary line.
pub fn execute(cfg: &RunConfig) -> Result<String, RunError> {
    let seeds = cfg.seeds.expand();
    let spec = ScenarioSpec::new(cfg.scenario.clone(), cfg.horizon, seeds[0])?;
    let opts = RunOptions {
        series_points: if cfg.emit_series || cfg.emit_svg { cfg.series_points } else { 0 },
        hindsight_tol_per_round: cfg.hindsight_tol,
        max_round_gap: cfg.max_round_gap,
    };
    let results = run_experiment(&spec, &cfg.algorithm, &seeds, &opts)?;
    let agg = aggregate(&results);

    let dir = &cfg.output_path;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("summary.csv"), output::summary_csv(&results, &agg, cfg.record_timing))?;
    fs::write(
        dir.join("metadata.txt"),
        output::metadata(&cfg.to_config_string(), &results[0].parameters, &seeds),
    )?;
    for r in &results {
        if cfg.emit_series {
            fs::write(dir.join(format!("series_seed{}.csv", r.seed)), output::series_csv(r))?;
        }
        if cfg.emit_svg {
            fs::write(dir.join(format!("series_seed{}.svg", r.seed)), output::series_svg(r))?;
        }
    }

    let f = output::fmt_num;
    let mut line = format!(
        "scenario={} algorithm={} T={} seeds={} sp_regret={} (se {}) ind_x={} ind_y={} hindsight_value={}",
        cfg.scenario.id(),
        cfg.algorithm.id(),
        cfg.horizon,
        agg.seed_count,
        f(agg.sp_regret.0),
        f(agg.sp_regret.1),
        f(agg.ind_x.0),
        f(agg.ind_y.0),
        f(agg.hindsight_value),
    );
    if let (Some(reg), Some(ratio)) = (agg.knapsack_regret, agg.reward_ratio) {
        let r_star = results[0].knapsack.as_ref().map_or(f64::NAN, |k| k.r_star);
        line.push_str(&format!(
            " r_star={} regret={} (se {}) reward_ratio={} (se {})",
            f(r_star),
            f(reg.0),
            f(reg.1),
            f(ratio.0),
            f(ratio.1)
        ));
    }
    line.push_str(&format!(" wall_ms={:.0}", agg.wall_ms));
    Ok(line)
}

/// Runs every oracle; exit 0 iff all pass.
pub fn cmd_oracle_check() -> i32 {
    let results = oracles::run_all();
    let mut failed = Vec::new();
    for r in &results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        if !r.passed {
            failed.push(r.name);
        }
    }
    if failed.is_empty() {
        println!("all {} oracles passed", results.len());
        EXIT_OK
    } else {
        eprintln!("failed oracles: {}", failed.join(", "));
        EXIT_FAILURE
    }
}

pub fn scenario_listing() -> String {
    let about = |id: &str| match id {
        "theorem6_scenario1" => "matching pennies for t <= T/2, then the zero matrix (even T)",
        "theorem6_scenario2" => "matching pennies for t <= T/2, then [[1,-1],[1,-1]] (even T)",
        "sec8_instance1" => "x y + (x-p)^2/2 - (y-q)^2/2 on [-10,10], centers (2,-1) then (-1,-2)",
        "sec8_instance2" => "x y + (x-p)^2/2 - (y-q)^2/2 on [-10,10], centers (2,-1) then (-1,3)",
        "iid_quadratic" => "random strongly convex-concave quadratics (scenario.h, scenario.radius)",
        "adversarial_quadratic" => "switching quadratic sequences (scenario.h, scenario.radius, scenario.pattern 0..4)",
        "iid_bilinear_box" => "random bilinear-plus-linear payoffs on a box (scenario.radius)",
        "random_bilinear" => "uniform [-1,1] matrix games (scenario.d1, scenario.d2)",
        "ocowk_sec8" => "stochastic knapsack instance (scenario.budget_rate_1, scenario.budget_rate_2)",
        _ => "",
    };
    SCENARIO_IDS.iter().map(|id| format!("{id}\t{}\n", about(id))).collect()
}

pub fn algorithm_listing() -> String {
    let about = |id: &str| match id {
        "sp-ftl" => "saddle-point follow-the-leader (algorithm.tol_gap, algorithm.require_strong)",
        "sp-rftl" => "regularized SP-FTL with squared-norm regularizers (algorithm.eta)",
        "ogda" => "online gradient descent-ascent (algorithm.schedule = diminishing:c | inv_sqrt:c | constant:c)",
        "omg-rftl" => "entropic SP-RFTL on restricted simplexes (algorithm.eta, algorithm.theta)",
        "bandit-omg-rftl" => "OMG-RFTL with one-point estimates (algorithm.eta, algorithm.delta)",
        "pd-rftl" => "primal-dual RFTL for knapsacks (algorithm.eta1, algorithm.eta2)",
        "sp-ftl-knapsack" => "SP-FTL on the knapsack Lagrangian with H |x|^2 - H |y|^2 (algorithm.h)",
        _ => "",
    };
    ALGORITHM_IDS.iter().map(|id| format!("{id}\t{}\n", about(id))).collect()
}
