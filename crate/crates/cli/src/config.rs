//! Flat `section.key = value` run configuration.
//!
//! ```text
//! # comment
//! scenario.id = ocowk_sec8
//! scenario.horizon = 10000
//! algorithm.id = pd-rftl
//! seeds.count = 25
//! seeds.master = 0
//! output.path = out/pd
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use osp_lab::harness::AlgorithmSpec;
use osp_lab::osp::StepSchedule;
use osp_lab::scenarios::ScenarioKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Seeds {
    List(Vec<u64>),
    /// `count` consecutive seeds starting at `master`.
    Count { count: usize, master: u64 },
}

impl Seeds {
    pub fn expand(&self) -> Vec<u64> {
        match self {
            Seeds::List(v) => v.clone(),
            Seeds::Count { count, master } => (0..*count as u64).map(|i| master.wrapping_add(i)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioKind,
    pub horizon: usize,
    pub algorithm: AlgorithmSpec,
    pub seeds: Seeds,
    pub output_path: PathBuf,
    pub emit_series: bool,
    pub series_points: usize,
    pub emit_svg: bool,
    /// Fill the `wall_ms` column; off by default so reruns are byte-identical.
    pub record_timing: bool,
    pub hindsight_tol: Option<f64>,
    /// Per-round inner solver gap above which the run aborts (exit 4).
    pub max_round_gap: Option<f64>,
}

impl RunConfig {
    pub fn new(scenario: ScenarioKind, horizon: usize, algorithm: AlgorithmSpec) -> Self {
        Self {
            scenario,
            horizon,
            algorithm,
            seeds: Seeds::Count { count: 1, master: 0 },
            output_path: PathBuf::from("osp-lab-out"),
            emit_series: false,
            series_points: 200,
            emit_svg: false,
            record_timing: false,
            hindsight_tol: None,
            max_round_gap: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut kv = Entries::parse(text)?;
        let horizon = kv.req_parse::<usize>("scenario.horizon")?;
        let scenario = parse_scenario(&mut kv)?;
        let algorithm = parse_algorithm(&mut kv)?;
        let seeds = match kv.take("seeds.list") {
            Some(list) => {
                if kv.has("seeds.count") || kv.has("seeds.master") {
                    return err("seeds.list excludes seeds.count / seeds.master");
                }
                let v = list
                    .split(',')
                    .map(|s| s.trim().parse::<u64>().map_err(|e| ConfigError(format!("seeds.list: {e}"))))
                    .collect::<Result<Vec<_>, _>>()?;
                if v.is_empty() {
                    return err("seeds.list is empty");
                }
                Seeds::List(v)
            }
            None => Seeds::Count {
                count: kv.opt_parse("seeds.count")?.unwrap_or(1),
                master: kv.opt_parse("seeds.master")?.unwrap_or(0),
            },
        };
        if seeds.expand().is_empty() {
            return err("at least one seed is required");
        }
        let defaults = RunConfig::new(scenario.clone(), horizon, algorithm.clone());
        let cfg = RunConfig {
            scenario,
            horizon,
            algorithm,
            seeds,
            output_path: kv.take("output.path").map(PathBuf::from).unwrap_or(defaults.output_path),
            emit_series: kv.opt_parse("output.series")?.unwrap_or(defaults.emit_series),
            series_points: kv.opt_parse("output.series_points")?.unwrap_or(defaults.series_points),
            emit_svg: kv.opt_parse("output.svg")?.unwrap_or(defaults.emit_svg),
            record_timing: kv.opt_parse("output.timing")?.unwrap_or(defaults.record_timing),
            hindsight_tol: kv.opt_parse("harness.hindsight_tol")?,
            max_round_gap: kv.opt_parse("harness.max_round_gap")?,
        };
        kv.finish()?;
        Ok(cfg)
    }

    /// Canonical text; `parse(to_config_string())` reproduces `self`.
    pub fn to_config_string(&self) -> String {
        let mut out = Vec::new();
        let mut put = |k: &str, v: String| out.push(format!("{k} = {v}"));
        put("scenario.id", self.scenario.id().to_string());
        put("scenario.horizon", self.horizon.to_string());
        match &self.scenario {
            ScenarioKind::IidQuadratic { h, radius } => {
                put("scenario.h", h.to_string());
                put("scenario.radius", radius.to_string());
            }
            ScenarioKind::AdversarialQuadratic { h, radius, pattern } => {
                put("scenario.h", h.to_string());
                put("scenario.radius", radius.to_string());
                put("scenario.pattern", pattern.to_string());
            }
            ScenarioKind::IidBilinearBox { radius } => put("scenario.radius", radius.to_string()),
            ScenarioKind::RandomBilinear { d1, d2 } => {
                put("scenario.d1", d1.to_string());
                put("scenario.d2", d2.to_string());
            }
            ScenarioKind::OcowkSec8 { budget_rates } => {
                put("scenario.budget_rate_1", budget_rates.0.to_string());
                put("scenario.budget_rate_2", budget_rates.1.to_string());
            }
            _ => {}
        }
        put("algorithm.id", self.algorithm.id().to_string());
        let opt = |v: &Option<f64>| v.map(|x| x.to_string());
        let params: Vec<(&str, Option<String>)> = match &self.algorithm {
            AlgorithmSpec::SpFtl { require_strong, tol_gap } => vec![
                ("require_strong", require_strong.map(|b| b.to_string())),
                ("tol_gap", Some(tol_gap.to_string())),
            ],
            AlgorithmSpec::SpRftl { eta } => vec![("eta", opt(eta))],
            AlgorithmSpec::Ogda { schedule } => vec![("schedule", schedule.as_ref().map(format_schedule))],
            AlgorithmSpec::OmgRftl { eta, theta } => vec![("eta", opt(eta)), ("theta", opt(theta))],
            AlgorithmSpec::BanditOmg { eta, delta } => vec![("eta", opt(eta)), ("delta", opt(delta))],
            AlgorithmSpec::PdRftl { eta1, eta2 } => vec![("eta1", opt(eta1)), ("eta2", opt(eta2))],
            AlgorithmSpec::SpFtlKnapsack { h } => vec![("h", opt(h))],
        };
        for (k, v) in params {
            if let Some(v) = v {
                put(&format!("algorithm.{k}"), v);
            }
        }
        match &self.seeds {
            Seeds::List(v) => put(
                "seeds.list",
                v.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","),
            ),
            Seeds::Count { count, master } => {
                put("seeds.count", count.to_string());
                put("seeds.master", master.to_string());
            }
        }
        put("output.path", self.output_path.display().to_string());
        put("output.series", self.emit_series.to_string());
        put("output.series_points", self.series_points.to_string());
        put("output.svg", self.emit_svg.to_string());
        put("output.timing", self.record_timing.to_string());
        if let Some(t) = self.hindsight_tol {
            put("harness.hindsight_tol", t.to_string());
        }
        if let Some(g) = self.max_round_gap {
            put("harness.max_round_gap", g.to_string());
        }
        let mut s = out.join("\n");
        s.push('\n');
        s
    }
}

fn parse_scenario(kv: &mut Entries) -> Result<ScenarioKind, ConfigError> {
    let id = kv.req("scenario.id")?;
    Ok(match id.as_str() {
        "theorem6_scenario1" => ScenarioKind::Theorem6Scenario1,
        "theorem6_scenario2" => ScenarioKind::Theorem6Scenario2,
        "sec8_instance1" => ScenarioKind::Sec8Instance1,
        "sec8_instance2" => ScenarioKind::Sec8Instance2,
        "iid_quadratic" => ScenarioKind::IidQuadratic {
            h: kv.opt_parse("scenario.h")?.unwrap_or(1.0),
            radius: kv.opt_parse("scenario.radius")?.unwrap_or(1.0),
        },
        "adversarial_quadratic" => ScenarioKind::AdversarialQuadratic {
            h: kv.opt_parse("scenario.h")?.unwrap_or(1.0),
            radius: kv.opt_parse("scenario.radius")?.unwrap_or(1.0),
            pattern: kv.opt_parse("scenario.pattern")?.unwrap_or(0),
        },
        "iid_bilinear_box" => ScenarioKind::IidBilinearBox {
            radius: kv.opt_parse("scenario.radius")?.unwrap_or(1.0),
        },
        "random_bilinear" => ScenarioKind::RandomBilinear {
            d1: kv.opt_parse("scenario.d1")?.unwrap_or(4),
            d2: kv.opt_parse("scenario.d2")?.unwrap_or(4),
        },
        "ocowk_sec8" => ScenarioKind::OcowkSec8 {
            budget_rates: (
                kv.opt_parse("scenario.budget_rate_1")?.unwrap_or(200.0),
                kv.opt_parse("scenario.budget_rate_2")?.unwrap_or(4.0),
            ),
        },
        other => return err(format!("unknown scenario.id '{other}'")),
    })
}

fn parse_algorithm(kv: &mut Entries) -> Result<AlgorithmSpec, ConfigError> {
    let id = kv.req("algorithm.id")?;
    let Some(base) = AlgorithmSpec::default_for(&id) else {
        return err(format!("unknown algorithm.id '{id}'"));
    };
    Ok(match base {
        AlgorithmSpec::SpFtl { tol_gap, .. } => AlgorithmSpec::SpFtl {
            require_strong: kv.opt_parse("algorithm.require_strong")?,
            tol_gap: kv.opt_parse("algorithm.tol_gap")?.unwrap_or(tol_gap),
        },
        AlgorithmSpec::SpRftl { .. } => AlgorithmSpec::SpRftl {
            eta: kv.opt_parse("algorithm.eta")?,
        },
        AlgorithmSpec::Ogda { .. } => AlgorithmSpec::Ogda {
            schedule: kv.take("algorithm.schedule").map(|s| parse_schedule(&s)).transpose()?,
        },
        AlgorithmSpec::OmgRftl { .. } => AlgorithmSpec::OmgRftl {
            eta: kv.opt_parse("algorithm.eta")?,
            theta: kv.opt_parse("algorithm.theta")?,
        },
        AlgorithmSpec::BanditOmg { .. } => AlgorithmSpec::BanditOmg {
            eta: kv.opt_parse("algorithm.eta")?,
            delta: kv.opt_parse("algorithm.delta")?,
        },
        AlgorithmSpec::PdRftl { .. } => AlgorithmSpec::PdRftl {
            eta1: kv.opt_parse("algorithm.eta1")?,
            eta2: kv.opt_parse("algorithm.eta2")?,
        },
        AlgorithmSpec::SpFtlKnapsack { .. } => AlgorithmSpec::SpFtlKnapsack {
            h: kv.opt_parse("algorithm.h")?,
        },
    })
}

/// `diminishing:c`, `inv_sqrt:c` or `constant:c`.
pub fn parse_schedule(s: &str) -> Result<StepSchedule, ConfigError> {
    let Some((kind, c)) = s.split_once(':') else {
        return err(format!("schedule '{s}' is not kind:constant"));
    };
    let c: f64 = c
        .trim()
        .parse()
        .map_err(|e| ConfigError(format!("schedule constant: {e}")))?;
    Ok(match kind.trim() {
        "diminishing" => StepSchedule::Diminishing(c),
        "inv_sqrt" => StepSchedule::InvSqrt(c),
        "constant" => StepSchedule::Constant(c),
        other => return err(format!("unknown schedule kind '{other}'")),
    })
}

pub fn format_schedule(s: &StepSchedule) -> String {
    match s {
        StepSchedule::Diminishing(c) => format!("diminishing:{c}"),
        StepSchedule::InvSqrt(c) => format!("inv_sqrt:{c}"),
        StepSchedule::Constant(c) => format!("constant:{c}"),
    }
}

/// Parsed assignments; every key must be consumed exactly once.
struct Entries(BTreeMap<String, (usize, String)>);

impl Entries {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return err(format!("line {}: expected key = value", n + 1));
            };
            let k = k.trim();
            if k.is_empty() || !k.contains('.') {
                return err(format!("line {}: key '{k}' needs a section prefix", n + 1));
            }
            if map.insert(k.to_string(), (n + 1, v.trim().to_string())).is_some() {
                return err(format!("line {}: duplicate key '{k}'", n + 1));
            }
        }
        Ok(Self(map))
    }

    fn has(&self, key: &str) -> bool {
        self.0.contains_key(key)
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.0.remove(key).map(|(_, v)| v)
    }

    fn req(&mut self, key: &str) -> Result<String, ConfigError> {
        self.take(key).ok_or_else(|| ConfigError(format!("missing key '{key}'")))
    }

    fn opt_parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.0.remove(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| ConfigError(format!("line {line}: {key} = '{v}': {e}"))),
        }
    }

    fn req_parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.opt_parse(key)?
            .ok_or_else(|| ConfigError(format!("missing key '{key}'")))
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.0.into_iter().next() {
            None => Ok(()),
            Some((k, (line, _))) => err(format!("line {line}: unknown or unused key '{k}'")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::parse("scenario.id = theorem6_scenario1\nscenario.horizon = 200\nalgorithm.id = sp-ftl\n").unwrap();
        assert_eq!(c.horizon, 200);
        assert_eq!(c.seeds.expand(), vec![0]);
        assert!(!c.emit_series);
        assert_eq!(c.algorithm, AlgorithmSpec::default_for("sp-ftl").unwrap());
    }

    #[test]
    fn round_trips_every_scenario_and_algorithm() {
        let kinds = [
            ScenarioKind::Theorem6Scenario2,
            ScenarioKind::Sec8Instance1,
            ScenarioKind::IidQuadratic { h: 0.5, radius: 2.25 },
            ScenarioKind::AdversarialQuadratic { h: 1.0, radius: 1.0, pattern: 3 },
            ScenarioKind::IidBilinearBox { radius: 0.1 + 0.2 },
            ScenarioKind::RandomBilinear { d1: 3, d2: 7 },
            ScenarioKind::OcowkSec8 { budget_rates: (200.0, 1.0 / 3.0) },
        ];
        let algs = [
            AlgorithmSpec::SpFtl { require_strong: Some(false), tol_gap: 1e-10 },
            AlgorithmSpec::SpRftl { eta: Some(0.123456789012345) },
            AlgorithmSpec::Ogda { schedule: Some(StepSchedule::InvSqrt(std::f64::consts::PI)) },
            AlgorithmSpec::OmgRftl { eta: None, theta: Some(1e-3) },
            AlgorithmSpec::BanditOmg { eta: Some(0.01), delta: Some(0.2) },
            AlgorithmSpec::PdRftl { eta1: None, eta2: None },
            AlgorithmSpec::SpFtlKnapsack { h: Some(0.75) },
        ];
        for (k, a) in kinds.iter().zip(algs.iter()) {
            let mut c = RunConfig::new(k.clone(), 40, a.clone());
            c.seeds = Seeds::List(vec![3, 1, 4]);
            c.hindsight_tol = Some(1e-7);
            c.max_round_gap = Some(2.5e-4);
            c.emit_series = true;
            let text = c.to_config_string();
            assert_eq!(RunConfig::parse(&text).unwrap(), c, "{text}");
            assert_eq!(RunConfig::parse(&text).unwrap().to_config_string(), text);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let base = "scenario.id = sec8_instance1\nscenario.horizon = 10\nalgorithm.id = sp-ftl\n";
        assert!(RunConfig::parse(base).is_ok());
        for bad in [
            "scenario.id = nope\nscenario.horizon = 10\nalgorithm.id = sp-ftl\n".to_string(),
            format!("{base}algorithm.eta = 0.1\n"),
            format!("{base}scenario.horizon = 11\n"),
            format!("{base}output.series = maybe\n"),
            format!("{base}horizon = 3\n"),
            format!("{base}not an assignment\n"),
            format!("{base}seeds.list = 1,2\nseeds.count = 2\n"),
            "scenario.id = sec8_instance1\nalgorithm.id = sp-ftl\n".to_string(),
        ] {
            assert!(RunConfig::parse(&bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn seeds_expand_from_master() {
        assert_eq!(Seeds::Count { count: 3, master: 10 }.expand(), vec![10, 11, 12]);
    }
}
