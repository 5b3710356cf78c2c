//! CSV, metadata and SVG writers.

use std::fmt::Write as _;

use osp_lab::harness::{Aggregate, Parameter, RunResult};

/// `%.12g`: 12 significant digits, trailing zeros trimmed.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

pub const SUMMARY_COLUMNS: [&str; 10] = [
    "scenario",
    "algorithm",
    "T",
    "seed_count",
    "sp_regret_mean",
    "sp_regret_stderr",
    "ind_x_mean",
    "ind_y_mean",
    "hindsight_value",
    "wall_ms",
];

pub const KNAPSACK_SUMMARY_COLUMNS: [&str; 5] = [
    "r_star",
    "regret_mean",
    "regret_stderr",
    "reward_ratio_mean",
    "reward_ratio_stderr",
];

pub fn summary_csv(results: &[RunResult], agg: &Aggregate, record_timing: bool) -> String {
    let first = &results[0];
    let knapsack = agg.knapsack_regret.is_some();
    let mut header: Vec<&str> = SUMMARY_COLUMNS.to_vec();
    if knapsack {
        header.extend(KNAPSACK_SUMMARY_COLUMNS);
    }
    let mut row = vec![
        first.scenario.clone(),
        first.algorithm.clone(),
        first.horizon.to_string(),
        agg.seed_count.to_string(),
        fmt_num(agg.sp_regret.0),
        fmt_num(agg.sp_regret.1),
        fmt_num(agg.ind_x.0),
        fmt_num(agg.ind_y.0),
        fmt_num(agg.hindsight_value),
        if record_timing { fmt_num(agg.wall_ms) } else { String::new() },
    ];
    if let (Some(reg), Some(ratio)) = (agg.knapsack_regret, agg.reward_ratio) {
        let r_star = first.knapsack.as_ref().map_or(f64::NAN, |k| k.r_star);
        row.extend([fmt_num(r_star), fmt_num(reg.0), fmt_num(reg.1), fmt_num(ratio.0), fmt_num(ratio.1)]);
    }
    format!("{}\n{}\n", header.join(","), row.join(","))
}

pub fn series_csv(r: &RunResult) -> String {
    let mut out = String::from("t,cum_payoff,cum_sp_regret,cum_ind_x,cum_ind_y");
    let m = r.knapsack_series.first().map_or(0, |(_, f, _)| f.len());
    if !r.knapsack_series.is_empty() {
        out.push_str(",cum_reward");
        for i in 1..=m {
            let _ = write!(out, ",budget_frac_{i}");
        }
        out.push_str(",violated");
    }
    out.push('\n');
    for (k, p) in r.series.iter().enumerate() {
        let _ = write!(
            out,
            "{},{},{},{},{}",
            p.t,
            fmt_num(p.cum_payoff),
            fmt_num(p.cum_sp_regret),
            fmt_num(p.cum_ind_x),
            fmt_num(p.cum_ind_y)
        );
        if let Some((reward, fracs, violated)) = r.knapsack_series.get(k) {
            let _ = write!(out, ",{}", fmt_num(*reward));
            for f in fracs {
                let _ = write!(out, ",{}", fmt_num(*f));
            }
            let _ = write!(out, ",{}", u8::from(*violated));
        }
        out.push('\n');
    }
    out
}

/// Resolved parameters as `param.<name> = value` with a `.formula` companion.
pub fn metadata(config_text: &str, params: &[Parameter], seeds: &[u64]) -> String {
    let mut out = String::from("# run configuration\n");
    out.push_str(config_text);
    out.push_str("# resolved parameters\n");
    for p in params {
        let _ = writeln!(out, "param.{} = {}", p.name, fmt_num(p.value));
        let _ = writeln!(out, "param.{}.formula = {}", p.name, p.formula);
    }
    let _ = writeln!(
        out,
        "run.seeds = {}",
        seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")
    );
    out
}

type Curve<'a> = (&'a str, &'a str, Vec<(f64, f64)>);

/// Standalone line chart of the cumulative regret series.
pub fn series_svg(r: &RunResult) -> String {
    let (w, h, pad) = (640.0, 400.0, 40.0);
    let lines: [Curve; 3] = [
        ("cum_sp_regret", "#1f77b4", r.series.iter().map(|p| (p.t as f64, p.cum_sp_regret)).collect()),
        ("cum_ind_x", "#d62728", r.series.iter().map(|p| (p.t as f64, p.cum_ind_x)).collect()),
        ("cum_ind_y", "#2ca02c", r.series.iter().map(|p| (p.t as f64, p.cum_ind_y)).collect()),
    ];
    let pts = lines.iter().flat_map(|l| l.2.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts.filter(|(_, y)| y.is_finite()) {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    );
    let _ = writeln!(
        out,
        "<rect x=\"{pad}\" y=\"{pad}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999\"/>",
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    let _ = writeln!(
        out,
        "<text x=\"{pad}\" y=\"{}\" font-size=\"12\">{} / {} (t = {}..{}, y = {}..{})</text>",
        pad - 8.0,
        r.scenario,
        r.algorithm,
        fmt_num(x0),
        fmt_num(x1),
        fmt_num(y0),
        fmt_num(y1)
    );
    for (i, (name, color, data)) in lines.iter().enumerate() {
        let coords: Vec<String> = data
            .iter()
            .filter(|(_, y)| y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            coords.join(" ")
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{color}\">{name}</text>",
            w - pad - 110.0,
            pad + 16.0 * (i as f64 + 1.0)
        );
    }
    out.push_str("</svg>\n");
    out
}
