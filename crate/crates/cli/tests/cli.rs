use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn osp_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_osp-lab"))
        .args(args)
        .env("OSP_LAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let out = dir.join(format!("{name}-out"));
    let text = format!("{body}output.path = {}\n", out.display());
    let path = dir.join(format!("{name}.cfg"));
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn smoke_run_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "smoke",
        "scenario.id = theorem6_scenario1\nscenario.horizon = 200\nalgorithm.id = sp-ftl\n",
    );
    let out = osp_lab(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("sp_regret="), "{stdout}");
    let summary = fs::read_to_string(dir.path().join("smoke-out/summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scenario,algorithm,T,seed_count,sp_regret_mean,sp_regret_stderr,ind_x_mean,ind_y_mean,hindsight_value,wall_ms"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..4], &["theorem6_scenario1", "sp-ftl", "200", "1"]);
}

#[test]
fn identical_configs_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let body = "scenario.id = random_bilinear\nscenario.horizon = 120\nscenario.d1 = 3\nscenario.d2 = 3\n\
                algorithm.id = bandit-omg-rftl\nseeds.count = 3\nseeds.master = 7\noutput.series = true\noutput.series_points = 12\n";
    let a = write_config(dir.path(), "a", body);
    let b = write_config(dir.path(), "b", body);
    assert_eq!(osp_lab(&["run", &a]).status.code(), Some(0));
    assert_eq!(osp_lab(&["run", &b]).status.code(), Some(0));
    for f in ["summary.csv", "series_seed7.csv", "series_seed8.csv", "series_seed9.csv"] {
        let x = fs::read(dir.path().join("a-out").join(f)).unwrap();
        let y = fs::read(dir.path().join("b-out").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
    let series = fs::read_to_string(dir.path().join("a-out/series_seed7.csv")).unwrap();
    assert!(series.starts_with("t,cum_payoff,cum_sp_regret,cum_ind_x,cum_ind_y\n"));
    assert_eq!(series.lines().last().unwrap().split(',').next(), Some("120"));
}

#[test]
fn knapsack_run_reports_ratio_and_budget_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "ks",
        "scenario.id = ocowk_sec8\nscenario.horizon = 400\nalgorithm.id = pd-rftl\nseeds.count = 3\n\
         output.series = true\noutput.series_points = 4\n",
    );
    let out = osp_lab(&["run", &cfg, "--svg"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("ks-out/summary.csv")).unwrap();
    assert!(summary.lines().next().unwrap().ends_with(
        "wall_ms,r_star,regret_mean,regret_stderr,reward_ratio_mean,reward_ratio_stderr"
    ));
    let r_star = summary.lines().nth(1).unwrap().split(',').nth(10).unwrap();
    assert_eq!(r_star, "8888.88888889");
    let series = fs::read_to_string(dir.path().join("ks-out/series_seed0.csv")).unwrap();
    assert!(series.lines().next().unwrap().ends_with(",cum_reward,budget_frac_1,budget_frac_2,violated"));
    let svg = fs::read_to_string(dir.path().join("ks-out/series_seed0.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
    let meta = fs::read_to_string(dir.path().join("ks-out/metadata.txt")).unwrap();
    assert!(meta.contains("param.eta1.formula = D_X / (G (1 + |y_max|_2) sqrt(T))"), "{meta}");
}

#[test]
fn overrides_are_recorded_in_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "ov",
        "scenario.id = random_bilinear\nscenario.horizon = 50\nalgorithm.id = bandit-omg-rftl\n\
         algorithm.eta = 0.05\nalgorithm.delta = 0.1\n",
    );
    assert_eq!(osp_lab(&["run", &cfg]).status.code(), Some(0));
    let meta = fs::read_to_string(dir.path().join("ov-out/metadata.txt")).unwrap();
    assert!(meta.contains("algorithm.eta = 0.05"), "{meta}");
    assert!(meta.contains("param.eta = 0.05\nparam.eta.formula = override"), "{meta}");
    assert!(meta.contains("param.delta = 0.1\nparam.delta.formula = override"), "{meta}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad", "scenario.id = sec8_instance1\nscenario.horizon = ten\nalgorithm.id = sp-ftl\n");
    assert_eq!(osp_lab(&["run", &bad]).status.code(), Some(2));
    assert_eq!(osp_lab(&["run", "/nonexistent/osp.cfg"]).status.code(), Some(2));
    let odd = write_config(dir.path(), "odd", "scenario.id = theorem6_scenario1\nscenario.horizon = 7\nalgorithm.id = sp-ftl\n");
    assert_eq!(osp_lab(&["run", &odd]).status.code(), Some(2));

    let pairing = write_config(dir.path(), "pair", "scenario.id = ocowk_sec8\nscenario.horizon = 10\nalgorithm.id = omg-rftl\n");
    let out = osp_lab(&["run", &pairing]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("incompatible pairing"));

    let budget = write_config(
        dir.path(),
        "gap",
        "scenario.id = random_bilinear\nscenario.horizon = 10\nalgorithm.id = omg-rftl\nharness.max_round_gap = 0\n",
    );
    let out = osp_lab(&["run", &budget]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("harness.max_round_gap"));
}

#[test]
fn oracle_check_passes() {
    let out = osp_lab(&["oracle-check"]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.lines().filter(|l| l.starts_with("PASS ")).count() >= 9);
    assert!(!stdout.contains("FAIL"));
}

#[test]
fn listings() {
    let s = String::from_utf8(osp_lab(&["list-scenarios"]).stdout).unwrap();
    assert!(s.contains("ocowk_sec8") && s.contains("theorem6_scenario2"));
    let a = String::from_utf8(osp_lab(&["list-algorithms"]).stdout).unwrap();
    assert!(a.contains("pd-rftl") && a.contains("bandit-omg-rftl"));
}
