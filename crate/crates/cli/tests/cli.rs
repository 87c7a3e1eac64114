//! End-to-end tests of the `ibandit` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_ibandit");

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn ibandit(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = ibandit(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> (i32, String) {
    let out = ibandit(args);
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn body(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

fn rows(text: &str) -> Vec<Vec<f64>> {
    body(text)
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect()
}

#[test]
fn golden_run_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&[
        "run", "--d", "1", "--psi", "0.5", "--noise-scale", "0", "--ell-low", "0.5",
        "--ell-high", "0.5", "--horizon", "6", "--out", out,
    ]);
    let got = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(got, std::fs::read_to_string(fixture("golden_run_trace.csv")).unwrap());
}

#[test]
fn contextual_replay_matches_core_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let contexts = fixture("replay_contexts.csv");
    ok(&[
        "contextual", "--d-a", "1", "--d-x", "1", "--psi", "0.5", "--noise-scale", "0",
        "--ell-low", "0.5", "--ell-high", "0.5", "--horizon", "6", "--contexts",
        contexts.to_str().unwrap(), "--out", out,
    ]);
    let got = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let core = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures/golden_contextual_trace.csv");
    assert_eq!(body(&got), std::fs::read_to_string(core).unwrap());
    let ctx = std::fs::read_to_string(dir.path().join("contexts.csv")).unwrap();
    let ctx_rows = rows(&ctx);
    assert_eq!(ctx_rows.len(), 6);
    // Contexts 0.1, 0.2, 0.9, 0.3, 0.6, 0.15 snap to centers 0.25 / 0.75.
    let snapped: Vec<f64> = ctx_rows.iter().map(|r| r[1]).collect();
    assert_eq!(snapped, vec![0.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
    assert!(ctx_rows.iter().all(|r| r[2] <= 0.25));
}

#[test]
fn cover_reports_grid_sizes() {
    let arms = |d: &str, psi: &str| {
        ok(&["cover", "--d", d, "--psi", psi])
            .lines()
            .find_map(|l| l.strip_prefix("arms = ").map(str::to_string))
            .unwrap()
    };
    assert_eq!(arms("3", "0.187"), "216");
    assert_eq!(arms("1", "1.5"), "1");
    assert_eq!(arms("2", "0.005"), "40000");
    assert_eq!(arms("1", "0.061"), "17");
    let report = ok(&["cover", "--d", "2", "--psi", "0.35"]);
    // k = 3 per axis, radius 1/6, linear gap 2 * 1/6.
    assert!(report.contains("points_per_axis = 3\n"));
    assert!(report.contains("radius = 0.16666666666666666\n"));
    assert!(report.contains("discretization_gap = 0.33333333333333326\n"));
    let (c, err) = code(&["cover", "--d", "3", "--psi", "0.001"]);
    assert_eq!(c, 2);
    assert!(err.contains("1000000000"), "{err}");
}

#[test]
fn one_round_run() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["run", "--d", "1", "--horizon", "1", "--seed", "7", "--out", dir.path().to_str().unwrap()]);
    let text = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let r = rows(&text);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0][..4], [1.0, 0.0, 0.0, 0.0]);
    assert!(text.contains("# master_seed = 7\n"));
    assert!(text.contains(&format!("# version = {}\n", env!("CARGO_PKG_VERSION"))));
}

#[test]
fn seventeen_arm_episode_respects_compensation_bound() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&[
        "run", "--d", "1", "--psi", "0.061", "--horizon", "20000", "--trials", "1", "--seed", "1",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(stdout.contains("arms = 17"));
    let r = rows(&std::fs::read_to_string(dir.path().join("trace.csv")).unwrap());
    assert_eq!(r.len(), 20_000);
    // Replay: compensation never exceeds the pulled arm's exploration bonus.
    let mut pulls = [0u64; 17];
    for row in &r {
        let (t, arm, kappa) = (row[0], row[1] as usize, row[3]);
        if pulls[arm] > 0 {
            let bonus = (2.0 * t.ln() / pulls[arm] as f64).sqrt();
            assert!(kappa <= bonus + 1e-9, "t = {t}: {kappa} > {bonus}");
        }
        assert!(kappa >= 0.0);
        pulls[arm] += 1;
    }
}

#[test]
fn mesh_sensitivity_table_arm_counts() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&[
        "experiment", "--preset", "mesh-sensitivity", "--horizon", "200", "--trials", "2",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(stdout.lines().filter(|l| l.contains("regret_slope")).count(), 9);
    let table = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
    assert!(table.contains("# master_seed = 0\n"));
    let counts: Vec<u64> = body(&table)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(counts, vec![17, 100_000, 3, 81, 40_000, 9, 216, 125_000, 27]);
    assert!(dir.path().join("summary_d3_psi0.187.csv").exists());
}

#[test]
fn auto_mesh_regret_grows_sublinearly() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["experiment", "--d", "1", "--trials", "10", "--out", dir.path().to_str().unwrap()]);
    let text = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(body(&text).lines().next().unwrap().split(',').count(), 8);
    let pts: Vec<(f64, f64)> = rows(&text)
        .iter()
        .filter(|r| r[0] >= 2000.0)
        .map(|r| (r[0].ln(), r[1].ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!(slope <= 2.0 / 3.0 + 0.1, "slope {slope}");
}

#[test]
fn baseline_columns_and_thread_independence() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let common = ["experiment", "--horizon", "300", "--trials", "5", "--baselines", "greedy_only,ucb_no_incentive"];
    ok(&[&common[..], &["--threads", "1", "--out", a.to_str().unwrap()]].concat());
    ok(&[&common[..], &["--threads", "3", "--out", b.to_str().unwrap()]].concat());
    let sa = std::fs::read_to_string(a.join("summary.csv")).unwrap();
    let sb = std::fs::read_to_string(b.join("summary.csv")).unwrap();
    assert_eq!(body(&sa), body(&sb));
    let header = body(&sa).lines().next().unwrap().to_string();
    assert_eq!(header.split(',').count(), 16);
    assert!(header.contains("greedy_only_mean_pseudo_regret"));
    // Baselines never pay compensation.
    for r in rows(&sa) {
        assert_eq!((r[10], r[14]), (0.0, 0.0));
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(&cfg, "# small run\nhorizon = 40\ntrials = 2\nmaster_seed = 99\npsi = 0.25\n").unwrap();
    let out = dir.path().join("o");
    ok(&[
        "experiment", "--config", cfg.to_str().unwrap(), "--horizon", "30", "--out",
        out.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    for line in ["# horizon = 30", "# trials = 2", "# master_seed = 99", "# psi = 0.25", "# command = experiment"] {
        assert!(text.contains(&format!("{line}\n")), "missing {line}");
    }
    assert_eq!(rows(&text).last().unwrap()[0], 30.0);

    std::fs::write(&cfg, "horizon = 40\ncolour = blue\n").unwrap();
    let (c, err) = code(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(c, 2);
    assert!(err.contains(":2: unknown key `colour`"), "{err}");
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["run", "--trials", "0"]).0, 2);
    assert_eq!(code(&["run", "--bogus"]).0, 2);
    assert_eq!(code(&["contextual", "--d", "1"]).0, 2);
    assert_eq!(code(&["run", "--config", "/no/such/file.cfg"]).0, 4);
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let (c, err) = code(&["run", "--horizon", "5", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(c, 4);
    assert!(err.contains("file"), "{err}");
}

#[test]
fn oracle_agrees() {
    let stdout = ok(&["oracle", "--episodes", "20000", "--seed", "5"]);
    assert!(stdout.contains("exact = 1.7096079999999996"));
    assert!(stdout.contains("agreement within 3 standard errors"));
    assert_eq!(code(&["oracle", "--probs", "0.1,0.2,0.3,0.4"]).0, 2);
}

#[test]
fn plot_golden_and_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["plot", fixture("summary_small.csv").to_str().unwrap(), "--out", out]);
    let svg = std::fs::read_to_string(dir.path().join("summary_small_pseudo_regret.svg")).unwrap();
    assert_eq!(svg, std::fs::read_to_string(fixture("golden_pseudo_regret.svg")).unwrap());
    for m in ["realized_regret", "compensation"] {
        assert!(dir.path().join(format!("summary_small_{m}.svg")).exists());
    }

    let header = "checkpoint_t,mean_pseudo_regret,ci_pseudo_regret,mean_realized_regret,ci_realized_regret,mean_compensation,ci_compensation,bound_value";
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, format!("{header}\n")).unwrap();
    ok(&["plot", empty.to_str().unwrap(), "--out", out]);
    let svg = std::fs::read_to_string(dir.path().join("empty_compensation.svg")).unwrap();
    assert!(svg.ends_with("</svg>\n") && !svg.contains("class=\"mean\""));

    let single = dir.path().join("single.csv");
    std::fs::write(&single, format!("{header}\n1,0.5,0,0.5,0,0,0,0\n")).unwrap();
    ok(&["plot", single.to_str().unwrap(), "--out", out]);
    let svg = std::fs::read_to_string(dir.path().join("single_pseudo_regret.svg")).unwrap();
    assert_eq!(svg.matches("<circle class=\"mean\"").count(), 1);

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, format!("# c\n{header}\n1,0.5,0\n")).unwrap();
    let (c, err) = code(&["plot", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(c, 2);
    assert!(err.contains("bad.csv:3:"), "{err}");
}
