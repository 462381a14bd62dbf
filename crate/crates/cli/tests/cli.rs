use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn data() -> PathBuf {
    root().join("data/replication_panel.csv")
}

fn bnk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bnk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// `paper.cfg` with some keys replaced, so the full pipeline runs in seconds.
fn small_config(dir: &Path, replace: &[(&str, &str)]) -> PathBuf {
    let text = std::fs::read_to_string(root().join("paper.cfg")).unwrap();
    let mut lines: Vec<String> = text
        .lines()
        .filter(|l| {
            let key = l.split('=').next().unwrap_or("").trim();
            !replace.iter().any(|(k, _)| *k == key)
        })
        .map(String::from)
        .collect();
    lines.extend(replace.iter().map(|(k, v)| format!("{k} = {v}")));
    let path = dir.join("small.cfg");
    std::fs::write(&path, lines.join("\n")).unwrap();
    path
}

const SMALL: [(&str, &str); 4] = [
    ("grid", "0.1:0.9:0.2, 0.5:9.5:1.5"),
    ("appendix.grid", "0.1:0.9:0.2, 0.5:4.5:1"),
    ("lm.draws", "40"),
    ("data", "placeholder"),
];

fn small(dir: &Path) -> PathBuf {
    let data = data();
    let mut replace = SMALL.to_vec();
    replace[3].1 = s(&data);
    small_config(dir, &replace)
}

#[test]
fn replicate_writes_every_table_and_figure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path());
    let out = dir.path().join("run");
    ok(&bnk(&["replicate", "--config", s(&cfg), "--out", s(&out)]));
    for i in 1..=6 {
        assert!(out.join(format!("table{i}.csv")).is_file(), "table{i}.csv");
    }
    for f in ["fig2.svg", "fig3.svg", "manifest.txt", "grid_is.csv", "grid_nkpc.csv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let svg = std::fs::read_to_string(out.join("fig2.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    let t3 = std::fs::read_to_string(out.join("table3.csv")).unwrap();
    assert!(t3.starts_with("Parameter,CS_R,CS_N,Gamma_hat\n"), "{t3}");
    assert_eq!(t3.lines().count(), 3);
    let t1 = std::fs::read_to_string(out.join("table1.csv")).unwrap();
    assert!(t1.starts_with("Parameter,Estimate,s.d.,t-stat\nm_bar,"), "{t1}");
    assert_eq!(t1.lines().count(), 11);
}

#[test]
fn gamma_min_at_or_above_one_minus_alpha_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = bnk(&[
        "two-step-cs",
        "--alpha",
        "0.1",
        "--gamma-min",
        "0.95",
        "--out",
        s(dir.path()),
        "--data",
        s(&data()),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("gamma_min"), "{err}");
}

#[test]
fn rerun_gives_identical_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(&bnk(&[
            "two-step-cs",
            "--equation",
            "nkpc",
            "--grid",
            "0.1:0.9:0.1, 0.5:9.5:1",
            "--data",
            s(&data()),
            "--out",
            s(&out),
        ]));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["grid_nkpc.csv", "cs_nkpc.csv", "region_nkpc.svg"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn manifest_lists_every_setting_and_reproduces_itself() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    ok(&bnk(&["solve", "--out", s(&first), "--seed", "7"]));
    let manifest = std::fs::read_to_string(first.join("manifest.txt")).unwrap();
    for key in [
        "seed = 7",
        "alpha = 0.05",
        "gamma_min = 0.05",
        "grid = 0.01:0.99:0.01, 0.01:10:0.01",
        "hac_lags = 4",
        "lm.draws = 10000",
        "bounds.gamma",
        "transform.x = linear_detrend",
        "m_bar = 0.6799",
        "appendix.alpha = 0.1",
        "sample.first = 1962Q2",
    ] {
        assert!(manifest.contains(key), "missing `{key}` in\n{manifest}");
    }
    let second = dir.path().join("second");
    let cfg = first.join("manifest.txt");
    ok(&bnk(&["solve", "--config", s(&cfg), "--out", s(&second)]));
    let again = std::fs::read_to_string(second.join("manifest.txt")).unwrap();
    assert_eq!(again.replace(s(&second), "OUT"), manifest.replace(s(&first), "OUT"));
}

#[test]
fn subcommands_share_resolved_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let body = |cmd: &str| {
        let out = dir.path().join(cmd);
        let _ = bnk(&[cmd, "--out", s(&out), "--data", s(&data()), "--grid", "0.2:0.8:0.3, 1:9:4"]);
        let text = std::fs::read_to_string(out.join("manifest.txt")).unwrap();
        text.lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("out ="))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(body("solve"), body("fit-gmm"));
}

#[test]
fn unknown_flags_and_config_keys_fail() {
    assert!(!bnk(&["solve", "--no-such-flag"]).status.success());
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "alhpa = 0.1\n").unwrap();
    let out = bnk(&["solve", "--config", s(&cfg), "--out", s(dir.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("alhpa"));
}

#[test]
fn missing_data_is_a_diagnostic_not_a_panic() {
    let dir = tempfile::tempdir().unwrap();
    let out = bnk(&["fit-ml", "--data", "/no/such/file.csv", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/file.csv"));
}

#[test]
fn solve_and_simulate_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    ok(&bnk(&["solve", "--out", s(&out)]));
    let reduced = std::fs::read_to_string(out.join("reduced.csv")).unwrap();
    assert!(reduced.contains("kappa,"));
    ok(&bnk(&["simulate", "--out", s(&out), "--seed", "11"]));
    let sim = std::fs::read_to_string(out.join("simulated.csv")).unwrap();
    assert!(sim.starts_with("date,"));
    assert_eq!(sim.lines().count(), 201);
}

#[test]
fn worker_count_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |workers: &str| {
        Command::new(env!("CARGO_BIN_EXE_bnk"))
            .args(["solve", "--out", s(dir.path())])
            .env("BNK_WORKERS", workers)
            .output()
            .unwrap()
    };
    ok(&run("1"));
    assert!(!run("0").status.success());
    assert!(!run("many").status.success());
}
