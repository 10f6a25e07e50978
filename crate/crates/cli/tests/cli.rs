use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn setar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_setar")).args(args).env_remove("SETAR_THREADS").output().expect("spawn setar")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_ok(out: &Output) {
    assert!(out.status.success(), "setar failed: {}", stderr(out));
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).to_str().unwrap().to_owned()
    }

    /// Small 2-regime collection with 8 held-out points.
    fn simulate(&self) {
        assert_ok(&setar(&[
            "simulate", "--kind", "setar2", "--n", "12", "--length", "150", "--seed", "1",
            "--out", &self.arg("train.txt"), "--holdout", "8", "--actuals-out", &self.arg("actuals.txt"),
        ]));
    }
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn train_forecast_evaluate_pipeline() {
    let ws = Workspace::new();
    ws.simulate();
    assert_ok(&setar(&[
        "train", "--input", &ws.arg("train.txt"), "--lag", "2", "--model-out", &ws.arg("tree.sexp"),
        "--report", &ws.arg("train.json"),
    ]));
    assert!(read(&ws.path("tree.sexp")).starts_with("(setar-tree"));
    let report: serde_json::Value = serde_json::from_str(&read(&ws.path("train.json"))).unwrap();
    assert_eq!(report["command"], "train");
    assert_eq!(report["model"]["kind"], "tree");

    assert_ok(&setar(&[
        "forecast", "--model", &ws.arg("tree.sexp"), "--input", &ws.arg("train.txt"), "--horizon", "8",
        "--out", &ws.arg("fc.csv"),
    ]));
    let csv = read(&ws.path("fc.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "series_id,h1,h2,h3,h4,h5,h6,h7,h8");
    assert_eq!(lines.count(), 12);

    assert_ok(&setar(&[
        "evaluate", "--forecasts", &ws.arg("fc.csv"), "--actuals", &ws.arg("actuals.txt"),
        "--training", &ws.arg("train.txt"), "--out", &ws.arg("eval.json"),
    ]));
    let eval: serde_json::Value = serde_json::from_str(&read(&ws.path("eval.json"))).unwrap();
    let msmape = eval["aggregates"]["mean_msmape"].as_f64().unwrap();
    assert!(msmape.is_finite() && msmape >= 0.0);
}

#[test]
fn forest_model_files_forecast_like_run() {
    let ws = Workspace::new();
    ws.simulate();
    assert_ok(&setar(&[
        "train-forest", "--input", &ws.arg("train.txt"), "--lag", "2", "--trees", "3", "--seed", "5",
        "--model-out", &ws.arg("forest.sexp"),
    ]));
    assert!(read(&ws.path("forest.sexp")).starts_with("(setar-forest"));
    for name in ["a.csv", "b.csv"] {
        assert_ok(&setar(&[
            "forecast", "--model", &ws.arg("forest.sexp"), "--input", &ws.arg("train.txt"), "--horizon", "4",
            "--out", &ws.arg(name),
        ]));
    }
    assert_eq!(read(&ws.path("a.csv")), read(&ws.path("b.csv")));
}

#[test]
fn baseline_equals_depth_zero_tree() {
    let ws = Workspace::new();
    ws.simulate();
    let run = |extra: &[&str], out: &str| {
        let input = ws.arg("train.txt");
        let out = ws.arg(out);
        let mut args = vec!["run", "--input", &input, "--lag", "2", "--horizon", "6", "--out", &out];
        args.extend_from_slice(extra);
        assert_ok(&setar(&args));
    };
    run(&["--baseline", "pr"], "pr.csv");
    run(&["--max-depth", "0"], "depth0.csv");
    assert_eq!(read(&ws.path("pr.csv")), read(&ws.path("depth0.csv")));
}

#[test]
fn run_is_identical_across_thread_counts() {
    let ws = Workspace::new();
    ws.simulate();
    for (threads, out) in [("1", "one.csv"), ("3", "three.csv")] {
        assert_ok(&setar(&[
            "--threads", threads, "run", "--input", &ws.arg("train.txt"), "--horizon", "5", "--forest", "--trees", "4",
            "--out", &ws.arg(out), "--model-out", &ws.arg(&format!("{out}.sexp")),
        ]));
    }
    assert_eq!(read(&ws.path("one.csv")), read(&ws.path("three.csv")));
    assert_eq!(read(&ws.path("one.csv.sexp")), read(&ws.path("three.csv.sexp")));
}

#[test]
fn long_csv_with_covariates() {
    let ws = Workspace::new();
    let mut csv = String::from("series_id,timestep,value,temp,day\n");
    for s in 0..4 {
        for t in 0..62 {
            let value = if t < 60 { format!("{}", ((s * 7 + t) % 11) as f64 * 0.3 + t as f64 * 0.01) } else { String::new() };
            let day = ["mon", "tue", "wed"][t % 3];
            csv.push_str(&format!("s{s},{t},{value},{},{day}\n", (t as f64 * 0.2).sin()));
        }
    }
    std::fs::write(ws.path("long.csv"), csv).unwrap();
    std::fs::write(ws.path("input.cfg"), "# covariates\ncov.temp.kind=numeric\ncov.day.kind=categorical\n").unwrap();
    assert_ok(&setar(&[
        "train", "--input", &ws.arg("long.csv"), "--input-config", &ws.arg("input.cfg"), "--lag", "3",
        "--model-out", &ws.arg("tree.sexp"),
    ]));
    assert_ok(&setar(&[
        "forecast", "--model", &ws.arg("tree.sexp"), "--input", &ws.arg("long.csv"), "--input-config", &ws.arg("input.cfg"),
        "--horizon", "2", "--out", &ws.arg("fc.csv"),
    ]));
    assert_eq!(read(&ws.path("fc.csv")).lines().count(), 5);

    // Two future rows are available; a third step has no covariates.
    let out = setar(&[
        "forecast", "--model", &ws.arg("tree.sexp"), "--input", &ws.arg("long.csv"), "--input-config", &ws.arg("input.cfg"),
        "--horizon", "3", "--out", &ws.arg("fc3.csv"),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).starts_with("error[missing-future-covariates]:"), "{}", stderr(&out));
    assert!(!ws.path("fc3.csv").exists());
}

#[test]
fn usage_errors_exit_2() {
    let ws = Workspace::new();
    ws.simulate();
    let input = ws.arg("train.txt");
    let out = ws.arg("x.csv");

    let conflicting = setar(&["run", "--input", &input, "--horizon", "4", "--forest", "--baseline", "pr", "--out", &out]);
    assert_eq!(conflicting.status.code(), Some(2));

    let no_lag = setar(&["train", "--input", &input, "--model-out", &out]);
    assert_eq!(no_lag.status.code(), Some(2));
    assert!(stderr(&no_lag).starts_with("error[invalid-config]:"));

    let zero_threads = setar(&["--threads", "0", "run", "--input", &input, "--horizon", "4", "--out", &out]);
    assert_eq!(zero_threads.status.code(), Some(2));

    let bad_alpha = setar(&["run", "--input", &input, "--horizon", "4", "--alpha0", "1.5", "--out", &out]);
    assert_eq!(bad_alpha.status.code(), Some(2));
    assert!(!ws.path("x.csv").exists());
}

#[test]
fn data_errors_exit_3_with_one_line() {
    let ws = Workspace::new();
    std::fs::write(ws.path("short.txt"), "a:1,2,3\nb:4,5,6,7,8,9,10\n").unwrap();
    let out = setar(&["run", "--input", &ws.arg("short.txt"), "--lag", "2", "--horizon", "2", "--out", &ws.arg("o.csv")]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.starts_with("error[series-too-short]:"), "{err}");

    std::fs::write(ws.path("bad.txt"), "a:1,2,x\n").unwrap();
    let out = setar(&["train", "--input", &ws.arg("bad.txt"), "--lag", "1", "--model-out", &ws.arg("m.sexp")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).starts_with("error[parse]:"), "{}", stderr(&out));

    let missing = setar(&["forecast", "--model", &ws.arg("nope.sexp"), "--input", &ws.arg("bad.txt"), "--horizon", "1", "--out", &ws.arg("f.csv")]);
    assert_eq!(missing.status.code(), Some(3));
    assert!(stderr(&missing).starts_with("error[io]:"));

    std::fs::write(ws.path("corrupt.sexp"), "(setar-tree (version 1)").unwrap();
    std::fs::write(ws.path("ok.txt"), "a:1,2,3,4,5\n").unwrap();
    let corrupt = setar(&["forecast", "--model", &ws.arg("corrupt.sexp"), "--input", &ws.arg("ok.txt"), "--horizon", "1", "--out", &ws.arg("f.csv")]);
    assert_eq!(corrupt.status.code(), Some(3));
}

#[test]
fn simulate_is_seeded() {
    let ws = Workspace::new();
    for name in ["a.txt", "b.txt"] {
        assert_ok(&setar(&["simulate", "--kind", "mackey-glass", "--n", "3", "--length", "50", "--seed", "9", "--out", &ws.arg(name)]));
    }
    let a = read(&ws.path("a.txt"));
    assert_eq!(a, read(&ws.path("b.txt")));
    assert_eq!(a.lines().count(), 3);
}
