use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn dynhd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynhd"))
        .args(args)
        .env_remove("DYNHD_OUTPUT_ROOT")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = dynhd(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn code(args: &[&str]) -> i32 {
    dynhd(args).status.code().unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap()
}

fn jsonl(p: &Path) -> Vec<Value> {
    std::fs::read_to_string(p)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

struct Fixture {
    tmp: TempDir,
    data: String,
}

impl Fixture {
    fn new() -> Self {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("synth").display().to_string();
        ok(&["synth", "--out", &out, "--features", "5", "--classes", "3", "--per-class", "60", "--separation", "4", "--seed", "9"]);
        let data = tmp.path().join("synth/data.csv").display().to_string();
        Fixture { tmp, data }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.tmp.path().join(rel)
    }

    fn p(&self, rel: &str) -> String {
        self.path(rel).display().to_string()
    }

    fn train(&self, out: &str, extra: &[&str]) -> PathBuf {
        let o = self.p(out);
        let mut args = vec!["train", "--out", &o, "--train", &self.data, "--seed", "2"];
        if !extra.contains(&"--dim") {
            args.extend(["--dim", "64"]);
        }
        args.extend_from_slice(extra);
        ok(&args);
        self.path(out)
    }
}

#[test]
fn static_single_iteration_has_nominal_effective_dim() {
    let fx = Fixture::new();
    let dir = fx.train("t", &["--mode", "static", "--max-iters", "1"]);
    let rows = jsonl(&dir.join("report.jsonl"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["effective_dim"], 64);
    assert_eq!(rows[0]["regenerated"], 0);
    assert_eq!(json(&dir.join("summary.json"))["effective_dim"], 64);
}

#[test]
fn dynamic_regeneration_respects_cap() {
    let fx = Fixture::new();
    let dir = fx.train("t", &["--mode", "dynamic", "--max-iters", "8", "--regen-rate", "25", "--patience", "8"]);
    let rows = jsonl(&dir.join("report.jsonl"));
    let mut effective = 64;
    for r in &rows {
        let regen = r["regenerated"].as_u64().unwrap();
        assert!(regen <= 16);
        effective += regen;
        assert_eq!(r["effective_dim"].as_u64().unwrap(), effective);
    }
    assert_eq!(rows.last().unwrap()["regenerated"], 0);
}

#[test]
fn dump_regen_writes_one_file_per_regenerating_iteration() {
    let fx = Fixture::new();
    let dir = fx.train("t", &["--max-iters", "4", "--patience", "4", "--dump-regen"]);
    let iters = jsonl(&dir.join("report.jsonl")).len();
    let dumped = std::fs::read_dir(dir.join("regen")).unwrap().count();
    assert_eq!(dumped, iters - 1);
}

#[test]
fn eval_on_encoded_prototypes_is_perfect() {
    let fx = Fixture::new();
    let dir = fx.train("t", &["--max-iters", "3"]);
    let model = json(&dir.join("model.json"));
    let dim = model["dim"].as_u64().unwrap() as usize;
    let labels: Vec<String> = model["model"]["labels"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| l.as_str().unwrap().to_owned())
        .collect();
    let classes: Vec<f64> = model["model"]["classes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let mut csv = (0..dim).map(|i| format!("h{i}")).collect::<Vec<_>>().join(",") + ",label\n";
    for (c, label) in labels.iter().enumerate() {
        let row: Vec<String> = classes[c * dim..(c + 1) * dim].iter().map(|v| format!("{v:?}")).collect();
        csv += &format!("{},{label}\n", row.join(","));
    }
    std::fs::write(fx.path("protos.csv"), csv).unwrap();
    let (m, d, e) = (dir.display().to_string(), fx.p("protos.csv"), fx.p("e"));
    ok(&["eval", "--out", &e, "--model-dir", &m, "--data", &d, "--encoded"]);
    assert_eq!(json(&fx.path("e/eval.json"))["accuracy"], 1.0);
}

#[test]
fn top_k_accuracies_are_non_decreasing() {
    let fx = Fixture::new();
    let dir = fx.train("t", &["--max-iters", "2"]).display().to_string();
    let e = fx.p("e");
    ok(&["eval", "--out", &e, "--model-dir", &dir, "--data", &fx.data, "--k", "1,2,3"]);
    let top: Vec<f64> = json(&fx.path("e/eval.json"))["top_k"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p[1].as_f64().unwrap())
        .collect();
    assert_eq!(top.len(), 3);
    assert!(top.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(top[2], 1.0);
}

#[test]
fn zero_rate_noise_has_zero_loss_and_full_grid() {
    let fx = Fixture::new();
    let a = fx.train("a", &["--max-iters", "2"]).display().to_string();
    let b = fx.train("b", &["--max-iters", "2", "--dim", "128"]).display().to_string();
    let n = fx.p("n");
    ok(&["noise", "--out", &n, "--model-dir", &a, "--model-dir", &b, "--data", &fx.data, "--bits", "1,4,8", "--rates", "0", "--trials", "3"]);
    let text = std::fs::read_to_string(fx.path("n/noise.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let loss = header.iter().position(|h| *h == "mean_loss").unwrap();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_owned).collect()).collect();
    assert_eq!(rows.len(), 2 * 3);
    for r in &rows {
        assert_eq!(r[loss].parse::<f64>().unwrap(), 0.0);
    }

    let n2 = fx.p("n2");
    ok(&["noise", "--out", &n2, "--model-dir", &a, "--data", &fx.data, "--bits", "1,8", "--rates", "0,5,10", "--trials", "2"]);
    let rows = std::fs::read_to_string(fx.path("n2/noise.csv")).unwrap().lines().count() - 1;
    assert_eq!(rows, 2 * 3);
}

#[test]
fn single_point_sweep_matches_train_then_eval() {
    let fx = Fixture::new();
    let common = ["--train", fx.data.as_str(), "--split", "0.6,0.2,0.2", "--dim", "64", "--max-iters", "3", "--seed", "4"];
    let s = fx.p("s");
    let mut args = vec!["sweep-weights", "--out", &s, "--points", "2,1,0.5"];
    args.extend_from_slice(&common);
    ok(&args);
    let t = fx.p("t");
    let mut args = vec!["train", "--out", &t, "--alpha", "2", "--beta", "1", "--theta", "0.5"];
    args.extend_from_slice(&common);
    ok(&args);

    let sweep = std::fs::read_to_string(fx.path("s/sweep.csv")).unwrap();
    let mut lines = sweep.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(lines.next().is_none());
    let acc: f64 = row[header.iter().position(|h| *h == "accuracy").unwrap()].parse().unwrap();
    let test_acc = json(&fx.path("t/summary.json"))["test_accuracy"].as_f64().unwrap();
    assert_eq!(acc, test_acc);
}

#[test]
fn roc_reports_each_class() {
    let fx = Fixture::new();
    let dir = fx.train("t", &["--max-iters", "2"]).display().to_string();
    let r = fx.p("r");
    ok(&["roc", "--out", &r, "--model-dir", &dir, "--data", &fx.data]);
    let rep = json(&fx.path("r/roc.json"));
    let classes = rep["classes"].as_array().unwrap();
    assert_eq!(classes.len(), 3);
    for c in classes {
        let auc = c["auc"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&auc));
    }
    let csv = std::fs::read_to_string(fx.path("r/roc.csv")).unwrap();
    assert!(csv.starts_with("class,fpr,tpr"));
}

#[test]
fn config_echo_reparses_to_the_same_run() {
    let fx = Fixture::new();
    fx.train("t", &["--max-iters", "2", "--alpha", "1.5", "--regen-rate", "15"]);
    let echoed = fx.p("t/config.toml");
    let r = fx.p("r");
    ok(&["train", "--out", &r, "--config", &echoed]);
    assert_eq!(
        std::fs::read(fx.path("t/config.toml")).unwrap(),
        std::fs::read(fx.path("r/config.toml")).unwrap()
    );
    assert_eq!(
        std::fs::read(fx.path("t/model.json")).unwrap(),
        std::fs::read(fx.path("r/model.json")).unwrap()
    );
}

#[test]
fn output_root_env_sets_default_directory() {
    let fx = Fixture::new();
    let root = fx.path("root");
    let out = Command::new(env!("CARGO_BIN_EXE_dynhd"))
        .args(["synth", "--per-class", "5"])
        .env("DYNHD_OUTPUT_ROOT", &root)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(root.join("synth/data.csv").is_file());
}

#[test]
fn exit_codes_distinguish_failure_kinds() {
    let fx = Fixture::new();
    let o = fx.p("x");
    assert_eq!(code(&["train", "--out", &o, "--train", &fx.p("missing.csv")]), 2);
    assert_eq!(code(&["train", "--out", &o, "--train", &fx.data, "--dim", "0"]), 1);
    assert_eq!(code(&["train", "--out", &o, "--train", &fx.data, "--label-column", "nope"]), 2);
    assert_eq!(code(&["sweep-weights", "--out", &o, "--train", &fx.data, "--points", "1,1,2"]), 1);
    assert_eq!(code(&["train", "--out", &o, "--train", &fx.data, "--split", "0.5,0.6,0.1"]), 1);

    let bad = fx.path("bad.toml");
    std::fs::write(&bad, "[train]\nunknown_key = 3\n").unwrap();
    assert_eq!(code(&["train", "--out", &o, "--config", &bad.display().to_string()]), 1);

    std::fs::write(fx.path("nan.csv"), "a,b,label\n1,NaN,x\n2,3,y\n").unwrap();
    assert_eq!(code(&["train", "--out", &o, "--train", &fx.p("nan.csv"), "--split", "1,0,0"]), 2);
    assert_eq!(code(&["train", "--out", &o, "--train", &fx.data, "--gain", "1e308"]), 3);

    let dir = fx.train("t", &["--max-iters", "1"]).display().to_string();
    std::fs::write(fx.path("narrow.csv"), "a,b,label\n1,2,0\n").unwrap();
    let out = dynhd(&["eval", "--out", &o, "--model-dir", &dir, "--data", &fx.p("narrow.csv")]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains('5') && msg.contains('2'), "{msg}");
    assert_eq!(code(&["eval", "--out", &o, "--model-dir", &dir, "--data", &fx.data, "--k", "4"]), 1);
    assert_eq!(code(&["noise", "--out", &o, "--model-dir", &dir, "--data", &fx.data, "--dims", "512"]), 2);
}
