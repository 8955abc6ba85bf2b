use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mxchaos"));
    c.env_remove("MXCHAOS_THREADS");
    c
}

fn run(args: &[&str]) -> (i32, Value, String) {
    run_with(bin(), args)
}

fn run_with(mut cmd: Command, args: &[&str]) -> (i32, Value, String) {
    let out: Output = cmd.args(args).output().unwrap();
    let report = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), report, String::from_utf8_lossy(&out.stderr).into_owned())
}

fn schema() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schema/report.schema.json");
    let s: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&s).unwrap()
}

fn assert_valid(report: &Value) {
    let v = schema();
    let errors: Vec<String> = v.iter_errors(report).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn build_ledger(dir: &Path, args: &[&str]) -> PathBuf {
    let out = dir.join("ledger.json");
    let mut all = vec!["construct", "--ledger-out", path_str(&out)];
    all.extend_from_slice(args);
    let (code, report, err) = run(&all);
    assert_eq!(code, 0, "{err}");
    assert_valid(&report);
    out
}

#[test]
fn invalid_config_lists_every_problem() {
    let (code, _, err) = run(&["construct", "--alphabet", "1", "--stages", "0", "--maps", "2", "--blocks", "2"]);
    assert_eq!(code, 2);
    for needle in ["alphabet size must be at least 2", "--stages must be at least 1", "missing z", "missing x"] {
        assert!(err.contains(needle), "{needle} not in {err}");
    }
}

#[test]
fn unknown_flag_is_rejected() {
    let (code, _, _) = run(&["cf", "check", "--lemma", "growth", "--seed", "1", "--colour", "red"]);
    assert_eq!(code, 2);
}

#[test]
fn stochastic_runs_need_a_seed() {
    let (code, _, err) = run(&["gauss", "scrambled", "--pairs", "2", "--horizon", "100"]);
    assert_eq!(code, 2);
    assert!(err.contains("--seed"));
}

#[test]
fn lemma_check_records_worst_case() {
    let (code, report, _) = run(&["cf", "check", "--lemma", "erase-digit", "--samples", "10000", "--seed", "7"]);
    assert_eq!(code, 0);
    assert_valid(&report);
    assert_eq!(report["result"]["violations"], 0);
    assert!(report["result"]["worst_case"]["digits"].is_array());
    assert_eq!(report["config"]["seed"], 7);
}

#[test]
fn identical_runs_give_identical_reports() {
    let args = ["gauss", "scrambled", "--seed", "11", "--pairs", "4", "--horizon", "500"];
    let (_, mut a, _) = run(&args);
    let (_, mut b, _) = run_with(
        {
            let mut c = bin();
            c.env("MXCHAOS_THREADS", "1");
            c
        },
        &args,
    );
    assert_valid(&a);
    for r in [&mut a, &mut b] {
        r["timestamp"] = Value::Null;
        r["config"]["threads"] = Value::Null;
    }
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn bad_thread_count() {
    let mut c = bin();
    c.env("MXCHAOS_THREADS", "0");
    let (code, _, err) = run_with(c, &["cf", "check", "--lemma", "length", "--seed", "1", "--samples", "10"]);
    assert_eq!(code, 2);
    assert!(err.contains("MXCHAOS_THREADS"));
}

#[test]
fn jarnik_outside_range_warns() {
    let (code, report, err) = run(&["cf", "dim", "--digit-bound", "4", "--depth", "4", "--jarnik"]);
    assert_eq!(code, 0);
    assert!(err.contains("warning"));
    assert_eq!(report["warnings"].as_array().unwrap().len(), 1);
    assert!(report["references"].as_array().unwrap().iter().all(|r| !r["source"].as_str().unwrap().is_empty()));
}

#[test]
fn budget_overrun_exits_five() {
    let (code, report, _) = run(&["cf", "dim", "--digit-bound", "10", "--depth", "9"]);
    assert_eq!(code, 5);
    assert_valid(&report);
    assert!(report["error"].is_string());
}

#[test]
fn config_file_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"lemma": "tiling", "samples": 50, "seed": 3}"#).unwrap();
    let (code, report, _) = run(&["cf", "check", "--config", path_str(&cfg)]);
    assert_eq!(code, 0);
    assert_eq!(report["config"]["args"]["samples"], 50);

    std::fs::write(&cfg, r#"{"lemma": "tiling", "seed": 3, "bogus": 1}"#).unwrap();
    let (code, _, _) = run(&["cf", "check", "--config", path_str(&cfg)]);
    assert_eq!(code, 2);
}

#[test]
fn construct_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let ledger = build_ledger(
        dir.path(),
        &["--alphabet", "2", "--stages", "3", "--maps", "4", "--blocks", "4", "--x-seed", "1", "--z-seed", "2"],
    );
    let l = path_str(&ledger);
    for k in ["1", "2", "3"] {
        let (code, report, _) = run(&["verify", "proximal", "--ledger", l, "--stage", k]);
        assert_eq!(code, 0);
        assert_valid(&report);
    }
    let (code, _, _) = run(&["verify", "return", "--ledger", l, "--stage", "2", "--family-seeds", "1,2,3"]);
    assert_eq!(code, 0);
    let (code, _, _) = run(&["verify", "scrambled", "--ledger", l, "--x-seed", "1", "--y-seed", "2"]);
    assert_eq!(code, 0);
    // A point is never scrambled with itself.
    let (code, report, _) = run(&["verify", "scrambled", "--ledger", l, "--x-seed", "1", "--y-seed", "1"]);
    assert_eq!(code, 3);
    assert_eq!(report["pass"], false);
}

#[test]
fn targets_on_full_stage_one() {
    let dir = tempfile::tempdir().unwrap();
    let ledger = build_ledger(dir.path(), &["--alphabet", "2", "--schedule", "full", "--x-seed", "1", "--z-seed", "2"]);
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, r#"{"d": 1, "members": [{"x_prefix": [1], "targets": [[2]]}, {"x_prefix": [2], "targets": [[1]]}]}"#)
        .unwrap();
    let (code, report, _) =
        run(&["verify", "target", "--ledger", path_str(&ledger), "--stage", "1", "--spec", path_str(&spec)]);
    assert_eq!(code, 0);
    assert_valid(&report);
    let q = report["result"]["target_time"]["q"].as_str().unwrap();
    assert!(q.bytes().all(|b| b.is_ascii_digit()) && q != "0", "{q}");
}

#[test]
fn missing_tuple_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let ledger = build_ledger(
        dir.path(),
        &["--alphabet", "2", "--stages", "2", "--maps", "4", "--blocks", "2", "--x-seed", "1", "--z-seed", "2"],
    );
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, r#"{"d": 1, "members": [{"x_prefix": [1, 2], "targets": [[2, 2]]}]}"#).unwrap();
    let (code, report, _) =
        run(&["verify", "target", "--ledger", path_str(&ledger), "--stage", "2", "--spec", path_str(&spec)]);
    assert_eq!(code, 4);
    assert_valid(&report);
}

#[test]
fn stream_files() {
    let dir = tempfile::tempdir().unwrap();
    let z = dir.path().join("z.txt");
    std::fs::write(&z, "1 2 2\n1").unwrap();
    let x = dir.path().join("x.json");
    std::fs::write(&x, r#"{"kind": "hashed", "alphabet": 3, "seed": 4, "max_symbol": 3, "w_capped": false}"#)
        .unwrap();
    let args = ["construct", "--alphabet", "3", "--maps", "3", "--blocks", "3", "--z", path_str(&z), "--x", path_str(&x)];
    let (code, report, err) = run(&args);
    assert_eq!(code, 0, "{err}");
    assert_valid(&report);
}

#[test]
fn countable_weishu_with_holder() {
    let dir = tempfile::tempdir().unwrap();
    let ledger = build_ledger(
        dir.path(),
        &["--alphabet", "countable", "--stages", "3", "--maps", "3", "--blocks", "3", "--x-seed", "1", "--z-seed", "2"],
    );
    let (code, report, err) = run(&[
        "dim", "weishu", "--ledger", path_str(&ledger), "--depth", "12", "--holder", "--pairs", "20", "--seed", "5",
    ]);
    assert!(code == 0 || code == 3, "{err}");
    assert_valid(&report);
    assert!(report["result"]["holder"]["witness"]["c"].is_number());
}

#[test]
fn gauss_commands() {
    let (code, report, _) = run(&["gauss", "invariance", "--a", "1/5", "--b", "2/3", "--branches", "10000"]);
    assert_eq!(code, 0);
    assert_valid(&report);
    let (code, report, _) = run(&["gauss", "exactness", "--interval", "1/3,1/2", "--interval", "0.9,0.95"]);
    assert_eq!(code, 0);
    assert_eq!(report["result"]["probes"][0]["reached"], 1);
    let (code, _, _) = run(&["gauss", "exactness", "--interval", "1/2"]);
    assert_eq!(code, 2);
}

#[test]
fn certify_canonical_cover() {
    let (code, report, _) = run(&["cf", "certify", "--prefix", "1,1,1,1,1,1,1,1", "--canonical-depth", "11"]);
    assert_eq!(code, 0);
    assert_valid(&report);
    assert_eq!(report["result"]["merged"], 900);
}
