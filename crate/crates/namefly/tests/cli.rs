//! The command-line binary end to end on a tiny corpus.

use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
seed = 17

[synth]
names = 2
persons_per_name = 3
papers_per_person = 8

[embed]
dim = 8
epochs = 1

[matcher_train]
epochs = 2

[decider_train]
epochs = 5

[joint]
max_rounds = 1
"#;

fn namefly(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_namefly"))
        .arg("--config")
        .arg(dir.join("tiny.toml"))
        .arg("--out")
        .arg(dir.join("run"))
        .args(args)
        .output()
        .unwrap()
}

fn tiny_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tiny.toml"), TINY).unwrap();
    dir
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn assert_error(o: &Output, code: i32, kind: &str) {
    assert_eq!(o.status.code(), Some(code), "stderr: {}", stderr(o));
    let err = stderr(o);
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(lines.len(), 1, "one error line expected: {err}");
    assert!(
        lines[0].starts_with(&format!("namefly: error={kind} code={code} reason=")),
        "{err}"
    );
}

#[test]
fn full_run_then_stage_commands() {
    let dir = tiny_dir();
    let out = namefly(dir.path(), &["pipeline"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let run = dir.path().join("run");
    for f in [
        "corpus.json",
        "embed.manifest",
        "embed.bin",
        "triplets.jsonl",
        "matcher.ckpt",
        "matcher.pre.ckpt",
        "decision.jsonl",
        "decider.ckpt",
        "history.jsonl",
        "report.json",
        "report.txt",
        "report.pre.json",
        "run_config.json",
        "train_log.json",
    ] {
        assert!(run.join(f).exists(), "missing {f}");
    }
    let history = std::fs::read_to_string(run.join("history.jsonl")).unwrap();
    assert_eq!(history.lines().count(), 1);
    let first: serde_json::Value = serde_json::from_str(history.lines().next().unwrap()).unwrap();
    for key in [
        "round",
        "matcher_loss",
        "decider_loss",
        "hr1",
        "f1_pos",
        "f1_nil",
    ] {
        assert!(first.get(key).is_some(), "history lacks {key}");
    }
    let log: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("train_log.json")).unwrap())
            .unwrap();
    assert_eq!(
        log["train-match"]["epoch_losses"].as_array().unwrap().len(),
        2
    );
    assert_eq!(
        log["train-decide"]["epoch_losses"]
            .as_array()
            .unwrap()
            .len(),
        5
    );

    // the report does not depend on the worker count
    let before = std::fs::read(run.join("report.json")).unwrap();
    let again = Command::new(env!("CARGO_BIN_EXE_namefly"))
        .env("NAMEFLY_THREADS", "3")
        .arg("--config")
        .arg(dir.path().join("tiny.toml"))
        .arg("--out")
        .arg(&run)
        .arg("evaluate")
        .output()
        .unwrap();
    assert!(again.status.success(), "{}", stderr(&again));
    assert_eq!(before, std::fs::read(run.join("report.json")).unwrap());

    // checkpoint trained as Combined, evaluated as BP
    assert_error(
        &namefly(dir.path(), &["--variant", "bp", "evaluate"]),
        2,
        "data",
    );

    for stage in ["features", "baseline"] {
        let o = namefly(dir.path(), &[stage]);
        assert!(o.status.success(), "{stage}: {}", stderr(&o));
    }
    assert!(run.join("features.csv").exists());
    assert!(run.join("features.test.csv").exists());
    let baseline: serde_json::Value =
        serde_json::from_slice(&std::fs::read(run.join("baseline.json")).unwrap()).unwrap();
    assert!(baseline["gbdt"]["hr1"].is_number());
    assert!(baseline["threshold"]["fit"]["threshold"].is_number());

    // predict: the author slot of a person, and a coauthor slot nobody owns
    let corpus: serde_json::Value =
        serde_json::from_slice(&std::fs::read(run.join("corpus.json")).unwrap()).unwrap();
    let person = &corpus["persons"][0];
    let paper_id = person["papers"][0].as_str().unwrap();
    let paper = corpus["papers"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["id"] == paper_id)
        .unwrap();
    let own = paper["authors"]
        .as_array()
        .unwrap()
        .iter()
        .position(|a| a["name"] == person["name"])
        .expect("person's own slot");
    let o = namefly(
        dir.path(),
        &["predict", "--paper", paper_id, "--author", &own.to_string()],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let pred: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let ids: Vec<&str> = pred["candidates"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["person"].as_str().unwrap())
        .collect();
    assert!(ids.contains(&person["id"].as_str().unwrap()));

    let other = (0..paper["authors"].as_array().unwrap().len())
        .find(|&i| i != own)
        .unwrap();
    let o = namefly(
        dir.path(),
        &[
            "predict",
            "--paper",
            paper_id,
            "--author",
            &other.to_string(),
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let pred: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(pred["candidates"].as_array().unwrap().is_empty());
    assert!(pred["assignment"].is_null());

    assert_error(
        &namefly(
            dir.path(),
            &["predict", "--paper", "no-such-paper", "--author", "0"],
        ),
        2,
        "data",
    );
}

#[test]
fn usage_errors_exit_1() {
    let dir = tiny_dir();
    assert_error(&namefly(dir.path(), &[]), 1, "usage");
    assert_error(
        &namefly(dir.path(), &["--set", "matcher.depth=3", "gen-synth"]),
        1,
        "usage",
    );
    assert_error(
        &namefly(dir.path(), &["--variant", "knrm", "gen-synth"]),
        1,
        "usage",
    );
    let o = Command::new(env!("CARGO_BIN_EXE_namefly"))
        .args(["--config", "/nonexistent/x.toml", "gen-synth"])
        .output()
        .unwrap();
    assert_error(&o, 1, "usage");
}

#[test]
fn missing_inputs_exit_2() {
    let dir = tiny_dir();
    assert_error(&namefly(dir.path(), &["evaluate"]), 2, "data");
    assert!(namefly(dir.path(), &["gen-synth"]).status.success());
    assert_error(&namefly(dir.path(), &["train-match"]), 2, "data");
}

#[test]
fn divergence_exits_3() {
    let dir = tiny_dir();
    for stage in ["gen-synth", "train-embed", "sample-triplets"] {
        assert!(namefly(dir.path(), &[stage]).status.success());
    }
    let o = namefly(
        dir.path(),
        &["--set", "matcher_train.lr=1e308", "train-match"],
    );
    assert_error(&o, 3, "numeric");
}

#[test]
fn help_exits_0() {
    let o = Command::new(env!("CARGO_BIN_EXE_namefly"))
        .arg("--help")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("joint-finetune"));
}
