use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn bw() -> PathBuf {
    corpus().join("blocksworld/domain.pddl")
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_domain-recon")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// The recorded config with absolute paths and its output in `out`.
fn recorded_config(dir: &Path) -> PathBuf {
    let src = corpus().join("recorded");
    let text = std::fs::read_to_string(src.join("experiment.json")).unwrap();
    let mut cfg: serde_json::Value = serde_json::from_str(&text).unwrap();
    cfg["corpus_dir"] = corpus().to_str().unwrap().into();
    cfg["output_dir"] = dir.join("out").to_str().unwrap().into();
    for m in cfg["models"].as_array_mut().unwrap() {
        let rel = m["backend"]["path"].as_str().unwrap().to_string();
        m["backend"]["path"] = src.join(rel).to_str().unwrap().into();
    }
    let file = dir.join("experiment.json");
    std::fs::write(&file, cfg.to_string()).unwrap();
    file
}

#[test]
fn plan_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let problem = corpus().join("blocksworld/p01.pddl");
    let plans = dir.path().join("plans.txt");
    let o = cli(&["plan", "--domain", path(&bw()), "--problem", path(&problem), "--k", "3", "--out", path(&plans)]);
    assert!(o.status.success(), "{o:?}");
    let text = std::fs::read_to_string(&plans).unwrap();
    assert!(text.starts_with("; plan 1 (cost 2)\n(pick-up b1)\n(stack b1 b2)\n"), "{text}");
    assert_eq!(text.matches("; plan").count(), 3);

    let one = dir.path().join("one.txt");
    std::fs::write(&one, "; optimal\n(pick-up b1)\n\n(stack b1 b2)\n").unwrap();
    let o = cli(&["validate", "--domain", path(&bw()), "--problem", path(&problem), "--plan", path(&one)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "valid");

    std::fs::write(&one, "(stack b1 b2)\n").unwrap();
    let o = cli(&["validate", "--domain", path(&bw()), "--problem", path(&problem), "--plan", path(&one)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "step 0: missing (holding b1)");
}

#[test]
fn classify_recorded_responses() {
    let resp = corpus().join("recorded/responses");
    let o = cli(&[
        "classify",
        "--domain",
        path(&bw()),
        "--action",
        "put-down",
        "--response",
        path(&resp.join("llama-70b-chat.txt")),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("Semantic/TError\tARE=4\t"), "{}", stdout(&o));

    let o = cli(&[
        "classify",
        "--domain",
        path(&bw()),
        "--action",
        "put-down",
        "--response",
        path(&resp.join("llama-13b.txt")),
        "--k",
        "10",
        "--json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["result"], "Diff/OPApp");
    assert_eq!(v["are"], 2);
}

#[test]
fn describe_prints_each_class() {
    let base = cli(&["describe", "--domain", path(&bw()), "--action", "unstack"]);
    assert_eq!(stdout(&base).trim(), "The action 'unstack' will have a hand unstack a block x from a block y.");
    let flipped = cli(&["describe", "--domain", path(&bw()), "--action", "unstack", "--class", "flipped"]);
    assert!(stdout(&flipped).starts_with("The action 'unstack' will have a hand unstack a block x from a block y, if "));
    let all = cli(&["describe", "--domain", path(&bw()), "--class", "random", "--seed", "3", "--predicates"]);
    let text = stdout(&all);
    assert!(text.starts_with("Allowed Predicates:\n(handempty) : "), "{text}");
    assert_eq!(text.matches("The action").count(), 4);
}

#[test]
fn run_report_and_prompts_on_the_recorded_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let config = recorded_config(dir.path());
    let o = cli(&["run", "--config", path(&config)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    for f in ["records.jsonl", "records.csv", "table.csv", "are_hist.csv", "summary.txt", "diagnostics.jsonl"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let table = std::fs::read_to_string(out.join("table.csv")).unwrap();
    assert!(table.contains("llama-70b-chat,Semantic,TError,1,100.00"), "{table}");
    let first = std::fs::read(out.join("records.csv")).unwrap();

    let again = dir.path().join("again");
    let o = cli(&["report", "--records", path(&out.join("records.jsonl")), "--out", path(&again)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("starcoder"));
    assert_eq!(std::fs::read(again.join("records.csv")).unwrap(), first);

    let o = cli(&["prompts", "--config", path(&config)]);
    let line: serde_json::Value = serde_json::from_str(stdout(&o).lines().next().unwrap()).unwrap();
    assert_eq!(line["key"], "2af6b30ff1705be9");
    assert_eq!(line["prompt_id"], "blocksworld/put-down/random/000");
}

#[test]
fn model_tag_override_runs_one_model() {
    let dir = tempfile::tempdir().unwrap();
    let config = recorded_config(dir.path());
    let replay = corpus().join("recorded/replay/llama-13b.json");
    let o = cli(&[
        "run",
        "--config",
        path(&config),
        "--backend",
        "replay",
        "--replay-file",
        path(&replay),
        "--model-tag",
        "solo",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let records = std::fs::read_to_string(dir.path().join("out/records.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 1);
    assert!(records.contains("\"model_tag\":\"solo\""));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(cli(&["run", "--config", path(&missing)]).status.code(), Some(1));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"models\": []}").unwrap();
    assert_eq!(cli(&["run", "--config", path(&bad)]).status.code(), Some(1));

    let config = recorded_config(dir.path());
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, "{}").unwrap();
    let o = cli(&["run", "--config", path(&config), "--backend", "replay", "--replay-file", path(&empty)]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));

    let o = cli(&["classify", "--domain", path(&bw()), "--action", "put-down", "--response", path(&missing)]);
    assert_eq!(o.status.code(), Some(3));

    let o = cli(&["report", "--records", path(&missing)]);
    assert_eq!(o.status.code(), Some(3));
}
