use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn terraword(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_terraword")).args(args).current_dir(cwd).output().unwrap()
}

fn json_stdout(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    if o.stdout.is_empty() {
        return Value::Null;
    }
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn bot_run_wins_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = terraword(&["run", "--bot", "--seed", "7", "--event-log", "ev.txt", "--prompt-log", "p.log"], d);
    let report = json_stdout(&o);
    assert_eq!(report["outcome"], "win");
    assert!(report["elapsed_s"].as_f64().unwrap() <= 1800.0);

    let a = json_stdout(&terraword(&["run", "--script", "ev.txt", "--seed", "7"], d));
    let b = json_stdout(&terraword(&["run", "--script", "ev.txt", "--seed", "7", "--out", "r.json"], d));
    assert_eq!(b, Value::Null);
    let b: Value = serde_json::from_str(&std::fs::read_to_string(d.join("r.json")).unwrap()).unwrap();
    assert_eq!(a["digest"], report["digest"]);
    assert_eq!(b["digest"], report["digest"]);

    let o = terraword(&["analyze", "p.log", "--grids", "r.json"], d);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("Prompt lengths"));
    assert!(text.contains("Tile occurrences over"));
}

#[test]
fn empty_script_loses_at_thirty_minutes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.txt"), "# nothing\n").unwrap();
    let r = json_stdout(&terraword(&["run", "--script", "empty.txt", "--seed", "2"], dir.path()));
    assert_eq!(r["outcome"], "lose");
    assert_eq!(r["elapsed_s"].as_f64().unwrap(), 1800.0);
}

#[test]
fn invalid_inputs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.txt"), "0 explode\n").unwrap();
    std::fs::write(d.join("rejected.txt"), "0 terraform 15 forest\n").unwrap();
    std::fs::write(d.join("bad.toml"), "tick_seconds = -1.0\n").unwrap();
    std::fs::write(d.join("bad.log"), "not a log line\n").unwrap();
    let cases: [(&[&str], i32); 8] = [
        (&["run"], 2),
        (&["run", "--script", "bad.txt"], 2),
        (&["run", "--script", "missing.txt"], 2),
        (&["run", "--bot", "--config", "bad.toml"], 2),
        (&["run", "--script", "rejected.txt"], 3),
        (&["analyze", "bad.log"], 2),
        (&["audit-generator"], 2),
        (&["audit-generator", "--prompt", "forest", "--seeds", "x..y"], 2),
    ];
    for (args, code) in cases {
        let o = terraword(args, d);
        assert_eq!(o.status.code(), Some(code), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = terraword(&["analyze", "bad.log", "--lenient"], d);
    assert_eq!(o.status.code(), Some(2), "an all-bad log has nothing to report");
}

#[test]
fn audit_reports_figure_prompts() {
    let dir = tempfile::tempdir().unwrap();
    let r = json_stdout(&terraword(
        &["audit-generator", "--prompt", "a river in a forest", "--prompt", "a flooded village", "--seeds", "0..10"],
        dir.path(),
    ));
    let share = |p: usize, group: &str| {
        r["prompts"][p]["groups"].as_array().unwrap().iter().find(|g| g["group"] == group).unwrap()["percentage"]
            .as_f64()
            .unwrap()
    };
    assert!(share(0, "water") >= 10.0 && share(0, "trees") >= 10.0);
    assert!(share(1, "water") >= 10.0 && share(1, "houses") >= 10.0);
    assert!(r["prompts"][0]["deterministic"].as_bool().unwrap());
}

#[test]
fn audit_repeated_seed_has_no_diversity_and_random_prompts_are_valid() {
    let dir = tempfile::tempdir().unwrap();
    let r = json_stdout(&terraword(&["audit-generator", "--prompt", "lake", "--seeds", "4,4"], dir.path()));
    assert_eq!(r["prompts"][0]["diversity"].as_f64(), Some(0.0));
    let r = json_stdout(&terraword(&["audit-generator", "--random-prompts", "100", "--seeds", "0,1"], dir.path()));
    assert_eq!(r["prompts"].as_array().unwrap().len(), 100);
    assert_eq!(r["all_valid"], true);
}
