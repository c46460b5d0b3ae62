//! Exit-code and stream contracts of the `coevo` binary.

mod common;

use std::path::Path;
use std::process::{Command, Output};

fn coevo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coevo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn coevo_in(dir: &Path, args: &[&str], path_override: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_coevo"));
    cmd.args(args).current_dir(dir);
    if let Some(path) = path_override {
        cmd.env("PATH", path);
    }
    cmd.output().expect("binary runs")
}

#[test]
fn unreadable_repo_exits_2_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = coevo(&[
        "mine",
        dir.path().join("missing").to_str().unwrap(),
        "--since",
        "2024-01-01",
        "--until",
        "2024-12-31",
        "--out",
        dir.path().join("corpus").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("repository unavailable"), "{stderr}");
}

#[test]
fn empty_date_range_exits_0_with_zero_packs() {
    let root = tempfile::tempdir().unwrap();
    let fixture = common::build_mining_fixture(&root.path().join("repo"));
    let out = coevo(&[
        "mine",
        fixture.root.to_str().unwrap(),
        "--since",
        "2030-01-01",
        "--until",
        "2030-12-31",
        "--out",
        root.path().join("corpus").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("exported:   0"), "{stdout}");
}

#[test]
fn score_missing_baseline_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let patch = dir.path().join("p.diff");
    std::fs::write(&patch, "--- a/x.c\n+++ b/x.c\n@@ -1 +1 @@\n-a\n+b\n").unwrap();
    let out = coevo(&[
        "score",
        "--baseline",
        dir.path().join("missing.c").to_str().unwrap(),
        "--ref",
        patch.to_str().unwrap(),
        "--gen",
        patch.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn score_unrecoverable_patch_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let baseline = dir.path().join("x.c");
    std::fs::write(&baseline, "int a;\n").unwrap();
    // Context that exists nowhere in the baseline and cannot be re-anchored.
    let patch = dir.path().join("p.diff");
    std::fs::write(
        &patch,
        "--- a/x.c\n+++ b/x.c\n@@ -1,2 +1,2 @@\n missing context\n-gone\n+new\n",
    )
    .unwrap();
    let out = coevo(&[
        "score",
        "--baseline",
        baseline.to_str().unwrap(),
        "--ref",
        patch.to_str().unwrap(),
        "--gen",
        patch.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn score_emits_report_json_for_canonical_migration() {
    let dir = tempfile::tempdir().unwrap();
    let baseline = dir.path().join("widget.c");
    std::fs::write(
        &baseline,
        "static int widget_get_id(struct ida *ida)\n{\n    return ida_simple_get(ida, 0, 0, GFP_KERNEL);\n}\n",
    )
    .unwrap();
    let patch = dir.path().join("p.diff");
    std::fs::write(
        &patch,
        "--- a/widget.c\n+++ b/widget.c\n@@ -3 +3 @@\n-    return ida_simple_get(ida, 0, 0, GFP_KERNEL);\n+    return ida_alloc(ida, GFP_KERNEL);\n",
    )
    .unwrap();
    let out = coevo(&[
        "score",
        "--baseline",
        baseline.to_str().unwrap(),
        "--ref",
        patch.to_str().unwrap(),
        "--gen",
        patch.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    assert_eq!(report["ast_sim"], 1.0);
    assert_eq!(report["composite"], 1.0);
}

#[test]
fn run_rejects_zero_max_attempts_as_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = coevo(&[
        "run",
        dir.path().to_str().unwrap(),
        "--max-attempts",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("invalid value"), "{stderr}");
}

#[test]
fn missing_compiler_exits_4() {
    let root = tempfile::tempdir().unwrap();
    let fixture = common::build_mining_fixture(&root.path().join("repo"));
    let corpus = root.path().join("corpus");
    let mine = coevo(&[
        "mine",
        fixture.root.to_str().unwrap(),
        "--since",
        "2024-01-01",
        "--until",
        "2024-12-31",
        "--out",
        corpus.to_str().unwrap(),
    ]);
    assert_eq!(mine.status.code(), Some(0));

    // An empty PATH makes the local compiler unspawnable.
    let empty = root.path().join("emptybin");
    std::fs::create_dir_all(&empty).unwrap();
    let out = coevo_in(
        root.path(),
        &["run", corpus.to_str().unwrap()],
        Some(empty.to_str().unwrap()),
    );
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn report_on_malformed_log_exits_2_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("sessions.jsonl");
    std::fs::write(&log, "{\"not a session\":\n").unwrap();
    let out = coevo(&["report", log.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 1"), "{stderr}");
}

#[test]
fn full_pipeline_through_the_binary() {
    let root = tempfile::tempdir().unwrap();
    let fixture = common::build_mining_fixture(&root.path().join("repo"));
    let corpus = root.path().join("corpus");

    let mine = coevo(&[
        "mine",
        fixture.root.to_str().unwrap(),
        "--since",
        "2024-01-01",
        "--until",
        "2024-12-31",
        "--out",
        corpus.to_str().unwrap(),
    ]);
    assert_eq!(mine.status.code(), Some(0), "{}", String::from_utf8_lossy(&mine.stderr));

    let validate = coevo(&["validate", corpus.to_str().unwrap()]);
    assert_eq!(validate.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&validate.stdout).contains("2 pack(s) valid"));

    let run = coevo(&["run", corpus.to_str().unwrap(), "--backend", "mock", "--jobs", "2"]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let table = String::from_utf8_lossy(&run.stdout);
    assert!(table.contains("api_migration"), "{table}");
    assert!(table.contains("regression"), "{table}");

    let report = coevo(&["report", corpus.join("logs").to_str().unwrap()]);
    assert_eq!(report.status.code(), Some(0), "{}", String::from_utf8_lossy(&report.stderr));
    let json: serde_json::Value = serde_json::from_slice(&report.stdout).expect("JSON stdout");
    assert!(json["batch"]["per_category"]["api_migration"]["n_compiled"].is_number());
}
