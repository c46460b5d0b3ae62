//! Shared fixtures for integration tests: a planted git history for mining,
//! randomized diff fixtures checked against the system `diff`/`patch` tools,
//! and small self-contained C case packs.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use coevo::casepack::{CasePack, FineLabel, TaxonomyLabel};

/// Run git in `dir` with fixed author/committer identity and date, panicking
/// on failure. Dates drive deterministic history and chronological order.
pub fn git(dir: &Path, date: &str, args: &[&str]) {
    let out = Command::new("git")
        .args(args)
        .current_dir(dir)
        .env("GIT_AUTHOR_NAME", "Fixture")
        .env("GIT_AUTHOR_EMAIL", "fixture@example.com")
        .env("GIT_COMMITTER_NAME", "Fixture")
        .env("GIT_COMMITTER_EMAIL", "fixture@example.com")
        .env("GIT_AUTHOR_DATE", format!("{date}T12:00:00+00:00"))
        .env("GIT_COMMITTER_DATE", format!("{date}T12:00:00+00:00"))
        .env("LC_ALL", "C")
        .output()
        .expect("git runs");
    assert!(
        out.status.success(),
        "git {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
}

pub fn git_head(dir: &Path) -> String {
    let out = Command::new("git")
        .args(["rev-parse", "HEAD"])
        .current_dir(dir)
        .output()
        .expect("git runs");
    String::from_utf8_lossy(&out.stdout).trim().to_string()
}

fn write(dir: &Path, rel: &str, content: &str) {
    let path = dir.join(rel);
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, content).unwrap();
}

pub const WIDGET_V1: &str = "static int widget_ids;\n\nstatic int widget_old_alloc(int size)\n{\n    widget_ids += size;\n    return widget_ids;\n}\n\nint widget_probe(void)\n{\n    return widget_old_alloc(16);\n}\n";
pub const WIDGET_V2: &str = "static int widget_ids;\n\nstatic int widget_alloc(int size)\n{\n    widget_ids += size;\n    return widget_ids;\n}\n\nint widget_probe(void)\n{\n    return widget_alloc(16);\n}\n";
/// V2 with trailing whitespace planted on two lines: the backport variant.
pub const WIDGET_V2_WS: &str = "static int widget_ids;\n\nstatic int widget_alloc(int size)  \n{\n    widget_ids += size;\n    return widget_ids;\n}\n\nint widget_probe(void)\n{\n    return widget_alloc(16); \n}\n";
pub const WIDGET_V3: &str = "static int widget_ids;\n\nstatic int widget_alloc(int size)  \n{\n    widget_ids += size;\n    return widget_ids;\n}\n\nint widget_probe(void)\n{\n    return widget_alloc(16) > 0 ? 0 : -1; \n}\n";

/// Hashes of the commits planted by [`build_mining_fixture`].
pub struct MiningFixture {
    pub root: PathBuf,
    pub kernel_rename: String,
    pub kernel_probe: String,
    pub driver_initial: String,
    pub driver_rename: String,
    pub driver_revert: String,
    pub driver_backport: String,
    pub driver_regression: String,
    pub merge: String,
}

/// Plant a repository with two kernel-side commits, four driver commits
/// (one adaptation, one revert, one whitespace-variant backport, one
/// regression fix), an unrelated side-branch commit, and a merge commit.
pub fn build_mining_fixture(root: &Path) -> MiningFixture {
    std::fs::create_dir_all(root).unwrap();
    git(root, "2024-01-01", &["init", "-q", "-b", "main"]);

    write(root, "include/linux/widget_api.h", "int widget_old_alloc(int size);\n");
    git(root, "2024-01-01", &["add", "."]);
    git(root, "2024-01-01", &["commit", "-q", "-m", "widget core: add widget allocation header"]);

    write(root, "drivers/widget/widget.c", WIDGET_V1);
    git(root, "2024-01-02", &["add", "."]);
    git(root, "2024-01-02", &["commit", "-q", "-m", "widget: add initial widget support"]);
    let driver_initial = git_head(root);

    git(root, "2024-01-02", &["branch", "aux"]);

    write(root, "include/linux/widget_api.h", "int widget_alloc(int size);\n");
    git(root, "2024-01-03", &["add", "."]);
    git(root, "2024-01-03", &["commit", "-q", "-m", "widget core: rename widget_old_alloc to widget_alloc"]);
    let kernel_rename = git_head(root);

    write(root, "drivers/widget/widget.c", WIDGET_V2);
    git(root, "2024-01-04", &["add", "."]);
    git(
        root,
        "2024-01-04",
        &["commit", "-q", "-m", &format!(
            "widget: rename widget_old_alloc to widget_alloc api\n\nKernel-Hash: {kernel_rename}\nDriver-Update-Type: rename"
        )],
    );
    let driver_rename = git_head(root);

    write(root, "drivers/widget/widget.c", WIDGET_V1);
    git(root, "2024-01-05", &["add", "."]);
    git(root, "2024-01-05", &["commit", "-q", "-m", "widget: revert rename adaptation for staging churn"]);
    let driver_revert = git_head(root);

    write(root, "drivers/widget/widget.c", WIDGET_V2_WS);
    git(root, "2024-01-06", &["add", "."]);
    git(
        root,
        "2024-01-06",
        &["commit", "-q", "-m", &format!(
            "widget: rename widget_old_alloc to widget_alloc api [backport]\n\nKernel-Hash: {kernel_rename}\nDriver-Update-Type: rename"
        )],
    );
    let driver_backport = git_head(root);

    write(root, "include/linux/widget_api.h", "int widget_alloc(int size);\n/* probe must return 0 on success */\n");
    git(root, "2024-01-07", &["add", "."]);
    git(root, "2024-01-07", &["commit", "-q", "-m", "widget core: tighten probe return contract"]);
    let kernel_probe = git_head(root);

    write(root, "drivers/widget/widget.c", WIDGET_V3);
    git(root, "2024-01-08", &["add", "."]);
    git(
        root,
        "2024-01-08",
        &["commit", "-q", "-m", &format!(
            "widget: fix probe regression after contract change\n\nKernel-Hash: {kernel_probe}\nDriver-Update-Type: regression"
        )],
    );
    let driver_regression = git_head(root);

    // Unrelated work on the side branch, then a planted merge commit.
    git(root, "2024-01-09", &["checkout", "-q", "aux"]);
    write(root, "drivers/other/noise.c", "int noise_level(void)\n{\n    return 3;\n}\n");
    git(root, "2024-01-09", &["add", "."]);
    git(root, "2024-01-09", &["commit", "-q", "-m", "other: add auxiliary noise module"]);
    git(root, "2024-01-10", &["checkout", "-q", "main"]);
    git(root, "2024-01-10", &["merge", "-q", "--no-ff", "-m", "Merge branch 'aux'", "aux"]);
    let merge = git_head(root);

    MiningFixture {
        root: root.to_path_buf(),
        kernel_rename,
        kernel_probe,
        driver_initial,
        driver_rename,
        driver_revert,
        driver_backport,
        driver_regression,
        merge,
    }
}

/// One randomized baseline/edit pair with the diff produced by GNU diff.
pub struct DiffFixture {
    pub name: String,
    pub old_text: String,
    pub new_text: String,
    pub diff: String,
}

fn random_line(rng: &mut StdRng, index: usize) -> String {
    const WORDS: &[&str] = &[
        "alloc", "probe", "lock", "queue", "flush", "retry", "budget", "grant", "index", "shift",
    ];
    format!(
        "    {}_{}({}); /* L{index} t{} */",
        WORDS[rng.gen_range(0..WORDS.len())],
        rng.gen_range(0..10_000u32),
        rng.gen_range(0..100u32),
        rng.gen_range(0..1_000_000u32),
    )
}

/// Generate `count` fixtures: unique-lined baselines with 1-4 random edits,
/// diffed by the system `diff -u`. A few fixtures lack trailing newlines.
pub fn generate_diff_fixtures(count: usize, seed: u64) -> Vec<DiffFixture> {
    let mut rng = StdRng::seed_from_u64(seed);
    let work = tempfile::tempdir().unwrap();
    let mut fixtures = Vec::new();
    let mut serial = 0usize;
    while fixtures.len() < count {
        serial += 1;
        let n = rng.gen_range(30..=120);
        let old_lines: Vec<String> = (0..n).map(|i| random_line(&mut rng, i)).collect();
        let mut new_lines = old_lines.clone();

        let edits = rng.gen_range(1..=4);
        for _ in 0..edits {
            if new_lines.is_empty() {
                break;
            }
            let at = rng.gen_range(0..new_lines.len());
            match rng.gen_range(0..3) {
                0 => {
                    new_lines[at] = random_line(&mut rng, 10_000 + serial * 10);
                }
                1 => {
                    let fresh = random_line(&mut rng, 20_000 + serial * 10);
                    new_lines.insert(at, fresh);
                }
                _ => {
                    new_lines.remove(at);
                }
            }
        }
        if new_lines == old_lines {
            continue;
        }

        let strip_final_newline = fixtures.len() % 17 == 5;
        let to_text = |lines: &[String]| {
            let mut t = lines.join("\n");
            if !strip_final_newline {
                t.push('\n');
            }
            t
        };
        let old_text = to_text(&old_lines);
        let new_text = to_text(&new_lines);

        let name = format!("fix{serial:03}.c");
        let old_path = work.path().join("old");
        let new_path = work.path().join("new");
        std::fs::write(&old_path, &old_text).unwrap();
        std::fs::write(&new_path, &new_text).unwrap();
        let out = Command::new("diff")
            .arg("-u")
            .arg("--label")
            .arg(format!("a/{name}"))
            .arg("--label")
            .arg(format!("b/{name}"))
            .arg(&old_path)
            .arg(&new_path)
            .output()
            .expect("diff runs");
        assert_eq!(out.status.code(), Some(1), "diff should report changes");
        fixtures.push(DiffFixture {
            name,
            old_text,
            new_text,
            diff: String::from_utf8(out.stdout).unwrap(),
        });
    }
    fixtures
}

/// Apply a diff with GNU patch in a scratch directory; returns the patched
/// file content, or `None` when patch refuses.
pub fn patch_oracle(fixture: &DiffFixture) -> Option<String> {
    let work = tempfile::tempdir().unwrap();
    std::fs::write(work.path().join(&fixture.name), &fixture.old_text).unwrap();
    let diff_path = work.path().join("change.diff");
    std::fs::write(&diff_path, &fixture.diff).unwrap();
    let out = Command::new("patch")
        .arg("-p1")
        .arg("--batch")
        .arg("--input")
        .arg(&diff_path)
        .current_dir(work.path())
        .output()
        .expect("patch runs");
    if !out.status.success() {
        return None;
    }
    Some(std::fs::read_to_string(work.path().join(&fixture.name)).unwrap())
}

/// A one-hunk diff covering the whole file, replacing the 1-based lines
/// named in `replacements`. Old and new texts must have trailing newlines.
pub fn whole_file_replace_diff(
    path: &str,
    old_text: &str,
    replacements: &BTreeMap<usize, String>,
) -> String {
    let old_lines: Vec<&str> = old_text.trim_end_matches('\n').split('\n').collect();
    let n = old_lines.len();
    let mut body = String::new();
    for (i, line) in old_lines.iter().enumerate() {
        match replacements.get(&(i + 1)) {
            Some(new_line) => {
                body.push_str(&format!("-{line}\n"));
                body.push_str(&format!("+{new_line}\n"));
            }
            None => body.push_str(&format!(" {line}\n")),
        }
    }
    format!("--- a/{path}\n+++ b/{path}\n@@ -1,{n} +1,{n} @@\n{body}")
}

/// A self-contained case pack around the widget fixture sources.
pub fn widget_case_pack() -> CasePack {
    let path = "drivers/widget/widget.c";
    let mut replacements = BTreeMap::new();
    replacements.insert(3, "static int widget_alloc(int size)".to_string());
    replacements.insert(11, "    return widget_alloc(16);".to_string());
    let patch = whole_file_replace_diff(path, WIDGET_V1, &replacements);
    let mut contents = BTreeMap::new();
    contents.insert(path.to_string(), WIDGET_V1.to_string());
    CasePack {
        message: "widget: rename widget_old_alloc to widget_alloc api".into(),
        files: vec![path.to_string()],
        patch,
        hash: "a1".repeat(20),
        kernel_hash: "b2".repeat(20),
        type_label: TaxonomyLabel::human(FineLabel::Rename),
        contents,
        link: None,
        description: None,
    }
}

/// Recursively collect relative path -> bytes for a directory tree.
pub fn dir_snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}
