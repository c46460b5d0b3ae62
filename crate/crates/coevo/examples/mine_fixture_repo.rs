//! Mine a small git repository into a case-pack corpus: enumerate driver
//! commits, filter by keyword confidence, dedupe, link via commit-message
//! trailers, and export grouped JSON packs plus an index.
//!
//! Builds its own throwaway repository, so it needs `git` on PATH.
//!
//! Run with: cargo run -p coevo --example mine_fixture_repo

use std::path::Path;
use std::process::Command;

use coevo::casepack::CorpusIndex;
use coevo::mining::{mine_to_corpus, GitCliRepo, KeywordScorer};

fn git(dir: &Path, date: &str, args: &[&str]) {
    let status = Command::new("git")
        .args(args)
        .current_dir(dir)
        .env("GIT_AUTHOR_NAME", "Example")
        .env("GIT_AUTHOR_EMAIL", "example@example.com")
        .env("GIT_COMMITTER_NAME", "Example")
        .env("GIT_COMMITTER_EMAIL", "example@example.com")
        .env("GIT_AUTHOR_DATE", format!("{date}T12:00:00+00:00"))
        .env("GIT_COMMITTER_DATE", format!("{date}T12:00:00+00:00"))
        .status()
        .expect("git runs");
    assert!(status.success(), "git {args:?} failed");
}

fn head(dir: &Path) -> String {
    let out = Command::new("git")
        .args(["rev-parse", "HEAD"])
        .current_dir(dir)
        .output()
        .expect("git runs");
    String::from_utf8_lossy(&out.stdout).trim().to_string()
}

fn commit_file(dir: &Path, date: &str, rel: &str, content: &str, message: &str) -> String {
    let path = dir.join(rel);
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, content).unwrap();
    git(dir, date, &["add", "."]);
    git(dir, date, &["commit", "-q", "-m", message]);
    head(dir)
}

fn main() -> anyhow::Result<()> {
    let root = tempfile::tempdir()?;
    let repo_dir = root.path().join("repo");
    std::fs::create_dir_all(&repo_dir)?;
    git(&repo_dir, "2024-05-01", &["init", "-q", "-b", "main"]);

    let kernel = commit_file(
        &repo_dir,
        "2024-05-01",
        "include/linux/widget_api.h",
        "int widget_alloc(int size);\n",
        "widget core: rename widget_old_alloc to widget_alloc",
    );
    commit_file(
        &repo_dir,
        "2024-05-02",
        "drivers/widget/widget.c",
        "static int widget_old_alloc(int n)\n{\n    return n;\n}\n\nint widget_probe(void)\n{\n    return widget_old_alloc(16);\n}\n",
        "widget: add initial widget support",
    );
    commit_file(
        &repo_dir,
        "2024-05-03",
        "drivers/widget/widget.c",
        "static int widget_alloc(int n)\n{\n    return n;\n}\n\nint widget_probe(void)\n{\n    return widget_alloc(16);\n}\n",
        &format!(
            "widget: rename widget_old_alloc to widget_alloc api\n\nKernel-Hash: {kernel}\nDriver-Update-Type: rename"
        ),
    );

    let corpus = root.path().join("corpus");
    std::fs::create_dir_all(&corpus)?;
    let repo = GitCliRepo::open(&repo_dir)?;
    let summary = mine_to_corpus(
        &repo,
        "drivers/",
        "2024-05-01",
        "2024-05-31",
        &KeywordScorer,
        0.5,
        &corpus,
    )?;
    println!("{summary:#?}");

    let index = CorpusIndex::load(&corpus)?;
    for entry in &index.entries {
        println!("exported {} ({})", entry.file, entry.coarse);
        let text = std::fs::read_to_string(corpus.join(&entry.file))?;
        println!("{text}");
    }
    Ok(())
}
