//! Mining integration tests against real git fixture repositories.

mod common;

use coevo::casepack::{load_corpus, CoarseLabel};
use coevo::mining::{
    build_linkage, enumerate_driver_commits, mine_to_corpus, GitCliRepo, KeywordScorer,
    MiningError, RepoBackend,
};

use common::{build_mining_fixture, git, git_head, WIDGET_V1, WIDGET_V2};

#[test]
fn three_driver_commits_and_a_merge_enumerate_as_three() {
    let root = tempfile::tempdir().unwrap();
    let dir = root.path();
    git(dir, "2024-03-01", &["init", "-q", "-b", "main"]);

    let commit = |date: &str, rel: &str, content: &str, msg: &str| {
        std::fs::create_dir_all(dir.join(rel).parent().unwrap()).unwrap();
        std::fs::write(dir.join(rel), content).unwrap();
        git(dir, date, &["add", "."]);
        git(dir, date, &["commit", "-q", "-m", msg]);
        git_head(dir)
    };

    let c1 = commit("2024-03-01", "drivers/a.c", "int a;\n", "drivers: one");
    git(dir, "2024-03-01", &["branch", "side"]);
    let c2 = commit("2024-03-02", "drivers/a.c", "int a2;\n", "drivers: two");
    let c3 = commit("2024-03-03", "drivers/b.c", "int b;\n", "drivers: three");

    git(dir, "2024-03-04", &["checkout", "-q", "side"]);
    commit("2024-03-04", "docs/readme.txt", "notes\n", "docs: unrelated");
    git(dir, "2024-03-05", &["checkout", "-q", "main"]);
    git(dir, "2024-03-05", &["merge", "-q", "--no-ff", "-m", "Merge side", "side"]);
    let merge = git_head(dir);

    let repo = GitCliRepo::open(dir).unwrap();
    let records =
        enumerate_driver_commits(&repo, "drivers/", "2024-03-01", "2024-03-31").unwrap();
    let hashes: Vec<&str> = records.iter().map(|r| r.hash.as_str()).collect();
    assert_eq!(hashes, vec![c1.as_str(), c2.as_str(), c3.as_str()]);
    assert!(!hashes.contains(&merge.as_str()));

    // Non-merge invariant: at most one parent each.
    for record in &records {
        assert!(repo.parents(&record.hash).unwrap().len() <= 1);
    }
}

#[test]
fn subtree_matching_nothing_is_empty() {
    let root = tempfile::tempdir().unwrap();
    let fixture = build_mining_fixture(&root.path().join("repo"));
    let repo = GitCliRepo::open(&fixture.root).unwrap();
    let records =
        enumerate_driver_commits(&repo, "sound/", "2024-01-01", "2024-12-31").unwrap();
    assert!(records.is_empty());
}

#[test]
fn unreadable_repository_is_unavailable() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        GitCliRepo::open(dir.path().join("nope")),
        Err(MiningError::RepositoryUnavailable(_))
    ));
    // A plain directory without git metadata is also unavailable.
    assert!(matches!(
        GitCliRepo::open(dir.path()),
        Err(MiningError::RepositoryUnavailable(_))
    ));
}

#[test]
fn linkage_matches_repository_content() {
    let root = tempfile::tempdir().unwrap();
    let fixture = build_mining_fixture(&root.path().join("repo"));
    let repo = GitCliRepo::open(&fixture.root).unwrap();

    let linkage =
        build_linkage(&repo, &fixture.driver_rename, &fixture.kernel_rename).unwrap();
    assert_eq!(
        linkage.pre_driver_sources["drivers/widget/widget.c"],
        WIDGET_V1
    );
    assert_eq!(
        linkage.post_driver_sources["drivers/widget/widget.c"],
        WIDGET_V2
    );
    assert!(linkage.kernel_patch.contains("widget_api.h"));
    coevo::udiff::parse_diff(&linkage.kernel_patch).unwrap();
}

#[test]
fn linkage_error_paths() {
    let root = tempfile::tempdir().unwrap();
    let fixture = build_mining_fixture(&root.path().join("repo"));
    let repo = GitCliRepo::open(&fixture.root).unwrap();

    let bogus = "0".repeat(40);
    assert!(matches!(
        build_linkage(&repo, &fixture.driver_rename, &bogus),
        Err(MiningError::UnknownCommit(_))
    ));

    // The root commit has no parent.
    let out = std::process::Command::new("git")
        .args(["rev-list", "--max-parents=0", "HEAD"])
        .current_dir(&fixture.root)
        .output()
        .unwrap();
    let root_commit = String::from_utf8_lossy(&out.stdout).trim().to_string();
    assert!(matches!(
        build_linkage(&repo, &root_commit, &fixture.kernel_rename),
        Err(MiningError::OrphanCommit(_))
    ));

    assert!(matches!(
        build_linkage(&repo, &fixture.driver_rename, &fixture.driver_rename),
        Err(MiningError::SelfLinkage(_))
    ));
}

#[test]
fn export_without_label_reports_the_hash() {
    let root = tempfile::tempdir().unwrap();
    let fixture = build_mining_fixture(&root.path().join("repo"));
    let repo = GitCliRepo::open(&fixture.root).unwrap();
    let linkage =
        build_linkage(&repo, &fixture.driver_rename, &fixture.kernel_rename).unwrap();
    let record = repo.commit_record(&fixture.driver_rename).unwrap();
    let out = root.path().join("corpus");
    std::fs::create_dir_all(&out).unwrap();
    let err = coevo::mining::export_case_packs(
        &[(record, linkage)],
        &std::collections::BTreeMap::new(),
        &out,
    )
    .unwrap_err();
    match err {
        MiningError::MissingLabel(hash) => assert_eq!(hash, fixture.driver_rename),
        other => panic!("unexpected: {other:?}"),
    }
}

#[test]
fn exported_packs_parse_and_carry_pre_sources() {
    let root = tempfile::tempdir().unwrap();
    let fixture = build_mining_fixture(&root.path().join("repo"));
    let repo = GitCliRepo::open(&fixture.root).unwrap();
    let out = root.path().join("corpus");
    std::fs::create_dir_all(&out).unwrap();

    let summary = mine_to_corpus(
        &repo,
        "drivers/",
        "2024-01-01",
        "2024-12-31",
        &KeywordScorer,
        0.5,
        &out,
    )
    .unwrap();
    assert_eq!(summary.exported, 2);
    assert_eq!(summary.unlinked, 1, "the revert has no kernel-hash trailer");

    // load_corpus re-validates every pack against the schema invariants.
    let packs = load_corpus(&out).unwrap();
    assert_eq!(packs.len(), 2);
    let rename_pack = packs
        .iter()
        .find(|p| p.hash == fixture.driver_rename)
        .expect("rename pack present");
    assert_eq!(rename_pack.kernel_hash, fixture.kernel_rename);
    assert_eq!(rename_pack.contents["drivers/widget/widget.c"], WIDGET_V1);
    assert_eq!(rename_pack.type_label.coarse, CoarseLabel::ApiMigration);
    assert_eq!(rename_pack.type_label.confidence, 1.0);

    // Grouped by coarse category on disk.
    assert!(out
        .join("api_migration")
        .join(format!("{}.json", fixture.driver_rename))
        .is_file());
    assert!(out
        .join("regression")
        .join(format!("{}.json", fixture.driver_regression))
        .is_file());
}
