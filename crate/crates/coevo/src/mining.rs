//! Repository mining: enumerate driver-facing commits, filter them through a
//! pluggable confidence-scored classifier, deduplicate backports, reconstruct
//! driver-to-kernel linkage, and export case packs.
//!
//! Repository access goes through [`RepoBackend`]; the default implementation
//! shells out to `git`. Classification goes through [`CommitClassifier`]; the
//! default is a keyword-rule scorer over commit messages. External model
//! filtering plugs in behind the same trait.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::casepack::{
    consolidate_label, serialize_case_pack, CasePack, CasePackError, CoarseLabel, CorpusIndex,
    FineLabel, IndexEntry, TaxonomyLabel,
};
use crate::udiff::{self, LineTag};

/// One commit as extracted from the repository.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub hash: String,
    pub message: String,
    pub paths: Vec<String>,
    /// Unified diff of the commit (git dialect).
    pub diff: String,
    /// ISO-8601 author date.
    pub author_date: String,
}

/// Classifier verdict for one commit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub commit: String,
    pub category: String,
    pub confidence: f64,
}

/// Materialized driver/kernel pairing for one case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkageRecord {
    pub driver_commit: String,
    pub kernel_commit: String,
    /// Touched driver files at the driver commit's parent. Files the commit
    /// creates are absent.
    pub pre_driver_sources: BTreeMap<String, String>,
    /// The triggering kernel commit's diff.
    pub kernel_patch: String,
    /// Touched driver files at the driver commit. Files the commit deletes
    /// are absent.
    pub post_driver_sources: BTreeMap<String, String>,
}

#[derive(Debug, Error)]
pub enum MiningError {
    #[error("repository unavailable: {0}")]
    RepositoryUnavailable(String),
    #[error("invalid range: since {since} is after until {until}")]
    InvalidRange { since: String, until: String },
    #[error("unknown commit: {0}")]
    UnknownCommit(String),
    #[error("orphan commit (no parent): {0}")]
    OrphanCommit(String),
    #[error("classifier failure for {commit}: {detail}")]
    ClassifierFailure { commit: String, detail: String },
    #[error("no taxonomy label for {0}")]
    MissingLabel(String),
    #[error("write failure at {path}: {source}")]
    WriteFailure {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("git: {0}")]
    Git(String),
    #[error("linkage links a commit to itself: {0}")]
    SelfLinkage(String),
    #[error(transparent)]
    CasePack(#[from] CasePackError),
}

/// Read access to a version-controlled source tree.
pub trait RepoBackend {
    /// Non-merge commit hashes touching `subtree` within the date range,
    /// oldest first.
    fn list_hashes(
        &self,
        subtree: &str,
        since: &str,
        until: &str,
    ) -> Result<Vec<String>, MiningError>;
    fn commit_record(&self, hash: &str) -> Result<CommitRecord, MiningError>;
    fn parents(&self, hash: &str) -> Result<Vec<String>, MiningError>;
    fn commit_exists(&self, hash: &str) -> Result<bool, MiningError>;
    /// File content at a revision; `None` when the path does not exist there.
    fn file_at(&self, rev: &str, path: &str) -> Result<Option<String>, MiningError>;
    fn commit_diff(&self, hash: &str) -> Result<String, MiningError>;
}

/// [`RepoBackend`] over the `git` command-line tool.
pub struct GitCliRepo {
    root: PathBuf,
}

impl GitCliRepo {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, MiningError> {
        let repo = GitCliRepo { root: root.into() };
        if !repo.root.is_dir() {
            return Err(MiningError::RepositoryUnavailable(format!(
                "{} is not a directory",
                repo.root.display()
            )));
        }
        repo.git(&["rev-parse", "--git-dir"])
            .map_err(|e| MiningError::RepositoryUnavailable(e.to_string()))?;
        Ok(repo)
    }

    fn git(&self, args: &[&str]) -> Result<String, MiningError> {
        let output = Command::new("git")
            .args(args)
            .current_dir(&self.root)
            .env("LC_ALL", "C")
            .output()
            .map_err(|e| MiningError::Git(format!("failed to run git: {e}")))?;
        if !output.status.success() {
            return Err(MiningError::Git(format!(
                "git {} failed: {}",
                args.join(" "),
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        Ok(String::from_utf8_lossy(&output.stdout).into_owned())
    }
}

impl RepoBackend for GitCliRepo {
    fn list_hashes(
        &self,
        subtree: &str,
        since: &str,
        until: &str,
    ) -> Result<Vec<String>, MiningError> {
        let after = format!("--after={since} 00:00:00");
        let before = format!("--before={until} 23:59:59");
        let out = self.git(&[
            "log",
            "--no-merges",
            "--reverse",
            "--format=%H",
            &after,
            &before,
            "--",
            subtree,
        ])?;
        Ok(out.lines().map(str::to_string).collect())
    }

    fn commit_record(&self, hash: &str) -> Result<CommitRecord, MiningError> {
        if !self.commit_exists(hash)? {
            return Err(MiningError::UnknownCommit(hash.to_string()));
        }
        let message = self
            .git(&["log", "-1", "--format=%B", hash])?
            .trim_end()
            .to_string();
        let author_date = self
            .git(&["log", "-1", "--format=%aI", hash])?
            .trim()
            .to_string();
        let paths = self
            .git(&["diff-tree", "--no-commit-id", "--name-only", "-r", "--root", hash])?
            .lines()
            .map(str::to_string)
            .collect();
        let diff = self.git(&["diff-tree", "-p", "--no-commit-id", "--root", hash])?;
        Ok(CommitRecord {
            hash: hash.to_string(),
            message,
            paths,
            diff,
            author_date,
        })
    }

    fn parents(&self, hash: &str) -> Result<Vec<String>, MiningError> {
        let out = self.git(&["log", "-1", "--format=%P", hash])?;
        Ok(out.split_whitespace().map(str::to_string).collect())
    }

    fn commit_exists(&self, hash: &str) -> Result<bool, MiningError> {
        let spec = format!("{hash}^{{commit}}");
        let status = Command::new("git")
            .args(["cat-file", "-e", &spec])
            .current_dir(&self.root)
            .output()
            .map_err(|e| MiningError::Git(format!("failed to run git: {e}")))?;
        Ok(status.status.success())
    }

    fn file_at(&self, rev: &str, path: &str) -> Result<Option<String>, MiningError> {
        let spec = format!("{rev}:{path}");
        let output = Command::new("git")
            .args(["show", &spec])
            .current_dir(&self.root)
            .output()
            .map_err(|e| MiningError::Git(format!("failed to run git: {e}")))?;
        if output.status.success() {
            Ok(Some(String::from_utf8_lossy(&output.stdout).into_owned()))
        } else {
            Ok(None)
        }
    }

    fn commit_diff(&self, hash: &str) -> Result<String, MiningError> {
        self.git(&["diff-tree", "-p", "--no-commit-id", "--root", hash])
    }
}

fn valid_date(s: &str) -> bool {
    let bytes = s.as_bytes();
    bytes.len() == 10
        && bytes[4] == b'-'
        && bytes[7] == b'-'
        && s.chars()
            .enumerate()
            .all(|(i, c)| matches!(i, 4 | 7) || c.is_ascii_digit())
}

/// List non-merge commits under a subtree in chronological order.
///
/// Commits whose diff carries no parseable hunks (mode-only changes and the
/// like) are dropped; they cannot seed a case pack.
pub fn enumerate_driver_commits(
    repo: &dyn RepoBackend,
    subtree: &str,
    since: &str,
    until: &str,
) -> Result<Vec<CommitRecord>, MiningError> {
    if !valid_date(since) || !valid_date(until) || since > until {
        return Err(MiningError::InvalidRange {
            since: since.to_string(),
            until: until.to_string(),
        });
    }
    let mut records = Vec::new();
    for hash in repo.list_hashes(subtree, since, until)? {
        let record = repo.commit_record(&hash)?;
        if record.paths.is_empty() || udiff::parse_diff(&record.diff).is_err() {
            continue;
        }
        records.push(record);
    }
    Ok(records)
}

/// Confidence-scored relevance classification of a commit.
pub trait CommitClassifier {
    /// Category name this classifier scores for.
    fn category(&self) -> &str;
    fn score(&self, record: &CommitRecord) -> Result<f64, String>;
}

/// Default rule-based scorer: matches API-change vocabulary in the commit
/// message. Strong terms contribute 0.5 each, weak terms 0.25, capped at 1.0.
#[derive(Debug, Clone, Default)]
pub struct KeywordScorer;

const STRONG_TERMS: &[&str] = &[
    "rename",
    "deprecat",
    "migrat",
    "removal",
    "remove",
    "replace",
    "convert to",
    "switch to",
    "regression",
    "adapt to",
    "new api",
];

const WEAK_TERMS: &[&str] = &[
    "api",
    "interface",
    "signature",
    "helper",
    "fallout",
    "upstream",
    "simplify",
    "harden",
];

impl CommitClassifier for KeywordScorer {
    fn category(&self) -> &str {
        "co_evolution"
    }

    fn score(&self, record: &CommitRecord) -> Result<f64, String> {
        let message = record.message.to_lowercase();
        let strong = STRONG_TERMS.iter().filter(|t| message.contains(**t)).count();
        let weak = WEAK_TERMS.iter().filter(|t| message.contains(**t)).count();
        Ok((strong as f64 * 0.5 + weak as f64 * 0.25).min(1.0))
    }
}

/// Guess a fine-grained taxonomy label from message vocabulary. First match
/// in a fixed keyword table wins.
pub fn suggest_fine_label(record: &CommitRecord) -> Option<FineLabel> {
    let message = record.message.to_lowercase();
    const TABLE: &[(&str, FineLabel)] = &[
        ("regression", FineLabel::Regression),
        ("revert", FineLabel::Regression),
        ("rename", FineLabel::Rename),
        ("deprecat", FineLabel::Deprecation),
        ("removal", FineLabel::Removal),
        ("remove", FineLabel::Removal),
        ("transfer", FineLabel::Transfer),
        ("move to", FineLabel::Transfer),
        ("simplif", FineLabel::Simplification),
        ("optimi", FineLabel::Optimisation),
        ("security", FineLabel::Security),
        ("harden", FineLabel::Security),
        ("overflow", FineLabel::Security),
        ("cleanup", FineLabel::Hygiene),
        ("whitespace", FineLabel::Hygiene),
        ("style", FineLabel::Hygiene),
    ];
    TABLE
        .iter()
        .find(|(term, _)| message.contains(term))
        .map(|(_, label)| *label)
}

/// Extract a `Kernel-Hash: <40 hex>` trailer from a commit message.
pub fn kernel_hash_trailer(message: &str) -> Option<String> {
    for line in message.lines() {
        let line = line.trim();
        let lower = line.to_lowercase();
        if let Some(rest) = lower.strip_prefix("kernel-hash:") {
            let value = rest.trim();
            if value.len() == 40 && value.chars().all(|c| c.is_ascii_hexdigit()) {
                // Take the original-case slice, normalized to lowercase.
                return Some(line[line.len() - 40..].to_lowercase());
            }
        }
    }
    None
}

/// Extract a `Driver-Update-Type: <fine label>` trailer.
pub fn label_trailer(message: &str) -> Option<FineLabel> {
    for line in message.lines() {
        let lower = line.trim().to_lowercase();
        if let Some(rest) = lower.strip_prefix("driver-update-type:") {
            if let Ok(label) = rest.trim().parse::<FineLabel>() {
                return Some(label);
            }
        }
    }
    None
}

/// Score every record and retain those at or above `min_confidence`
/// (inclusive) for the classifier's category.
pub fn filter_candidates(
    records: &[CommitRecord],
    classifier: &dyn CommitClassifier,
    min_confidence: f64,
) -> Result<Vec<CandidateScore>, MiningError> {
    assert!(
        (0.0..=1.0).contains(&min_confidence),
        "min_confidence must be within [0,1]"
    );
    let mut retained = Vec::new();
    for record in records {
        let confidence =
            classifier
                .score(record)
                .map_err(|detail| MiningError::ClassifierFailure {
                    commit: record.hash.clone(),
                    detail,
                })?;
        if confidence >= min_confidence {
            retained.push(CandidateScore {
                commit: record.hash.clone(),
                category: classifier.category().to_string(),
                confidence,
            });
        }
    }
    Ok(retained)
}

/// Content fingerprint used for deduplication: file stems plus hunk lines
/// with all whitespace stripped, hunk headers excluded so backports with
/// shifted line numbers still collide.
fn normalized_diff_digest(record: &CommitRecord) -> [u8; 32] {
    let mut hasher = Sha256::new();
    match udiff::parse_diff(&record.diff) {
        Ok(diff) => {
            let mut files: Vec<_> = diff.file_diffs.iter().collect();
            files.sort_by_key(|fd| (fd.old_path.clone(), fd.new_path.clone()));
            for fd in files {
                hasher.update(fd.old_stem().unwrap_or("/dev/null").as_bytes());
                hasher.update([0]);
                hasher.update(fd.new_stem().unwrap_or("/dev/null").as_bytes());
                hasher.update([0]);
                for hunk in &fd.hunks {
                    for line in &hunk.lines {
                        hasher.update(match line.tag {
                            LineTag::Context => b"c",
                            LineTag::Add => b"a",
                            LineTag::Del => b"d",
                        });
                        let stripped: String =
                            line.text.chars().filter(|c| !c.is_whitespace()).collect();
                        hasher.update(stripped.as_bytes());
                        hasher.update([0]);
                    }
                }
            }
        }
        Err(_) => hasher.update(record.diff.as_bytes()),
    }
    hasher.finalize().into()
}

/// Drop records whose normalized diff matches an earlier record's; the
/// earliest is kept. Idempotent.
pub fn dedupe(records: Vec<CommitRecord>) -> Vec<CommitRecord> {
    let mut seen = std::collections::BTreeSet::new();
    records
        .into_iter()
        .filter(|r| seen.insert(normalized_diff_digest(r)))
        .collect()
}

/// Materialize the pre/post driver sources and the triggering kernel patch
/// for one driver commit.
pub fn build_linkage(
    repo: &dyn RepoBackend,
    driver_commit: &str,
    kernel_commit: &str,
) -> Result<LinkageRecord, MiningError> {
    if driver_commit == kernel_commit {
        return Err(MiningError::SelfLinkage(driver_commit.to_string()));
    }
    if !repo.commit_exists(driver_commit)? {
        return Err(MiningError::UnknownCommit(driver_commit.to_string()));
    }
    if !repo.commit_exists(kernel_commit)? {
        return Err(MiningError::UnknownCommit(kernel_commit.to_string()));
    }
    let parents = repo.parents(driver_commit)?;
    let parent = parents
        .first()
        .ok_or_else(|| MiningError::OrphanCommit(driver_commit.to_string()))?;

    let record = repo.commit_record(driver_commit)?;
    let mut pre = BTreeMap::new();
    let mut post = BTreeMap::new();
    for path in &record.paths {
        if let Some(text) = repo.file_at(parent, path)? {
            pre.insert(path.clone(), text);
        }
        if let Some(text) = repo.file_at(driver_commit, path)? {
            post.insert(path.clone(), text);
        }
    }
    Ok(LinkageRecord {
        driver_commit: driver_commit.to_string(),
        kernel_commit: kernel_commit.to_string(),
        pre_driver_sources: pre,
        kernel_patch: repo.commit_diff(kernel_commit)?,
        post_driver_sources: post,
    })
}

/// Build a case pack from a mined commit and its linkage. The patch text is
/// normalized to the canonical rendering.
pub fn case_pack_from_linkage(
    record: &CommitRecord,
    linkage: &LinkageRecord,
    label: TaxonomyLabel,
) -> Result<CasePack, MiningError> {
    let diff = udiff::parse_diff(&record.diff)
        .map_err(|e| MiningError::Git(format!("commit {} diff: {e}", record.hash)))?;
    let mut files = record.paths.clone();
    files.sort();
    let contents = files
        .iter()
        .map(|path| {
            let text = linkage
                .pre_driver_sources
                .get(path)
                .cloned()
                .unwrap_or_default();
            (path.clone(), text)
        })
        .collect();
    let pack = CasePack {
        message: record.message.clone(),
        files,
        patch: udiff::render_diff(&diff),
        hash: record.hash.clone(),
        kernel_hash: linkage.kernel_commit.clone(),
        type_label: label,
        contents,
        link: None,
        description: None,
    };
    pack.validate()?;
    Ok(pack)
}

/// Write one case-pack file per linkage into per-coarse-label subdirectories
/// plus an `index.json`. Output is deterministic: filenames are driver
/// hashes, the index is sorted by hash, and no timestamps are embedded.
pub fn export_case_packs(
    pairs: &[(CommitRecord, LinkageRecord)],
    labels: &BTreeMap<String, TaxonomyLabel>,
    out_dir: &Path,
) -> Result<CorpusIndex, MiningError> {
    let mut entries = Vec::new();
    for (record, linkage) in pairs {
        let label = labels
            .get(&record.hash)
            .cloned()
            .ok_or_else(|| MiningError::MissingLabel(record.hash.clone()))?;
        let coarse = label.coarse;
        let pack = case_pack_from_linkage(record, linkage, label)?;
        let subdir = out_dir.join(coarse.as_str());
        std::fs::create_dir_all(&subdir).map_err(|source| MiningError::WriteFailure {
            path: subdir.clone(),
            source,
        })?;
        let file = subdir.join(format!("{}.json", record.hash));
        std::fs::write(&file, serialize_case_pack(&pack)).map_err(|source| {
            MiningError::WriteFailure {
                path: file.clone(),
                source,
            }
        })?;
        entries.push(IndexEntry {
            file: format!("{}/{}.json", coarse.as_str(), record.hash),
            hash: record.hash.clone(),
            coarse,
        });
    }
    entries.sort_by(|a, b| a.hash.cmp(&b.hash));
    let index = CorpusIndex { entries };
    index.save(out_dir).map_err(|source| MiningError::WriteFailure {
        path: out_dir.join(CorpusIndex::FILE_NAME),
        source,
    })?;
    Ok(index)
}

/// Stage counts reported by the full mining pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MineSummary {
    pub candidates: usize,
    pub retained: usize,
    pub deduped: usize,
    pub linked: usize,
    pub unlinked: usize,
    pub exported: usize,
}

/// Full pipeline: enumerate, filter, dedupe, link, label, export.
///
/// Kernel linkage comes from a `Kernel-Hash:` trailer in the driver commit
/// message; commits without one are counted and skipped. Labels come from a
/// `Driver-Update-Type:` trailer (human origin) or, failing that, from the
/// keyword table (propagated origin at the classifier's confidence).
pub fn mine_to_corpus(
    repo: &dyn RepoBackend,
    subtree: &str,
    since: &str,
    until: &str,
    classifier: &dyn CommitClassifier,
    min_confidence: f64,
    out_dir: &Path,
) -> Result<MineSummary, MiningError> {
    let records = enumerate_driver_commits(repo, subtree, since, until)?;
    let mut summary = MineSummary {
        candidates: records.len(),
        ..MineSummary::default()
    };

    let scores = filter_candidates(&records, classifier, min_confidence)?;
    summary.retained = scores.len();
    let confidences: BTreeMap<&str, f64> = scores
        .iter()
        .map(|s| (s.commit.as_str(), s.confidence))
        .collect();
    let retained: Vec<CommitRecord> = records
        .into_iter()
        .filter(|r| confidences.contains_key(r.hash.as_str()))
        .collect();

    let deduped = dedupe(retained);
    summary.deduped = deduped.len();

    let mut pairs = Vec::new();
    let mut labels = BTreeMap::new();
    for record in deduped {
        let Some(kernel_hash) = kernel_hash_trailer(&record.message) else {
            summary.unlinked += 1;
            continue;
        };
        let linkage = build_linkage(repo, &record.hash, &kernel_hash)?;
        let label = match label_trailer(&record.message) {
            Some(fine) => TaxonomyLabel::human(fine),
            None => {
                let confidence = confidences[record.hash.as_str()].clamp(0.0, 1.0);
                match suggest_fine_label(&record) {
                    Some(fine) => TaxonomyLabel {
                        coarse: consolidate_label(fine),
                        fine: Some(fine),
                        confidence,
                        origin: crate::casepack::LabelOrigin::Propagated,
                    },
                    None => TaxonomyLabel::propagated(CoarseLabel::ApiMigration, confidence),
                }
            }
        };
        labels.insert(record.hash.clone(), label);
        pairs.push((record, linkage));
        summary.linked += 1;
    }

    let index = export_case_packs(&pairs, &labels, out_dir)?;
    summary.exported = index.entries.len();
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(hash: &str, message: &str, diff: &str, date: &str) -> CommitRecord {
        CommitRecord {
            hash: hash.to_string(),
            message: message.to_string(),
            paths: vec!["drivers/x.c".to_string()],
            diff: diff.to_string(),
            author_date: date.to_string(),
        }
    }

    const DIFF_A: &str = "--- a/drivers/x.c\n+++ b/drivers/x.c\n@@ -1 +1 @@\n-int a;\n+int b;\n";
    const DIFF_A_WS: &str =
        "--- a/drivers/x.c\n+++ b/drivers/x.c\n@@ -1 +1 @@\n-int a;  \n+int b;\t\n";
    const DIFF_B: &str = "--- a/drivers/x.c\n+++ b/drivers/x.c\n@@ -1 +1 @@\n-int p;\n+int q;\n";

    #[test]
    fn threshold_is_inclusive() {
        struct Fixed(f64);
        impl CommitClassifier for Fixed {
            fn category(&self) -> &str {
                "co_evolution"
            }
            fn score(&self, _: &CommitRecord) -> Result<f64, String> {
                Ok(self.0)
            }
        }
        let records = vec![record("a1", "m", DIFF_A, "2024-01-01")];
        let kept = filter_candidates(&records, &Fixed(0.5), 0.5).unwrap();
        assert_eq!(kept.len(), 1);
        let dropped = filter_candidates(&records, &Fixed(0.49), 0.5).unwrap();
        assert!(dropped.is_empty());
        assert!(filter_candidates(&[], &Fixed(1.0), 0.5).unwrap().is_empty());
    }

    #[test]
    fn keyword_scorer_separates_vocabulary() {
        let hit = record("a1", "driver: rename foo api after kernel update", DIFF_A, "2024-01-01");
        let miss = record("a2", "add board support for xyz1000", DIFF_B, "2024-01-02");
        let scorer = KeywordScorer;
        assert!(scorer.score(&hit).unwrap() >= 0.5);
        assert!(scorer.score(&miss).unwrap() < 0.5);
    }

    #[test]
    fn dedupe_keeps_earliest_of_identical_diffs() {
        let records = vec![
            record("a1", "original", DIFF_A, "2024-01-01"),
            record("a2", "backport", DIFF_A, "2024-02-01"),
            record("b1", "different", DIFF_B, "2024-03-01"),
        ];
        let out = dedupe(records);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].hash, "a1");
        assert_eq!(out[1].hash, "b1");
    }

    #[test]
    fn dedupe_ignores_trailing_whitespace() {
        let records = vec![
            record("a1", "original", DIFF_A, "2024-01-01"),
            record("a2", "whitespace backport", DIFF_A_WS, "2024-02-01"),
        ];
        assert_eq!(dedupe(records).len(), 1);
    }

    #[test]
    fn dedupe_is_idempotent() {
        let records = vec![
            record("a1", "m", DIFF_A, "2024-01-01"),
            record("a2", "m", DIFF_A, "2024-01-02"),
            record("b1", "m", DIFF_B, "2024-01-03"),
        ];
        let once = dedupe(records);
        let twice = dedupe(once.clone());
        assert_eq!(once, twice);
    }

    #[test]
    fn trailers_parse() {
        let message = format!(
            "driver: adapt to new alloc api\n\nKernel-Hash: {}\nDriver-Update-Type: rename\n",
            "c".repeat(40)
        );
        assert_eq!(kernel_hash_trailer(&message), Some("c".repeat(40)));
        assert_eq!(label_trailer(&message), Some(FineLabel::Rename));
        assert_eq!(kernel_hash_trailer("no trailer here"), None);
        assert_eq!(kernel_hash_trailer("Kernel-Hash: tooshort"), None);
    }

    #[test]
    fn fine_label_suggestions() {
        let r = record("a1", "fix regression in probe path", DIFF_A, "2024-01-01");
        assert_eq!(suggest_fine_label(&r), Some(FineLabel::Regression));
        let r = record("a1", "rename ida helpers", DIFF_A, "2024-01-01");
        assert_eq!(suggest_fine_label(&r), Some(FineLabel::Rename));
        let r = record("a1", "unrelated subject", DIFF_A, "2024-01-01");
        assert_eq!(suggest_fine_label(&r), None);
    }

    #[test]
    fn invalid_range_rejected() {
        struct NoRepo;
        impl RepoBackend for NoRepo {
            fn list_hashes(&self, _: &str, _: &str, _: &str) -> Result<Vec<String>, MiningError> {
                unreachable!()
            }
            fn commit_record(&self, _: &str) -> Result<CommitRecord, MiningError> {
                unreachable!()
            }
            fn parents(&self, _: &str) -> Result<Vec<String>, MiningError> {
                unreachable!()
            }
            fn commit_exists(&self, _: &str) -> Result<bool, MiningError> {
                unreachable!()
            }
            fn file_at(&self, _: &str, _: &str) -> Result<Option<String>, MiningError> {
                unreachable!()
            }
            fn commit_diff(&self, _: &str) -> Result<String, MiningError> {
                unreachable!()
            }
        }
        assert!(matches!(
            enumerate_driver_commits(&NoRepo, "drivers/", "2025-01-01", "2024-01-01"),
            Err(MiningError::InvalidRange { .. })
        ));
    }
}
