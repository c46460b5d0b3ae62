//! Batch entry points wiring the modules into the end-to-end pipeline:
//! mine, score, run, report, validate.
//!
//! These functions return data; the binary does the printing. Exit-code
//! policy: 2 for unreadable or malformed inputs, 3 for unrecoverable patch
//! failures, 4 for an unavailable build executor.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::astcmp::{score_patch_pair, AstError, CSourceParser, StaticScoreReport};
use crate::casepack::{self, CasePack, CoarseLabel, CorpusIndex};
use crate::looporch::{
    self, AdaptationSession, CommandTemplateExecutor, GenerationBackend, HttpChatBackend,
    LocalCompilerExecutor, LoopConfig, ScriptedBackend,
};
use crate::mining::{self, GitCliRepo, KeywordScorer, MineSummary, MiningError};
use crate::report::{aggregate, distribution, BatchReport, StatSummary};
use crate::udiff;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or malformed input (exit 2).
    #[error("{0}")]
    Input(String),
    /// Unrecoverable patch failure (exit 3).
    #[error("{0}")]
    Patch(String),
    /// Build executor unavailable (exit 4).
    #[error("{0}")]
    Executor(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Patch(_) => 3,
            CliError::Executor(_) => 4,
        }
    }
}

/// Mine a repository into a case-pack corpus.
pub fn cmd_mine(
    repo: &Path,
    subtree: &str,
    since: &str,
    until: &str,
    min_confidence: f64,
    out: &Path,
) -> Result<MineSummary, CliError> {
    let repo = GitCliRepo::open(repo).map_err(|e| CliError::Input(e.to_string()))?;
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Input(format!("{}: {e}", out.display())))?;
    mining::mine_to_corpus(
        &repo,
        subtree,
        since,
        until,
        &KeywordScorer,
        min_confidence,
        out,
    )
    .map_err(|e| match e {
        MiningError::RepositoryUnavailable(_) => CliError::Input(e.to_string()),
        MiningError::WriteFailure { .. } => CliError::Input(e.to_string()),
        other => CliError::Input(other.to_string()),
    })
}

fn read_input_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Load baseline sources: a directory maps every contained file by relative
/// path; a single file serves the one path the patches touch.
fn load_baseline(
    path: &Path,
    touched: &std::collections::BTreeSet<String>,
) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    if path.is_dir() {
        let mut stack = vec![path.to_path_buf()];
        while let Some(dir) = stack.pop() {
            let entries = std::fs::read_dir(&dir)
                .map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
            for entry in entries {
                let entry = entry.map_err(|e| CliError::Input(e.to_string()))?;
                let p = entry.path();
                if p.is_dir() {
                    stack.push(p);
                } else {
                    let rel = p
                        .strip_prefix(path)
                        .expect("entry under root")
                        .to_string_lossy()
                        .into_owned();
                    map.insert(rel, read_input_file(&p)?);
                }
            }
        }
    } else {
        let text = read_input_file(path)?;
        if touched.len() != 1 {
            return Err(CliError::Input(format!(
                "baseline {} is a single file but the patches touch {} paths; pass a directory",
                path.display(),
                touched.len()
            )));
        }
        map.insert(touched.iter().next().unwrap().clone(), text);
    }
    Ok(map)
}

/// Score a generated patch against a reference patch over a baseline.
pub fn cmd_score(
    baseline: &Path,
    ref_patch: &Path,
    gen_patch: &Path,
    fuzz: usize,
) -> Result<StaticScoreReport, CliError> {
    let ref_text = read_input_file(ref_patch)?;
    let gen_text = read_input_file(gen_patch)?;
    let ref_diff =
        udiff::parse_diff(&ref_text).map_err(|e| CliError::Patch(format!("reference patch: {e}")))?;
    let gen_diff =
        udiff::parse_diff(&gen_text).map_err(|e| CliError::Patch(format!("generated patch: {e}")))?;

    let mut touched = ref_diff.touched_paths();
    touched.extend(gen_diff.touched_paths());
    let sources = load_baseline(baseline, &touched)?;

    let mut parser = CSourceParser::new().map_err(|e| CliError::Input(e.to_string()))?;
    score_patch_pair(&mut parser, &sources, &ref_diff, &gen_diff, fuzz).map_err(|e| match e {
        AstError::PatchFailure(detail) => CliError::Patch(detail),
        other => CliError::Input(other.to_string()),
    })
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub corpus: PathBuf,
    pub backend: String,
    pub max_attempts: usize,
    pub threshold: f64,
    pub fuzz: usize,
    pub jobs: usize,
    pub config: Option<PathBuf>,
    /// Session logs directory; defaults to `<corpus>/logs`.
    pub logs: Option<PathBuf>,
}

/// Result of a batch run: sessions in corpus order plus the aggregate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub batch: BatchReport,
    pub logs_dir: PathBuf,
    pub sessions: usize,
}

fn make_backend(name: &str, case: &CasePack, config: &LoopConfig) -> Result<Box<dyn GenerationBackend>, CliError> {
    match name {
        // Echoes the pack's reference patch: the deterministic happy path.
        "mock" => Ok(Box::new(ScriptedBackend::replies([case.patch.clone()]))),
        // Never produces a valid diff.
        "mock-fail" => Ok(Box::new(ScriptedBackend::replies([
            "not a unified diff".to_string()
        ]))),
        "http" => HttpChatBackend::from_config(config)
            .map(|b| Box::new(b) as Box<dyn GenerationBackend>)
            .map_err(|e| CliError::Input(e.to_string())),
        other => match other.strip_prefix("scripted:") {
            Some(path) => {
                let text = read_input_file(Path::new(path))?;
                let replies: Vec<String> = serde_json::from_str(&text)
                    .map_err(|e| CliError::Input(format!("{path}: {e}")))?;
                if replies.is_empty() {
                    return Err(CliError::Input(format!("{path}: empty script")));
                }
                Ok(Box::new(ScriptedBackend::replies(replies)))
            }
            None => Err(CliError::Input(format!(
                "unknown backend {other:?}; expected mock, mock-fail, http, or scripted:<path>"
            ))),
        },
    }
}

/// The kernel patch for a pack, when the corpus ships one under
/// `kernel/<kernel-hash>.diff`.
fn kernel_delta_for(corpus: &Path, case: &CasePack) -> String {
    let path = corpus.join("kernel").join(format!("{}.diff", case.kernel_hash));
    std::fs::read_to_string(path).unwrap_or_default()
}

fn build_executor(config: &LoopConfig) -> Box<dyn looporch::BuildExecutor + Send + Sync> {
    let timeout = std::time::Duration::from_secs(config.build_timeout_secs);
    match &config.executor_command {
        Some(template) => Box::new(CommandTemplateExecutor::new(template.clone(), timeout)),
        None => Box::new(LocalCompilerExecutor::with_timeout(timeout)),
    }
}

/// Score a finished session's best candidate against the reference patch.
fn score_session(session: &AdaptationSession, fuzz: usize) -> Option<StaticScoreReport> {
    let candidate = session
        .attempts
        .iter()
        .rev()
        .find(|a| a.gate.syntax_ok && !a.candidate_patch.is_empty())?;
    let ref_diff = udiff::parse_diff(&session.case.patch).ok()?;
    let gen_diff = udiff::parse_diff(&candidate.candidate_patch).ok()?;
    let mut parser = CSourceParser::new().ok()?;
    score_patch_pair(&mut parser, &session.case.contents, &ref_diff, &gen_diff, fuzz).ok()
}

/// Run the adaptation loop over every pack in a corpus, writing session logs
/// and returning the per-category aggregate.
pub fn cmd_run(opts: &RunOptions) -> Result<RunReport, CliError> {
    let mut config = match &opts.config {
        Some(path) => LoopConfig::load(path).map_err(|e| CliError::Input(e.to_string()))?,
        None => LoopConfig::default(),
    };
    config.max_attempts = opts.max_attempts;
    config.gate_threshold = opts.threshold;
    config.fuzz = opts.fuzz;
    config
        .validate()
        .map_err(|e| CliError::Input(e.to_string()))?;

    let packs = casepack::load_corpus(&opts.corpus).map_err(|e| CliError::Input(e.to_string()))?;
    let logs_dir = opts
        .logs
        .clone()
        .unwrap_or_else(|| opts.corpus.join("logs"));
    let attempts_dir = logs_dir.join("attempts");
    std::fs::create_dir_all(&attempts_dir)
        .map_err(|e| CliError::Input(format!("{}: {e}", attempts_dir.display())))?;

    let jobs = opts.jobs.max(1);
    let mut slots: Vec<Option<Result<AdaptationSession, CliError>>> = Vec::new();
    slots.resize_with(packs.len(), || None);
    let slots = Mutex::new(slots);
    let queue = Mutex::new((0..packs.len()).collect::<std::collections::VecDeque<usize>>());

    std::thread::scope(|scope| {
        for _ in 0..jobs.min(packs.len().max(1)) {
            scope.spawn(|| loop {
                let Some(i) = queue.lock().unwrap().pop_front() else {
                    break;
                };
                let case = &packs[i];
                let result = (|| {
                    let mut backend = make_backend(&opts.backend, case, &config)?;
                    let executor = build_executor(&config);
                    let kernel_delta = kernel_delta_for(&opts.corpus, case);
                    looporch::run_adaptation_loop(
                        case,
                        backend.as_mut(),
                        executor.as_ref(),
                        &config,
                        &kernel_delta,
                    )
                    .map_err(|e| CliError::Input(e.to_string()))
                })();
                slots.lock().unwrap()[i] = Some(result);
            });
        }
    });

    let mut sessions = Vec::with_capacity(packs.len());
    for slot in slots.into_inner().unwrap() {
        let session = slot.expect("every queued pack produces a result")?;
        if let Some(reason) = &session.abort {
            if reason.contains("executor unavailable") {
                return Err(CliError::Executor(reason.clone()));
            }
        }
        sessions.push(session);
    }

    let sessions_log = logs_dir.join("sessions.jsonl");
    // Truncate before appending so reruns are reproducible.
    std::fs::write(&sessions_log, "")
        .map_err(|e| CliError::Input(format!("{}: {e}", sessions_log.display())))?;
    let mut scores: Vec<(String, StaticScoreReport)> = Vec::new();
    for session in &sessions {
        looporch::append_session_line(&sessions_log, session)
            .map_err(|e| CliError::Input(e.to_string()))?;
        looporch::write_attempt_log(
            &attempts_dir.join(format!("{}.jsonl", session.case.hash)),
            session,
        )
        .map_err(|e| CliError::Input(e.to_string()))?;
        if let Some(score) = score_session(session, config.fuzz) {
            scores.push((session.case.hash.clone(), score));
        }
    }
    let score_map: BTreeMap<&String, &StaticScoreReport> =
        scores.iter().map(|(h, s)| (h, s)).collect();
    let mut bytes = serde_json::to_vec_pretty(&score_map).expect("score serialization");
    bytes.push(b'\n');
    std::fs::write(logs_dir.join("scores.json"), bytes)
        .map_err(|e| CliError::Input(format!("scores.json: {e}")))?;

    let batch = aggregate(&sessions, &scores);
    Ok(RunReport {
        batch,
        logs_dir,
        sessions: sessions.len(),
    })
}

/// Output of `cmd_report`: the aggregate plus score distributions (composite
/// and AST-only, both when scores are present).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportOutput {
    pub batch: BatchReport,
    pub composite: Option<StatSummary>,
    pub ast_sim: Option<StatSummary>,
    /// Case hash -> coarse category, for the metric table.
    pub categories: BTreeMap<String, CoarseLabel>,
}

/// Aggregate a session log (a `sessions.jsonl` file or a directory holding
/// one) into a batch report with distributions.
pub fn cmd_report(logs: &Path) -> Result<ReportOutput, CliError> {
    let sessions_path = if logs.is_dir() {
        logs.join("sessions.jsonl")
    } else {
        logs.to_path_buf()
    };
    let sessions =
        looporch::read_sessions(&sessions_path).map_err(|e| CliError::Input(e.to_string()))?;

    let scores_path = sessions_path
        .parent()
        .map(|d| d.join("scores.json"))
        .filter(|p| p.is_file());
    let mut scores: Vec<(String, StaticScoreReport)> = Vec::new();
    if let Some(path) = scores_path {
        let text = read_input_file(&path)?;
        let map: BTreeMap<String, StaticScoreReport> = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        scores.extend(map);
    }

    let categories: BTreeMap<String, CoarseLabel> = sessions
        .iter()
        .map(|s| (s.case.hash.clone(), s.case.type_label.coarse))
        .collect();
    let batch = aggregate(&sessions, &scores);
    let composites: Vec<f64> = batch.scores.values().map(|s| s.composite).collect();
    let ast_sims: Vec<f64> = batch.scores.values().map(|s| s.ast_sim).collect();
    Ok(ReportOutput {
        composite: distribution(&composites).ok(),
        ast_sim: distribution(&ast_sims).ok(),
        batch,
        categories,
    })
}

/// Parse and validate every pack in a corpus; returns the pack count.
pub fn cmd_validate(corpus: &Path) -> Result<usize, CliError> {
    let index = CorpusIndex::load(corpus).map_err(|e| CliError::Input(e.to_string()))?;
    for entry in &index.entries {
        let path = corpus.join(&entry.file);
        let bytes =
            std::fs::read(&path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let pack = casepack::parse_case_pack(&bytes)
            .map_err(|e| CliError::Input(format!("{}: {e}", entry.file)))?;
        if pack.hash != entry.hash {
            return Err(CliError::Input(format!(
                "{}: pack hash {} does not match index hash {}",
                entry.file, pack.hash, entry.hash
            )));
        }
    }
    Ok(index.entries.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::casepack::{serialize_case_pack, FineLabel, IndexEntry, TaxonomyLabel};

    fn write_corpus(dir: &Path, packs: &[CasePack]) {
        let mut entries = Vec::new();
        for pack in packs {
            let coarse = pack.type_label.coarse;
            let sub = dir.join(coarse.as_str());
            std::fs::create_dir_all(&sub).unwrap();
            let file = format!("{}/{}.json", coarse.as_str(), pack.hash);
            std::fs::write(dir.join(&file), serialize_case_pack(pack)).unwrap();
            entries.push(IndexEntry {
                file,
                hash: pack.hash.clone(),
                coarse,
            });
        }
        entries.sort_by(|a, b| a.hash.cmp(&b.hash));
        CorpusIndex { entries }.save(dir).unwrap();
    }

    fn fixture_pack(seed: u8) -> CasePack {
        let baseline = "int widget_probe(void)\n{\n    return 0;\n}\n";
        let patch = "--- a/drivers/widget.c\n+++ b/drivers/widget.c\n@@ -1,4 +1,4 @@\n int widget_probe(void)\n {\n-    return 0;\n+    return 1;\n }\n";
        let mut contents = BTreeMap::new();
        contents.insert("drivers/widget.c".to_string(), baseline.to_string());
        CasePack {
            message: "widget: adjust probe return".into(),
            files: vec!["drivers/widget.c".into()],
            patch: patch.into(),
            hash: format!("{seed:x}").repeat(40)[..40].to_string(),
            kernel_hash: "f".repeat(40),
            type_label: TaxonomyLabel::human(FineLabel::Rename),
            contents,
            link: None,
            description: None,
        }
    }

    #[test]
    fn run_and_report_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        write_corpus(dir.path(), &[fixture_pack(1), fixture_pack(2)]);
        let opts = RunOptions {
            corpus: dir.path().to_path_buf(),
            backend: "mock".into(),
            max_attempts: 5,
            threshold: 0.7,
            fuzz: 20,
            jobs: 1,
            config: None,
            logs: None,
        };
        let run = cmd_run(&opts).unwrap();
        assert_eq!(run.sessions, 2);
        let api = &run.batch.per_category[&CoarseLabel::ApiMigration];
        assert_eq!(api.n_compiled, 2);

        let report = cmd_report(&run.logs_dir).unwrap();
        assert_eq!(report.batch.per_category[&CoarseLabel::ApiMigration].n_cases, 2);
        assert!(report.composite.is_some());

        assert_eq!(cmd_validate(dir.path()).unwrap(), 2);
    }

    #[test]
    fn failing_backend_counts_zero_compiled() {
        let dir = tempfile::tempdir().unwrap();
        write_corpus(dir.path(), &[fixture_pack(3)]);
        let opts = RunOptions {
            corpus: dir.path().to_path_buf(),
            backend: "mock-fail".into(),
            max_attempts: 2,
            threshold: 0.7,
            fuzz: 20,
            jobs: 1,
            config: None,
            logs: None,
        };
        let run = cmd_run(&opts).unwrap();
        let api = &run.batch.per_category[&CoarseLabel::ApiMigration];
        assert_eq!(api.n_compiled, 0);
    }

    #[test]
    fn unknown_backend_is_input_error() {
        let dir = tempfile::tempdir().unwrap();
        write_corpus(dir.path(), &[fixture_pack(4)]);
        let opts = RunOptions {
            corpus: dir.path().to_path_buf(),
            backend: "nope".into(),
            max_attempts: 1,
            threshold: 0.7,
            fuzz: 20,
            jobs: 1,
            config: None,
            logs: None,
        };
        assert!(matches!(cmd_run(&opts), Err(CliError::Input(_))));
    }

    #[test]
    fn report_on_empty_log_is_all_zero() {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("sessions.jsonl");
        std::fs::write(&log, "").unwrap();
        let report = cmd_report(&log).unwrap();
        assert!(report.batch.per_category.is_empty());
        assert!(report.composite.is_none());
    }

    #[test]
    fn truncated_log_line_is_reported_with_number() {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("sessions.jsonl");
        std::fs::write(&log, "{\"bad\":\n").unwrap();
        match cmd_report(&log) {
            Err(CliError::Input(msg)) => assert!(msg.contains("line 1"), "{msg}"),
            other => panic!("unexpected: {other:?}"),
        }
    }
}
