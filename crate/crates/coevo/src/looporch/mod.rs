//! The closed-loop adaptation engine: taxonomy-aware prompt assembly, static
//! gate, build execution, two-stage failure classification, bounded
//! regeneration, and runtime validation hand-off.
//!
//! One session drives one case: per attempt the loop assembles a prompt
//! (augmented from attempt two on with a summary of the prior failure),
//! generates a candidate diff, gates it statically, applies it (falling back
//! to hunk reconstruction), builds the patched sources, and classifies any
//! failure. The loop stops at the first passing build or when the attempt
//! budget runs out. Every attempt is recorded; with a scripted generator and
//! a fixture executor a session replays field-identically.

pub mod backend;
pub mod config;
pub mod diagnostics;
pub mod executor;
pub mod gate;
pub mod prompt;

use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{GenerationBackend, GeneratorError, HttpChatBackend, ScriptedBackend, ScriptedResponse};
pub use config::{LoopConfig, MAX_ATTEMPT_CEILING};
pub use diagnostics::{classify_failure, parse_diagnostics, Diagnostic, DiagnosticReport, FailureStage, Severity};
pub use executor::{BuildExecutor, BuildOutput, CommandTemplateExecutor, ExecError, FixedOutcomeExecutor, LocalCompilerExecutor};
pub use gate::{gate_similarity, static_gate, GateResult};
pub use prompt::{append_failure_feedback, assemble_prompt, prompt_digest, summarize_failure, TemplateSet};

use crate::casepack::{CasePack, ValidationPlan};
use crate::localize::{
    affected_symbols, enclosing_definitions, extract_context, index_symbols, ContextWindow,
    SymbolIndex,
};
use crate::udiff;

/// Diagnostics kept when a failure summary is folded into the next prompt.
pub const FEEDBACK_MESSAGE_BUDGET: usize = 10;

#[derive(Debug, Error)]
pub enum LoopError {
    #[error("no prompt template for category {0}")]
    MissingTemplate(String),
    #[error("invalid loop config: {0}")]
    InvalidConfig(String),
    #[error("build executor unavailable: {0}")]
    ExecutorUnavailable(String),
    #[error("build timed out after {secs}s")]
    BuildTimeout { secs: u64 },
    #[error("runtime runner unavailable: {0}")]
    RunnerUnavailable(String),
    #[error("runtime validation requires a compiled session")]
    NotCompiled,
    #[error("workspace staging failed: {0}")]
    Workspace(String),
    #[error(transparent)]
    Localize(#[from] crate::localize::LocalizeError),
    #[error("session log: {0}")]
    SessionLog(String),
}

/// How far a session got.
///
/// `failed`: no syntactically valid candidate was ever produced (or the
/// session aborted). `static_rejected`: valid candidates were produced but
/// none passed the gate. `generated_only`: a candidate passed the gate but
/// none compiled. `compiled` and `runtime_validated` mark build and runtime
/// success.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionOutcome {
    GeneratedOnly,
    StaticRejected,
    Compiled,
    RuntimeValidated,
    Failed,
}

/// One attempt of the loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    /// 1-based attempt number.
    pub index: usize,
    /// SHA-256 of the assembled prompt.
    pub prompt_digest: String,
    /// Candidate diff text; empty when the backend failed.
    pub candidate_patch: String,
    pub gate: GateResult,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub build: Option<DiagnosticReport>,
    pub stage: FailureStage,
    /// Backend error, when generation itself failed.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub generator_error: Option<String>,
    /// Patch application error carried into the next prompt.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub apply_error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Functional,
    Security,
}

/// Result of one runtime check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub kind: CheckKind,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<String>,
}

/// State of one closed-loop repair run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationSession {
    pub case: CasePack,
    /// Pre-update kernel revision (the triggering commit's parent).
    pub kernel_pre_rev: String,
    /// Post-update kernel revision (the triggering commit).
    pub kernel_post_rev: String,
    /// The kernel change as a unified diff; may be empty when unavailable.
    pub kernel_delta: String,
    pub attempts: Vec<AttemptRecord>,
    pub outcome: SessionOutcome,
    pub max_attempts: usize,
    #[serde(default)]
    pub runtime_checks: Vec<CheckRecord>,
    /// Reason the session aborted early, if it did.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub abort: Option<String>,
}

impl AdaptationSession {
    pub fn compiled(&self) -> bool {
        matches!(
            self.outcome,
            SessionOutcome::Compiled | SessionOutcome::RuntimeValidated
        )
    }

    /// Whether any attempt produced a syntactically valid diff.
    pub fn any_generated(&self) -> bool {
        self.attempts.iter().any(|a| a.gate.syntax_ok)
    }

    pub fn any_gate_passed(&self) -> bool {
        self.attempts.iter().any(|a| a.gate.accepted)
    }
}

/// Keep symbols the index knows and widen callee-only names to the
/// definitions enclosing their call sites, so every symbol can anchor a
/// window.
fn windowable_symbols(raw: BTreeSet<String>, idx: &SymbolIndex) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for symbol in raw {
        if idx.definitions.contains_key(&symbol) {
            out.insert(symbol);
        } else if idx.calls.contains_key(&symbol) {
            out.extend(enclosing_definitions(idx, &symbol));
            out.insert(symbol);
        }
    }
    out
}

/// Build context windows for a case. Affected symbols are taken from the
/// kernel delta when it names driver symbols, falling back to the reference
/// patch, and finally to every definition in the pack.
pub fn localize_case(
    case: &CasePack,
    kernel_delta: &str,
    pad: usize,
) -> Result<Vec<ContextWindow>, LoopError> {
    let idx = index_symbols(&case.contents)?;
    let mut symbols: BTreeSet<String> = BTreeSet::new();
    if let Ok(kd) = udiff::parse_diff(kernel_delta) {
        symbols = windowable_symbols(affected_symbols(&kd, &idx), &idx);
    }
    if symbols.is_empty() {
        if let Ok(reference) = udiff::parse_diff(&case.patch) {
            symbols = windowable_symbols(affected_symbols(&reference, &idx), &idx);
        }
    }
    if symbols.is_empty() {
        symbols = idx.definitions.keys().cloned().collect();
    }
    Ok(extract_context(&case.contents, &idx, &symbols, pad)?)
}

/// Invoke the executor over a staged workspace and parse its output.
pub fn run_build(
    workspace: &Path,
    executor: &dyn BuildExecutor,
) -> Result<DiagnosticReport, LoopError> {
    match executor.build(workspace) {
        Ok(output) => Ok(parse_diagnostics(
            output.exit_code,
            &output.stdout,
            &output.stderr,
        )),
        Err(ExecError::Unavailable(detail)) => Err(LoopError::ExecutorUnavailable(detail)),
        Err(ExecError::Timeout { secs }) => Err(LoopError::BuildTimeout { secs }),
        Err(ExecError::Io(detail)) => Err(LoopError::ExecutorUnavailable(detail)),
    }
}

fn stage_workspace(dir: &Path, files: &std::collections::BTreeMap<String, String>) -> Result<(), LoopError> {
    for (path, text) in files {
        let full = dir.join(path);
        if let Some(parent) = full.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| LoopError::Workspace(format!("{}: {e}", parent.display())))?;
        }
        std::fs::write(&full, text)
            .map_err(|e| LoopError::Workspace(format!("{}: {e}", full.display())))?;
    }
    Ok(())
}

fn timeout_report(secs: u64) -> DiagnosticReport {
    DiagnosticReport {
        exit_code: -1,
        messages: vec![Diagnostic {
            severity: Severity::Error,
            file: "<build>".to_string(),
            line: 0,
            text: format!("build timed out after {secs}s"),
        }],
        extracted_symbols: BTreeSet::new(),
    }
}

/// Run the bounded generate, gate, apply, build, classify loop for one case.
///
/// Backend failures are recorded and the loop moves on to the next attempt;
/// an unavailable executor aborts the session with outcome `failed`.
pub fn run_adaptation_loop(
    case: &CasePack,
    generator: &mut dyn GenerationBackend,
    executor: &dyn BuildExecutor,
    config: &LoopConfig,
    kernel_delta: &str,
) -> Result<AdaptationSession, LoopError> {
    config.validate()?;
    let templates = match &config.template_dir {
        Some(dir) => TemplateSet::load_dir(dir)?,
        None => TemplateSet::builtin(),
    };
    let windows = localize_case(case, kernel_delta, config.context_pad)?;
    let base_prompt = assemble_prompt(case, &windows, kernel_delta, &templates)?;
    let reference = config
        .gate_against_reference
        .then_some(case.patch.as_str());

    let mut session = AdaptationSession {
        case: case.clone(),
        kernel_pre_rev: format!("{}^", case.kernel_hash),
        kernel_post_rev: case.kernel_hash.clone(),
        kernel_delta: kernel_delta.to_string(),
        attempts: Vec::new(),
        outcome: SessionOutcome::Failed,
        max_attempts: config.max_attempts,
        runtime_checks: Vec::new(),
        abort: None,
    };

    let mut feedback: Option<String> = None;
    for index in 1..=config.max_attempts {
        let prompt = match &feedback {
            Some(summary) => append_failure_feedback(&base_prompt, summary),
            None => base_prompt.clone(),
        };
        let digest = prompt_digest(&prompt);

        let candidate = match generator.generate(&prompt) {
            Ok(text) => text,
            Err(err) => {
                session.attempts.push(AttemptRecord {
                    index,
                    prompt_digest: digest,
                    candidate_patch: String::new(),
                    gate: GateResult::rejected_syntax(),
                    build: None,
                    stage: FailureStage::Stage1PatchApplication,
                    generator_error: Some(err.to_string()),
                    apply_error: None,
                });
                continue;
            }
        };

        let gate = static_gate(&candidate, reference, config.gate_threshold);
        if !gate.accepted {
            feedback = Some(summarize_failure(
                Some(&gate),
                None,
                None,
                FEEDBACK_MESSAGE_BUDGET,
            ));
            session.attempts.push(AttemptRecord {
                index,
                prompt_digest: digest,
                candidate_patch: candidate,
                gate,
                build: None,
                stage: FailureStage::Stage1PatchApplication,
                generator_error: None,
                apply_error: None,
            });
            continue;
        }

        let diff = udiff::parse_diff(&candidate).expect("gate verified syntax");
        let patched = match udiff::apply_with_reconstruction(&case.contents, &diff, config.fuzz) {
            Ok((files, _)) => files,
            Err(apply_error) => {
                feedback = Some(summarize_failure(
                    None,
                    Some(&apply_error),
                    None,
                    FEEDBACK_MESSAGE_BUDGET,
                ));
                session.attempts.push(AttemptRecord {
                    index,
                    prompt_digest: digest,
                    candidate_patch: candidate,
                    gate,
                    build: None,
                    stage: FailureStage::Stage1PatchApplication,
                    generator_error: None,
                    apply_error: Some(apply_error),
                });
                continue;
            }
        };

        let workspace = tempfile::tempdir().map_err(|e| LoopError::Workspace(e.to_string()))?;
        stage_workspace(workspace.path(), &patched)?;
        let report = match run_build(workspace.path(), executor) {
            Ok(report) => report,
            Err(LoopError::BuildTimeout { secs }) => timeout_report(secs),
            Err(LoopError::ExecutorUnavailable(detail)) => {
                session.attempts.push(AttemptRecord {
                    index,
                    prompt_digest: digest,
                    candidate_patch: candidate,
                    gate,
                    build: None,
                    stage: FailureStage::Stage2Compilation,
                    generator_error: None,
                    apply_error: None,
                });
                session.abort = Some(format!("build executor unavailable: {detail}"));
                session.outcome = SessionOutcome::Failed;
                return Ok(session);
            }
            Err(other) => return Err(other),
        };

        let stage = classify_failure(None, Some(&report));
        let passed = stage == FailureStage::Passed;
        if !passed {
            feedback = Some(summarize_failure(
                None,
                None,
                Some(&report),
                FEEDBACK_MESSAGE_BUDGET,
            ));
        }
        session.attempts.push(AttemptRecord {
            index,
            prompt_digest: digest,
            candidate_patch: candidate,
            gate,
            build: Some(report),
            stage,
            generator_error: None,
            apply_error: None,
        });
        if passed {
            session.outcome = SessionOutcome::Compiled;
            return Ok(session);
        }
    }

    session.outcome = if session.any_gate_passed() {
        SessionOutcome::GeneratedOnly
    } else if session.any_generated() {
        SessionOutcome::StaticRejected
    } else {
        SessionOutcome::Failed
    };
    Ok(session)
}

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("runtime runner unavailable: {0}")]
    Unavailable(String),
    #[error("check {id} timed out")]
    CheckTimeout { id: String },
}

/// Outcome of one runtime check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOutcome {
    pub passed: bool,
    pub detail: Option<String>,
}

/// Executes named runtime checks against a validated session's artifacts.
pub trait RuntimeRunner {
    fn run_check(&self, check_id: &str) -> Result<CheckOutcome, RunnerError>;
}

/// Scripted runner for tests and dry runs: checks pass unless listed.
#[derive(Debug, Clone, Default)]
pub struct MockRuntimeRunner {
    pub failing: BTreeSet<String>,
    pub timing_out: BTreeSet<String>,
}

impl RuntimeRunner for MockRuntimeRunner {
    fn run_check(&self, check_id: &str) -> Result<CheckOutcome, RunnerError> {
        if self.timing_out.contains(check_id) {
            return Err(RunnerError::CheckTimeout {
                id: check_id.to_string(),
            });
        }
        Ok(CheckOutcome {
            passed: !self.failing.contains(check_id),
            detail: None,
        })
    }
}

/// Execute a validation plan over a compiled session. The outcome becomes
/// `runtime_validated` only when every functional and security check passes;
/// an empty plan passes vacuously. Timed-out checks are marked failed.
pub fn runtime_validate(
    mut session: AdaptationSession,
    runner: &dyn RuntimeRunner,
    plan: &ValidationPlan,
) -> Result<AdaptationSession, LoopError> {
    if session.outcome != SessionOutcome::Compiled {
        return Err(LoopError::NotCompiled);
    }
    plan.validate()
        .map_err(|e| LoopError::InvalidConfig(e.to_string()))?;

    let checks = plan
        .functional_checks
        .iter()
        .map(|id| (id, CheckKind::Functional))
        .chain(
            plan.security_checks
                .iter()
                .map(|id| (id, CheckKind::Security)),
        );
    let mut all_passed = true;
    for (id, kind) in checks {
        let record = match runner.run_check(id) {
            Ok(outcome) => CheckRecord {
                id: id.clone(),
                kind,
                passed: outcome.passed,
                detail: outcome.detail,
            },
            Err(RunnerError::CheckTimeout { id }) => CheckRecord {
                id,
                kind,
                passed: false,
                detail: Some("check timed out".to_string()),
            },
            Err(RunnerError::Unavailable(detail)) => {
                return Err(LoopError::RunnerUnavailable(detail))
            }
        };
        all_passed &= record.passed;
        session.runtime_checks.push(record);
    }
    if all_passed {
        session.outcome = SessionOutcome::RuntimeValidated;
    }
    Ok(session)
}

/// Append one session as a single JSON line.
pub fn append_session_line(path: &Path, session: &AdaptationSession) -> Result<(), LoopError> {
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| LoopError::SessionLog(format!("{}: {e}", path.display())))?;
    let line = serde_json::to_string(session)
        .map_err(|e| LoopError::SessionLog(e.to_string()))?;
    writeln!(file, "{line}").map_err(|e| LoopError::SessionLog(e.to_string()))?;
    Ok(())
}

/// Write a session's attempt log: one [`AttemptRecord`] JSON per line.
pub fn write_attempt_log(path: &Path, session: &AdaptationSession) -> Result<(), LoopError> {
    let mut out = String::new();
    for attempt in &session.attempts {
        out.push_str(
            &serde_json::to_string(attempt).map_err(|e| LoopError::SessionLog(e.to_string()))?,
        );
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| LoopError::SessionLog(format!("{}: {e}", path.display())))
}

/// Read a JSON Lines session log; reports the 1-based line number of the
/// first malformed line.
pub fn read_sessions(path: &Path) -> Result<Vec<AdaptationSession>, LoopError> {
    let file = std::fs::File::open(path)
        .map_err(|e| LoopError::SessionLog(format!("{}: {e}", path.display())))?;
    let reader = std::io::BufReader::new(file);
    let mut sessions = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| LoopError::SessionLog(format!("line {}: {e}", i + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        let session: AdaptationSession = serde_json::from_str(&line)
            .map_err(|e| LoopError::SessionLog(format!("line {}: {e}", i + 1)))?;
        sessions.push(session);
    }
    Ok(sessions)
}
