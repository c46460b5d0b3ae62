//! Compiler diagnostic parsing and the two-stage failure taxonomy.
//!
//! Build output is scanned for `file:line[:col]: severity: text` messages in
//! the GCC/Clang shape; undeclared or implicitly declared symbols named in
//! the messages are collected so regeneration prompts can mention them.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
    Note,
}

impl Severity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Note => "note",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub file: String,
    pub line: usize,
    pub text: String,
}

/// Structured result of one build run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub exit_code: i32,
    /// Messages in emission order.
    pub messages: Vec<Diagnostic>,
    /// Symbols the compiler flagged as undeclared, implicit, or unknown.
    pub extracted_symbols: BTreeSet<String>,
}

impl DiagnosticReport {
    pub fn success() -> Self {
        DiagnosticReport {
            exit_code: 0,
            messages: Vec::new(),
            extracted_symbols: BTreeSet::new(),
        }
    }

    pub fn failed(&self) -> bool {
        self.exit_code != 0 || self.messages.iter().any(|m| m.severity == Severity::Error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.messages
            .iter()
            .filter(|m| m.severity == Severity::Error)
    }
}

fn message_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^(?P<file>[^:\s][^:]*):(?P<line>\d+)(?::\d+)?:\s*(?P<sev>fatal error|error|warning|note):\s?(?P<text>.*)$")
            .expect("static regex compiles")
    })
}

fn symbol_regexes() -> &'static [Regex] {
    static RES: OnceLock<Vec<Regex>> = OnceLock::new();
    RES.get_or_init(|| {
        [
            r"implicit declaration of function '(?P<sym>[A-Za-z_]\w*)'",
            r"'(?P<sym>[A-Za-z_]\w*)' undeclared",
            r"unknown type name '(?P<sym>[A-Za-z_]\w*)'",
            r"called object '(?P<sym>[A-Za-z_]\w*)'",
            r"too (?:few|many) arguments to function '(?P<sym>[A-Za-z_]\w*)'",
            r"undefined reference to `(?P<sym>[A-Za-z_]\w*)'",
        ]
        .iter()
        .map(|p| Regex::new(p).expect("static regex compiles"))
        .collect()
    })
}

/// Parse raw build output into a structured report.
pub fn parse_diagnostics(exit_code: i32, stdout: &str, stderr: &str) -> DiagnosticReport {
    let mut report = DiagnosticReport {
        exit_code,
        messages: Vec::new(),
        extracted_symbols: BTreeSet::new(),
    };
    for line in stdout.lines().chain(stderr.lines()) {
        if let Some(caps) = message_regex().captures(line) {
            let severity = match &caps["sev"] {
                "warning" => Severity::Warning,
                "note" => Severity::Note,
                _ => Severity::Error,
            };
            report.messages.push(Diagnostic {
                severity,
                file: caps["file"].to_string(),
                line: caps["line"].parse().unwrap_or(0),
                text: caps["text"].to_string(),
            });
        }
        for re in symbol_regexes() {
            if let Some(caps) = re.captures(line) {
                report.extracted_symbols.insert(caps["sym"].to_string());
            }
        }
    }
    report
}

/// Where an attempt failed: patch application (stage 1, malformed or
/// misplaced diffs) or compilation (stage 2, API and dependency errors).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureStage {
    Stage1PatchApplication,
    Stage2Compilation,
    Passed,
}

/// Classify an attempt from its apply error and build report. At least one
/// input must be present.
pub fn classify_failure(
    apply_error: Option<&str>,
    report: Option<&DiagnosticReport>,
) -> FailureStage {
    assert!(
        apply_error.is_some() || report.is_some(),
        "classify_failure needs an apply error or a build report"
    );
    if apply_error.is_some() {
        return FailureStage::Stage1PatchApplication;
    }
    match report {
        Some(r) if r.failed() => FailureStage::Stage2Compilation,
        _ => FailureStage::Passed,
    }
}
