//! Taxonomy-conditioned prompt assembly.
//!
//! Prompts are built from a per-category template plus fixed sections:
//! taxonomy header, driver commit message, kernel delta, context windows
//! (never whole files), and the output instruction. Assembly is a pure
//! function of its inputs, so identical inputs produce identical prompts.

use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::diagnostics::DiagnosticReport;
use super::gate::GateResult;
use super::LoopError;
use crate::casepack::{CasePack, LabelOrigin, TaxonomyLabel};
use crate::localize::ContextWindow;

/// Prompt templates keyed by `<coarse>` or `<coarse>/<fine>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    templates: BTreeMap<String, String>,
}

const API_MIGRATION_TEMPLATE: &str = "You are updating a Linux driver after a kernel-side API \
migration. The kernel change below removed or reshaped an interface the driver depends on. \
Rewrite only the affected call sites and declarations to the replacement API, preserving the \
driver's behaviour, error handling, and coding style.";

const API_MIGRATION_RENAME_TEMPLATE: &str = "You are updating a Linux driver after a kernel-side \
symbol rename. Apply the new names at every affected use, keeping argument lists and semantics \
unchanged unless the kernel change also altered the signature.";

const REGRESSION_TEMPLATE: &str = "You are fixing a driver regression introduced by the kernel \
change below. Restore the documented behaviour with the smallest possible edit; do not refactor \
unrelated code.";

const OPTIMISATION_LIKE_TEMPLATE: &str = "You are adapting a Linux driver to a behaviour-preserving \
kernel-side improvement. Align the driver with the updated kernel idiom without changing its \
observable behaviour.";

const OUTPUT_INSTRUCTION: &str = "Reply with a unified diff only (---/+++/@@ format, a/ and b/ \
path prefixes), applying to the pre-update driver sources. No prose, no code fences.";

impl TemplateSet {
    /// The built-in templates: one per coarse category plus a rename
    /// specialization.
    pub fn builtin() -> Self {
        let mut templates = BTreeMap::new();
        templates.insert("api_migration".into(), API_MIGRATION_TEMPLATE.into());
        templates.insert(
            "api_migration/rename".into(),
            API_MIGRATION_RENAME_TEMPLATE.into(),
        );
        templates.insert("regression".into(), REGRESSION_TEMPLATE.into());
        templates.insert(
            "optimisation_like".into(),
            OPTIMISATION_LIKE_TEMPLATE.into(),
        );
        TemplateSet { templates }
    }

    /// An empty set; useful for exercising the missing-template path.
    pub fn empty() -> Self {
        TemplateSet {
            templates: BTreeMap::new(),
        }
    }

    /// Built-ins overridden by `<coarse>.txt` / `<coarse>__<fine>.txt` files
    /// from a template directory.
    pub fn load_dir(dir: &Path) -> Result<Self, LoopError> {
        let mut set = TemplateSet::builtin();
        let entries = std::fs::read_dir(dir)
            .map_err(|e| LoopError::InvalidConfig(format!("template dir {}: {e}", dir.display())))?;
        for entry in entries {
            let entry =
                entry.map_err(|e| LoopError::InvalidConfig(format!("template dir: {e}")))?;
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            let key = stem.replace("__", "/");
            let text = std::fs::read_to_string(&path)
                .map_err(|e| LoopError::InvalidConfig(format!("{}: {e}", path.display())))?;
            set.templates.insert(key, text.trim_end().to_string());
        }
        Ok(set)
    }

    /// Most specific template for a label: `<coarse>/<fine>` first, then
    /// `<coarse>`.
    pub fn lookup(&self, label: &TaxonomyLabel) -> Result<&str, LoopError> {
        if let Some(fine) = label.fine {
            let key = format!("{}/{}", label.coarse.as_str(), fine.as_str());
            if let Some(t) = self.templates.get(&key) {
                return Ok(t.as_str());
            }
        }
        self.templates
            .get(label.coarse.as_str())
            .map(String::as_str)
            .ok_or_else(|| LoopError::MissingTemplate(label.coarse.as_str().to_string()))
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet::builtin()
    }
}

/// Assemble the generation prompt for one case.
pub fn assemble_prompt(
    case: &CasePack,
    windows: &[ContextWindow],
    kernel_delta: &str,
    templates: &TemplateSet,
) -> Result<String, LoopError> {
    let label = &case.type_label;
    let template = templates.lookup(label)?;

    let mut prompt = String::new();
    prompt.push_str(template);
    prompt.push_str("\n\n## Taxonomy\n");
    prompt.push_str(&format!("coarse: {}\n", label.coarse));
    if let Some(fine) = label.fine {
        prompt.push_str(&format!("fine: {fine}\n"));
    }
    prompt.push_str(&format!("confidence: {:.2}\n", label.confidence));
    prompt.push_str(&format!(
        "origin: {}\n",
        match label.origin {
            LabelOrigin::Human => "human",
            LabelOrigin::Propagated => "propagated",
        }
    ));

    prompt.push_str("\n## Driver commit message\n");
    prompt.push_str(case.message.trim_end());
    prompt.push('\n');

    prompt.push_str("\n## Kernel change (unified diff)\n");
    if kernel_delta.trim().is_empty() {
        prompt.push_str("(not available)\n");
    } else {
        prompt.push_str(kernel_delta.trim_end());
        prompt.push('\n');
    }

    prompt.push_str("\n## Driver context windows\n");
    if windows.is_empty() {
        prompt.push_str("(no windows extracted)\n");
    }
    for w in windows {
        let symbols: Vec<&str> = w.focus_symbols.iter().map(String::as_str).collect();
        prompt.push_str(&format!(
            "### {} lines {}-{} (symbols: {})\n",
            w.path,
            w.start_line,
            w.end_line,
            symbols.join(", ")
        ));
        prompt.push_str(&w.text);
        if !w.text.ends_with('\n') {
            prompt.push('\n');
        }
    }

    prompt.push_str("\n## Output instructions\n");
    prompt.push_str(OUTPUT_INSTRUCTION);
    prompt.push('\n');
    Ok(prompt)
}

/// Compact description of a failed attempt, re-inserted into the next prompt.
/// At most `max_messages` diagnostics are kept, plus every extracted symbol.
pub fn summarize_failure(
    gate: Option<&GateResult>,
    apply_error: Option<&str>,
    report: Option<&DiagnosticReport>,
    max_messages: usize,
) -> String {
    let mut out = String::new();
    if let Some(gate) = gate {
        if !gate.accepted {
            if !gate.syntax_ok {
                out.push_str("The previous patch was not a syntactically valid unified diff.\n");
            } else if let Some(sim) = gate.similarity {
                out.push_str(&format!(
                    "The previous patch was rejected by the static gate (similarity {sim:.3}).\n"
                ));
            }
        }
    }
    if let Some(err) = apply_error {
        out.push_str(&format!(
            "The previous patch failed to apply to the driver sources: {err}\n"
        ));
    }
    if let Some(report) = report {
        out.push_str(&format!(
            "The previous patch failed to build (exit code {}).\n",
            report.exit_code
        ));
        for message in report.errors().take(max_messages) {
            out.push_str(&format!(
                "{}:{}: {}: {}\n",
                message.file,
                message.line,
                message.severity.as_str(),
                message.text
            ));
        }
        if !report.extracted_symbols.is_empty() {
            let symbols: Vec<&str> = report
                .extracted_symbols
                .iter()
                .map(String::as_str)
                .collect();
            out.push_str(&format!("Symbols involved: {}\n", symbols.join(", ")));
        }
    }
    out
}

/// Splice a failure summary into a prompt, ahead of the output instructions.
pub fn append_failure_feedback(prompt: &str, summary: &str) -> String {
    if summary.is_empty() {
        return prompt.to_string();
    }
    let section = format!("## Previous attempt feedback\n{summary}\n");
    match prompt.find("## Output instructions") {
        Some(pos) => {
            let mut out = String::with_capacity(prompt.len() + section.len());
            out.push_str(&prompt[..pos]);
            out.push_str(&section);
            out.push_str(&prompt[pos..]);
            out
        }
        None => format!("{prompt}\n{section}"),
    }
}

/// Hex SHA-256 of an assembled prompt, stored in attempt records.
pub fn prompt_digest(prompt: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(prompt.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
