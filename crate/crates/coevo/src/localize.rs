//! Symbol indexing and context-window extraction: scopes the edit region
//! around affected functions so prompts carry windows, never whole files.
//!
//! This is a lexical reduction of full language-server behaviour: function
//! and struct definitions plus function-like macro definitions are indexed
//! with line spans, call sites by callee name. No macro expansion, no
//! cross-translation-unit type resolution.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::astcmp::{callee_name, function_name, AstError, CSourceParser};
use crate::udiff::UnifiedDiff;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolKind {
    Function,
    Struct,
    Macro,
}

/// Where a symbol is defined; lines are 1-based and inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolSpan {
    pub path: String,
    pub start_line: usize,
    pub end_line: usize,
    pub kind: SymbolKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallSite {
    pub path: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SymbolIndex {
    pub definitions: BTreeMap<String, Vec<SymbolSpan>>,
    pub calls: BTreeMap<String, Vec<CallSite>>,
}

impl SymbolIndex {
    pub fn knows(&self, symbol: &str) -> bool {
        self.definitions.contains_key(symbol) || self.calls.contains_key(symbol)
    }
}

/// A verbatim slice of one source file around affected symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextWindow {
    pub path: String,
    pub start_line: usize,
    pub end_line: usize,
    pub text: String,
    pub focus_symbols: BTreeSet<String>,
}

#[derive(Debug, Error)]
pub enum LocalizeError {
    #[error(transparent)]
    Ast(#[from] AstError),
    #[error("unknown symbol: {0}")]
    UnknownSymbol(String),
}

/// Index every function definition, named struct definition and
/// function-like macro definition, and record call sites by callee name.
pub fn index_symbols(sources: &BTreeMap<String, String>) -> Result<SymbolIndex, LocalizeError> {
    let mut parser = CSourceParser::new()?;
    let mut index = SymbolIndex::default();
    for (path, text) in sources {
        index_file(&mut parser, path, text, &mut index)?;
    }
    Ok(index)
}

fn index_file(
    parser: &mut CSourceParser,
    path: &str,
    text: &str,
    index: &mut SymbolIndex,
) -> Result<(), LocalizeError> {
    let tree = parser
        .parse_tree(text)
        .map_err(LocalizeError::Ast)?;
    let mut stack = vec![tree.root_node()];
    while let Some(node) = stack.pop() {
        match node.kind() {
            "function_definition" => {
                if let Some(name) = function_name(node, text) {
                    push_span(index, name, path, node, SymbolKind::Function);
                }
            }
            "struct_specifier" => {
                if node.child_by_field_name("body").is_some() {
                    if let Some(name) = node.child_by_field_name("name") {
                        push_span(index, &text[name.byte_range()], path, node, SymbolKind::Struct);
                    }
                }
            }
            "preproc_function_def" => {
                if let Some(name) = node.child_by_field_name("name") {
                    push_span(index, &text[name.byte_range()], path, node, SymbolKind::Macro);
                }
            }
            "call_expression" => {
                if let Some(name) = callee_name(node, text) {
                    index
                        .calls
                        .entry(name.to_string())
                        .or_default()
                        .push(CallSite {
                            path: path.to_string(),
                            line: node.start_position().row + 1,
                        });
                }
            }
            _ => {}
        }
        let mut cursor = node.walk();
        let children: Vec<_> = node.children(&mut cursor).collect();
        for child in children.into_iter().rev() {
            stack.push(child);
        }
    }
    Ok(())
}

fn push_span(
    index: &mut SymbolIndex,
    name: &str,
    path: &str,
    node: tree_sitter::Node<'_>,
    kind: SymbolKind,
) {
    index
        .definitions
        .entry(name.to_string())
        .or_default()
        .push(SymbolSpan {
            path: path.to_string(),
            start_line: node.start_position().row + 1,
            end_line: node.end_position().row + 1,
            kind,
        });
}

const C_KEYWORDS: &[&str] = &[
    "if", "else", "for", "while", "do", "switch", "case", "return", "goto", "sizeof", "typeof",
    "defined", "alignof",
];

/// Lexically scan a diff line for call-shaped tokens: an identifier directly
/// followed by `(`, excluding C keywords.
fn callees_on_line(line: &str) -> Vec<String> {
    let bytes = line.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
            {
                i += 1;
            }
            let mut j = i;
            while j < bytes.len() && bytes[j] == b' ' {
                j += 1;
            }
            if j < bytes.len() && bytes[j] == b'(' {
                let name = &line[start..i];
                if !C_KEYWORDS.contains(&name) {
                    out.push(name.to_string());
                }
            }
        } else {
            i += 1;
        }
    }
    out
}

/// Symbols whose definitions intersect a hunk's old-side range, plus callees
/// named on added or deleted lines.
pub fn affected_symbols(d: &UnifiedDiff, idx: &SymbolIndex) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for fd in &d.file_diffs {
        let Some(path) = fd.old_stem().or_else(|| fd.new_stem()) else {
            continue;
        };
        for hunk in &fd.hunks {
            let lo = hunk.old_start.max(1);
            let hi = hunk.old_start + hunk.old_len.max(1) - 1;
            for (name, spans) in &idx.definitions {
                if spans
                    .iter()
                    .any(|s| s.path == path && s.start_line <= hi && s.end_line >= lo)
                {
                    out.insert(name.clone());
                }
            }
            for line in &hunk.lines {
                if matches!(line.tag, crate::udiff::LineTag::Add | crate::udiff::LineTag::Del) {
                    out.extend(callees_on_line(&line.text));
                }
            }
        }
    }
    out
}

/// Definitions whose span contains a call site of `symbol`: the functions a
/// kernel-side change to `symbol` lands in. Used to widen callee-only
/// affected sets into windowable definitions.
pub fn enclosing_definitions(idx: &SymbolIndex, symbol: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let Some(sites) = idx.calls.get(symbol) else {
        return out;
    };
    for site in sites {
        for (name, spans) in &idx.definitions {
            if spans
                .iter()
                .any(|s| s.path == site.path && s.start_line <= site.line && site.line <= s.end_line)
            {
                out.insert(name.clone());
            }
        }
    }
    out
}

/// Extract one padded window per affected definition, merging overlapping
/// windows within a file. Window text is a verbatim slice of the source.
pub fn extract_context(
    sources: &BTreeMap<String, String>,
    idx: &SymbolIndex,
    symbols: &BTreeSet<String>,
    pad: usize,
) -> Result<Vec<ContextWindow>, LocalizeError> {
    // (path, start, end, symbol)
    let mut raw: Vec<(String, usize, usize, String)> = Vec::new();
    for symbol in symbols {
        if !idx.knows(symbol) {
            return Err(LocalizeError::UnknownSymbol(symbol.clone()));
        }
        let Some(spans) = idx.definitions.get(symbol) else {
            // Known only as a callee; there is no definition to window.
            continue;
        };
        for span in spans {
            let Some(text) = sources.get(&span.path) else {
                continue;
            };
            let line_count = text.lines().count();
            let start = span.start_line.saturating_sub(pad).max(1);
            let end = (span.end_line + pad).min(line_count.max(1));
            raw.push((span.path.clone(), start, end, symbol.clone()));
        }
    }
    raw.sort();

    let mut windows: Vec<ContextWindow> = Vec::new();
    for (path, start, end, symbol) in raw {
        if let Some(last) = windows.last_mut() {
            if last.path == path && start <= last.end_line {
                last.end_line = last.end_line.max(end);
                last.focus_symbols.insert(symbol);
                continue;
            }
        }
        windows.push(ContextWindow {
            path,
            start_line: start,
            end_line: end,
            text: String::new(),
            focus_symbols: [symbol].into_iter().collect(),
        });
    }
    for w in &mut windows {
        let text = &sources[&w.path];
        w.text = slice_lines(text, w.start_line, w.end_line);
    }
    Ok(windows)
}

/// The exact byte slice of `text` covering 1-based lines `start..=end`,
/// including each line's terminator.
fn slice_lines(text: &str, start: usize, end: usize) -> String {
    let mut offsets = vec![0usize];
    for (i, b) in text.bytes().enumerate() {
        if b == b'\n' {
            offsets.push(i + 1);
        }
    }
    let from = offsets.get(start - 1).copied().unwrap_or(text.len());
    let to = offsets.get(end).copied().unwrap_or(text.len());
    text[from..to].to_string()
}
