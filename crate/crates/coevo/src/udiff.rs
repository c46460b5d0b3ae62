//! Strict unified-diff parsing, syntax validation, patch application, and
//! context-based hunk relocation.
//!
//! The dialect is the one emitted by `git diff`: `a/`-`b/` prefixed paths,
//! `@@ -start[,len] +start[,len] @@` hunk headers (the `,len` part omitted
//! when the range is exactly one line), `/dev/null` sentinels for file
//! creation and deletion, and the literal `\ No newline at end of file`
//! marker. Input must be LF-normalized; any carriage return is rejected.
//!
//! Parsing is lossless for canonical inputs: `render_diff(parse_diff(t)) == t`
//! byte for byte. Non-canonical `git diff` noise lines (`diff --git`,
//! `index …`, mode lines) are accepted and dropped.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Marker line that follows a hunk line whose file does not end in a newline.
pub const NO_NEWLINE_MARKER: &str = "\\ No newline at end of file";

/// Sentinel path denoting an absent file side (creation or deletion).
pub const DEV_NULL: &str = "/dev/null";

/// Role of a single hunk body line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LineTag {
    Context,
    Add,
    Del,
}

/// One body line of a hunk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HunkLine {
    pub tag: LineTag,
    /// Line text without the tag prefix and without a line terminator.
    pub text: String,
    /// True when the line was followed by the no-newline-at-EOF marker.
    pub no_newline: bool,
}

impl HunkLine {
    pub fn new(tag: LineTag, text: impl Into<String>) -> Self {
        HunkLine {
            tag,
            text: text.into(),
            no_newline: false,
        }
    }

    fn counts_old(&self) -> bool {
        matches!(self.tag, LineTag::Context | LineTag::Del)
    }

    fn counts_new(&self) -> bool {
        matches!(self.tag, LineTag::Context | LineTag::Add)
    }
}

/// One `@@`-delimited hunk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hunk {
    /// 1-based first line of the old-side range. When `old_len == 0` this is
    /// the line *after which* the hunk inserts (GNU convention).
    pub old_start: usize,
    pub old_len: usize,
    pub new_start: usize,
    pub new_len: usize,
    /// Heading text after the closing `@@` (a function name in git output).
    pub section: Option<String>,
    pub lines: Vec<HunkLine>,
}

impl Hunk {
    /// Texts of the lines the hunk expects on the old side, in order.
    pub fn old_block(&self) -> Vec<&str> {
        self.lines
            .iter()
            .filter(|l| l.counts_old())
            .map(|l| l.text.as_str())
            .collect()
    }

    fn actual_old_len(&self) -> usize {
        self.lines.iter().filter(|l| l.counts_old()).count()
    }

    fn actual_new_len(&self) -> usize {
        self.lines.iter().filter(|l| l.counts_new()).count()
    }

    /// Last old-side line occupied by the hunk; for pure insertions this is
    /// the anchor line itself.
    fn old_end(&self) -> usize {
        if self.old_len == 0 {
            self.old_start
        } else {
            self.old_start + self.old_len - 1
        }
    }
}

/// All hunks for one file pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileDiff {
    /// Old-side label as written, e.g. `a/drivers/x.c` or `/dev/null`.
    pub old_path: String,
    /// New-side label as written, e.g. `b/drivers/x.c` or `/dev/null`.
    pub new_path: String,
    pub hunks: Vec<Hunk>,
}

impl FileDiff {
    /// Repo-relative path of the old side, with the `a/` prefix stripped.
    /// `None` for the `/dev/null` sentinel.
    pub fn old_stem(&self) -> Option<&str> {
        stem(&self.old_path, "a/")
    }

    /// Repo-relative path of the new side, with the `b/` prefix stripped.
    pub fn new_stem(&self) -> Option<&str> {
        stem(&self.new_path, "b/")
    }

    /// The repo-relative path this entry effectively touches.
    pub fn target_stem(&self) -> Option<&str> {
        self.new_stem().or_else(|| self.old_stem())
    }
}

fn stem<'a>(path: &'a str, prefix: &str) -> Option<&'a str> {
    if path == DEV_NULL {
        None
    } else {
        Some(path.strip_prefix(prefix).unwrap_or(path))
    }
}

/// A parsed multi-file unified diff.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnifiedDiff {
    pub file_diffs: Vec<FileDiff>,
}

impl UnifiedDiff {
    /// Repo-relative paths touched by the diff (old and new sides, sentinels
    /// excluded), sorted and deduplicated.
    pub fn touched_paths(&self) -> BTreeSet<String> {
        let mut set = BTreeSet::new();
        for fd in &self.file_diffs {
            if let Some(p) = fd.old_stem() {
                set.insert(p.to_string());
            }
            if let Some(p) = fd.new_stem() {
                set.insert(p.to_string());
            }
        }
        set
    }

    pub fn total_hunks(&self) -> usize {
        self.file_diffs.iter().map(|fd| fd.hunks.len()).sum()
    }
}

impl fmt::Display for UnifiedDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_diff(self))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiffParseError {
    #[error("empty diff input")]
    EmptyInput,
    #[error("carriage return at line {line}: diff input must be LF-normalized")]
    CrlfInput { line: usize },
    #[error("malformed diff line {line}: {detail}")]
    MalformedHeader { line: usize, detail: String },
    #[error("truncated hunk at line {line}")]
    TruncatedHunk { line: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ApplyError {
    #[error("baseline file missing: {path}")]
    MissingBaselineFile { path: String },
    #[error(
        "patch application failure: {path} hunk {hunk}: context not found in lines {lo}..{hi}"
    )]
    PatchApplyFailure {
        path: String,
        /// 0-based hunk index within the file entry.
        hunk: usize,
        lo: usize,
        hi: usize,
    },
}

/// Why a single hunk could not be re-anchored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnchorFailure {
    /// No occurrence of the hunk's context anywhere in the baseline.
    NotFound,
    /// The context matched more than one baseline region.
    AmbiguousAnchor { candidates: Vec<usize> },
}

impl fmt::Display for AnchorFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnchorFailure::NotFound => write!(f, "no unique context anchor"),
            AnchorFailure::AmbiguousAnchor { candidates } => {
                write!(f, "ambiguous anchor (candidate lines {candidates:?})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HunkReconstructionFailure {
    pub path: String,
    /// 0-based hunk index within the file entry.
    pub hunk: usize,
    pub reason: AnchorFailure,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReconstructError {
    #[error("hunk reconstruction failed for {} hunk(s): {}", .failures.len(),
            .failures.iter().map(|f| format!("{} hunk {}: {}", f.path, f.hunk, f.reason))
                     .collect::<Vec<_>>().join("; "))]
    ReconstructionFailure {
        failures: Vec<HunkReconstructionFailure>,
    },
    #[error("baseline file missing: {path}")]
    MissingBaselineFile { path: String },
}

/// A syntax defect found by [`validate_diff_syntax`]. Violations are data,
/// not errors; a verdict may carry several.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SyntaxViolation {
    HunkLengthMismatch {
        path: String,
        hunk: usize,
        side: LineTag,
        header: usize,
        actual: usize,
    },
    PathInconsistency {
        old_path: String,
        new_path: String,
    },
    OverlappingHunks {
        path: String,
        first: usize,
        second: usize,
    },
    DuplicateFileEntry {
        old_path: String,
        new_path: String,
    },
    EmptyHunk {
        path: String,
        hunk: usize,
    },
}

impl fmt::Display for SyntaxViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyntaxViolation::HunkLengthMismatch {
                path,
                hunk,
                side,
                header,
                actual,
            } => {
                let side = match side {
                    LineTag::Del => "old",
                    _ => "new",
                };
                write!(
                    f,
                    "hunk length mismatch: {path} hunk {hunk} {side} side declares {header} lines, body has {actual}"
                )
            }
            SyntaxViolation::PathInconsistency { old_path, new_path } => {
                write!(f, "path inconsistency: {old_path} vs {new_path}")
            }
            SyntaxViolation::OverlappingHunks {
                path,
                first,
                second,
            } => write!(f, "overlapping hunks: {path} hunks {first} and {second}"),
            SyntaxViolation::DuplicateFileEntry { old_path, new_path } => {
                write!(f, "duplicate file entry: {old_path} {new_path}")
            }
            SyntaxViolation::EmptyHunk { path, hunk } => {
                write!(f, "empty hunk: {path} hunk {hunk}")
            }
        }
    }
}

/// Outcome of [`validate_diff_syntax`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationVerdict {
    pub violations: Vec<SyntaxViolation>,
}

impl ValidationVerdict {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Parse unified-diff text into a [`UnifiedDiff`].
///
/// Grammar noise emitted by `git diff` in front of a file entry is skipped;
/// everything else is strict. A hunk whose body is cut short by the next
/// header survives parsing (the validator reports the length mismatch); a
/// hunk cut short by end of input is a [`DiffParseError::TruncatedHunk`].
pub fn parse_diff(text: &str) -> Result<UnifiedDiff, DiffParseError> {
    if text.is_empty() {
        return Err(DiffParseError::EmptyInput);
    }
    if let Some(pos) = text.find('\r') {
        let line = text[..pos].matches('\n').count() + 1;
        return Err(DiffParseError::CrlfInput { line });
    }

    let mut lines: Vec<&str> = text.split('\n').collect();
    // A trailing newline yields one empty trailing element; drop it so the
    // loop only ever sees real lines.
    if lines.last() == Some(&"") {
        lines.pop();
    }

    let mut diffs: Vec<FileDiff> = Vec::new();
    let mut idx = 0usize;
    while idx < lines.len() {
        let line = lines[idx];
        let lineno = idx + 1;
        if let Some(old_label) = line.strip_prefix("--- ") {
            idx += 1;
            let plus = lines.get(idx).copied().unwrap_or("");
            let Some(new_label) = plus.strip_prefix("+++ ") else {
                return Err(DiffParseError::MalformedHeader {
                    line: idx + 1,
                    detail: format!("expected '+++ ' header after '--- ', found {plus:?}"),
                });
            };
            idx += 1;
            let mut fd = FileDiff {
                old_path: strip_label(old_label).to_string(),
                new_path: strip_label(new_label).to_string(),
                hunks: Vec::new(),
            };
            // One or more hunks must follow.
            if idx >= lines.len() {
                return Err(DiffParseError::TruncatedHunk { line: idx });
            }
            if !lines[idx].starts_with("@@ ") {
                return Err(DiffParseError::MalformedHeader {
                    line: idx + 1,
                    detail: format!("expected '@@' hunk header, found {:?}", lines[idx]),
                });
            }
            while idx < lines.len() && lines[idx].starts_with("@@ ") {
                let (hunk, next) = parse_hunk(&lines, idx)?;
                idx = next;
                fd.hunks.push(hunk);
            }
            diffs.push(fd);
        } else if is_git_noise(line) {
            idx += 1;
        } else {
            return Err(DiffParseError::MalformedHeader {
                line: lineno,
                detail: format!("expected '--- ' file header, found {line:?}"),
            });
        }
    }

    if diffs.is_empty() {
        return Err(DiffParseError::EmptyInput);
    }
    Ok(UnifiedDiff { file_diffs: diffs })
}

/// `diff -u` may append a tab plus mtime after the label; drop it.
fn strip_label(label: &str) -> &str {
    match label.find('\t') {
        Some(i) => &label[..i],
        None => label,
    }
}

fn is_git_noise(line: &str) -> bool {
    const NOISE: &[&str] = &[
        "diff --git ",
        "index ",
        "new file mode ",
        "deleted file mode ",
        "old mode ",
        "new mode ",
        "similarity index ",
        "dissimilarity index ",
        "rename from ",
        "rename to ",
        "copy from ",
        "copy to ",
    ];
    NOISE.iter().any(|p| line.starts_with(p))
}

/// Parse one hunk starting at `lines[start]`; returns the hunk and the index
/// of the first line after it.
fn parse_hunk(lines: &[&str], start: usize) -> Result<(Hunk, usize), DiffParseError> {
    let header = lines[start];
    let lineno = start + 1;
    let (old_start, old_len, new_start, new_len, section) =
        parse_hunk_header(header).ok_or_else(|| DiffParseError::MalformedHeader {
            line: lineno,
            detail: format!("bad hunk header {header:?}"),
        })?;

    let mut hunk = Hunk {
        old_start,
        old_len,
        new_start,
        new_len,
        section,
        lines: Vec::new(),
    };

    let mut old_need = old_len;
    let mut new_need = new_len;
    let mut idx = start + 1;
    while old_need > 0 || new_need > 0 {
        let Some(&line) = lines.get(idx) else {
            // End of input with counts unsatisfied: truly cut off.
            return Err(DiffParseError::TruncatedHunk { line: idx });
        };
        if line.starts_with("@@ ") {
            // Short body followed by another hunk: keep what we have and let
            // the validator flag the length mismatch.
            break;
        }
        if let Some(text) = line.strip_prefix(' ') {
            hunk.lines.push(HunkLine::new(LineTag::Context, text));
            old_need = old_need.saturating_sub(1);
            new_need = new_need.saturating_sub(1);
        } else if let Some(text) = line.strip_prefix('+') {
            hunk.lines.push(HunkLine::new(LineTag::Add, text));
            new_need = new_need.saturating_sub(1);
        } else if let Some(text) = line.strip_prefix('-') {
            hunk.lines.push(HunkLine::new(LineTag::Del, text));
            old_need = old_need.saturating_sub(1);
        } else if line.starts_with('\\') {
            match hunk.lines.last_mut() {
                Some(prev) => prev.no_newline = true,
                None => {
                    return Err(DiffParseError::MalformedHeader {
                        line: idx + 1,
                        detail: "no-newline marker without preceding hunk line".into(),
                    })
                }
            }
        } else {
            return Err(DiffParseError::MalformedHeader {
                line: idx + 1,
                detail: format!("hunk body line without ' ', '+' or '-' prefix: {line:?}"),
            });
        }
        idx += 1;
    }

    // A trailing no-newline marker for the final line of the hunk.
    if let Some(&line) = lines.get(idx) {
        if line.starts_with('\\') {
            if let Some(prev) = hunk.lines.last_mut() {
                prev.no_newline = true;
            }
            idx += 1;
        }
    }

    if hunk.lines.is_empty() {
        return Err(DiffParseError::TruncatedHunk { line: lineno });
    }
    Ok((hunk, idx))
}

/// Parse `@@ -a[,b] +c[,d] @@[ section]`; counts default to 1 when omitted.
fn parse_hunk_header(line: &str) -> Option<(usize, usize, usize, usize, Option<String>)> {
    let rest = line.strip_prefix("@@ -")?;
    let (old, rest) = split_range(rest)?;
    let rest = rest.strip_prefix(" +")?;
    let (new, rest) = split_range(rest)?;
    let rest = rest.strip_prefix(" @@")?;
    let section = match rest.strip_prefix(' ') {
        Some(s) => Some(s.to_string()),
        None if rest.is_empty() => None,
        None => return None,
    };
    Some((old.0, old.1, new.0, new.1, section))
}

/// Parse a leading `start[,len]` range; returns the range and the remainder.
fn split_range(s: &str) -> Option<((usize, usize), &str)> {
    let end = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
    if end == 0 {
        return None;
    }
    let start: usize = s[..end].parse().ok()?;
    let rest = &s[end..];
    if let Some(rest) = rest.strip_prefix(',') {
        let end = rest
            .find(|c: char| !c.is_ascii_digit())
            .unwrap_or(rest.len());
        if end == 0 {
            return None;
        }
        let len: usize = rest[..end].parse().ok()?;
        Some(((start, len), &rest[end..]))
    } else {
        Some(((start, 1), rest))
    }
}

/// Render to canonical unified-diff text (inverse of [`parse_diff`] on
/// canonical inputs).
pub fn render_diff(d: &UnifiedDiff) -> String {
    let mut out = String::new();
    for fd in &d.file_diffs {
        out.push_str("--- ");
        out.push_str(&fd.old_path);
        out.push_str("\n+++ ");
        out.push_str(&fd.new_path);
        out.push('\n');
        for h in &fd.hunks {
            out.push_str("@@ -");
            push_range(&mut out, h.old_start, h.old_len);
            out.push_str(" +");
            push_range(&mut out, h.new_start, h.new_len);
            out.push_str(" @@");
            if let Some(section) = &h.section {
                out.push(' ');
                out.push_str(section);
            }
            out.push('\n');
            for line in &h.lines {
                out.push(match line.tag {
                    LineTag::Context => ' ',
                    LineTag::Add => '+',
                    LineTag::Del => '-',
                });
                out.push_str(&line.text);
                out.push('\n');
                if line.no_newline {
                    out.push_str(NO_NEWLINE_MARKER);
                    out.push('\n');
                }
            }
        }
    }
    out
}

fn push_range(out: &mut String, start: usize, len: usize) {
    if len == 1 {
        out.push_str(&start.to_string());
    } else {
        out.push_str(&format!("{start},{len}"));
    }
}

/// Check header arithmetic, path consistency, hunk ordering and overlap.
/// Every violation found is reported; none aborts the scan.
pub fn validate_diff_syntax(d: &UnifiedDiff) -> ValidationVerdict {
    let mut v = ValidationVerdict::default();
    let mut seen_pairs = BTreeSet::new();
    for fd in &d.file_diffs {
        if !seen_pairs.insert((fd.old_path.clone(), fd.new_path.clone())) {
            v.violations.push(SyntaxViolation::DuplicateFileEntry {
                old_path: fd.old_path.clone(),
                new_path: fd.new_path.clone(),
            });
        }
        match (fd.old_stem(), fd.new_stem()) {
            (Some(o), Some(n)) if o != n => {
                v.violations.push(SyntaxViolation::PathInconsistency {
                    old_path: fd.old_path.clone(),
                    new_path: fd.new_path.clone(),
                });
            }
            _ => {}
        }
        let path = fd.target_stem().unwrap_or(&fd.old_path).to_string();
        for (hi, h) in fd.hunks.iter().enumerate() {
            if h.lines.is_empty() {
                v.violations.push(SyntaxViolation::EmptyHunk {
                    path: path.clone(),
                    hunk: hi,
                });
                continue;
            }
            if h.actual_old_len() != h.old_len {
                v.violations.push(SyntaxViolation::HunkLengthMismatch {
                    path: path.clone(),
                    hunk: hi,
                    side: LineTag::Del,
                    header: h.old_len,
                    actual: h.actual_old_len(),
                });
            }
            if h.actual_new_len() != h.new_len {
                v.violations.push(SyntaxViolation::HunkLengthMismatch {
                    path: path.clone(),
                    hunk: hi,
                    side: LineTag::Add,
                    header: h.new_len,
                    actual: h.actual_new_len(),
                });
            }
            if hi > 0 {
                let prev = &fd.hunks[hi - 1];
                if h.old_start <= prev.old_end() {
                    v.violations.push(SyntaxViolation::OverlappingHunks {
                        path: path.clone(),
                        first: hi - 1,
                        second: hi,
                    });
                }
            }
        }
    }
    v
}

/// Split text into lines without terminators plus a flag for a trailing
/// newline. The empty string has zero lines.
fn split_lines(text: &str) -> (Vec<&str>, bool) {
    if text.is_empty() {
        return (Vec::new(), true);
    }
    let ends_nl = text.ends_with('\n');
    let body = if ends_nl {
        &text[..text.len() - 1]
    } else {
        text
    };
    (body.split('\n').collect(), ends_nl)
}

/// Apply `d` to baseline file contents, producing the post-patch contents.
///
/// Each hunk is tried first at its declared `old_start`, then at offsets
/// 0, -1, +1, … up to ±`fuzz`, requiring an exact match of the hunk's whole
/// old-side block. Hunk order is preserved: a hunk never matches at or before
/// the previous hunk's last consumed line.
pub fn apply_diff(
    baseline: &BTreeMap<String, String>,
    d: &UnifiedDiff,
    fuzz: usize,
) -> Result<BTreeMap<String, String>, ApplyError> {
    let mut out = baseline.clone();
    for fd in &d.file_diffs {
        let old_stem = fd.old_stem().map(str::to_string);
        let new_stem = fd.new_stem().map(str::to_string);
        let base_text = match &old_stem {
            Some(p) => baseline
                .get(p)
                .cloned()
                .ok_or_else(|| ApplyError::MissingBaselineFile { path: p.clone() })?,
            None => String::new(),
        };
        let display_path = new_stem
            .clone()
            .or_else(|| old_stem.clone())
            .unwrap_or_else(|| fd.old_path.clone());
        let patched = apply_file(&base_text, fd, fuzz, &display_path)?;
        match (&old_stem, &new_stem) {
            (Some(o), None) => {
                // Deletion: the old side must have been fully consumed.
                out.remove(o);
            }
            (Some(o), Some(n)) => {
                if o != n {
                    out.remove(o);
                }
                out.insert(n.clone(), patched);
            }
            (None, Some(n)) => {
                out.insert(n.clone(), patched);
            }
            (None, None) => {}
        }
    }
    Ok(out)
}

fn apply_file(
    base: &str,
    fd: &FileDiff,
    fuzz: usize,
    path: &str,
) -> Result<String, ApplyError> {
    let (base_lines, base_ends_nl) = split_lines(base);
    let base_flag =
        |i: usize| -> bool { i + 1 < base_lines.len() || base_ends_nl || base_lines.is_empty() };

    // (text, has-trailing-newline); only the final element's flag matters.
    let mut out: Vec<(String, bool)> = Vec::new();
    let mut cursor = 0usize; // base lines consumed so far
    for (hi, h) in fd.hunks.iter().enumerate() {
        let block = h.old_block();
        let pos = locate_hunk(&base_lines, h, &block, cursor, fuzz).ok_or_else(|| {
            let nominal = nominal_position(h);
            ApplyError::PatchApplyFailure {
                path: path.to_string(),
                hunk: hi,
                lo: nominal.saturating_sub(fuzz).max(1),
                hi: nominal + fuzz,
            }
        })?;
        // Copy untouched lines up to the hunk position.
        while cursor + 1 < pos {
            out.push((base_lines[cursor].to_string(), base_flag(cursor)));
            cursor += 1;
        }
        for line in &h.lines {
            match line.tag {
                LineTag::Context => {
                    out.push((base_lines[cursor].to_string(), base_flag(cursor)));
                    cursor += 1;
                }
                LineTag::Del => {
                    cursor += 1;
                }
                LineTag::Add => {
                    out.push((line.text.clone(), !line.no_newline));
                }
            }
        }
    }
    while cursor < base_lines.len() {
        out.push((base_lines[cursor].to_string(), base_flag(cursor)));
        cursor += 1;
    }

    let mut text = String::new();
    for (i, (line, nl)) in out.iter().enumerate() {
        text.push_str(line);
        if i + 1 < out.len() || *nl {
            text.push('\n');
        }
    }
    Ok(text)
}

/// 1-based line the hunk's old block should start at.
fn nominal_position(h: &Hunk) -> usize {
    if h.old_len == 0 {
        h.old_start + 1
    } else {
        h.old_start
    }
}

/// Find the position for a hunk, trying offsets 0, -1, +1, … up to ±fuzz.
/// `consumed` is the number of base lines already claimed by earlier hunks.
fn locate_hunk(
    base_lines: &[&str],
    h: &Hunk,
    block: &[&str],
    consumed: usize,
    fuzz: usize,
) -> Option<usize> {
    let nominal = nominal_position(h);
    if block.is_empty() {
        // Nothing to match against: honor the declared position.
        let pos = nominal;
        if pos > consumed && pos <= base_lines.len() + 1 {
            return Some(pos);
        }
        return None;
    }
    let matches_at = |pos: usize| -> bool {
        pos > consumed
            && pos + block.len() - 1 <= base_lines.len()
            && block
                .iter()
                .enumerate()
                .all(|(k, want)| base_lines[pos - 1 + k] == *want)
    };
    for delta in 0..=fuzz {
        for sign in [-1isize, 1] {
            if delta == 0 && sign == 1 {
                continue;
            }
            let candidate = nominal as isize + sign * delta as isize;
            if candidate < 1 {
                continue;
            }
            if matches_at(candidate as usize) {
                return Some(candidate as usize);
            }
        }
    }
    None
}

/// Relocate hunks whose declared line numbers no longer match the baseline.
///
/// A failing hunk is re-anchored by searching the remaining baseline for its
/// full old-side block; if that is absent, for its longest contiguous run of
/// context lines. The anchor must be unique — zero matches or more than one
/// is a [`ReconstructError::ReconstructionFailure`]. A diff that already
/// applies at its declared positions is returned unchanged.
pub fn reconstruct_hunks(
    baseline: &BTreeMap<String, String>,
    d: &UnifiedDiff,
) -> Result<UnifiedDiff, ReconstructError> {
    let mut file_diffs = Vec::with_capacity(d.file_diffs.len());
    let mut failures: Vec<HunkReconstructionFailure> = Vec::new();
    for fd in &d.file_diffs {
        let base_text = match fd.old_stem() {
            Some(p) => baseline
                .get(p)
                .cloned()
                .ok_or_else(|| ReconstructError::MissingBaselineFile { path: p.to_string() })?,
            None => String::new(),
        };
        let (base_lines, _) = split_lines(&base_text);
        let path = fd
            .target_stem()
            .unwrap_or(&fd.old_path)
            .to_string();

        let mut positions: Vec<usize> = Vec::with_capacity(fd.hunks.len());
        let mut consumed = 0usize;
        let mut any_moved = false;
        for (hi, h) in fd.hunks.iter().enumerate() {
            let block = h.old_block();
            let declared = nominal_position(h);
            let declared_ok = if block.is_empty() {
                declared > consumed && declared <= base_lines.len() + 1
            } else {
                declared > consumed
                    && declared + block.len() - 1 <= base_lines.len()
                    && block
                        .iter()
                        .enumerate()
                        .all(|(k, want)| base_lines[declared - 1 + k] == *want)
            };
            let pos = if declared_ok {
                declared
            } else if block.is_empty() {
                failures.push(HunkReconstructionFailure {
                    path: path.clone(),
                    hunk: hi,
                    reason: AnchorFailure::NotFound,
                });
                continue;
            } else {
                match anchor_hunk(&base_lines, h, &block, consumed) {
                    Ok(p) => {
                        any_moved = true;
                        p
                    }
                    Err(reason) => {
                        failures.push(HunkReconstructionFailure {
                            path: path.clone(),
                            hunk: hi,
                            reason,
                        });
                        continue;
                    }
                }
            };
            consumed = pos - 1 + block.len();
            positions.push(pos);
        }

        if failures.is_empty() {
            if !any_moved {
                file_diffs.push(fd.clone());
                continue;
            }
            // Rebuild headers: relocated old starts, new starts from the
            // running old/new length delta.
            let mut delta: isize = 0;
            let mut hunks = Vec::with_capacity(fd.hunks.len());
            for (h, pos) in fd.hunks.iter().zip(&positions) {
                let mut h = h.clone();
                h.old_start = if h.old_len == 0 { *pos - 1 } else { *pos };
                h.new_start = recompute_new_start(h.old_start, h.old_len, h.new_len, delta);
                delta += h.new_len as isize - h.old_len as isize;
                hunks.push(h);
            }
            file_diffs.push(FileDiff {
                old_path: fd.old_path.clone(),
                new_path: fd.new_path.clone(),
                hunks,
            });
        }
    }
    if failures.is_empty() {
        Ok(UnifiedDiff { file_diffs })
    } else {
        Err(ReconstructError::ReconstructionFailure { failures })
    }
}

/// GNU range convention: a zero-length side is anchored on the line *before*
/// the (empty) range.
fn recompute_new_start(old_start: usize, old_len: usize, new_len: usize, delta: isize) -> usize {
    let base = old_start as isize + delta;
    let ns = if new_len == 0 {
        base - if old_len == 0 { 0 } else { 1 }
    } else if old_len == 0 {
        base + 1
    } else {
        base
    };
    ns.max(0) as usize
}

/// Re-anchor one hunk. Tries the full old-side block first, then the longest
/// contiguous context run, requiring a unique match past `consumed` lines.
fn anchor_hunk(
    base_lines: &[&str],
    h: &Hunk,
    block: &[&str],
    consumed: usize,
) -> Result<usize, AnchorFailure> {
    let occurrences = |needle: &[&str], min_pos: usize| -> Vec<usize> {
        if needle.is_empty() || needle.len() > base_lines.len() {
            return Vec::new();
        }
        (min_pos.max(1)..=base_lines.len() - needle.len() + 1)
            .filter(|&p| {
                needle
                    .iter()
                    .enumerate()
                    .all(|(k, want)| base_lines[p - 1 + k] == *want)
            })
            .collect()
    };

    let full = occurrences(block, consumed + 1);
    match full.len() {
        1 => return Ok(full[0]),
        n if n > 1 => {
            return Err(AnchorFailure::AmbiguousAnchor { candidates: full });
        }
        _ => {}
    }

    // Fall back to the longest contiguous run of context lines, tracked with
    // its old-side offset inside the hunk.
    let mut best: Option<(usize, usize)> = None; // (old-side offset, run length)
    let mut run_start_old = 0usize;
    let mut run_len = 0usize;
    let mut old_off = 0usize;
    for line in &h.lines {
        match line.tag {
            LineTag::Context => {
                if run_len == 0 {
                    run_start_old = old_off;
                }
                run_len += 1;
                if best.is_none_or(|(_, len)| run_len > len) {
                    best = Some((run_start_old, run_len));
                }
            }
            LineTag::Del => run_len = 0,
            LineTag::Add => {}
        }
        if line.counts_old() {
            old_off += 1;
        }
    }
    let Some((offset, len)) = best else {
        return Err(AnchorFailure::NotFound);
    };
    let run: Vec<&str> = block[offset..offset + len].to_vec();
    let hits = occurrences(&run, consumed + 1 + offset);
    let starts: Vec<usize> = hits
        .iter()
        .filter_map(|&q| {
            let start = q.checked_sub(offset)?;
            (start > consumed && start + block.len() - 1 <= base_lines.len())
                .then_some(start)
        })
        .collect();
    match starts.len() {
        0 => Err(AnchorFailure::NotFound),
        1 => Ok(starts[0]),
        _ => Err(AnchorFailure::AmbiguousAnchor { candidates: starts }),
    }
}

/// Apply with automatic hunk-reconstruction fallback: on a positional apply
/// failure the diff is re-anchored once and retried. Returns the patched
/// sources and the diff that finally applied.
pub fn apply_with_reconstruction(
    baseline: &BTreeMap<String, String>,
    d: &UnifiedDiff,
    fuzz: usize,
) -> Result<(BTreeMap<String, String>, UnifiedDiff), String> {
    match apply_diff(baseline, d, fuzz) {
        Ok(map) => Ok((map, d.clone())),
        Err(first_err @ ApplyError::PatchApplyFailure { .. }) => {
            let fixed = reconstruct_hunks(baseline, d)
                .map_err(|e| format!("{first_err}; reconstruction failed: {e}"))?;
            let map = apply_diff(baseline, &fixed, fuzz)
                .map_err(|e| format!("{first_err}; reconstructed diff failed: {e}"))?;
            Ok((map, fixed))
        }
        Err(e) => Err(e.to_string()),
    }
}
