//! Static gate: diff syntax check plus multi-level similarity against a
//! reference patch when one is available.
//!
//! Similarity is the arithmetic mean of three levels: file-level path-set
//! Jaccard, hunk-count ratio (min/max), and changed-line multiset overlap.
//! The acceptance threshold is inclusive.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::udiff::{self, LineTag, UnifiedDiff};

/// Gate verdict for one candidate patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateResult {
    pub syntax_ok: bool,
    /// Present only when a reference patch was supplied.
    pub similarity: Option<f64>,
    pub accepted: bool,
}

impl GateResult {
    pub fn rejected_syntax() -> Self {
        GateResult {
            syntax_ok: false,
            similarity: None,
            accepted: false,
        }
    }
}

/// Multiset of changed lines: (tag, trimmed text) -> count.
fn changed_lines(d: &UnifiedDiff) -> BTreeMap<(char, String), u64> {
    let mut out = BTreeMap::new();
    for fd in &d.file_diffs {
        for hunk in &fd.hunks {
            for line in &hunk.lines {
                let tag = match line.tag {
                    LineTag::Add => '+',
                    LineTag::Del => '-',
                    LineTag::Context => continue,
                };
                *out.entry((tag, line.text.trim().to_string())).or_insert(0) += 1;
            }
        }
    }
    out
}

fn multiset_overlap(a: &BTreeMap<(char, String), u64>, b: &BTreeMap<(char, String), u64>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let mut min_sum = 0u64;
    let mut max_sum = 0u64;
    let keys: std::collections::BTreeSet<_> = a.keys().chain(b.keys()).collect();
    for key in keys {
        let x = *a.get(key).unwrap_or(&0);
        let y = *b.get(key).unwrap_or(&0);
        min_sum += x.min(y);
        max_sum += x.max(y);
    }
    min_sum as f64 / max_sum as f64
}

/// Mean of file-level mapping, hunk-level matching, and line-level accuracy.
pub fn gate_similarity(candidate: &UnifiedDiff, reference: &UnifiedDiff) -> f64 {
    let cand_paths = candidate.touched_paths();
    let ref_paths = reference.touched_paths();
    let file_level = if cand_paths.is_empty() && ref_paths.is_empty() {
        1.0
    } else {
        let inter = cand_paths.intersection(&ref_paths).count() as f64;
        let union = cand_paths.union(&ref_paths).count() as f64;
        inter / union
    };

    let cand_hunks = candidate.total_hunks();
    let ref_hunks = reference.total_hunks();
    let hunk_level = if cand_hunks == 0 && ref_hunks == 0 {
        1.0
    } else {
        cand_hunks.min(ref_hunks) as f64 / cand_hunks.max(ref_hunks) as f64
    };

    let line_level = multiset_overlap(&changed_lines(candidate), &changed_lines(reference));

    (file_level + hunk_level + line_level) / 3.0
}

/// Gate a candidate diff. Without a reference, a syntactically valid diff is
/// accepted; with one, the similarity must also reach `threshold`.
pub fn static_gate(candidate: &str, reference: Option<&str>, threshold: f64) -> GateResult {
    let Ok(diff) = udiff::parse_diff(candidate) else {
        return GateResult::rejected_syntax();
    };
    if !udiff::validate_diff_syntax(&diff).passed() {
        return GateResult::rejected_syntax();
    }
    let similarity = reference
        .and_then(|r| udiff::parse_diff(r).ok())
        .map(|r| gate_similarity(&diff, &r));
    let accepted = match similarity {
        Some(sim) => sim >= threshold,
        None => true,
    };
    GateResult {
        syntax_ok: true,
        similarity,
        accepted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REF: &str = "--- a/drivers/x.c\n+++ b/drivers/x.c\n@@ -1,3 +1,3 @@\n a\n-b\n+X\n c\n";

    #[test]
    fn malformed_header_rejected() {
        let result = static_gate("--- a/x.c\n+++ b/x.c\n@@ bogus @@\n-a\n+b\n", Some(REF), 0.7);
        assert!(!result.syntax_ok);
        assert!(!result.accepted);
    }

    #[test]
    fn identical_candidate_scores_one() {
        let result = static_gate(REF, Some(REF), 0.7);
        assert!(result.syntax_ok);
        assert_eq!(result.similarity, Some(1.0));
        assert!(result.accepted);
    }

    #[test]
    fn missing_reference_accepts_valid_syntax() {
        let result = static_gate(REF, None, 0.7);
        assert!(result.accepted);
        assert_eq!(result.similarity, None);
    }

    #[test]
    fn threshold_is_inclusive() {
        // Same path (1.0), same hunk count (1.0), line overlap 1/10:
        // similarity = (2 + 0.1) / 3, which sits at or above 0.7 while
        // staying below 0.71.
        let reference = build_diff(&["shared"], &(1..=9).map(|i| format!("ref{i}")).collect::<Vec<_>>());
        let candidate = build_diff(&["shared"], &[]);
        let r = parse(&reference);
        let c = parse(&candidate);
        let sim = gate_similarity(&c, &r);
        assert!((sim - (2.0 + 0.1) / 3.0).abs() < 1e-12);
        assert!(static_gate(&candidate, Some(&reference), 0.7).accepted);
        assert!(!static_gate(&candidate, Some(&reference), 0.71).accepted);
    }

    #[test]
    fn similarity_just_below_threshold_rejects() {
        // Line overlap 7/100 gives similarity (2 + 0.07) / 3 = 0.69.
        let shared: Vec<String> = (1..=7).map(|i| format!("s{i}")).collect();
        let ref_only: Vec<String> = (1..=93).map(|i| format!("r{i}")).collect();
        let shared_refs: Vec<&str> = shared.iter().map(String::as_str).collect();
        let reference = build_diff(&shared_refs, &ref_only);
        let candidate = build_diff(&shared_refs, &[]);
        let sim = gate_similarity(&parse(&candidate), &parse(&reference));
        assert!((sim - 0.69).abs() < 1e-9, "similarity {sim}");
        assert!(!static_gate(&candidate, Some(&reference), 0.7).accepted);
    }

    /// One-file, one-hunk diff adding `shared` plus `extra` lines.
    fn build_diff(shared: &[&str], extra: &[String]) -> String {
        let adds: Vec<String> = shared
            .iter()
            .map(|s| s.to_string())
            .chain(extra.iter().cloned())
            .collect();
        let mut out = String::from("--- a/drivers/x.c\n+++ b/drivers/x.c\n");
        out.push_str(&format!("@@ -1 +1,{} @@\n c0\n", adds.len() + 1));
        for line in adds {
            out.push_str(&format!("+{line}\n"));
        }
        out
    }

    fn parse(text: &str) -> UnifiedDiff {
        udiff::parse_diff(text).unwrap()
    }
}
