//! Grammar-backed structural comparison of C sources: per-node-type
//! occurrence deltas, node-wise similarity, semantic element extraction, and
//! the weighted composite static score.
//!
//! Scores compare how a *reference* patch and a *generated* patch each change
//! a shared baseline. Counting is whole-file: the baseline counts cancel out
//! of the deltas, so unchanged regions contribute nothing.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tree_sitter::{Node, Parser};

use crate::udiff::{self, UnifiedDiff};

/// Composite weights, in metric order: AST similarity, function accuracy,
/// call accuracy, node accuracy, variable accuracy.
pub const COMPOSITE_WEIGHTS: [f64; 5] = [0.30, 0.25, 0.20, 0.15, 0.10];

#[derive(Debug, Error)]
pub enum AstError {
    #[error("C parser unavailable: {0}")]
    ParserUnavailable(String),
    #[error("node similarity undefined: both deltas are zero")]
    UndefinedSimilarity,
    #[error("metric out of range: {name} = {value}")]
    OutOfRangeMetric { name: &'static str, value: f64 },
    #[error("patch scoring failed: {0}")]
    PatchFailure(String),
}

/// Owns a `tree-sitter` parser configured for C. Parsers are cheap to create
/// but must not be shared across threads; give each task its own.
pub struct CSourceParser {
    parser: Parser,
}

impl CSourceParser {
    pub fn new() -> Result<Self, AstError> {
        let mut parser = Parser::new();
        parser
            .set_language(&tree_sitter_c::language())
            .map_err(|e| AstError::ParserUnavailable(e.to_string()))?;
        Ok(CSourceParser { parser })
    }

    pub fn parse_tree(&mut self, source: &str) -> Result<tree_sitter::Tree, AstError> {
        self.parser
            .parse(source, None)
            .ok_or_else(|| AstError::ParserUnavailable("parse returned no tree".into()))
    }
}

/// Occurrence count per node kind over a full concrete syntax tree. Only
/// named grammar nodes are counted and the root node is excluded (it occurs
/// exactly once in every file and carries no change signal). Error-recovery
/// nodes count under the grammar's `ERROR` kind.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeTypeCounts {
    pub counts: BTreeMap<String, u64>,
}

/// Count node kinds in one source file.
pub fn count_node_types(
    parser: &mut CSourceParser,
    source: &str,
) -> Result<NodeTypeCounts, AstError> {
    let tree = parser.parse_tree(source)?;
    let mut counts = NodeTypeCounts::default();
    let root = tree.root_node();
    visit_nodes(root, &mut |node| {
        if node.id() != root.id() && node.is_named() {
            *counts.counts.entry(node.kind().to_string()).or_insert(0) += 1;
        }
    });
    Ok(counts)
}

fn visit_nodes<'a>(node: Node<'a>, f: &mut impl FnMut(Node<'a>)) {
    f(node);
    let mut cursor = node.walk();
    for child in node.children(&mut cursor) {
        visit_nodes(child, f);
    }
}

fn add_counts(into: &mut NodeTypeCounts, from: &NodeTypeCounts) {
    for (kind, n) in &from.counts {
        *into.counts.entry(kind.clone()).or_insert(0) += n;
    }
}

/// Signed per-type difference `patched - base`; types untouched on both
/// sides are omitted, as are types whose counts are equal.
pub fn node_delta(base: &NodeTypeCounts, patched: &NodeTypeCounts) -> BTreeMap<String, i64> {
    let mut keys: BTreeSet<&String> = base.counts.keys().collect();
    keys.extend(patched.counts.keys());
    let mut out = BTreeMap::new();
    for key in keys {
        let b = *base.counts.get(key).unwrap_or(&0) as i64;
        let p = *patched.counts.get(key).unwrap_or(&0) as i64;
        if b != p {
            out.insert(key.clone(), p - b);
        }
    }
    out
}

/// Similarity of two per-type deltas:
/// `1 - |dref - dgen| / max(|dref|, |dgen|)`, clamped into [0, 1]
/// (opposite-sign deltas would otherwise go negative).
pub fn node_sim(dref: i64, dgen: i64) -> Result<f64, AstError> {
    if dref == 0 && dgen == 0 {
        return Err(AstError::UndefinedSimilarity);
    }
    let raw = 1.0 - (dref - dgen).abs() as f64 / dref.abs().max(dgen.abs()) as f64;
    Ok(raw.clamp(0.0, 1.0))
}

/// Per-type change profile backing an AST similarity score. All four maps
/// share one key set: the types with nonzero weight.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NodeDeltaProfile {
    pub delta_ref: BTreeMap<String, i64>,
    pub delta_gen: BTreeMap<String, i64>,
    pub weights: BTreeMap<String, u64>,
    pub node_sims: BTreeMap<String, f64>,
}

fn profile_from_deltas(
    delta_ref: &BTreeMap<String, i64>,
    delta_gen: &BTreeMap<String, i64>,
) -> NodeDeltaProfile {
    let mut keys: BTreeSet<&String> = delta_ref.keys().collect();
    keys.extend(delta_gen.keys());
    let mut profile = NodeDeltaProfile::default();
    for key in keys {
        let dr = *delta_ref.get(key).unwrap_or(&0);
        let dg = *delta_gen.get(key).unwrap_or(&0);
        let weight = dr.abs().max(dg.abs()) as u64;
        if weight == 0 {
            continue;
        }
        let sim = node_sim(dr, dg).expect("weight > 0 implies a defined similarity");
        profile.delta_ref.insert(key.clone(), dr);
        profile.delta_gen.insert(key.clone(), dg);
        profile.weights.insert(key.clone(), weight);
        profile.node_sims.insert(key.clone(), sim);
    }
    profile
}

fn weighted_similarity(profile: &NodeDeltaProfile) -> f64 {
    let total: u64 = profile.weights.values().sum();
    if total == 0 {
        // Two structurally no-op patches are maximally similar.
        return 1.0;
    }
    let acc: f64 = profile
        .weights
        .iter()
        .map(|(kind, w)| *w as f64 * profile.node_sims[kind])
        .sum();
    acc / total as f64
}

/// Change-weighted AST similarity of two patched versions of one baseline.
pub fn ast_similarity(
    parser: &mut CSourceParser,
    base: &str,
    ref_patched: &str,
    gen_patched: &str,
) -> Result<(f64, NodeDeltaProfile), AstError> {
    let base_counts = count_node_types(parser, base)?;
    let ref_counts = count_node_types(parser, ref_patched)?;
    let gen_counts = count_node_types(parser, gen_patched)?;
    let delta_ref = node_delta(&base_counts, &ref_counts);
    let delta_gen = node_delta(&base_counts, &gen_counts);
    let profile = profile_from_deltas(&delta_ref, &delta_gen);
    Ok((weighted_similarity(&profile), profile))
}

/// Names of the code elements a patch touched, per element class.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SemanticElements {
    /// Modified function definitions.
    pub functions: BTreeSet<String>,
    /// Modified call sites, as a multiset of callee names.
    pub calls: BTreeMap<String, u64>,
    /// Modified variable declarations.
    pub variables: BTreeSet<String>,
    /// Modified macro invocations (SCREAMING_CASE call sites).
    pub macros: BTreeSet<String>,
}

impl SemanticElements {
    pub fn call_names(&self) -> BTreeSet<String> {
        self.calls.keys().cloned().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
            && self.calls.is_empty()
            && self.variables.is_empty()
            && self.macros.is_empty()
    }
}

/// Element inventory of one source: name -> normalized occurrence texts with
/// multiplicity. Differences between two inventories define the modified set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Inventory {
    functions: BTreeMap<String, BTreeMap<String, u64>>,
    calls: BTreeMap<String, BTreeMap<String, u64>>,
    variables: BTreeMap<String, BTreeMap<String, u64>>,
    macros: BTreeMap<String, BTreeMap<String, u64>>,
}

fn bump(map: &mut BTreeMap<String, BTreeMap<String, u64>>, name: &str, text: &str) {
    *map.entry(name.to_string())
        .or_default()
        .entry(normalize_ws(text))
        .or_insert(0) += 1;
}

fn normalize_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub(crate) fn is_macro_name(name: &str) -> bool {
    name.len() >= 2
        && name
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_uppercase())
        && name
            .chars()
            .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
}

/// Resolve the identifier a declarator chain declares, skipping pointer,
/// array and parenthesized wrappers. Chains passing through a function
/// declarator are function declarations, not variables.
fn declared_identifier<'a>(node: Node<'a>, source: &'a str) -> Option<&'a str> {
    match node.kind() {
        "identifier" => Some(&source[node.byte_range()]),
        "pointer_declarator" | "array_declarator" | "parenthesized_declarator"
        | "init_declarator" => {
            let inner = node
                .child_by_field_name("declarator")
                .or_else(|| node.named_child(0))?;
            declared_identifier(inner, source)
        }
        _ => None,
    }
}

/// The identifier a function definition's declarator chain ends in.
pub(crate) fn function_name<'a>(def: Node<'a>, source: &'a str) -> Option<&'a str> {
    let mut decl = def.child_by_field_name("declarator")?;
    loop {
        match decl.kind() {
            "function_declarator" => {
                let inner = decl.child_by_field_name("declarator")?;
                return if inner.kind() == "identifier" {
                    Some(&source[inner.byte_range()])
                } else {
                    declared_identifier(inner, source)
                };
            }
            "pointer_declarator" | "parenthesized_declarator" => {
                decl = decl.child_by_field_name("declarator").or_else(|| decl.named_child(0))?;
            }
            _ => return None,
        }
    }
}

pub(crate) fn callee_name<'a>(call: Node<'a>, source: &'a str) -> Option<&'a str> {
    let function = call.child_by_field_name("function")?;
    match function.kind() {
        "identifier" => Some(&source[function.byte_range()]),
        "field_expression" => function
            .child_by_field_name("field")
            .map(|f| &source[f.byte_range()]),
        _ => None,
    }
}

fn build_inventory(
    parser: &mut CSourceParser,
    source: &str,
    inv: &mut Inventory,
) -> Result<(), AstError> {
    let tree = parser.parse_tree(source)?;
    visit_nodes(tree.root_node(), &mut |node| match node.kind() {
        "function_definition" => {
            if let Some(name) = function_name(node, source) {
                bump(&mut inv.functions, name, &source[node.byte_range()]);
            }
        }
        "call_expression" => {
            if let Some(name) = callee_name(node, source) {
                let text = &source[node.byte_range()];
                bump(&mut inv.calls, name, text);
                if is_macro_name(name) {
                    bump(&mut inv.macros, name, text);
                }
            }
        }
        "declaration" | "parameter_declaration" => {
            let text = &source[node.byte_range()];
            let mut cursor = node.walk();
            for child in node.named_children(&mut cursor) {
                if let Some(name) = declared_identifier(child, source) {
                    bump(&mut inv.variables, name, text);
                }
            }
        }
        _ => {}
    });
    Ok(())
}

fn modified_names(
    base: &BTreeMap<String, BTreeMap<String, u64>>,
    patched: &BTreeMap<String, BTreeMap<String, u64>>,
) -> BTreeSet<String> {
    let mut names: BTreeSet<&String> = base.keys().collect();
    names.extend(patched.keys());
    names
        .into_iter()
        .filter(|name| base.get(*name) != patched.get(*name))
        .cloned()
        .collect()
}

fn modified_multiset(
    base: &BTreeMap<String, BTreeMap<String, u64>>,
    patched: &BTreeMap<String, BTreeMap<String, u64>>,
) -> BTreeMap<String, u64> {
    modified_names(base, patched)
        .into_iter()
        .map(|name| {
            let b: u64 = base.get(&name).map(|m| m.values().sum()).unwrap_or(0);
            let p: u64 = patched.get(&name).map(|m| m.values().sum()).unwrap_or(0);
            (name, b.abs_diff(p).max(1))
        })
        .collect()
}

fn diff_inventories(base: &Inventory, patched: &Inventory) -> SemanticElements {
    SemanticElements {
        functions: modified_names(&base.functions, &patched.functions),
        calls: modified_multiset(&base.calls, &patched.calls),
        variables: modified_names(&base.variables, &patched.variables),
        macros: modified_names(&base.macros, &patched.macros),
    }
}

/// Elements present in exactly one of base/patched, or whose occurrence text
/// changed — the modified set a patch touches.
pub fn extract_semantic_elements(
    parser: &mut CSourceParser,
    base: &str,
    patched: &str,
) -> Result<SemanticElements, AstError> {
    let mut base_inv = Inventory::default();
    build_inventory(parser, base, &mut base_inv)?;
    let mut patched_inv = Inventory::default();
    build_inventory(parser, patched, &mut patched_inv)?;
    Ok(diff_inventories(&base_inv, &patched_inv))
}

/// Jaccard index over two name sets; 1.0 when both are empty.
pub fn element_accuracy(ref_elems: &BTreeSet<String>, gen_elems: &BTreeSet<String>) -> f64 {
    if ref_elems.is_empty() && gen_elems.is_empty() {
        return 1.0;
    }
    let intersection = ref_elems.intersection(gen_elems).count() as f64;
    let union = ref_elems.union(gen_elems).count() as f64;
    intersection / union
}

/// Fixed weighted sum of the five static metrics.
pub fn composite_score(
    ast: f64,
    func: f64,
    call: f64,
    node: f64,
    var: f64,
) -> Result<f64, AstError> {
    for (name, value) in [
        ("ast_sim", ast),
        ("func_acc", func),
        ("call_acc", call),
        ("node_acc", node),
        ("var_acc", var),
    ] {
        if !(0.0..=1.0).contains(&value) || !value.is_finite() {
            return Err(AstError::OutOfRangeMetric { name, value });
        }
    }
    let [w_ast, w_func, w_call, w_node, w_var] = COMPOSITE_WEIGHTS;
    Ok(w_ast * ast + w_func * func + w_call * call + w_node * node + w_var * var)
}

/// Five-metric breakdown plus the weighted composite for one patch pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticScoreReport {
    pub ast_sim: f64,
    pub func_acc: f64,
    pub call_acc: f64,
    pub node_acc: f64,
    pub var_acc: f64,
    pub composite: f64,
    pub profile: NodeDeltaProfile,
}

impl StaticScoreReport {
    pub fn new(
        ast_sim: f64,
        func_acc: f64,
        call_acc: f64,
        node_acc: f64,
        var_acc: f64,
        profile: NodeDeltaProfile,
    ) -> Result<Self, AstError> {
        let composite = composite_score(ast_sim, func_acc, call_acc, node_acc, var_acc)?;
        Ok(StaticScoreReport {
            ast_sim,
            func_acc,
            call_acc,
            node_acc,
            var_acc,
            composite,
            profile,
        })
    }
}

/// Score a generated patch against a reference patch over shared baseline
/// sources. Both patches are applied (with hunk-reconstruction fallback);
/// counts and element inventories are aggregated over every touched file.
pub fn score_patch_pair(
    parser: &mut CSourceParser,
    baseline: &BTreeMap<String, String>,
    ref_diff: &UnifiedDiff,
    gen_diff: &UnifiedDiff,
    fuzz: usize,
) -> Result<StaticScoreReport, AstError> {
    let (ref_state, _) = udiff::apply_with_reconstruction(baseline, ref_diff, fuzz)
        .map_err(|e| AstError::PatchFailure(format!("reference patch: {e}")))?;
    let (gen_state, _) = udiff::apply_with_reconstruction(baseline, gen_diff, fuzz)
        .map_err(|e| AstError::PatchFailure(format!("generated patch: {e}")))?;

    let mut touched = ref_diff.touched_paths();
    touched.extend(gen_diff.touched_paths());

    let mut base_counts = NodeTypeCounts::default();
    let mut ref_counts = NodeTypeCounts::default();
    let mut gen_counts = NodeTypeCounts::default();
    let mut base_inv = Inventory::default();
    let mut ref_inv = Inventory::default();
    let mut gen_inv = Inventory::default();
    let empty = String::new();
    for path in &touched {
        let base_text = baseline.get(path).unwrap_or(&empty);
        let ref_text = ref_state.get(path).unwrap_or(&empty);
        let gen_text = gen_state.get(path).unwrap_or(&empty);
        add_counts(&mut base_counts, &count_node_types(parser, base_text)?);
        add_counts(&mut ref_counts, &count_node_types(parser, ref_text)?);
        add_counts(&mut gen_counts, &count_node_types(parser, gen_text)?);
        build_inventory(parser, base_text, &mut base_inv)?;
        build_inventory(parser, ref_text, &mut ref_inv)?;
        build_inventory(parser, gen_text, &mut gen_inv)?;
    }

    let delta_ref = node_delta(&base_counts, &ref_counts);
    let delta_gen = node_delta(&base_counts, &gen_counts);
    let profile = profile_from_deltas(&delta_ref, &delta_gen);
    let ast_sim = weighted_similarity(&profile);

    let ref_elems = diff_inventories(&base_inv, &ref_inv);
    let gen_elems = diff_inventories(&base_inv, &gen_inv);

    let func_acc = element_accuracy(&ref_elems.functions, &gen_elems.functions);
    let call_acc = element_accuracy(&ref_elems.call_names(), &gen_elems.call_names());
    let var_acc = element_accuracy(&ref_elems.variables, &gen_elems.variables);
    // Node accuracy: agreement on which node types changed at all.
    let ref_types: BTreeSet<String> = delta_ref.keys().cloned().collect();
    let gen_types: BTreeSet<String> = delta_gen.keys().cloned().collect();
    let node_acc = element_accuracy(&ref_types, &gen_types);

    StaticScoreReport::new(ast_sim, func_acc, call_acc, node_acc, var_acc, profile)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parser() -> CSourceParser {
        CSourceParser::new().expect("C grammar loads")
    }

    #[test]
    fn empty_file_has_empty_counts() {
        let counts = count_node_types(&mut parser(), "").unwrap();
        assert!(counts.counts.is_empty());
    }

    #[test]
    fn single_function_definition_counted() {
        let counts = count_node_types(&mut parser(), "int main(void) { return 0; }\n").unwrap();
        assert_eq!(counts.counts.get("function_definition"), Some(&1));
    }

    #[test]
    fn two_calls_counted() {
        let src = "void g(void) { f(a); f(b); }\n";
        let counts = count_node_types(&mut parser(), src).unwrap();
        assert_eq!(counts.counts.get("call_expression"), Some(&2));
    }

    #[test]
    fn garbage_counts_under_error_kind() {
        let counts = count_node_types(&mut parser(), "int f( {{{ garbage ###\n").unwrap();
        assert!(counts.counts.contains_key("ERROR"));
    }

    #[test]
    fn node_delta_arithmetic() {
        let mut a = NodeTypeCounts::default();
        let mut b = NodeTypeCounts::default();
        assert!(node_delta(&a, &b).is_empty());

        a.counts.insert("x".into(), 1);
        b.counts.insert("x".into(), 3);
        assert_eq!(node_delta(&a, &b).get("x"), Some(&2));

        let mut c = NodeTypeCounts::default();
        c.counts.insert("x".into(), 2);
        assert_eq!(node_delta(&c, &NodeTypeCounts::default()).get("x"), Some(&-2));
    }

    #[test]
    fn node_sim_formula() {
        assert_eq!(node_sim(3, 3).unwrap(), 1.0);
        assert_eq!(node_sim(2, 0).unwrap(), 0.0);
        // Opposite signs produce a negative raw value, clamped to zero.
        assert_eq!(node_sim(1, -1).unwrap(), 0.0);
        assert!(matches!(node_sim(0, 0), Err(AstError::UndefinedSimilarity)));
    }

    #[test]
    fn node_sim_symmetric_and_bounded_exhaustively() {
        for a in -5..=5i64 {
            for b in -5..=5i64 {
                if a == 0 && b == 0 {
                    continue;
                }
                let ab = node_sim(a, b).unwrap();
                let ba = node_sim(b, a).unwrap();
                assert_eq!(ab, ba);
                assert!((0.0..=1.0).contains(&ab));
                assert_eq!(ab == 1.0, a == b);
            }
        }
    }

    #[test]
    fn identical_patches_score_one() {
        let base = "int f(void) { return ida_simple_get(ida, 0, 0, GFP_KERNEL); }\n";
        let patched = "int f(void) { return ida_alloc(ida, GFP_KERNEL); }\n";
        let (sim, _) = ast_similarity(&mut parser(), base, patched, patched).unwrap();
        assert_eq!(sim, 1.0);
    }

    #[test]
    fn noop_patches_score_one_by_convention() {
        let base = "int x;\n";
        let (sim, profile) = ast_similarity(&mut parser(), base, base, base).unwrap();
        assert_eq!(sim, 1.0);
        assert!(profile.weights.is_empty());
    }

    #[test]
    fn retained_obsolete_arguments_score_below_one() {
        let base = "int f(void) { return ida_simple_get(ida, 0, 0, GFP_KERNEL); }\n";
        let reference = "int f(void) { return ida_alloc(ida, GFP_KERNEL); }\n";
        let divergent = "int f(void) { return ida_alloc(ida, 0, 0, GFP_KERNEL); }\n";
        let (sim, profile) = ast_similarity(&mut parser(), base, reference, divergent).unwrap();
        assert!(sim < 1.0, "similarity {sim} should drop below 1.0");
        assert!(profile.delta_ref.contains_key("number_literal"));
    }

    #[test]
    fn identical_files_have_no_modified_elements() {
        let src = "int f(void) { g(); return 0; }\n";
        let elems = extract_semantic_elements(&mut parser(), src, src).unwrap();
        assert!(elems.is_empty());
    }

    #[test]
    fn renamed_call_reports_both_names() {
        let base = "void h(void) { f(); }\n";
        let patched = "void h(void) { g(); }\n";
        let elems = extract_semantic_elements(&mut parser(), base, patched).unwrap();
        let names = elems.call_names();
        assert!(names.contains("f") && names.contains("g"), "{names:?}");
    }

    #[test]
    fn added_declaration_reports_variable() {
        let base = "void h(void) { }\n";
        let patched = "void h(void) { int tmp; }\n";
        let elems = extract_semantic_elements(&mut parser(), base, patched).unwrap();
        assert!(elems.variables.contains("tmp"));
    }

    #[test]
    fn macro_invocation_changes_tracked() {
        let base = "void h(void) { WARN_ON(1); }\n";
        let patched = "void h(void) { WARN_ON_ONCE(1); }\n";
        let elems = extract_semantic_elements(&mut parser(), base, patched).unwrap();
        assert!(elems.macros.contains("WARN_ON"));
        assert!(elems.macros.contains("WARN_ON_ONCE"));
    }

    #[test]
    fn element_accuracy_conventions() {
        let empty = BTreeSet::new();
        assert_eq!(element_accuracy(&empty, &empty), 1.0);

        let ab: BTreeSet<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        assert_eq!(element_accuracy(&ab, &ab.clone()), 1.0);

        let bc: BTreeSet<String> = ["b", "c"].iter().map(|s| s.to_string()).collect();
        let acc = element_accuracy(&ab, &bc);
        assert!((acc - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn composite_weights_sum_to_one() {
        assert_eq!(composite_score(1.0, 1.0, 1.0, 1.0, 1.0).unwrap(), 1.0);
        assert!((composite_score(1.0, 0.0, 0.0, 0.0, 0.0).unwrap() - 0.30).abs() < 1e-15);
        let mixed = composite_score(0.9, 0.8, 0.7, 0.6, 0.5).unwrap();
        assert!((mixed - 0.75).abs() < 1e-12);
    }

    #[test]
    fn composite_rejects_out_of_range() {
        assert!(matches!(
            composite_score(1.2, 0.0, 0.0, 0.0, 0.0),
            Err(AstError::OutOfRangeMetric { name: "ast_sim", .. })
        ));
    }

    #[test]
    fn counts_match_sexp_dump_oracle() {
        // Independent route: count named-node heads in the grammar's own
        // s-expression dump instead of walking the tree.
        let src = "static int alloc_id(void)\n{\n    int tmp;\n    tmp = get_id(0);\n    if (tmp < 0)\n        return -1;\n    return tmp;\n}\n";
        let mut p = parser();
        let counts = count_node_types(&mut p, src).unwrap();

        let tree = p.parse_tree(src).unwrap();
        let sexp = tree.root_node().to_sexp();
        let mut oracle: BTreeMap<String, u64> = BTreeMap::new();
        for token in sexp.split(['(', ')', ' ']) {
            let token = token.trim();
            if token.is_empty() || token.ends_with(':') {
                continue;
            }
            if token
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_')
            {
                *oracle.entry(token.to_string()).or_insert(0) += 1;
            }
        }
        // The dump includes the root; drop it like count_node_types does.
        if let Some(n) = oracle.get_mut("translation_unit") {
            *n -= 1;
            if *n == 0 {
                oracle.remove("translation_unit");
            }
        }
        assert_eq!(counts.counts, oracle);
    }
}
